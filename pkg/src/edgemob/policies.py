"""Online association policies sharing the virtual energy-deficit queue.

* ``FsiPolicy``: drift-plus-penalty with full BS-side information.
* ``PsiPolicy``: the same control loop, but each period's choice is learned with
  UCB1 over ``K`` slots from noisy slot-level feedback.
* ``DelayOptimalPolicy`` / ``EnergyOptimalPolicy``: greedy baselines.

Ties are always broken towards the lowest BS index.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import ConfigError


def queue_update(q, energy_used, per_period_budget):
    """``max(0, q + energy_used - per_period_budget)``."""
    if energy_used < 0:
        raise ValueError(f"energy_used must be >= 0, got {energy_used}")
    return max(0.0, q + energy_used - per_period_budget)


@dataclass(frozen=True)
class DeficitQueue:
    per_period_budget: float
    q: float = 0.0

    def update(self, energy_used):
        return DeficitQueue(self.per_period_budget, queue_update(self.q, energy_used, self.per_period_budget))


@dataclass(frozen=True)
class FrameSchedule:
    J: int
    R: int
    V: tuple

    def __post_init__(self):
        if self.J < 1 or self.R < 1:
            raise ConfigError(f"J and R must be >= 1, got J={self.J}, R={self.R}")
        if len(self.V) != self.R:
            raise ConfigError(f"need one control weight per frame: got {len(self.V)} for R={self.R}")
        if any(v <= 0 for v in self.V):
            raise ConfigError("control weights must be positive")

    @classmethod
    def constant(cls, J, R, V=0.01):
        return cls(J=J, R=R, V=(float(V),) * R)

    @property
    def horizon(self):
        return self.R * self.J


class Choice(NamedTuple):
    bs: int  # BS index
    slot: int  # position within the period's candidate list
    fallback: bool


def period_objective(view, q, V):
    """``V * delay + q * energy`` for every candidate (``inf`` where overloaded)."""
    return V * view.delay + q * view.energy


def fallback_choice(view):
    """Least-bad candidate when nothing passes the rate/delay checks.

    Minimum delay among stable servers, otherwise the highest uplink rate.
    """
    if view.stable.any():
        i = int(np.argmin(np.where(view.stable, view.delay, np.inf)))
    else:
        i = int(np.argmax(view.rate))
    return Choice(int(view.bs[i]), i, True)


def _argmin_feasible(view, score):
    if not view.feasible.any():
        return fallback_choice(view)
    i = int(np.argmin(np.where(view.feasible, score, np.inf)))
    return Choice(int(view.bs[i]), i, False)


def fsi_decide(view, q, V):
    return _argmin_feasible(view, period_objective(view, q, V))


def delay_optimal_decide(view):
    return _argmin_feasible(view, view.delay)


def energy_optimal_decide(view):
    # best SINR; identical to the largest gain when interference is uniform
    return _argmin_feasible(view, -view.rate)


@dataclass
class PeriodOutcome:
    t: int
    chosen_bs: object  # int, or per-slot array for PSI
    delay: float
    energy: float
    queue_before: float
    queue_after: float
    feasible_set_size: int
    handovers_within_period: int = 0
    infeasible_fallback: bool = False
    slot_choice: Optional[np.ndarray] = None
    slot_objective: Optional[np.ndarray] = None  # observed z_k
    slot_expected: Optional[np.ndarray] = None  # noiseless per-slot objective of the chosen arm
    period_optimum: float = float("nan")  # noiseless full-information optimum Z*


# ---------------------------------------------------------------------------
# UCB1


@dataclass
class UcbState:
    z_bar: np.ndarray
    theta: np.ndarray
    explore_coeff: float = 0.0

    @classmethod
    def fresh(cls, n_arms, explore_coeff=0.0):
        return cls(np.zeros(n_arms), np.zeros(n_arms, dtype=np.int64), float(explore_coeff))

    @property
    def n_arms(self):
        return len(self.theta)


def ucb_index(ucb, k):
    """Lower-confidence index ``z_bar - sqrt(c ln k / theta)`` (``-inf`` when unvisited)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        radius = np.sqrt(ucb.explore_coeff * np.log(k) / ucb.theta)
    return np.where(ucb.theta > 0, ucb.z_bar - radius, -np.inf)


def ucb_select(ucb, k):
    """Arm to play in slot ``k`` (1-based); unvisited arms first, in index order."""
    if k < 1:
        raise ValueError(f"slot index must be >= 1, got {k}")
    unvisited = np.flatnonzero(ucb.theta == 0)
    if len(unvisited):
        return int(unvisited[0])
    return int(np.argmin(ucb_index(ucb, k)))


def ucb_update(ucb, n, observed_delay, observed_energy, V, q):
    """Fold one slot observation into arm ``n``'s running mean (in place)."""
    z = V * observed_delay + q * observed_energy
    th = ucb.theta[n]
    ucb.z_bar[n] = (th * ucb.z_bar[n] + z) / (th + 1)
    ucb.theta[n] = th + 1
    return ucb


@dataclass(frozen=True)
class SlotNoise:
    """Slot-level feedback model for the partial-information policy.

    Each slot carries ``w ~ Poisson(lambda/K)`` workloads. Every workload sees
    the processor-sharing mean response time ``1/(s - mu - lambda)`` and costs
    ``P_tx * gamma / rate`` joules, where the slot's rate uses the channel gain
    perturbed by zero-mean log-normal shadowing of ``shadowing_db`` dB. With
    ``poisson=False`` and ``shadowing_db=0`` the slot observations are exactly
    ``delay/K`` and ``energy/K``.
    """

    poisson: bool = True
    shadowing_db: float = 2.0

    def observe(self, view, arm, K, rng):
        lam = view.lam
        w = float(rng.poisson(lam / K)) if self.poisson else lam / K
        spare = view.service_rate[arm] - view.background[arm] - lam
        d = w / spare if spare > 0 else np.inf
        if w == 0:
            d = 0.0
        gain = view.gain[arm]
        if self.shadowing_db > 0:
            gain = gain * 10.0 ** (rng.normal(0.0, self.shadowing_db) / 10.0)
        r = view.radio
        rate = r.bandwidth * np.log2(1.0 + r.tx_power * gain / (r.noise_power + view.interference[arm]))
        e = r.tx_power * w * view.consts.workload_size / rate
        return float(d), float(e)


EXPLORE_MODES = ("running_max", "oracle", "fixed")


@dataclass(frozen=True)
class PsiConfig:
    K: int = 100
    explore: str = "running_max"
    explore_coeff: float = 0.0  # only used by explore="fixed"
    noise: SlotNoise = field(default_factory=SlotNoise)

    def __post_init__(self):
        if self.K < 1:
            raise ConfigError(f"K must be >= 1, got {self.K}")
        if self.explore not in EXPLORE_MODES:
            raise ConfigError(f"unknown explore mode {self.explore!r}; expected one of {EXPLORE_MODES}")


def psi_run_period(view, q, V, config, rng):
    """Learn the period's association over ``config.K`` slots with UCB1.

    Arms are the candidates that pass the rate/delay checks (admission is
    enforced by the network); with none passing, the fallback BS is used for
    every slot. Period delay and energy are the sums of slot observations.
    """
    K = config.K
    if view.feasible.any():
        arms = np.flatnonzero(view.feasible)
        fallback = False
    else:
        arms = np.array([fallback_choice(view).slot])
        fallback = True
    if K < len(arms):
        raise ConfigError(f"K={K} is smaller than the number of arms ({len(arms)})")
    expected = (V * view.delay[arms] + q * view.energy[arms]) / K
    z_max_oracle = float(np.max(expected)) if len(arms) else 0.0
    coeff = {"fixed": config.explore_coeff, "oracle": 2.0 * z_max_oracle ** 2, "running_max": 0.0}[config.explore]
    ucb = UcbState.fresh(len(arms), coeff)
    running_max = 0.0
    choice = np.empty(K, dtype=np.int64)
    z_obs = np.empty(K)
    d_tot = e_tot = 0.0
    for k in range(1, K + 1):
        a = ucb_select(ucb, k)
        d, e = config.noise.observe(view, arms[a], K, rng)
        ucb_update(ucb, a, d, e, V, q)
        z = V * d + q * e
        if config.explore == "running_max" and z > running_max:
            running_max = z
            ucb.explore_coeff = 2.0 * running_max ** 2
        choice[k - 1] = a
        z_obs[k - 1] = z
        d_tot += d
        e_tot += e
    bs = view.bs[arms][choice]
    full = period_objective(view, q, V)
    z_star = float(np.min(np.where(view.feasible, full, np.inf))) if not fallback else float(full[arms[0]])
    return PeriodOutcome(
        t=view.t, chosen_bs=bs, delay=d_tot, energy=e_tot, queue_before=q, queue_after=float("nan"),
        feasible_set_size=int(view.feasible.sum()),
        handovers_within_period=int(np.count_nonzero(bs[1:] != bs[:-1])),
        infeasible_fallback=fallback, slot_choice=bs, slot_objective=z_obs,
        slot_expected=expected[choice], period_optimum=z_star,
    )


# ---------------------------------------------------------------------------
# Policies and the shared frame/queue loop


class Policy:
    name = "policy"

    def reset(self, seed):
        """Called once per run with the replication's policy seed."""

    def step(self, view, q, V):
        raise NotImplementedError


def _single(view, choice, q):
    return PeriodOutcome(
        t=view.t, chosen_bs=choice.bs, delay=float(view.delay[choice.slot]),
        energy=float(view.energy[choice.slot]), queue_before=q, queue_after=float("nan"),
        feasible_set_size=int(view.feasible.sum()), infeasible_fallback=choice.fallback,
    )


class FsiPolicy(Policy):
    name = "fsi"

    def step(self, view, q, V):
        return _single(view, fsi_decide(view, q, V), q)


class DelayOptimalPolicy(Policy):
    name = "delay_optimal"

    def step(self, view, q, V):
        return _single(view, delay_optimal_decide(view), q)


class EnergyOptimalPolicy(Policy):
    name = "energy_optimal"

    def step(self, view, q, V):
        return _single(view, energy_optimal_decide(view), q)


class PsiPolicy(Policy):
    name = "psi"

    def __init__(self, config=None):
        self.config = config or PsiConfig()
        self.rng = np.random.default_rng()

    def reset(self, seed):
        self.rng = np.random.default_rng(seed)

    def step(self, view, q, V):
        return psi_run_period(view, q, V, self.config, self.rng)


@dataclass
class RunReport:
    policy: str
    chosen: np.ndarray  # (T,) BS index (PSI: last slot's BS)
    delay: np.ndarray
    energy: np.ndarray
    queue: np.ndarray  # q(t) used for the decision in period t
    queue_after: np.ndarray  # q(t+1) before any frame reset
    handovers: np.ndarray  # within-period switches
    fallback: np.ndarray  # bool
    feasible_set_size: np.ndarray
    budget: float
    V_used: Optional[np.ndarray] = None  # (T,) control weight active in each period
    slot_choice: Optional[np.ndarray] = None  # (T, K)
    slot_objective: Optional[np.ndarray] = None
    slot_expected: Optional[np.ndarray] = None
    period_optimum: Optional[np.ndarray] = None  # (T,)

    @property
    def horizon(self):
        return len(self.delay)

    @property
    def mean_delay(self):
        return float(np.mean(self.delay))

    @property
    def total_energy(self):
        return float(np.sum(self.energy))

    @property
    def budget_satisfied(self):
        return self.total_energy <= self.budget

    @property
    def period_handovers(self):
        """Switches between consecutive periods' serving BSs."""
        first = self.chosen if self.slot_choice is None else self.slot_choice[:, 0]
        return int(np.count_nonzero(first[1:] != self.chosen[:-1]))


def run_policy(trace, schedule, policy, seed=0):
    """Drive ``policy`` over the whole trace.

    At every frame start ``t = r*J`` the queue is reset to zero and the frame's
    control weight becomes active; after each period the queue absorbs the
    period's energy.
    """
    T = trace.horizon
    if schedule.horizon != T:
        raise ConfigError(f"schedule covers {schedule.horizon} periods but the trace has {T}")
    b = trace.consts.per_period_budget
    policy.reset(seed)
    outcomes = []
    weights = np.empty(T)
    q = 0.0
    for t in range(T):
        r, offset = divmod(t, schedule.J)
        if offset == 0:
            q = 0.0
        V = weights[t] = schedule.V[r]
        out = policy.step(trace.period(t), q, V)
        q = queue_update(q, out.energy, b)
        out.queue_after = q
        outcomes.append(out)
    report = _collect(policy.name, outcomes, trace.consts.budget)
    report.V_used = weights
    return report


def _collect(name, outcomes, budget):
    arr = lambda attr, dtype=float: np.array([getattr(o, attr) for o in outcomes], dtype=dtype)
    slots = outcomes[0].slot_choice is not None if outcomes else False
    chosen = np.array([o.chosen_bs[-1] if slots else o.chosen_bs for o in outcomes], dtype=np.int64)
    return RunReport(
        policy=name, chosen=chosen, delay=arr("delay"), energy=arr("energy"),
        queue=arr("queue_before"), queue_after=arr("queue_after"),
        handovers=arr("handovers_within_period", np.int64), fallback=arr("infeasible_fallback", bool),
        feasible_set_size=arr("feasible_set_size", np.int64), budget=budget,
        slot_choice=np.stack([o.slot_choice for o in outcomes]) if slots else None,
        slot_objective=np.stack([o.slot_objective for o in outcomes]) if slots else None,
        slot_expected=np.stack([o.slot_expected for o in outcomes]) if slots else None,
        period_optimum=arr("period_optimum") if slots else None,
    )


def fsi_run(trace, schedule):
    return run_policy(trace, schedule, FsiPolicy())


def psi_run(trace, schedule, config=None, seed=0):
    return run_policy(trace, schedule, PsiPolicy(config), seed)


POLICIES = {
    "fsi": FsiPolicy,
    "psi": PsiPolicy,
    "delay_optimal": DelayOptimalPolicy,
    "energy_optimal": EnergyOptimalPolicy,
}
