"""Regret, delay and energy-deviation bounds, and the quantities they need."""

import math
import warnings

import numpy as np

from .errors import DegenerateGapWarning


def compute_U(trace):
    """Largest ``0.5 * (e - budget/T)**2`` over periods and feasible candidates.

    Periods without a feasible candidate (not produced by the generator) fall
    back to all stable candidates.
    """
    b = trace.consts.per_period_budget
    U = 0.0
    for t in range(trace.horizon):
        view = trace.period(t)
        mask = view.feasible if view.feasible.any() else view.stable
        e = view.energy[mask]
        if len(e):
            U = max(U, float(np.max(0.5 * (e - b) ** 2)))
    return U


def ucb_regret_bound(z_max, gaps, K):
    """``z_max * [8 * sum(ln K / gap) + (1 + pi^2/3) * sum(gap)]`` over suboptimal arms.

    ``gaps`` are the per-slot gaps of the arms other than the optimum. Zero
    gaps (ties with the optimum) are dropped with a :class:`DegenerateGapWarning`.
    """
    gaps = np.asarray(gaps, dtype=float)
    if np.any(gaps < 0):
        raise ValueError("gaps must be non-negative")
    if np.any(gaps == 0):
        warnings.warn("zero gap: bound computed over strictly suboptimal arms only", DegenerateGapWarning,
                      stacklevel=2)
        gaps = gaps[gaps > 0]
    if len(gaps) == 0:
        return 0.0
    lnK = math.log(K)
    return z_max * (8.0 * float(np.sum(lnK / gaps)) + (1.0 + math.pi ** 2 / 3.0) * float(np.sum(gaps)))


def drift_delay_bound(D_star, U, C, J, V):
    """``mean(D*_r) + (U*(J+1) + C) / R * sum(1/V_r)``."""
    D_star = np.asarray(D_star, dtype=float)
    V = np.asarray(V, dtype=float)
    if np.any(V <= 0):
        raise ValueError("control weights must be positive")
    R = len(D_star)
    return float(np.mean(D_star)) + (U * (J + 1) + C) / R * float(np.sum(1.0 / V))


def drift_energy_bound(D_star, U, C, J, V, budget):
    """``budget + sum_r sqrt(2*U*J*(J+1) + C*J + V_r*J*D*_r)``."""
    D_star = np.asarray(D_star, dtype=float)
    V = np.asarray(V, dtype=float)
    inner = 2.0 * U * J * (J + 1) + C * J + V * J * D_star
    return budget + float(np.sum(np.sqrt(inner)))


# ---------------------------------------------------------------------------
# per-period bandit quantities


def period_objectives(view, q, V):
    """Noiseless per-period objective ``V*d + q*e`` of each feasible candidate."""
    return V * view.delay[view.feasible] + q * view.energy[view.feasible]


def gaps_from_objectives(Z, K):
    """Per-slot gaps ``(Z(n) - Z*)/K`` of every arm except the (first) optimum."""
    Z = np.asarray(Z, dtype=float)
    best = int(np.argmin(Z))
    return np.delete((Z - Z[best]) / K, best)


def measure_regret(z_star, slot_objectives):
    """Monte-Carlo regret ``E[sum_k z_k] - Z*``.

    ``slot_objectives`` has shape ``(runs, ..., K)``; ``z_star`` broadcasts
    against the leading dimensions after the run axis. Returns the mean over
    runs and its standard error.
    """
    totals = np.sum(np.asarray(slot_objectives, dtype=float), axis=-1) - np.asarray(z_star, dtype=float)
    runs = totals.shape[0]
    mean = totals.mean(axis=0)
    se = totals.std(axis=0, ddof=1) / math.sqrt(runs) if runs > 1 else np.zeros_like(mean)
    return mean, se


def psi_trace_constants(trace, report, K):
    """Per-period UCB regret bound and realised regret along a PSI run.

    The queue value and weight that the PSI run actually used in each period
    define the arm objectives; ``z_max`` is the largest noiseless per-slot
    objective among the arms.
    """
    V_used = report.V_used
    ucb_bound = np.zeros(trace.horizon)
    for t in range(trace.horizon):
        view = trace.period(t)
        if not view.feasible.any():
            continue
        Z = period_objectives(view, report.queue[t], V_used[t])
        z_max = float(np.max(Z)) / K
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateGapWarning)
            ucb_bound[t] = ucb_regret_bound(z_max, gaps_from_objectives(Z, K), K)
    realised = report.slot_objective.sum(axis=1) - report.period_optimum
    return ucb_bound, realised
