"""Oracle J-step lookahead benchmark.

Each frame of ``J`` periods is solved exactly: minimise the frame's mean delay
over every per-period-feasible decision sequence whose energy fits the frame
budget. Among sequences with equal delay the lexicographically smallest BS
sequence wins.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FrameInfeasible

DEFAULT_SEARCH_CAP = 10 ** 6


@dataclass
class FrameSolution:
    decisions: tuple  # BS index per period
    avg_delay: float
    frame_energy: float
    delays: tuple = ()
    energies: tuple = ()
    relaxed: bool = False  # budget could not be met; min-energy sequence used


def _frame_options(views):
    """Per period: (bs ids, delays, energies) of the feasible candidates, BS-ascending."""
    out = []
    for v in views:
        f = v.feasible
        if not f.any():
            raise FrameInfeasible(f"period {v.t} has no feasible candidate")
        out.append(([int(b) for b in v.bs[f]], [float(x) for x in v.delay[f]], [float(x) for x in v.energy[f]]))
    return out


def _check_cap(options, cap):
    size = math.prod(len(o[0]) for o in options)
    if size > cap:
        raise ConfigError(f"frame search space {size} exceeds cap {cap}")


def solve_frame(views, frame_budget, cap=DEFAULT_SEARCH_CAP):
    """Exact frame optimum by depth-first branch and bound.

    Branches are pruned when the accumulated energy plus the cheapest possible
    remainder exceeds the budget, or when the accumulated delay plus the
    smallest possible remainder cannot beat the incumbent.
    """
    options = _frame_options(views)
    _check_cap(options, cap)
    J = len(options)
    min_e = [min(o[2]) for o in options]
    min_d = [min(o[1]) for o in options]
    rest_e = [sum(min_e[j:]) for j in range(J + 1)]
    rest_d = [sum(min_d[j:]) for j in range(J + 1)]
    # slack guards against rounding in the bound sums only; the final budget test is exact
    slack = 1e-12 * max(1.0, abs(frame_budget))
    best = [math.inf, None]
    path = [0] * J

    def dfs(j, acc_d, acc_e):
        if j == J:
            if acc_e <= frame_budget and acc_d < best[0]:
                best[0] = acc_d
                best[1] = tuple(path)
            return
        ids, ds, es = options[j]
        for i in range(len(ids)):
            e = acc_e + es[i]
            if e + rest_e[j + 1] > frame_budget + slack:
                continue
            d = acc_d + ds[i]
            if d + rest_d[j + 1] > best[0] * (1 + 1e-12) + 1e-300:
                continue
            path[j] = i
            dfs(j + 1, d, e)

    dfs(0, 0.0, 0.0)
    if best[1] is None:
        raise FrameInfeasible(f"no decision sequence meets the frame budget {frame_budget}")
    return _solution(options, best[1])


def solve_frame_exhaustive(views, frame_budget, cap=DEFAULT_SEARCH_CAP):
    """Reference solver: plain enumeration of every sequence, no pruning."""
    options = _frame_options(views)
    _check_cap(options, cap)
    best_d, best_idx = math.inf, None
    for idx in itertools.product(*(range(len(o[0])) for o in options)):
        d = e = 0.0
        for j, i in enumerate(idx):
            d += options[j][1][i]
            e += options[j][2][i]
        if e <= frame_budget and d < best_d:
            best_d, best_idx = d, idx
    if best_idx is None:
        raise FrameInfeasible(f"no decision sequence meets the frame budget {frame_budget}")
    return _solution(options, best_idx)


def _solution(options, idx, relaxed=False):
    decisions = tuple(options[j][0][i] for j, i in enumerate(idx))
    delays = tuple(options[j][1][i] for j, i in enumerate(idx))
    energies = tuple(options[j][2][i] for j, i in enumerate(idx))
    total_d = 0.0
    total_e = 0.0
    for d, e in zip(delays, energies):
        total_d += d
        total_e += e
    return FrameSolution(decisions, total_d / len(idx), total_e, delays, energies, relaxed)


def min_energy_frame(views):
    """Cheapest feasible sequence (ties towards lower delay, then lower BS index)."""
    options = _frame_options(views)
    idx = tuple(min(range(len(o[0])), key=lambda i, o=o: (o[2][i], o[1][i])) for o in options)
    return _solution(options, idx, relaxed=True)


@dataclass
class LookaheadResult:
    frames: list  # FrameSolution per frame
    decisions: np.ndarray  # (T,)
    delay: np.ndarray
    energy: np.ndarray
    budget: float

    @property
    def D_star_frames(self):
        return np.array([f.avg_delay for f in self.frames])

    @property
    def D_star(self):
        return float(np.mean(self.D_star_frames))

    @property
    def mean_delay(self):
        return float(np.mean(self.delay))

    @property
    def total_energy(self):
        return float(np.sum(self.energy))

    @property
    def relaxed_frames(self):
        return [r for r, f in enumerate(self.frames) if f.relaxed]


def solve_lookahead(trace, R, J, relax=False, cap=DEFAULT_SEARCH_CAP):
    """Solve every frame with budget ``budget / R``.

    With ``relax=True`` a frame whose budget cannot be met falls back to its
    minimum-energy sequence and is marked ``relaxed``; otherwise
    :class:`FrameInfeasible` is raised carrying the frame index.
    """
    if R * J != trace.horizon:
        raise ConfigError(f"R*J = {R * J} does not match the trace horizon {trace.horizon}")
    frame_budget = trace.consts.budget / R
    frames = []
    for r in range(R):
        views = [trace.period(t) for t in range(r * J, (r + 1) * J)]
        try:
            frames.append(solve_frame(views, frame_budget, cap))
        except FrameInfeasible as exc:
            if not relax:
                raise FrameInfeasible(f"frame {r}: {exc}", frame_index=r) from exc
            frames.append(min_energy_frame(views))
    return LookaheadResult(
        frames=frames,
        decisions=np.array([d for f in frames for d in f.decisions], dtype=np.int64),
        delay=np.array([d for f in frames for d in f.delays]),
        energy=np.array([e for f in frames for e in f.energies]),
        budget=trace.consts.budget,
    )
