"""Scenario generation: grid topology, user walk, exogenous processes, trace files."""

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ConfigError, InfeasibleScenario, SchemaError
from .model import ChannelState, EdgeServerState, SystemConstants, delay_cost_or_inf, tx_energy, uplink_rate

TRACE_SCHEMA = "edgemob.trace"
TRACE_VERSION = 1

TRACE_UNITS = {
    "position": "m",
    "lambda": "workloads/period",
    "service_rate": "workloads/period",
    "background_load": "workloads/period",
    "gain": "linear power gain",
    "interference": "W",
    "noise_power": "W",
    "bandwidth": "Hz",
    "tx_power": "W",
    "workload_size": "bit",
    "budget": "J",
    "min_rate": "bit/s",
    "max_delay": "delay-cost units",
}


@dataclass(frozen=True)
class Topology:
    bs_positions: np.ndarray  # (N, 2) metres
    area: tuple  # (width, height) metres, origin at (0, 0)
    association_radius: float

    @property
    def n_bs(self):
        return len(self.bs_positions)

    def distances(self, point):
        return np.hypot(*(self.bs_positions - np.asarray(point, dtype=float)).T)

    def candidates(self, point):
        """Indices of base stations within the association radius of ``point``."""
        return np.flatnonzero(self.distances(point) <= self.association_radius)


def build_grid_topology(side_count=5, spacing=160.0, area=(1000.0, 1000.0), radius=250.0):
    """Square grid of ``side_count**2`` base stations centred in ``area``."""
    if side_count < 1:
        raise ConfigError(f"side_count must be >= 1, got {side_count}")
    if spacing <= 0 or radius <= 0:
        raise ConfigError("spacing and radius must be positive")
    width, height = area
    extent = (side_count - 1) * spacing
    if extent > width or extent > height:
        raise ConfigError(f"a {side_count}x{side_count} grid with spacing {spacing} m does not fit in {area}")
    offsets = (np.arange(side_count) - (side_count - 1) / 2) * spacing
    xs = width / 2 + offsets
    ys = height / 2 + offsets
    # row-major: index = row * side_count + col
    pos = np.array([(x, y) for y in ys for x in xs], dtype=float)
    return Topology(bs_positions=pos, area=(float(width), float(height)), association_radius=float(radius))


@dataclass(frozen=True)
class MobilityParams:
    step: float = 50.0  # metres moved per period
    reversal_suppression: float = 1.0  # probability of excluding the reverse direction
    bounds: tuple = None  # (xmin, ymin, xmax, ymax); None -> bounding box of the BSs


_DIRECTIONS = np.array([(1, 0), (0, 1), (-1, 0), (0, -1)])


@dataclass(frozen=True)
class Trajectory:
    positions: np.ndarray  # (T, 2)

    def __len__(self):
        return len(self.positions)


def _walk_bounds(topology, params):
    if params.bounds is not None:
        return tuple(float(b) for b in params.bounds)
    lo = topology.bs_positions.min(axis=0)
    hi = topology.bs_positions.max(axis=0)
    return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])


def generate_trajectory(topology, T, rng_seed, params=MobilityParams()):
    """Lattice random walk that avoids stepping straight back.

    The walk lives on a lattice of pitch ``params.step`` inside the walk bounds.
    Each period it moves one lattice step in one of the four compass
    directions; the reverse of the previous move is dropped from the choice set
    with probability ``params.reversal_suppression`` (unless it is the only
    in-bounds move). The lattice origin is shifted by a random offset of up to
    one step so walk points do not sit on the symmetric points of the BS grid.
    """
    if T < 1:
        raise ConfigError(f"T must be >= 1, got {T}")
    rng = np.random.default_rng(rng_seed)
    xmin, ymin, xmax, ymax = _walk_bounds(topology, params)
    xmin, ymin = xmin + rng.uniform(0, params.step), ymin + rng.uniform(0, params.step)
    nx = max(int(math.floor((xmax - xmin) / params.step + 1e-9)) + 1, 1)
    ny = max(int(math.floor((ymax - ymin) / params.step + 1e-9)) + 1, 1)
    cell = np.array([rng.integers(nx), rng.integers(ny)])
    cells = [cell.copy()]
    last = None
    for _ in range(T - 1):
        options = []
        for d, vec in enumerate(_DIRECTIONS):
            nxt = cell + vec
            if 0 <= nxt[0] < nx and 0 <= nxt[1] < ny:
                options.append(d)
        if not options:  # single-point lattice
            cells.append(cell.copy())
            continue
        if last is not None and len(options) > 1:
            reverse = (last + 2) % 4
            if reverse in options and rng.random() < params.reversal_suppression:
                options.remove(reverse)
        last = options[rng.integers(len(options))]
        cell = cell + _DIRECTIONS[last]
        cells.append(cell.copy())
    cells = np.array(cells, dtype=float)
    positions = np.column_stack([xmin + cells[:, 0] * params.step, ymin + cells[:, 1] * params.step])
    return Trajectory(positions=positions)


@dataclass(frozen=True)
class RadioParams:
    noise_power: float = 1e-14  # W
    bandwidth: float = 20e6  # Hz
    tx_power: float = 0.1  # W


@dataclass(frozen=True)
class ProcessParams:
    lambda_max: float = 12.0
    background_max: float = 40.0
    service_rate: float = 50.0
    pathloss_intercept: float = 25.3  # dB
    pathloss_slope: float = 37.6  # dB per decade of distance in metres
    min_distance: float = 10.0  # m, pathloss is clamped below this distance
    shadowing_db: float = 0.0  # std of per-period log-normal shadowing
    interference: float = 0.0  # W, constant inter-cell interference
    max_retries: int = 100


def pathloss_db(distance, intercept=25.3, slope=37.6):
    return intercept + slope * np.log10(distance)


def pathloss_gain(distance, intercept=25.3, slope=37.6):
    return 10.0 ** (-pathloss_db(distance, intercept, slope) / 10.0)


@dataclass
class PeriodView:
    """Everything the full-information user sees in one period, restricted to candidates."""

    t: int
    lam: float
    bs: np.ndarray  # candidate BS indices, ascending
    service_rate: np.ndarray
    background: np.ndarray
    gain: np.ndarray
    interference: np.ndarray
    radio: RadioParams
    consts: SystemConstants
    delay_fn: object = field(default=delay_cost_or_inf, repr=False)

    @property
    def server(self):
        return EdgeServerState(service_rate=self.service_rate, background_load=self.background)

    @property
    def channel(self):
        r = self.radio
        return ChannelState(gain=self.gain, interference=self.interference, noise_power=r.noise_power,
                            bandwidth=r.bandwidth, tx_power=r.tx_power)

    @cached_property
    def delay(self):
        return np.asarray(self.delay_fn(self.lam, self.server), dtype=float)

    @cached_property
    def rate(self):
        return np.asarray(uplink_rate(self.channel), dtype=float)

    @cached_property
    def energy(self):
        return np.asarray(tx_energy(self.lam, self.channel, self.consts.workload_size), dtype=float)

    @cached_property
    def feasible(self):
        return (self.rate >= self.consts.min_rate) & (self.delay <= self.consts.max_delay)

    @cached_property
    def stable(self):
        return np.isfinite(self.delay)


@dataclass
class ScenarioTrace:
    topology: Topology
    positions: np.ndarray  # (T, 2)
    candidates: list  # per period: ascending array of BS indices
    lam: np.ndarray  # (T,)
    service_rate: np.ndarray  # (T, N)
    background: np.ndarray  # (T, N)
    gain: np.ndarray  # (T, N), NaN outside the candidate set
    interference: np.ndarray  # (T, N), NaN outside the candidate set
    consts: SystemConstants
    radio: RadioParams
    seed: int = None

    @property
    def horizon(self):
        return len(self.lam)

    def period(self, t, delay_fn=delay_cost_or_inf):
        bs = self.candidates[t]
        return PeriodView(
            t=t, lam=float(self.lam[t]), bs=bs,
            service_rate=self.service_rate[t, bs], background=self.background[t, bs],
            gain=self.gain[t, bs], interference=self.interference[t, bs],
            radio=self.radio, consts=self.consts, delay_fn=delay_fn,
        )

    def periods(self):
        return [self.period(t) for t in range(self.horizon)]

    def with_consts(self, consts):
        """Same exogenous state under different system constants (e.g. a budget sweep)."""
        return ScenarioTrace(self.topology, self.positions, self.candidates, self.lam, self.service_rate,
                             self.background, self.gain, self.interference, consts, self.radio, self.seed)

    def to_dict(self):
        return trace_to_dict(self)

    def content_hash(self):
        blob = json.dumps(trace_to_dict(self), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def generate_processes(topology, trajectory, consts, rng_seed, params=ProcessParams(), radio=RadioParams()):
    """Draw workload, background load, service rate and channel gains per period.

    Periods where no candidate passes the rate/delay checks get their background
    load (and shadowing, if enabled) redrawn up to ``params.max_retries`` times.
    """
    rng = np.random.default_rng(rng_seed)
    positions = np.asarray(trajectory.positions, dtype=float)
    T, N = len(positions), topology.n_bs
    if T != consts.horizon:
        raise ConfigError(f"trajectory length {T} != horizon {consts.horizon}")
    lam = rng.uniform(0.0, params.lambda_max, size=T)
    service = np.full((T, N), float(params.service_rate))
    background = np.empty((T, N))
    gain = np.full((T, N), np.nan)
    interference = np.full((T, N), np.nan)
    candidates = []
    for t in range(T):
        bs = topology.candidates(positions[t])
        if len(bs) == 0:
            raise InfeasibleScenario(f"period {t}: position {positions[t].tolist()} has no BS in range")
        dist = np.maximum(topology.distances(positions[t])[bs], params.min_distance)
        base_gain = pathloss_gain(dist, params.pathloss_intercept, params.pathloss_slope)
        for attempt in range(params.max_retries + 1):
            background[t] = rng.uniform(0.0, params.background_max, size=N)
            g = base_gain
            if params.shadowing_db > 0:
                g = base_gain * 10.0 ** (rng.normal(0.0, params.shadowing_db, size=len(bs)) / 10.0)
            gain[t, bs] = g
            interference[t, bs] = params.interference
            view = PeriodView(t, float(lam[t]), bs, service[t, bs], background[t, bs], gain[t, bs],
                              interference[t, bs], radio, consts)
            if view.feasible.any():
                break
        else:
            raise InfeasibleScenario(f"period {t}: no feasible BS after {params.max_retries} redraws")
        candidates.append(bs)
    return ScenarioTrace(topology=topology, positions=positions, candidates=candidates, lam=lam,
                         service_rate=service, background=background, gain=gain, interference=interference,
                         consts=consts, radio=radio, seed=None if rng_seed is None else int(rng_seed))


def generate_trace(topology, consts, seed, mobility=MobilityParams(), processes=ProcessParams(),
                   radio=RadioParams()):
    """Trajectory plus processes from one integer seed (independent child streams)."""
    walk_seed, proc_seed = np.random.SeedSequence(seed).generate_state(2)
    traj = generate_trajectory(topology, consts.horizon, int(walk_seed), mobility)
    trace = generate_processes(topology, traj, consts, int(proc_seed), processes, radio)
    trace.seed = int(seed)
    return trace


# ---------------------------------------------------------------------------
# Trace files


def trace_to_dict(trace):
    periods = []
    for t in range(trace.horizon):
        bs = trace.candidates[t]
        periods.append({
            "t": t,
            "position": [float(v) for v in trace.positions[t]],
            "lambda": float(trace.lam[t]),
            "candidates": [int(n) for n in bs],
            "service_rate": [float(v) for v in trace.service_rate[t]],
            "background_load": [float(v) for v in trace.background[t]],
            "channels": [
                {"bs": int(n), "gain": float(trace.gain[t, n]), "interference": float(trace.interference[t, n])}
                for n in bs
            ],
        })
    c, r, topo = trace.consts, trace.radio, trace.topology
    return {
        "schema": TRACE_SCHEMA,
        "version": TRACE_VERSION,
        "units": dict(TRACE_UNITS),
        "seed": trace.seed,
        "consts": {"workload_size": c.workload_size, "budget": c.budget, "horizon": c.horizon,
                   "min_rate": c.min_rate, "max_delay": c.max_delay},
        "radio": {"noise_power": r.noise_power, "bandwidth": r.bandwidth, "tx_power": r.tx_power},
        "topology": {
            "bs_positions": [[float(x), float(y)] for x, y in topo.bs_positions],
            "area": list(topo.area),
            "association_radius": topo.association_radius,
        },
        "periods": periods,
    }


def _require(mapping, key, where):
    try:
        return mapping[key]
    except (KeyError, TypeError):
        raise SchemaError(f"missing field {key!r} in {where}") from None


def trace_from_dict(doc):
    if _require(doc, "schema", "trace") != TRACE_SCHEMA:
        raise SchemaError(f"not a trace file: schema={doc.get('schema')!r}")
    version = _require(doc, "version", "trace")
    if version != TRACE_VERSION:
        raise SchemaError(f"trace schema version {version} is not supported (expected {TRACE_VERSION})")
    c = _require(doc, "consts", "trace")
    consts = SystemConstants(**{k: _require(c, k, "consts") for k in
                                ("workload_size", "budget", "horizon", "min_rate", "max_delay")})
    r = _require(doc, "radio", "trace")
    radio = RadioParams(**{k: _require(r, k, "radio") for k in ("noise_power", "bandwidth", "tx_power")})
    tp = _require(doc, "topology", "trace")
    topology = Topology(bs_positions=np.array(_require(tp, "bs_positions", "topology"), dtype=float).reshape(-1, 2),
                        area=tuple(_require(tp, "area", "topology")),
                        association_radius=_require(tp, "association_radius", "topology"))
    periods = _require(doc, "periods", "trace")
    T, N = len(periods), topology.n_bs
    if T != consts.horizon:
        raise SchemaError(f"{T} periods stored but horizon is {consts.horizon}")
    positions = np.empty((T, 2))
    lam = np.empty(T)
    service = np.empty((T, N))
    background = np.empty((T, N))
    gain = np.full((T, N), np.nan)
    interference = np.full((T, N), np.nan)
    candidates = []
    for t, p in enumerate(periods):
        where = f"period {t}"
        positions[t] = _require(p, "position", where)
        lam[t] = _require(p, "lambda", where)
        service[t] = _require(p, "service_rate", where)
        background[t] = _require(p, "background_load", where)
        bs = np.array(_require(p, "candidates", where), dtype=np.int64)
        channels = {int(_require(ch, "bs", where)): ch for ch in _require(p, "channels", where)}
        for n in bs:
            if int(n) not in channels:
                raise SchemaError(f"{where}: missing channel entry for candidate BS {int(n)}")
            gain[t, n] = _require(channels[int(n)], "gain", where)
            interference[t, n] = _require(channels[int(n)], "interference", where)
        candidates.append(bs)
    return ScenarioTrace(topology=topology, positions=positions, candidates=candidates, lam=lam,
                         service_rate=service, background=background, gain=gain, interference=interference,
                         consts=consts, radio=radio, seed=doc.get("seed"))


def save_trace(trace, path):
    path = Path(path)
    with path.open("w") as fh:
        json.dump(trace_to_dict(trace), fh, indent=1)
    return path


def load_trace(path):
    with Path(path).open() as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return trace_from_dict(doc)


def traces_equal(a, b):
    """Bit-exact comparison of every numeric field."""
    same = (
        a.horizon == b.horizon
        and a.consts == b.consts
        and a.radio == b.radio
        and a.seed == b.seed
        and a.topology.area == b.topology.area
        and a.topology.association_radius == b.topology.association_radius
        and np.array_equal(a.topology.bs_positions, b.topology.bs_positions)
        and all(np.array_equal(x, y) for x, y in zip(a.candidates, b.candidates))
    )
    if not same:
        return False
    for name in ("positions", "lam", "service_rate", "background", "gain", "interference"):
        if not np.array_equal(getattr(a, name), getattr(b, name), equal_nan=True):
            return False
    return True
