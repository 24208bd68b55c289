"""Experiment orchestration: paired-trace replications, aggregation, sweeps, output files."""

import csv
import hashlib
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import bounds as bnd
from .config import RunConfig
from .errors import ConfigError, EdgeMobError, FrameInfeasible
from .offline import solve_lookahead
from .policies import POLICIES, RunReport, queue_update, run_policy
from .scenario import generate_trace

log = logging.getLogger(__name__)

SUMMARY_SCHEMA_ID = "edgemob.summary"
SUMMARY_VERSION = 1
SERIES_METRICS = ("chosen", "delay", "energy", "queue", "handovers", "fallback")
SWEEPABLE = {"budget": ("constants", "budget"), "K": ("psi", "K"), "V": ("schedule", "V")}


class ReplicationError(EdgeMobError):
    def __init__(self, index, cause):
        super().__init__(f"replication {index}: {cause}")
        self.index = index
        self.cause = cause


@dataclass
class ReplicationResult:
    index: int
    seed: int
    trace_hash: str
    reports: dict  # policy name -> RunReport
    bounds: dict = field(default_factory=dict)
    relaxed_frames: list = field(default_factory=list)


def _lookahead_report(la, trace, schedule):
    """Wrap the lookahead decisions in a RunReport (queue tracked for reporting only)."""
    T = trace.horizon
    b = trace.consts.per_period_budget
    queue = np.zeros(T)
    after = np.zeros(T)
    q = 0.0
    for t in range(T):
        if t % schedule.J == 0:
            q = 0.0
        queue[t] = q
        q = queue_update(q, float(la.energy[t]), b)
        after[t] = q
    relaxed = np.repeat([f.relaxed for f in la.frames], schedule.J)
    sizes = np.array([int(trace.period(t).feasible.sum()) for t in range(T)])
    return RunReport(policy="lookahead", chosen=la.decisions, delay=la.delay, energy=la.energy, queue=queue,
                     queue_after=after, handovers=np.zeros(T, dtype=np.int64), fallback=relaxed,
                     feasible_set_size=sizes, budget=trace.consts.budget,
                     V_used=np.repeat(np.asarray(schedule.V, dtype=float), schedule.J))


def replication_seed(config, index):
    return config.base_seed + index


def run_replication(config, index, trace=None):
    """One trace, every configured policy on it, the lookahead and the bound values."""
    seed = replication_seed(config, index)
    schedule = config.schedule()
    if trace is None:
        trace = generate_trace(config.topology(), config.constants(), seed, config.mobility(),
                               config.processes(), config.radio())
    policy_seed = int(np.random.SeedSequence([seed, 1]).generate_state(1)[0])
    reports = {}
    la = None
    needs_lookahead = "lookahead" in config.policies
    if needs_lookahead:
        la = solve_lookahead(trace, schedule.R, schedule.J, relax=config.lookahead_relax, cap=config.search_cap)
    for name in config.policies:
        if name == "lookahead":
            reports[name] = _lookahead_report(la, trace, schedule)
            continue
        policy = POLICIES[name](config.psi_config()) if name == "psi" else POLICIES[name]()
        reports[name] = run_policy(trace, schedule, policy, seed=policy_seed)
    result = ReplicationResult(index=index, seed=seed, trace_hash=trace.content_hash(), reports=reports,
                               relaxed_frames=la.relaxed_frames if la else [])
    if la is not None:
        result.bounds = replication_bounds(trace, schedule, la, reports, config.psi_config().K)
    return result


def replication_bounds(trace, schedule, la, reports, K):
    U = bnd.compute_U(trace)
    D = la.D_star_frames
    V = np.asarray(schedule.V, dtype=float)
    J = schedule.J
    budget = trace.consts.budget
    out = {
        "U": U, "J": J, "R": schedule.R, "V": V.tolist(), "budget": budget,
        "D_star_frames": D.tolist(), "D_star": float(np.mean(D)),
        "C_fsi": 0.0,
        "delay_bound_fsi": bnd.drift_delay_bound(D, U, 0.0, J, V),
        "energy_bound_fsi": bnd.drift_energy_bound(D, U, 0.0, J, V, budget),
    }
    if "psi" in reports:
        ucb_bound, realised = bnd.psi_trace_constants(trace, reports["psi"], K)
        C_emp = max(0.0, float(np.max(realised)))
        C_ucb = float(np.max(ucb_bound))
        out.update({
            "C_psi_empirical": C_emp, "C_psi_ucb": C_ucb,
            "delay_bound_psi": bnd.drift_delay_bound(D, U, C_emp, J, V),
            "energy_bound_psi": bnd.drift_energy_bound(D, U, C_emp, J, V, budget),
            "delay_bound_psi_ucb": bnd.drift_delay_bound(D, U, C_ucb, J, V),
            "energy_bound_psi_ucb": bnd.drift_energy_bound(D, U, C_ucb, J, V, budget),
            "psi_regret_within_ucb_bound": float(np.mean(realised <= ucb_bound)),
        })
    return out


def _run_one(args):
    config_dict, index = args
    config = RunConfig(config_dict)
    try:
        return run_replication(config, index)
    except (EdgeMobError, ValueError) as exc:
        if isinstance(exc, FrameInfeasible):
            raise ReplicationError(index, f"lookahead frame {exc.frame_index}: {exc}") from exc
        raise ReplicationError(index, exc) from exc


@dataclass
class ExperimentResult:
    config: RunConfig
    replications: list

    @property
    def policies(self):
        return self.config.policies

    def values(self, policy, metric):
        """Per-replication aggregate: 'mean_delay', 'total_energy', 'handovers', ..."""
        out = []
        for rep in self.replications:
            r = rep.reports[policy]
            out.append({
                "mean_delay": r.mean_delay,
                "total_energy": r.total_energy,
                "budget_satisfied": float(r.budget_satisfied),
                "handovers": float(np.mean(r.handovers)),
                "fallback_periods": float(np.sum(r.fallback)),
            }[metric])
        return np.array(out)

    def aggregate(self):
        agg = {}
        for p in self.policies:
            agg[p] = {}
            for metric in ("mean_delay", "total_energy", "budget_satisfied", "handovers", "fallback_periods"):
                v = self.values(p, metric)
                se = float(np.std(v, ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0
                agg[p][metric] = {"mean": float(np.mean(v)), "se": se}
        return agg


def run_experiment(config):
    """Run all replications; policies within a replication share one trace."""
    jobs = [(config.to_dict(), i) for i in range(config.replications)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            reps = list(pool.map(_run_one, jobs))
    else:
        reps = [_run_one(job) for job in jobs]
    for rep in reps:
        log.info("replication %d (seed %d): trace %s", rep.index, rep.seed, rep.trace_hash[:12])
    return ExperimentResult(config=config, replications=reps)


def sweep(config, parameter, values):
    """One experiment per value with identical seeds (paired comparison)."""
    if parameter not in SWEEPABLE:
        raise ConfigError(f"parameter {parameter!r} is not sweepable; choose from {sorted(SWEEPABLE)}")
    section, key = SWEEPABLE[parameter]
    results = []
    for value in values:
        cfg = config.replace(**{section: {key: value}})
        results.append((value, run_experiment(cfg)))
    return results


# ---------------------------------------------------------------------------
# output


def psi_convergence(result):
    """Per-slot curves averaged over periods and replications.

    Returns a dict with the running-average observed objective, the running
    average of the chosen arms' noiseless objective and the noiseless optimum,
    all per slot (so the optimum is ``Z*/K``), plus mean switch counts.
    """
    obs, exp, opt = [], [], []
    for rep in result.replications:
        r = rep.reports.get("psi")
        if r is None:
            return None
        K = r.slot_objective.shape[1]
        obs.append(r.slot_objective)
        exp.append(r.slot_expected)
        opt.append(np.repeat((r.period_optimum / K)[:, None], K, axis=1))
    obs, exp, opt = (np.concatenate(a) for a in (obs, exp, opt))
    k = np.arange(1, obs.shape[1] + 1)
    run = lambda a: np.cumsum(a, axis=1) / k
    return {
        "k": k,
        "avg_observed": run(obs).mean(axis=0),
        "avg_expected": run(exp).mean(axis=0),
        "instant_expected": exp.mean(axis=0),
        "optimum": opt.mean(axis=0),
    }


def summary_dict(result):
    cfg = result.config.to_dict()
    reps = []
    for rep in result.replications:
        reps.append({
            "index": rep.index,
            "seed": rep.seed,
            "trace_hash": rep.trace_hash,
            "relaxed_frames": list(rep.relaxed_frames),
            "policies": {
                p: {"mean_delay": r.mean_delay, "total_energy": r.total_energy,
                    "budget_satisfied": bool(r.budget_satisfied),
                    "handovers": int(np.sum(r.handovers)), "fallback_periods": int(np.sum(r.fallback))}
                for p, r in rep.reports.items()
            },
            "bounds": rep.bounds,
        })
    doc = {
        "schema": SUMMARY_SCHEMA_ID,
        "version": SUMMARY_VERSION,
        "config": cfg,
        "aggregates": result.aggregate(),
        "replications": reps,
    }
    doc["content_hash"] = git_blob_hash(_canonical(doc))
    return doc


def _canonical(doc):
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def git_blob_hash(data):
    """SHA-1 of ``b"blob <len>\\0" + data``, as ``git hash-object`` computes it."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


_NUM = {"type": "number"}
SUMMARY_SCHEMA = {
    "type": "object",
    "required": ["schema", "version", "config", "aggregates", "replications", "content_hash"],
    "properties": {
        "schema": {"const": SUMMARY_SCHEMA_ID},
        "version": {"const": SUMMARY_VERSION},
        "config": {"type": "object", "required": ["schedule", "constants", "policies", "replications"]},
        "content_hash": {"type": "string", "pattern": "^[0-9a-f]{40}$"},
        "aggregates": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["mean_delay", "total_energy", "budget_satisfied"],
                "additionalProperties": {"type": "object", "required": ["mean", "se"],
                                         "properties": {"mean": _NUM, "se": _NUM}},
            },
        },
        "replications": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["index", "seed", "trace_hash", "policies", "bounds"],
                "properties": {
                    "index": {"type": "integer"},
                    "seed": {"type": "integer"},
                    "trace_hash": {"type": "string"},
                    "policies": {"type": "object", "additionalProperties": {
                        "type": "object", "required": ["mean_delay", "total_energy", "budget_satisfied"]}},
                    "bounds": {"type": "object", "properties": {
                        "U": _NUM, "D_star": _NUM, "delay_bound_fsi": _NUM, "energy_bound_fsi": _NUM}},
                },
            },
        },
    },
}


def validate_summary(doc):
    jsonschema.validate(doc, SUMMARY_SCHEMA)
    body = {k: v for k, v in doc.items() if k != "content_hash"}
    if git_blob_hash(_canonical(body)) != doc["content_hash"]:
        raise jsonschema.ValidationError("content_hash does not match the summary body")
    return doc


def emit(result, out_dir, formats=("csv", "json")):
    """Write one CSV per time series plus ``summary.json``; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        for metric in SERIES_METRICS:
            path = out / f"{metric}.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["t", "replication", "policy", metric])
                for rep in result.replications:
                    for p in result.policies:
                        series = getattr(rep.reports[p], metric)
                        for t, v in enumerate(series):
                            w.writerow([t, rep.index, p, _fmt(v)])
            written.append(path)
        conv = psi_convergence(result)
        if conv is not None:
            path = out / "psi_convergence.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh)
                cols = ["k", "avg_observed", "avg_expected", "instant_expected", "optimum"]
                w.writerow(cols)
                for i in range(len(conv["k"])):
                    w.writerow([_fmt(conv[c][i]) for c in cols])
            written.append(path)
    if "json" in formats:
        path = out / "summary.json"
        doc = summary_dict(result)
        validate_summary(doc)
        with path.open("w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
        written.append(path)
    return written


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return repr(float(v))


def evaluate_summary_bounds(doc):
    """Recompute the bound values stored in a summary and compare with the empirical numbers."""
    rows = []
    for rep in doc["replications"]:
        b = rep["bounds"]
        if not b:
            continue
        D, U, J, V, budget = b["D_star_frames"], b["U"], b["J"], b["V"], b["budget"]
        pol = rep["policies"]
        checks = [("fsi", "delay", 0.0), ("fsi", "energy", 0.0)]
        if "C_psi_empirical" in b:
            checks += [("psi", "delay", b["C_psi_empirical"]), ("psi", "energy", b["C_psi_empirical"])]
        for policy, kind, C in checks:
            if policy not in pol:
                continue
            if kind == "delay":
                bound = bnd.drift_delay_bound(D, U, C, J, V)
                value = pol[policy]["mean_delay"]
            else:
                bound = bnd.drift_energy_bound(D, U, C, J, V, budget)
                value = pol[policy]["total_energy"]
            rows.append({"replication": rep["index"], "policy": policy, "metric": kind, "C": C,
                         "empirical": value, "bound": bound, "slack": bound - value, "holds": value <= bound})
    return rows
