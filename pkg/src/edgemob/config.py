"""Run configuration: versioned JSON mirroring :class:`RunConfig`, plus shipped profiles."""

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, SchemaError
from .model import SystemConstants
from .policies import EXPLORE_MODES, FrameSchedule, PsiConfig, SlotNoise
from .scenario import MobilityParams, ProcessParams, RadioParams, build_grid_topology

CONFIG_SCHEMA = "edgemob.config"
CONFIG_VERSION = 1

KNOWN_POLICIES = ("delay_optimal", "lookahead", "fsi", "psi", "energy_optimal")

FULL_PROFILE = {
    "schema": CONFIG_SCHEMA,
    "version": CONFIG_VERSION,
    "profile": "full",
    "topology": {"side_count": 5, "spacing": 160.0, "area": [1000.0, 1000.0], "radius": 250.0},
    "mobility": {"step": 50.0, "reversal_suppression": 1.0, "bounds": None},
    "processes": {
        "lambda_max": 12.0, "background_max": 40.0, "service_rate": 50.0,
        "pathloss_intercept": 25.3, "pathloss_slope": 37.6, "min_distance": 10.0,
        "shadowing_db": 0.0, "interference": 0.0, "max_retries": 100,
    },
    "radio": {"noise_power": 1e-14, "bandwidth": 20e6, "tx_power": 0.1},
    "constants": {
        "workload_size": 8e6, "budget": 120.0, "budget_unit": "J",
        "min_rate": 1e8, "max_delay": 5.0, "period_minutes": 5.0,
    },
    "schedule": {"R": 250, "J": 4, "V": 0.01},
    "psi": {"K": 100, "explore": "running_max", "explore_coeff": 0.0,
            "noise": {"poisson": True, "shadowing_db": 2.0}},
    "policies": list(KNOWN_POLICIES),
    "lookahead": {"relax": True, "search_cap": 1000000},
    "replications": 10,
    "base_seed": 2017,
    "workers": 1,
    "output": {"dir": "results"},
}

DESK_PROFILE = copy.deepcopy(FULL_PROFILE)
DESK_PROFILE["profile"] = "desk"
DESK_PROFILE["schedule"]["R"] = 25
DESK_PROFILE["constants"]["budget"] = 3.0
DESK_PROFILE["replications"] = 20

PROFILES = {"full": FULL_PROFILE, "desk": DESK_PROFILE}


def _deep_update(base, override):
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = copy.deepcopy(value)
    return base


@dataclass
class RunConfig:
    raw: dict = field(default_factory=lambda: copy.deepcopy(DESK_PROFILE))

    def __post_init__(self):
        self.validate()

    # -- construction -----------------------------------------------------
    @classmethod
    def profile(cls, name, **overrides):
        if name not in PROFILES:
            raise ConfigError(f"unknown profile {name!r}; expected one of {sorted(PROFILES)}")
        return cls(_deep_update(copy.deepcopy(PROFILES[name]), overrides))

    @classmethod
    def from_dict(cls, doc):
        if doc.get("schema", CONFIG_SCHEMA) != CONFIG_SCHEMA:
            raise SchemaError(f"not a run config: schema={doc.get('schema')!r}")
        version = doc.get("version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise SchemaError(f"config schema version {version} is not supported (expected {CONFIG_VERSION})")
        base = copy.deepcopy(PROFILES[doc.get("profile", "desk")] if doc.get("profile", "desk") in PROFILES
                             else DESK_PROFILE)
        return cls(_deep_update(base, doc))

    @classmethod
    def load(cls, path):
        with Path(path).open() as fh:
            try:
                return cls.from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from exc

    def to_dict(self):
        return copy.deepcopy(self.raw)

    def replace(self, **overrides):
        return RunConfig(_deep_update(self.to_dict(), overrides))

    # -- validation -------------------------------------------------------
    def validate(self):
        raw = self.raw
        for key in ("topology", "constants", "schedule", "psi", "policies", "replications", "base_seed"):
            if key not in raw:
                raise ConfigError(f"config is missing {key!r}")
        if int(raw["replications"]) < 1:
            raise ConfigError("replications must be >= 1")
        unknown = [p for p in raw["policies"] if p not in KNOWN_POLICIES]
        if unknown:
            raise ConfigError(f"unregistered policies {unknown}; known: {list(KNOWN_POLICIES)}")
        if raw["psi"].get("explore", "running_max") not in EXPLORE_MODES:
            raise ConfigError(f"psi.explore must be one of {EXPLORE_MODES}")
        if raw["constants"].get("budget_unit", "J") != "J":
            raise ConfigError("only budget_unit 'J' is supported")
        # building the typed views checks the remaining invariants (T = R*J, V > 0, ...)
        self.schedule()
        self.constants()
        self.psi_config()

    # -- typed views ------------------------------------------------------
    @property
    def replications(self):
        return int(self.raw["replications"])

    @property
    def base_seed(self):
        return int(self.raw["base_seed"])

    @property
    def policies(self):
        return list(self.raw["policies"])

    @property
    def workers(self):
        return int(self.raw.get("workers", 1))

    def schedule(self):
        s = self.raw["schedule"]
        V = s["V"]
        if isinstance(V, (int, float)):
            return FrameSchedule.constant(int(s["J"]), int(s["R"]), float(V))
        return FrameSchedule(J=int(s["J"]), R=int(s["R"]), V=tuple(float(v) for v in V))

    def constants(self):
        c = self.raw["constants"]
        s = self.raw["schedule"]
        return SystemConstants(workload_size=float(c["workload_size"]), budget=float(c["budget"]),
                               horizon=int(s["R"]) * int(s["J"]), min_rate=float(c["min_rate"]),
                               max_delay=float(c["max_delay"]))

    def topology(self):
        t = self.raw["topology"]
        return build_grid_topology(int(t["side_count"]), float(t["spacing"]), tuple(t["area"]), float(t["radius"]))

    def mobility(self):
        m = dict(self.raw.get("mobility", {}))
        if m.get("bounds") is not None:
            m["bounds"] = tuple(m["bounds"])
        return MobilityParams(**m)

    def processes(self):
        return ProcessParams(**self.raw.get("processes", {}))

    def radio(self):
        return RadioParams(**self.raw.get("radio", {}))

    def psi_config(self):
        p = dict(self.raw["psi"])
        noise = SlotNoise(**p.pop("noise", {}))
        return PsiConfig(K=int(p.get("K", 100)), explore=p.get("explore", "running_max"),
                         explore_coeff=float(p.get("explore_coeff", 0.0)), noise=noise)

    @property
    def lookahead_relax(self):
        return bool(self.raw.get("lookahead", {}).get("relax", True))

    @property
    def search_cap(self):
        return int(self.raw.get("lookahead", {}).get("search_cap", 10 ** 6))
