"""Closed-form delay, rate and energy models plus per-period feasibility.

All functions accept Python floats or numpy arrays (broadcast elementwise).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, UnstableServer


@dataclass(frozen=True)
class EdgeServerState:
    service_rate: float  # workloads per period
    background_load: float  # workloads per period offloaded by other users


@dataclass(frozen=True)
class ChannelState:
    gain: float  # linear power gain
    interference: float = 0.0  # W
    noise_power: float = 1e-14  # W
    bandwidth: float = 20e6  # Hz
    tx_power: float = 0.1  # W


@dataclass(frozen=True)
class SystemConstants:
    workload_size: float  # bits per workload
    budget: float  # J, energy budget over the whole horizon
    horizon: int  # periods
    min_rate: float  # bits/s
    max_delay: float  # delay-cost units

    def __post_init__(self):
        for name in ("workload_size", "budget", "horizon", "min_rate", "max_delay"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be strictly positive, got {getattr(self, name)!r}")

    @property
    def per_period_budget(self):
        return self.budget / self.horizon


def _spare(lam, server):
    return np.subtract(server.service_rate, np.add(server.background_load, lam))


def delay_cost(lam, server):
    """Rate-weighted mean response time of an M/G/1/PS edge server.

    Returns ``lam / (s - (mu + lam))``. Raises :class:`UnstableServer` when the
    server would be overloaded (``s <= mu + lam``) for any element.
    """
    spare = _spare(lam, server)
    if np.any(spare <= 0):
        raise UnstableServer(
            f"server overloaded: service_rate={server.service_rate!r}, "
            f"background_load={server.background_load!r}, lambda={lam!r}"
        )
    out = np.divide(lam, spare)
    return float(out) if np.ndim(out) == 0 else out


def delay_cost_or_inf(lam, server):
    """Like :func:`delay_cost` but maps overloaded servers to ``+inf``."""
    spare = np.asarray(_spare(lam, server), dtype=float)
    lam_arr = np.broadcast_to(np.asarray(lam, dtype=float), spare.shape)
    out = np.full(spare.shape, np.inf)
    ok = spare > 0
    out[ok] = lam_arr[ok] / spare[ok]
    return float(out) if out.ndim == 0 else out


def sinr(ch):
    return np.divide(np.multiply(ch.tx_power, ch.gain), np.add(ch.noise_power, ch.interference))


def uplink_rate(ch):
    """Shannon uplink rate in bits/s: ``W * log2(1 + P_tx*H / (noise + I))``."""
    out = np.multiply(ch.bandwidth, np.log2(1.0 + sinr(ch)))
    return float(out) if np.ndim(out) == 0 else out


def tx_energy(lam, ch, gamma):
    """Energy (J) to upload ``lam * gamma`` bits at the channel's Shannon rate."""
    out = np.multiply(ch.tx_power, np.multiply(lam, gamma)) / uplink_rate(ch)
    return float(out) if np.ndim(out) == 0 else out


def is_feasible(lam, server, ch, consts):
    """Minimum-rate and maximum-delay check (boundaries inclusive)."""
    rate_ok = np.asarray(uplink_rate(ch)) >= consts.min_rate
    delay_ok = np.asarray(delay_cost_or_inf(lam, server)) <= consts.max_delay
    out = rate_ok & delay_ok
    return bool(out) if out.ndim == 0 else out
