import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from edgemob.errors import ConfigError, UnstableServer
from edgemob.model import (ChannelState, EdgeServerState, SystemConstants, delay_cost, delay_cost_or_inf,
                           is_feasible, tx_energy, uplink_rate)

CONSTS = SystemConstants(workload_size=8e6, budget=120.0, horizon=1000, min_rate=1e8, max_delay=5.0)


def unit_channel(snr, bandwidth=20e6):
    return ChannelState(gain=float(snr), interference=0.0, noise_power=1.0, bandwidth=bandwidth, tx_power=1.0)


@pytest.mark.parametrize("lam, mu, s, expected", [(10, 20, 50, 0.5), (12, 37, 50, 12.0), (0, 30, 50, 0.0)])
def test_delay_cost_examples(lam, mu, s, expected):
    assert delay_cost(lam, EdgeServerState(s, mu)) == expected


@pytest.mark.parametrize("lam, mu", [(10, 40), (12, 38.5), (25, 25)])
def test_delay_cost_overloaded(lam, mu):
    with pytest.raises(UnstableServer):
        delay_cost(lam, EdgeServerState(50.0, mu))
    assert delay_cost_or_inf(lam, EdgeServerState(50.0, mu)) == math.inf


@pytest.mark.parametrize("snr, expected", [(1, 2.0e7), (3, 4.0e7), (31, 1.0e8)])
def test_uplink_rate_examples(snr, expected):
    assert uplink_rate(unit_channel(snr)) == expected


def test_tx_energy_example():
    ch = ChannelState(gain=10.0, interference=0.0, noise_power=1.0, bandwidth=9.6e7, tx_power=0.1)
    assert uplink_rate(ch) == 9.6e7
    assert tx_energy(12, ch, 8e6) == pytest.approx(0.1, rel=1e-15)
    assert tx_energy(0, ch, 8e6) == 0.0


def test_tx_energy_drops_with_better_gain():
    ch = ChannelState(gain=1e-11)
    better = ChannelState(gain=2e-11)
    assert tx_energy(6, better, 8e6) < tx_energy(6, ch, 8e6)


def test_feasibility_boundaries_inclusive():
    ch = unit_channel(31)  # exactly r_min
    assert is_feasible(10, EdgeServerState(50.0, 38.0), ch, CONSTS)  # delay exactly 5
    assert not is_feasible(10, EdgeServerState(50.0, 40.0), ch, CONSTS)  # unstable
    assert not is_feasible(1, EdgeServerState(50.0, 0.0), unit_channel(math.sqrt(32) - 1), CONSTS)  # r_min/2


def test_vectorised_feasibility():
    server = EdgeServerState(np.array([50.0, 50.0, 50.0]), np.array([10.0, 45.0, 10.0]))
    ch = ChannelState(gain=np.array([31.0, 31.0, 1.0]), noise_power=1.0, tx_power=1.0)
    assert is_feasible(6.0, server, ch, CONSTS).tolist() == [True, False, False]


def test_constants_must_be_positive():
    with pytest.raises(ConfigError):
        SystemConstants(workload_size=8e6, budget=0.0, horizon=10, min_rate=1e8, max_delay=5)


lams = st.floats(0, 12)
mus = st.floats(0, 40)


@given(lams, mus, st.floats(50, 100))
def test_delay_identity(lam, mu, s):
    if s - mu - lam <= 1e-6:
        return
    d = delay_cost(lam, EdgeServerState(s, mu))
    assert d * (s - mu - lam) == pytest.approx(lam, rel=1e-12, abs=1e-300)


@given(st.floats(1e-14, 1e-8), st.floats(1e-16, 1e-12), st.floats(0, 1e-12), st.floats(1e-3, 1e3))
def test_rate_scale_invariance(gain, noise, interference, scale):
    a = ChannelState(gain=gain, interference=interference, noise_power=noise)
    b = ChannelState(gain=gain * scale, interference=interference * scale, noise_power=noise * scale)
    assert uplink_rate(b) == pytest.approx(uplink_rate(a), rel=1e-9)


@given(st.floats(0.01, 12), st.floats(1e-13, 1e-8), st.floats(1e5, 1e8), st.floats(0.1, 10))
def test_energy_linear_in_lambda_and_size(lam, gain, gamma, k):
    ch = ChannelState(gain=gain)
    base = tx_energy(lam, ch, gamma)
    assert tx_energy(lam * k, ch, gamma) == pytest.approx(k * base, rel=1e-12)
    assert tx_energy(lam, ch, gamma * k) == pytest.approx(k * base, rel=1e-12)


@given(lams, mus, st.floats(1e-13, 1e-9), st.floats(0, 1e-14),
       st.floats(1.0, 3.0), st.floats(1.0, 1.5), st.floats(0.0, 10.0), st.floats(0, 1e-14))
def test_feasibility_monotone(lam, mu, gain, interference, gain_up, s_up, mu_down, i_down):
    server = EdgeServerState(50.0, mu)
    ch = ChannelState(gain=gain, interference=interference)
    if not is_feasible(lam, server, ch, CONSTS):
        return
    better_server = EdgeServerState(50.0 * s_up, max(0.0, mu - mu_down))
    better_ch = ChannelState(gain=gain * gain_up, interference=max(0.0, interference - i_down))
    assert is_feasible(lam, better_server, better_ch, CONSTS)
