import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from edgemob.bounds import (compute_U, drift_delay_bound, drift_energy_bound, gaps_from_objectives,
                            measure_regret, ucb_regret_bound)
from edgemob.errors import DegenerateGapWarning
from edgemob.model import SystemConstants
from edgemob.scenario import RadioParams, ScenarioTrace, build_grid_topology


def unit_rate_trace(lams, budget):
    """One-BS trace where the uplink runs at exactly 1e8 bit/s, so energy = 0.1 * lambda."""
    T = len(lams)
    topo = build_grid_topology(side_count=1)
    consts = SystemConstants(workload_size=1e8, budget=budget, horizon=T, min_rate=1e8, max_delay=5.0)
    radio = RadioParams(noise_power=1.0, bandwidth=1e8, tx_power=0.1)
    ones = np.ones((T, 1))
    return ScenarioTrace(topo, np.full((T, 2), 500.0), [np.array([0])] * T, np.asarray(lams, dtype=float),
                         50.0 * ones, 0.0 * ones, 10.0 * ones, 0.0 * ones, consts, radio)


def test_U_zero_when_every_period_spends_its_share():
    tr = unit_rate_trace([1.2, 1.2, 1.2], budget=0.36)
    assert tr.period(0).energy[0] == pytest.approx(0.12, rel=1e-12)
    assert compute_U(tr) == pytest.approx(0.0, abs=1e-20)


def test_U_example():
    tr = unit_rate_trace([1.2, 3.0, 1.2], budget=0.36)
    assert compute_U(tr) == pytest.approx(0.0162, rel=1e-9)


def test_U_permutation_invariant():
    lams = [0.3, 2.0, 4.5, 1.1, 0.0]
    a = compute_U(unit_rate_trace(lams, budget=1.0))
    b = compute_U(unit_rate_trace(lams[::-1], budget=1.0))
    assert a == b


def test_regret_bound_example():
    expected = 8 / 0.1 + (1 + math.pi ** 2 / 3) * 0.1
    assert ucb_regret_bound(1.0, [0.1], math.e) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(80.429, abs=1e-3)


def test_regret_bound_drops_zero_gaps():
    with pytest.warns(DegenerateGapWarning):
        b = ucb_regret_bound(1.0, [0.0, 0.1], math.e)
    assert b == pytest.approx(ucb_regret_bound(1.0, [0.1], math.e))


def test_regret_bound_empty():
    assert ucb_regret_bound(1.0, [], 100) == 0.0


def test_regret_bound_rejects_negative_gap():
    with pytest.raises(ValueError):
        ucb_regret_bound(1.0, [-0.1], 10)


@given(st.lists(st.floats(1e-3, 1.0), min_size=1, max_size=6), st.integers(2, 1000), st.integers(1, 1000))
def test_regret_bound_increases_with_K(gaps, K, extra):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert ucb_regret_bound(1.0, gaps, K + extra) > ucb_regret_bound(1.0, gaps, K)


def test_gaps_from_objectives():
    g = gaps_from_objectives([3.0, 1.0, 2.0], 10)
    assert g.tolist() == pytest.approx([0.2, 0.1])


def test_measure_regret():
    runs = np.array([[0.5, 0.5], [0.7, 0.5]])
    mean, se = measure_regret(0.9, runs)
    assert mean == pytest.approx(0.2)
    assert se == pytest.approx(np.std([0.1, 0.3], ddof=1) / math.sqrt(2))


def test_delay_bound_example():
    # mean D* = 2, (U(J+1)+C)/R * sum(1/V) = (0.5*3 + 0.5)/2 * (1 + 1) = 2
    assert drift_delay_bound([1.0, 3.0], 0.5, 0.5, 2, [1.0, 1.0]) == pytest.approx(4.0)


def test_energy_bound_example():
    # alpha*B = 5, single frame: sqrt(2*0.5*1*2 + 0*1 + 4*1*1) = sqrt(6)
    b = drift_energy_bound([1.0], 0.5, 0.0, 1, [4.0], 5.0)
    assert b == pytest.approx(5 + math.sqrt(6))
    assert b == pytest.approx(7.449, abs=1e-3)


@given(st.floats(1e-4, 1.0), st.floats(1.01, 10.0), st.floats(0, 1), st.floats(0, 1), st.floats(0, 5))
def test_bounds_trade_off_in_V(V, k, U, C, D):
    D_star = [D, D]
    assert drift_delay_bound(D_star, U, C, 4, [V * k] * 2) <= drift_delay_bound(D_star, U, C, 4, [V] * 2)
    assert drift_energy_bound(D_star, U, C, 4, [V * k] * 2, 1.0) >= drift_energy_bound(D_star, U, C, 4, [V] * 2, 1.0)


def test_delay_bound_rejects_non_positive_weight():
    with pytest.raises(ValueError):
        drift_delay_bound([1.0], 0.1, 0.0, 4, [0.0])
