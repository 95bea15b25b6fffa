import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from upbqkd.linalg import DimensionError, ket, superpose
from upbqkd.measurement import (
    InvalidMeasurementError,
    ProjectiveMeasurement,
    StateEnsemble,
    distribution,
    overlap_matrix,
    pick,
    sample,
    usd_bound,
    usd_overlap_sum,
    validate,
)
from upbqkd.streams import SlotStream

COMP = ProjectiveMeasurement(("0", "1", "2"), (ket(0), ket(1), ket(2)))


def test_validate_reports_errors():
    assert validate(COMP).passed
    bad = ProjectiveMeasurement(("a", "b", "c"), (ket(0), superpose((1, 0), (1, 1)), ket(2)))
    report = validate(bad)
    assert not report.passed
    assert report.orthonormality_error > 0.5


def test_distribution_rejects_invalid_measurement():
    bad = ProjectiveMeasurement(("a", "b"), (ket(0), ket(1)))
    with pytest.raises(InvalidMeasurementError):
        distribution(bad, ket(0))


def test_distribution_dimension_mismatch():
    with pytest.raises(DimensionError):
        distribution(COMP, ket(0, 9))


def test_distribution_clamps_small_values():
    state = np.array([1, 1e-8, 0], dtype=complex)
    state /= np.linalg.norm(state)
    p = distribution(COMP, state)
    assert p[1] == 0.0 and p[2] == 0.0


def test_pick_boundaries():
    p = [0.25, 0.5, 0.25]
    assert pick(p, 0.0) == 0
    assert pick(p, 0.2499) == 0
    assert pick(p, 0.25) == 1
    assert pick(p, 0.9999999) == 2
    # zero-probability outcomes are never chosen
    assert pick([0.5, 0.0, 0.5], 0.5) == 2


def test_sample_consumes_exactly_one_draw():
    stream = SlotStream([0.6])
    k, post = sample(COMP, superpose((1, 0), (1, 1)), stream)
    assert k == 1
    assert np.allclose(post, ket(1))
    with pytest.raises(RuntimeError):
        stream.random()


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1, exclude_max=True))
def test_sample_never_returns_zero_probability_outcome(u):
    k, _ = sample(COMP, superpose((1, 0), (1, 2)), SlotStream([u]))
    assert k in (0, 2)


def test_ensemble_validation():
    with pytest.raises(ValueError):
        StateEnsemble((0.5, 0.6), (ket(0), ket(1)))
    with pytest.raises(ValueError):
        StateEnsemble((0.5,), (ket(0), ket(1)))


def test_usd_bound_two_states_with_overlap_half():
    a = ket(0)
    b = 0.5 * ket(0) + np.sqrt(0.75) * ket(1)
    ens = StateEnsemble.uniform([a, b])
    assert overlap_matrix(ens.states)[0, 1] == pytest.approx(0.5)
    assert usd_overlap_sum(ens) == pytest.approx(0.5)
    assert usd_bound(ens) == pytest.approx(0.5, abs=1e-12)


def test_usd_bound_orthogonal_states_is_one():
    assert usd_bound(StateEnsemble.uniform([ket(0), ket(1), ket(2)])) == 1.0


def test_usd_bound_clamps_at_zero():
    s = superpose((1, 0), (1, 1))
    assert usd_bound(StateEnsemble.uniform([s, s])) == 0.0


def test_usd_bound_needs_two_states():
    with pytest.raises(ValueError):
        usd_bound(StateEnsemble.uniform([ket(0)]))
