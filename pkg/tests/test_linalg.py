import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from upbqkd.linalg import (
    QUTRITS,
    DimensionError,
    NormalizationError,
    SubsystemDims,
    as_state,
    gram_matrix,
    inner_product,
    is_hermitian,
    is_psd,
    ket,
    matrix_from_json,
    matrix_to_json,
    partial_trace,
    product_factors,
    projector,
    schmidt_coefficients,
    schmidt_rank,
    span_projector,
    superpose,
    tensor_product,
    vector_from_json,
    vector_to_json,
)

finite = st.floats(-1, 1, allow_nan=False)
qutrit = st.lists(st.tuples(finite, finite), min_size=3, max_size=3).map(
    lambda zs: np.array([complex(a, b) for a, b in zs])
).filter(lambda v: np.linalg.norm(v) > 1e-3).map(lambda v: v / np.linalg.norm(v))


def test_ket_and_superpose():
    assert np.allclose(ket(1), [0, 1, 0])
    v = superpose((1, 0), (-1, 1))
    assert np.allclose(v, np.array([1, -1, 0]) / np.sqrt(2))
    with pytest.raises(DimensionError):
        ket(3)


def test_tensor_product_is_row_major():
    v = tensor_product(ket(1), ket(2))
    assert v[1 * 3 + 2] == 1
    assert np.count_nonzero(v) == 1


def test_inner_product_conjugates_first_argument():
    a = np.array([1j, 0, 0])
    b = np.array([1, 0, 0])
    assert inner_product(a, b) == pytest.approx(-1j)


def test_projector_requires_normalized_state():
    with pytest.raises(NormalizationError):
        projector(np.array([1.0, 1.0, 0.0]))
    p = projector(superpose((1, 0), (1, 2)))
    assert is_hermitian(p) and is_psd(p)
    assert np.allclose(p @ p, p)


def test_subsystem_dims_check():
    assert QUTRITS.total == 9
    with pytest.raises(DimensionError):
        SubsystemDims(2, 3).check(9)


def test_partial_trace_of_product_state():
    a, b = superpose((1, 0), (1, 1)), ket(2)
    rho = projector(tensor_product(a, b))
    assert np.allclose(partial_trace(rho, QUTRITS, keep="A"), projector(a))
    assert np.allclose(partial_trace(rho, QUTRITS, keep="B"), projector(b))


def test_partial_trace_of_maximally_entangled_state():
    phi = sum(tensor_product(ket(i), ket(i)) for i in range(3)) / np.sqrt(3)
    assert np.allclose(partial_trace(projector(phi), QUTRITS, keep="B"), np.eye(3) / 3)
    assert schmidt_rank(phi, QUTRITS) == 3
    assert np.allclose(schmidt_coefficients(phi, QUTRITS), [3 ** -0.5] * 3)


def test_product_factors_roundtrip():
    a, b = superpose((1, 1), (-1, 2)), superpose((1, 0), (1j, 1))
    fa, fb = product_factors(tensor_product(a, b), QUTRITS)
    assert np.allclose(tensor_product(fa, fb), tensor_product(a, b))


def test_gram_and_span_projector():
    states = [ket(0), superpose((1, 0), (1, 1))]
    g = gram_matrix(states)
    assert g[0, 1] == pytest.approx(1 / np.sqrt(2))
    p = span_projector(states)
    assert np.allclose(p, np.diag([1, 1, 0]))


def test_as_state_rejects_bad_input():
    with pytest.raises(NormalizationError):
        as_state([1, 1, 0], normalized=True)
    with pytest.raises(DimensionError):
        as_state(np.eye(3))


def test_json_roundtrip():
    v = superpose((1, 0), (1j, 2))
    assert np.array_equal(vector_from_json(vector_to_json(v)), v)
    m = np.outer(v, v.conj())
    assert np.array_equal(matrix_from_json(matrix_to_json(m)), m)


@settings(max_examples=50, deadline=None)
@given(qutrit, qutrit)
def test_product_states_have_rank_one(a, b):
    v = tensor_product(a, b)
    assert schmidt_rank(v, QUTRITS) == 1
    rho = partial_trace(projector(v), QUTRITS, keep="A")
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.allclose(rho, projector(a), atol=1e-9)
