"""Small dense complex linear algebra for bipartite qudit states.

States are 1-D ``complex128`` arrays and operators are 2-D ``complex128``
arrays. Bipartite indices are row-major with the first-sent particle as the
left tensor factor: ``index = iA * dB + iB``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MATRIX_TOL = 1e-9
SCALAR_TOL = 1e-12


class DimensionError(ValueError):
    pass


class NormalizationError(ValueError):
    pass


@dataclass(frozen=True)
class SubsystemDims:
    dA: int
    dB: int

    def __post_init__(self):
        if self.dA < 1 or self.dB < 1:
            raise DimensionError(f"subsystem dimensions must be positive, got {self}")

    @property
    def total(self) -> int:
        return self.dA * self.dB

    def check(self, dim: int) -> None:
        if dim != self.total:
            raise DimensionError(f"dimension {dim} does not split as {self.dA}x{self.dB}")


QUTRITS = SubsystemDims(3, 3)


def as_state(v, normalized: bool = False) -> np.ndarray:
    """Coerce ``v`` to a finite complex vector, optionally checking its norm."""
    arr = np.asarray(v, dtype=np.complex128)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"state must be a non-empty 1-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("state has non-finite amplitudes")
    if normalized:
        n2 = float(np.vdot(arr, arr).real)
        if abs(n2 - 1.0) > MATRIX_TOL:
            raise NormalizationError(f"state not normalized (norm^2 = {n2!r})")
    return arr


def as_operator(m) -> np.ndarray:
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"operator must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("operator has non-finite entries")
    return arr


def ket(index: int, dim: int = 3) -> np.ndarray:
    """Computational basis vector ``|index>``."""
    if not 0 <= index < dim:
        raise DimensionError(f"index {index} outside 0..{dim - 1}")
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return v


def superpose(*terms, dim: int = 3) -> np.ndarray:
    """Normalized sum of ``(coeff, index)`` terms, e.g. ``superpose((1, 0), (-1, 1))``."""
    v = np.zeros(dim, dtype=np.complex128)
    for coeff, index in terms:
        v[index] += coeff
    return v / np.linalg.norm(v)


def tensor_product(a, b) -> np.ndarray:
    a = as_state(a)
    b = as_state(b)
    return np.kron(a, b)


def inner_product(a, b) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    a = as_state(a)
    b = as_state(b)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.size} vs {b.size}")
    return complex(np.vdot(a, b))


def projector(v) -> np.ndarray:
    v = as_state(v, normalized=True)
    return np.outer(v, v.conj())


def partial_trace(rho, dims: SubsystemDims, keep: str) -> np.ndarray:
    """Reduced operator on subsystem ``keep`` ("A" or "B")."""
    rho = as_operator(rho)
    dims.check(rho.shape[0])
    t = rho.reshape(dims.dA, dims.dB, dims.dA, dims.dB)
    if keep == "A":
        return np.einsum("ikjk->ij", t)
    if keep == "B":
        return np.einsum("kikj->ij", t)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def schmidt_coefficients(v, dims: SubsystemDims) -> np.ndarray:
    v = as_state(v)
    dims.check(v.size)
    return np.linalg.svd(v.reshape(dims.dA, dims.dB), compute_uv=False)


def schmidt_rank(v, dims: SubsystemDims, tol: float = MATRIX_TOL) -> int:
    if tol <= 0:
        raise ValueError("tol must be positive")
    v = as_state(v, normalized=True)
    return int(np.sum(schmidt_coefficients(v, dims) > tol))


def product_factors(v, dims: SubsystemDims, tol: float = MATRIX_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Split a product state into normalized local factors ``(a, b)`` with ``v = a (x) b``.

    The global phase is carried by the second factor.
    """
    v = as_state(v, normalized=True)
    dims.check(v.size)
    u, s, vh = np.linalg.svd(v.reshape(dims.dA, dims.dB))
    if np.sum(s > tol) != 1:
        raise ValueError("state is entangled; no product factorization")
    a = u[:, 0]
    # fix a's phase so its largest-magnitude amplitude is real positive
    k = int(np.argmax(np.abs(a)))
    phase = a[k] / abs(a[k])
    a = a / phase
    b = v.reshape(dims.dA, dims.dB)[k] / a[k]
    return a, b


def is_hermitian(m, tol: float = MATRIX_TOL) -> bool:
    m = as_operator(m)
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def is_psd(m, tol: float = MATRIX_TOL) -> bool:
    m = as_operator(m)
    return bool(np.min(np.linalg.eigvalsh((m + m.conj().T) / 2)) >= -tol)


def gram_matrix(states) -> np.ndarray:
    mat = np.array([as_state(s) for s in states])
    return mat.conj() @ mat.T


def span_projector(states) -> np.ndarray:
    """Orthogonal projector onto ``span(states)`` (states need not be orthonormal)."""
    mat = np.array([as_state(s) for s in states]).T
    if mat.size == 0:
        raise ValueError("empty state list")
    q, r = np.linalg.qr(mat)
    keep = np.abs(np.diag(r)) > MATRIX_TOL
    q = q[:, keep]
    return q @ q.conj().T


# JSON documents: {"dim": n, "amplitudes": [[re, im], ...]} and
# {"dim": n, "entries": [[[re, im], ...], ...]}.

def vector_to_json(v) -> dict:
    v = as_state(v)
    return {"dim": int(v.size), "amplitudes": [[float(z.real), float(z.imag)] for z in v]}


def vector_from_json(doc: dict) -> np.ndarray:
    amps = np.asarray(doc["amplitudes"], dtype=float)
    if amps.ndim != 2 or amps.shape[1] != 2:
        raise ValueError("amplitudes must be a list of [re, im] pairs")
    v = as_state(amps[:, 0] + 1j * amps[:, 1])
    if "dim" in doc and int(doc["dim"]) != v.size:
        raise DimensionError(f"declared dim {doc['dim']} but {v.size} amplitudes")
    return v


def matrix_to_json(m) -> dict:
    m = as_operator(m)
    return {
        "dim": int(m.shape[0]),
        "entries": [[[float(z.real), float(z.imag)] for z in row] for row in m],
    }


def matrix_from_json(doc: dict) -> np.ndarray:
    ent = np.asarray(doc["entries"], dtype=float)
    if ent.ndim != 3 or ent.shape[2] != 2:
        raise ValueError("entries must be a grid of [re, im] pairs")
    m = as_operator(ent[..., 0] + 1j * ent[..., 1])
    if "dim" in doc and int(doc["dim"]) != m.shape[0]:
        raise DimensionError(f"declared dim {doc['dim']} but matrix is {m.shape[0]}x{m.shape[0]}")
    return m
