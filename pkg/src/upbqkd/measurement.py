"""Projective measurements, Born-rule sampling and the unambiguous-discrimination bound."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .linalg import MATRIX_TOL, SCALAR_TOL, DimensionError, as_state

ZERO_CLAMP = 1e-12


class InvalidMeasurementError(ValueError):
    pass


@dataclass(frozen=True)
class ProjectiveMeasurement:
    labels: tuple[str, ...]
    states: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.states) or not self.states:
            raise InvalidMeasurementError("need one label per outcome state")
        dims = {s.size for s in self.states}
        if len(dims) != 1:
            raise DimensionError("outcome states have different dimensions")

    @classmethod
    def from_basis(cls, basis) -> "ProjectiveMeasurement":
        """Build from a ``NamedBasis`` (or anything with ``labels`` and ``states``)."""
        return cls(tuple(basis.labels), tuple(as_state(s) for s in basis.states))

    @property
    def dim(self) -> int:
        return self.states[0].size

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.states)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    @cached_property
    def is_valid(self) -> bool:
        return validate(self).passed


@dataclass(frozen=True)
class ValidationReport:
    orthonormality_error: float
    completeness_error: float

    @property
    def passed(self) -> bool:
        return self.orthonormality_error < MATRIX_TOL and self.completeness_error < MATRIX_TOL


def validate(m: ProjectiveMeasurement) -> ValidationReport:
    mat = m.matrix
    gram = mat.conj() @ mat.T
    resolution = mat.T @ mat.conj()
    return ValidationReport(
        orthonormality_error=float(np.max(np.abs(gram - np.eye(len(m.states))))),
        completeness_error=float(np.max(np.abs(resolution - np.eye(m.dim)))),
    )


def distribution(m: ProjectiveMeasurement, state) -> np.ndarray:
    """Born-rule probabilities ``|<b_k|state>|^2`` aligned with ``m.labels``."""
    state = as_state(state, normalized=True)
    if state.size != m.dim:
        raise DimensionError(f"state dim {state.size} != measurement dim {m.dim}")
    if not m.is_valid:
        raise InvalidMeasurementError("measurement is not orthonormal and complete")
    p = np.abs(m.matrix.conj() @ state) ** 2
    p[p < ZERO_CLAMP] = 0.0
    return np.clip(p, 0.0, 1.0)


def pick(probabilities, u: float) -> int:
    """Inverse-CDF selection of an index for one uniform draw ``u`` in [0, 1)."""
    cdf = np.cumsum(probabilities)
    k = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    return min(k, len(cdf) - 1)


def sample(m: ProjectiveMeasurement, state, rng) -> tuple[int, np.ndarray]:
    """Measure ``state`` once; consumes exactly one ``rng.random()`` draw.

    Returns the outcome index and the collapsed post-measurement state.
    """
    p = distribution(m, state)
    k = pick(p, rng.random())
    return k, m.states[k]


@dataclass(frozen=True)
class StateEnsemble:
    priors: tuple[float, ...]
    states: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.priors) != len(self.states):
            raise ValueError("one prior per state")
        if any(p < 0 for p in self.priors):
            raise ValueError("priors must be nonnegative")
        if abs(sum(self.priors) - 1.0) > SCALAR_TOL:
            raise ValueError(f"priors sum to {sum(self.priors)!r}, not 1")

    @classmethod
    def uniform(cls, states) -> "StateEnsemble":
        states = tuple(as_state(s, normalized=True) for s in states)
        return cls(tuple([1.0 / len(states)] * len(states)), states)


def overlap_matrix(states) -> np.ndarray:
    mat = np.array([as_state(s) for s in states])
    return np.abs(mat.conj() @ mat.T)


def usd_overlap_sum(ensemble: StateEnsemble) -> float:
    """``sum_{i != j} sqrt(p_i p_j) |<phi_i|phi_j>|`` over ordered pairs."""
    p = np.sqrt(np.asarray(ensemble.priors))
    w = np.outer(p, p) * overlap_matrix(ensemble.states)
    np.fill_diagonal(w, 0.0)
    return float(w.sum())


def usd_bound(ensemble: StateEnsemble) -> float:
    """Upper bound on the success probability of unambiguous discrimination.

    ``1 - overlap_sum / (n - 1)``, clamped at 0 for strongly overlapping sets.
    """
    n = len(ensemble.states)
    if n < 2:
        raise ValueError("need at least two states")
    for s in ensemble.states:
        as_state(s, normalized=True)
    return max(0.0, 1.0 - usd_overlap_sum(ensemble) / (n - 1))
