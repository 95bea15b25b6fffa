"""Tile unextendible product basis, its swapped twin and completion to a full basis."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    MATRIX_TOL,
    QUTRITS,
    SubsystemDims,
    as_state,
    gram_matrix,
    ket,
    partial_trace,
    projector,
    schmidt_rank,
    superpose,
    tensor_product,
)


class DegenerateHelperError(ValueError):
    """A helper vector has no component outside the span built so far."""


class BasisError(ValueError):
    pass


# Local qutrit states used by the tiles. Names follow |i-j> = (|i> - |j>)/sqrt(2).
ZERO, ONE, TWO = ket(0), ket(1), ket(2)
ZERO_MINUS_ONE = superpose((1, 0), (-1, 1))
ZERO_PLUS_ONE = superpose((1, 0), (1, 1))
ONE_MINUS_TWO = superpose((1, 1), (-1, 2))
ONE_PLUS_TWO = superpose((1, 1), (1, 2))
UNIFORM = superpose((1, 0), (1, 1), (1, 2))

# (first factor, second factor) of psi1..psi5 in AB order
TILE_FACTORS = (
    (ZERO, ZERO_MINUS_ONE),
    (ZERO_MINUS_ONE, TWO),
    (TWO, ONE_MINUS_TWO),
    (ONE_MINUS_TWO, ZERO),
    (UNIFORM, UNIFORM),
)

HELPER_FACTORS = (
    (ZERO, ZERO_PLUS_ONE),
    (ZERO_PLUS_ONE, TWO),
    (TWO, ONE_PLUS_TWO),
    (ONE_PLUS_TWO, ZERO),
)


@dataclass(frozen=True)
class NamedBasis:
    """An ordered orthonormal set of bipartite states.

    ``stopper_index`` is 0-based; for the tiles it is 4 (the fifth state).
    """

    label: str
    dims: SubsystemDims
    states: tuple[np.ndarray, ...]
    labels: tuple[str, ...]
    stopper_index: int | None = None

    def __post_init__(self):
        if len(self.states) != len(self.labels):
            raise BasisError("states and labels differ in length")
        for s in self.states:
            self.dims.check(s.size)
            s.setflags(write=False)
        if self.stopper_index is not None and not 0 <= self.stopper_index < len(self.states):
            raise BasisError(f"stopper_index {self.stopper_index} out of range")

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i]

    @property
    def matrix(self) -> np.ndarray:
        """States as rows."""
        return np.array(self.states)

    def orthonormality_error(self) -> float:
        return float(np.max(np.abs(gram_matrix(self.states) - np.eye(len(self.states)))))

    def completeness_error(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m.T @ m.conj() - np.eye(self.dims.total))))

    def non_stopper_states(self) -> list[np.ndarray]:
        return [s for i, s in enumerate(self.states) if i != self.stopper_index]


@dataclass(frozen=True)
class CompletionResult:
    full_basis: NamedBasis
    normalization_constants: tuple[float, ...]
    appended_range: range = field(default=range(0))

    @property
    def appended_states(self) -> tuple[np.ndarray, ...]:
        return tuple(self.full_basis.states[i] for i in self.appended_range)


def _tile_states(factors) -> tuple[np.ndarray, ...]:
    return tuple(tensor_product(a, b) for a, b in factors)


def tile_upb() -> NamedBasis:
    """The five-state 3x3 tile UPB in AB transmission order."""
    return NamedBasis(
        label="tiles-AB",
        dims=QUTRITS,
        states=_tile_states(TILE_FACTORS),
        labels=tuple(f"psi{i}" for i in range(1, 6)),
        stopper_index=4,
    )


def swap_factors(v, dims: SubsystemDims) -> np.ndarray:
    """Exchange the two tensor factors: amplitude ``(iA, iB)`` moves to ``(iB, iA)``."""
    v = as_state(v)
    dims.check(v.size)
    return np.ascontiguousarray(v.reshape(dims.dA, dims.dB).T).reshape(-1)


def ba_upb() -> NamedBasis:
    """The tiles as received when the second factor is sent first (xi1..xi5)."""
    upb = tile_upb()
    return NamedBasis(
        label="tiles-BA",
        dims=QUTRITS,
        states=tuple(swap_factors(s, QUTRITS) for s in upb.states),
        labels=tuple(f"xi{i}" for i in range(1, 6)),
        stopper_index=4,
    )


def helper_states() -> list[np.ndarray]:
    """h6..h9: the tiles with the minus sign flipped to plus."""
    return list(_tile_states(HELPER_FACTORS))


def complete_basis(upb: NamedBasis, helpers, labels=None) -> CompletionResult:
    """Extend ``upb`` to a full orthonormal basis by Gram-Schmidt on ``helpers``.

    Each helper has its components along every UPB state and every previously
    appended state subtracted, then is rescaled by its normalization constant.
    """
    helpers = [as_state(h) for h in helpers]
    d2 = upb.dims.total
    if upb.orthonormality_error() > MATRIX_TOL:
        raise BasisError("UPB states are not orthonormal")
    if len(upb) + len(helpers) != d2:
        raise BasisError(f"{len(upb)} UPB states + {len(helpers)} helpers != {d2}")
    for k, h in enumerate(helpers):
        upb.dims.check(h.size)
        for s in upb.non_stopper_states():
            if abs(np.vdot(s, h)) > MATRIX_TOL:
                raise BasisError(f"helper {k} is not orthogonal to the non-stopper UPB states")

    built = list(upb.states)
    alphas = []
    for k, h in enumerate(helpers):
        residual = h.copy()
        for s in built:
            residual = residual - np.vdot(s, h) * s
        norm = np.linalg.norm(residual)
        if norm < MATRIX_TOL:
            raise DegenerateHelperError(f"helper {k} lies in the span of the states built so far")
        alpha = 1.0 / norm
        alphas.append(float(alpha))
        built.append(alpha * residual)

    n0 = len(upb)
    if labels is None:
        labels = tuple(upb.labels) + tuple(f"psi{i}" for i in range(n0 + 1, d2 + 1))
    full = NamedBasis(
        label=f"{upb.label}-completed",
        dims=upb.dims,
        states=tuple(built),
        labels=tuple(labels),
        stopper_index=upb.stopper_index,
    )
    return CompletionResult(full, tuple(alphas), range(n0, d2))


def orthogonal_complement_helpers(upb: NamedBasis, keep_tol: float = 1e-6) -> list[np.ndarray]:
    """Deterministic helper vectors for completing an arbitrary UPB.

    Sweeps the computational basis in index order, projects each vector off
    the non-stopper UPB states and the helpers kept so far, and keeps it if
    the residual norm exceeds ``keep_tol``. Returns ``d^2 - l`` orthonormal
    vectors.
    """
    if upb.stopper_index is None:
        raise BasisError("UPB must identify its stopper state")
    if upb.orthonormality_error() > MATRIX_TOL:
        raise BasisError("UPB states are not orthonormal")
    d2 = upb.dims.total
    needed = d2 - len(upb)
    against = list(upb.non_stopper_states())
    found: list[np.ndarray] = []
    for idx in range(d2):
        if len(found) == needed:
            break
        v = ket(idx, d2)
        # two passes of classical Gram-Schmidt for numerical stability
        for _ in range(2):
            for s in against + found:
                v = v - np.vdot(s, v) * s
        norm = np.linalg.norm(v)
        if norm > keep_tol:
            found.append(v / norm)
    if len(found) < needed:
        raise BasisError(f"numerical rank deficiency: found {len(found)} of {needed} helpers")
    return found


def completed_tiles() -> CompletionResult:
    """The nine-outcome measurement psi1..psi9 built from the sign-flipped tile helpers h6..h9."""
    return complete_basis(tile_upb(), helper_states())


@dataclass(frozen=True)
class NoCloningReport:
    # (state label, subsystem) -> condition holds
    per_state: dict[tuple[str, str], bool]

    @property
    def passed(self) -> bool:
        return all(self.per_state.values())


def no_cloning_condition(upb: NamedBasis, tol: float = MATRIX_TOL) -> NoCloningReport:
    """Check every local reduced state has a distinct, non-orthogonal partner.

    For each state i and subsystem S the condition holds when some j != i has
    a reduced state that differs from and overlaps with that of i.
    """
    for label, s in zip(upb.labels, upb.states):
        if schmidt_rank(s, upb.dims, tol) != 1:
            raise BasisError(f"{label} is entangled; condition applies to product states")
    reduced = {
        S: [partial_trace(projector(s), upb.dims, keep=S) for s in upb.states] for S in ("A", "B")
    }
    result = {}
    for S, rhos in reduced.items():
        for i, label in enumerate(upb.labels):
            result[(label, S)] = any(
                np.max(np.abs(rhos[i] - rhos[j])) > tol
                and np.trace(rhos[i] @ rhos[j]).real > tol
                for j in range(len(rhos))
                if j != i
            )
    return NoCloningReport(result)


def fubini_study_grid(n: int) -> np.ndarray:
    """``n`` deterministic qutrit states spread evenly over the Fubini-Study measure.

    Uses an unscrambled Halton sequence mapped to uniform points on the
    probability simplex plus two relative phases.
    """
    from scipy.stats import qmc

    u = qmc.Halton(d=4, scramble=False).random(n)
    s = np.sqrt(u[:, 0])
    mags = np.sqrt(np.stack([1 - s, s * (1 - u[:, 1]), s * u[:, 1]], axis=1))
    phases = np.exp(2j * np.pi * np.stack([np.zeros(n), u[:, 2], u[:, 3]], axis=1))
    return mags * phases


def unextendibility_margin(complement, dims: SubsystemDims = QUTRITS, grid_size: int = 100) -> float:
    """Smallest residual of a grid product state after projecting onto ``complement``.

    ``complement`` is an orthonormal basis of the subspace orthogonal to a UPB.
    A product state inside that subspace would give 0. This is a smoke test
    over ``grid_size**2`` product states, not a proof.
    """
    if (dims.dA, dims.dB) != (3, 3):
        raise BasisError("grid is defined for qutrit pairs only")
    comp = np.array([as_state(c) for c in complement])
    grid = fubini_study_grid(grid_size)
    products = np.einsum("ai,bj->abij", grid, grid).reshape(-1, dims.total)
    projected = (products @ comp.conj().T) @ comp
    return float(np.min(np.linalg.norm(products - projected, axis=1)))
