"""Closed forms of the one-particle reduced states of psi1..psi9.

Kets written ``"0-1"`` or ``"0+1+2"`` are unnormalized sums of computational
basis kets; the rational prefactors carry the normalization.
"""

from __future__ import annotations

import re
from fractions import Fraction as Fr

import numpy as np

from .bases import CompletionResult, completed_tiles
from .linalg import partial_trace, projector

REDUCED_STATE_TABLE: dict[tuple[str, int], list[tuple[Fr, str]]] = {
    ("A", 1): [(Fr(1), "0")],
    ("B", 1): [(Fr(1, 2), "0-1")],
    ("A", 2): [(Fr(1, 2), "0-1")],
    ("B", 2): [(Fr(1), "2")],
    ("A", 3): [(Fr(1), "2")],
    ("B", 3): [(Fr(1, 2), "1-2")],
    ("A", 4): [(Fr(1, 2), "1-2")],
    ("B", 4): [(Fr(1), "0")],
    ("A", 5): [(Fr(1, 3), "0+1+2")],
    ("B", 5): [(Fr(1, 3), "0+1+2")],
    ("A", 6): [(Fr(4, 21), "0-1"), (Fr(4, 21), "0-2"), (Fr(-2, 21), "1-2"), (Fr(9, 21), "0")],
    ("B", 6): [
        (Fr(19, 42), "0+1"),
        (Fr(2, 42), "0-2"),
        (Fr(2, 42), "1-2"),
        (Fr(-2, 42), "0"),
        (Fr(-2, 42), "1"),
    ],
    ("A", 7): [
        (Fr(25, 70), "0+1"),
        (Fr(2, 70), "1-2"),
        (Fr(10, 70), "0-2"),
        (Fr(-10, 70), "0"),
        (Fr(6, 70), "1"),
    ],
    ("B", 7): [
        (Fr(4, 35), "0+1"),
        (Fr(3, 35), "0-2"),
        (Fr(3, 35), "1-2"),
        (Fr(-3, 35), "0"),
        (Fr(-3, 35), "1"),
        (Fr(21, 35), "2"),
    ],
    ("A", 8): [(Fr(1, 15), "1-2"), (Fr(3, 15), "1"), (Fr(10, 15), "2")],
    ("B", 8): [
        (Fr(9, 30), "1+2"),
        (Fr(2, 30), "0-1"),
        (Fr(6, 30), "0-2"),
        (Fr(2, 30), "1"),
        (Fr(-6, 30), "2"),
    ],
    ("A", 9): [(Fr(1, 6), "1+2"), (Fr(4, 6), "1")],
    ("B", 9): [(Fr(1, 3), "0-1"), (Fr(1, 3), "1")],
}


def unnormalized_ket(spec: str, dim: int = 3) -> np.ndarray:
    """``"0-1"`` -> |0> - |1> (no normalization)."""
    v = np.zeros(dim, dtype=np.complex128)
    terms = re.findall(r"([+-]?)(\d)", spec)
    if not terms or "".join(s + d for s, d in terms) != spec:
        raise ValueError(f"cannot parse ket {spec!r}")
    for sign, digit in terms:
        v[int(digit)] += -1 if sign == "-" else 1
    return v


def closed_form(subsystem: str, i: int) -> np.ndarray:
    terms = REDUCED_STATE_TABLE[(subsystem, i)]
    rho = np.zeros((3, 3), dtype=np.complex128)
    for coeff, spec in terms:
        k = unnormalized_ket(spec)
        rho += float(coeff) * np.outer(k, k.conj())
    return rho


def reduced_state(completion: CompletionResult, subsystem: str, i: int) -> np.ndarray:
    basis = completion.full_basis
    return partial_trace(projector(basis[i - 1]), basis.dims, keep=subsystem)


def table_deviations(completion: CompletionResult | None = None) -> dict[tuple[str, int], float]:
    """Max entrywise gap between each computed reduced state and its closed form."""
    completion = completion or completed_tiles()
    return {
        key: float(np.max(np.abs(reduced_state(completion, *key) - closed_form(*key))))
        for key in REDUCED_STATE_TABLE
    }
