"""Round-by-round simulation of the sequential two-channel key distribution protocol.

Alice prepares one of the five tile states, sends its two qutrits one after
the other in AB or BA order, Bob measures the pair in the completed
nine-state basis, BA rounds are sifted out and a random subset of the kept
rounds is compared in public.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field, replace
from functools import cache
from typing import Any

import numpy as np

from . import __version__
from .bases import TILE_FACTORS, completed_tiles
from .linalg import as_state, tensor_product
from .measurement import ProjectiveMeasurement, sample
from .streams import (
    SLOT_BOB,
    SLOT_EVE_CHOICE,
    SLOT_EVE_FIRST,
    SLOT_EVE_SECOND,
    SLOT_INDEX,
    SLOT_SEQUENCE,
    SlotStream,
    check_seed,
    round_uniforms,
    session_rng,
)

N_STATES = 5


class Sequence(str, enum.Enum):
    AB = "AB"
    BA = "BA"


class ProtocolError(RuntimeError):
    pass


class AdversaryContractError(ProtocolError):
    """An adversary returned something that is not a normalized qutrit."""


@cache
def bob_measurement() -> ProjectiveMeasurement:
    """Bob's nine-outcome collective measurement, labels ``psi1``..``psi9``."""
    return ProjectiveMeasurement.from_basis(completed_tiles().full_basis)


@dataclass(frozen=True)
class Preparation:
    """Alice's choice for one round, with the two particles in transmission order."""

    index: int
    sequence: Sequence
    first: np.ndarray
    second: np.ndarray

    @property
    def label(self) -> str:
        """Label of the joint state as it travels: ``psi<i>`` for AB, ``xi<i>`` for BA."""
        return f"psi{self.index}" if self.sequence is Sequence.AB else f"xi{self.index}"

    @property
    def joint(self) -> np.ndarray:
        return tensor_product(self.first, self.second)


def preparation(index: int, sequence: Sequence | str) -> Preparation:
    if not 1 <= index <= N_STATES:
        raise ValueError(f"state index must be in 1..{N_STATES}, got {index}")
    sequence = Sequence(sequence)
    a, b = TILE_FACTORS[index - 1]
    if sequence is Sequence.BA:
        a, b = b, a
    return Preparation(index, sequence, a, b)


def all_preparations() -> list[Preparation]:
    """The ten (state, sequence) pairs, AB block first."""
    return [preparation(i, s) for s in Sequence for i in range(1, N_STATES + 1)]


def alice_prepare(rng) -> Preparation:
    """Uniform state index and independent uniform sequence; two draws."""
    index = 1 + min(int(rng.random() * N_STATES), N_STATES - 1)
    sequence = Sequence.AB if rng.random() < 0.5 else Sequence.BA
    return preparation(index, sequence)


class NoAdversary:
    """Forwards both particles untouched."""

    name = "none"

    def on_first(self, particle, rng):
        return particle, None

    def on_second(self, particle, memo, rng):
        return particle

    def registered_label(self, memo):
        return None

    def describe(self) -> dict:
        return {"strategy": self.name}


def _alice_channel(prep: Preparation):
    # The second particle is only released once the first has been acknowledged.
    acknowledged = yield prep.first
    if not acknowledged:
        raise ProtocolError("second particle requested before the first was acknowledged")
    yield prep.second


def _check_particle(particle, who: str) -> np.ndarray:
    try:
        v = as_state(particle, normalized=True)
    except ValueError as exc:
        raise AdversaryContractError(f"{who} returned an invalid particle: {exc}") from exc
    if v.size != 3:
        raise AdversaryContractError(f"{who} returned a particle of dimension {v.size}, expected 3")
    return v


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    prepared_index: int
    sequence: Sequence
    bob_outcome: str
    sifted: bool
    used_for_check: bool = False
    mismatch: bool | None = None
    # set when a forced detector registration disagrees with the disclosed sequence
    sequence_conflict: bool = False

    def to_json(self) -> dict:
        d = asdict(self)
        d["sequence"] = self.sequence.value
        return d


def _label_sequence(label: str) -> Sequence:
    return Sequence.BA if label.startswith("xi") else Sequence.AB


def run_round(round_index: int, draws, adversary=None) -> RoundRecord:
    """Execute one round from its block of uniforms (see ``streams``)."""
    adversary = adversary or NoAdversary()
    draws = np.asarray(draws)
    prep = alice_prepare(SlotStream([draws[SLOT_INDEX], draws[SLOT_SEQUENCE]]))

    channel = _alice_channel(prep)
    first = next(channel)
    first, memo = adversary.on_first(first, SlotStream([draws[SLOT_EVE_FIRST], draws[SLOT_EVE_CHOICE]]))
    first = _check_particle(first, adversary.name)
    second = channel.send(True)
    second = _check_particle(adversary.on_second(second, memo, SlotStream([draws[SLOT_EVE_SECOND]])), adversary.name)

    forced = adversary.registered_label(memo)
    conflict = False
    if forced is not None:
        outcome = forced
        conflict = _label_sequence(forced) is not prep.sequence
    else:
        m = bob_measurement()
        k, _ = sample(m, tensor_product(first, second), SlotStream([draws[SLOT_BOB]]))
        outcome = m.labels[k]
    return RoundRecord(
        round_index=round_index,
        prepared_index=prep.index,
        sequence=prep.sequence,
        bob_outcome=outcome,
        sifted=prep.sequence is Sequence.AB,
        sequence_conflict=conflict,
    )


@dataclass(frozen=True)
class SessionConfig:
    rounds: int
    master_seed: int = 0
    sample_fraction: float = 0.2
    adversary: Any = field(default_factory=NoAdversary)
    key_encoding: str = "symbols"

    def __post_init__(self):
        if self.rounds < 0:
            raise ValueError("rounds must be nonnegative")
        check_seed(self.master_seed)
        if not 0.0 < self.sample_fraction <= 1.0:
            raise ValueError("sample_fraction must lie in (0, 1]")
        if self.key_encoding not in ("symbols", "bits"):
            raise ValueError(f"unknown key encoding {self.key_encoding!r}")

    def to_json(self) -> dict:
        return {
            "rounds": self.rounds,
            "master_seed": self.master_seed,
            "sample_fraction": self.sample_fraction,
            "adversary": self.adversary.describe(),
            "key_encoding": self.key_encoding,
        }


@dataclass(frozen=True)
class SessionReport:
    transcript: tuple[RoundRecord, ...]
    alice_key: str
    bob_key: str
    detected: bool
    mismatch_count: int
    sequence_conflicts: int
    check_count: int
    outcome_counts: dict[str, int]

    @property
    def sifted_count(self) -> int:
        return sum(r.sifted for r in self.transcript)

    def to_json(self, include_transcript: bool = True) -> dict:
        doc = {
            "alice_key": self.alice_key,
            "bob_key": self.bob_key,
            "detected": self.detected,
            "mismatch_count": self.mismatch_count,
            "sequence_conflicts": self.sequence_conflicts,
            "check_count": self.check_count,
            "sifted_count": self.sifted_count,
            "rounds": len(self.transcript),
            "outcome_counts": dict(sorted(self.outcome_counts.items())),
        }
        if include_transcript:
            doc["transcript"] = [r.to_json() for r in self.transcript]
        return doc


def _key_symbol(label: str) -> str:
    # Bob reads psi<k> as symbol k; other registrations cannot be key symbols
    if label.startswith("psi"):
        return label[3:]
    return "?"


def sift_and_check(transcript, sample_fraction: float, rng) -> SessionReport:
    """Drop BA rounds, publicly compare a random subset of the rest, keep the remainder as key.

    The check subset is the first ``ceil(fraction * n_sifted)`` entries of
    ``rng.permutation(n_sifted)`` over the sifted rounds in round order.
    """
    transcript = sorted(transcript, key=lambda r: r.round_index)
    sifted_pos = [i for i, r in enumerate(transcript) if r.sifted]
    n_check = math.ceil(round(sample_fraction * len(sifted_pos), 9)) if sifted_pos else 0
    chosen = set()
    if n_check:
        chosen = {sifted_pos[j] for j in rng.permutation(len(sifted_pos))[:n_check]}

    records = []
    for i, r in enumerate(transcript):
        if i in chosen:
            r = replace(r, used_for_check=True, mismatch=r.bob_outcome != f"psi{r.prepared_index}")
        records.append(r)

    key_rounds = [r for r in records if r.sifted and not r.used_for_check]
    mismatches = sum(bool(r.mismatch) for r in records)
    conflicts = sum(r.sequence_conflict for r in records)
    counts: dict[str, int] = {}
    for r in records:
        counts[r.bob_outcome] = counts.get(r.bob_outcome, 0) + 1
    return SessionReport(
        transcript=tuple(records),
        alice_key="".join(str(r.prepared_index) for r in key_rounds),
        bob_key="".join(_key_symbol(r.bob_outcome) for r in key_rounds),
        detected=(mismatches + conflicts) > 0,
        mismatch_count=mismatches,
        sequence_conflicts=conflicts,
        check_count=len(chosen),
        outcome_counts=counts,
    )


def run_session(config: SessionConfig) -> SessionReport:
    records = [
        run_round(i, round_uniforms(config.master_seed, i), config.adversary)
        for i in range(config.rounds)
    ]
    return sift_and_check(records, config.sample_fraction, session_rng(config.master_seed))


def session_document(config: SessionConfig, report: SessionReport, include_transcript: bool = True) -> dict:
    doc = report.to_json(include_transcript)
    if config.key_encoding == "bits":
        doc["alice_key_bits"] = encode_key(report.alice_key, "bits")
        doc["bob_key_bits"] = encode_key(report.bob_key, "bits") if "?" not in report.bob_key else None
    doc["config"] = config.to_json()
    doc["version"] = __version__
    return doc


def encode_key(symbols, mode: str = "symbols") -> str:
    """Encode a key over symbols 1..5.

    ``symbols`` mode returns the digits unchanged; ``bits`` mode writes each
    symbol ``s`` as the 3-bit big-endian value of ``s - 1``.
    """
    text = "".join(str(s) for s in symbols)
    if any(c not in "12345" for c in text):
        raise ValueError(f"key symbols must be in 1..5: {text!r}")
    if mode == "symbols":
        return text
    if mode == "bits":
        return "".join(format(int(c) - 1, "03b") for c in text)
    raise ValueError(f"unknown key encoding {mode!r}")


def decode_key(encoded: str, mode: str = "symbols") -> str:
    if mode == "symbols":
        return encode_key(encoded, "symbols")
    if mode != "bits":
        raise ValueError(f"unknown key encoding {mode!r}")
    if len(encoded) % 3 or any(c not in "01" for c in encoded):
        raise ValueError("bit key length must be a multiple of 3")
    out = []
    for j in range(0, len(encoded), 3):
        v = int(encoded[j : j + 3], 2)
        if v > 4:
            raise ValueError(f"invalid 3-bit group {encoded[j:j + 3]!r}")
        out.append(str(v + 1))
    return "".join(out)


def dumps(doc: dict, indent: int | None = 2) -> str:
    """Stable JSON text: sorted keys so identical inputs give identical bytes."""
    return json.dumps(doc, indent=indent, sort_keys=True)

