"""Eavesdropping strategies against the sequential protocol.

Three attack models share the engine's adversary interface (``on_first``,
``on_second``, ``registered_label``):

* intercept-resend: measure each particle as it passes and resend the
  observed eigenstate, choosing the second basis from the first outcome;
* detector blinding: measure the first particle, pick a consistent fake from
  the ten transmitted states and force Bob's detectors to register it;
* memory store: keep the first particle and send Bob a random substitute.

Each model also has an exact enumeration and a vectorized Monte Carlo that
replays the engine's per-round random streams, so a simulated round and the
corresponding engine round see the same draws and give the same outcome.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from functools import cache

import numpy as np

from .bases import ONE, TWO, ZERO, ZERO_MINUS_ONE, ZERO_PLUS_ONE, ONE_MINUS_TWO, ONE_PLUS_TWO
from .linalg import SCALAR_TOL, as_state, tensor_product
from .measurement import (
    ProjectiveMeasurement,
    StateEnsemble,
    distribution,
    pick,
    sample,
    usd_bound,
)
from .protocol import NoAdversary, Preparation, Sequence, all_preparations, bob_measurement
from .streams import (
    SLOT_BOB,
    SLOT_EVE_CHOICE,
    SLOT_EVE_FIRST,
    SLOT_EVE_SECOND,
    SLOT_INDEX,
    SLOT_SEQUENCE,
    round_uniform_block,
)

_NONZERO = 1e-12

QUTRIT_BASES: dict[str, ProjectiveMeasurement] = {
    "COMP": ProjectiveMeasurement(("0", "1", "2"), (ZERO, ONE, TWO)),
    "PM01": ProjectiveMeasurement(("0-1", "0+1", "2"), (ZERO_MINUS_ONE, ZERO_PLUS_ONE, TWO)),
    "PM12": ProjectiveMeasurement(("1-2", "1+2", "0"), (ONE_MINUS_TWO, ONE_PLUS_TWO, ZERO)),
}

# |0> <-> |2> on one qutrit. Together with the factor swap, (1 (x) R) o SWAP
# maps the tile set onto itself, which is what makes the exchanged-role
# intercept-resend strategy below give the same undetected probability.
REFLECTION = np.eye(3)[[2, 1, 0]].astype(np.complex128)


def qutrit_basis(name: str) -> ProjectiveMeasurement:
    try:
        return QUTRIT_BASES[name]
    except KeyError:
        raise ValueError(f"unknown qutrit basis {name!r}; known: {sorted(QUTRIT_BASES)}") from None


def _same_projectors(a: ProjectiveMeasurement, b: ProjectiveMeasurement) -> bool:
    pa = sorted(np.round(np.abs(np.outer(s, s.conj())), 12).tobytes() for s in a.states)
    pb = sorted(np.round(np.abs(np.outer(s, s.conj())), 12).tobytes() for s in b.states)
    return pa == pb


def reflected_basis_name(name: str) -> str:
    """Name of the basis ``R @ basis``; registers it if no known basis matches."""
    m = qutrit_basis(name)
    image = ProjectiveMeasurement(
        tuple(lbl.translate(str.maketrans("02", "20")) for lbl in m.labels),
        tuple(REFLECTION @ s for s in m.states),
    )
    for known, other in QUTRIT_BASES.items():
        if _same_projectors(image, other):
            return known
    new = f"R[{name}]"
    QUTRIT_BASES[new] = image
    return new


def _default_rule():
    return {"0": "PM01", "1": "COMP", "2": "PM12"}


# ---------------------------------------------------------------- intercept-resend


@dataclass(frozen=True)
class InterceptResendConfig:
    """Eve's bases.

    ``heavy_particle`` says which transmitted particle is measured in
    ``first_basis``; the other one is measured in ``second_basis_rule[outcome]``.
    The engine only supports ``"first"``; ``"second"`` needs the first
    particle held until the second arrives and exists for exact analysis.
    """

    first_basis: str = "COMP"
    second_basis_rule: Mapping[str, str] = field(default_factory=_default_rule)
    heavy_particle: str = "first"

    def __post_init__(self):
        first = qutrit_basis(self.first_basis)
        missing = set(first.labels) - set(self.second_basis_rule)
        if missing:
            raise ValueError(f"second_basis_rule has no entry for outcomes {sorted(missing)}")
        for name in self.second_basis_rule.values():
            qutrit_basis(name)
        if self.heavy_particle not in ("first", "second"):
            raise ValueError("heavy_particle must be 'first' or 'second'")

    def to_json(self) -> dict:
        return {
            "first_basis": self.first_basis,
            "second_basis_rule": dict(sorted(self.second_basis_rule.items())),
            "heavy_particle": self.heavy_particle,
        }


def exchanged_roles(cfg: InterceptResendConfig) -> InterceptResendConfig:
    """The same attack aimed at the other particle.

    The heavy measurement moves to the other transmitted particle and the
    adaptive bases are reflected (|0> <-> |2>), i.e. the strategy is
    conjugated by the tile set's factor-swap symmetry.
    """
    rule = {k: reflected_basis_name(v) for k, v in cfg.second_basis_rule.items()}
    heavy = "second" if cfg.heavy_particle == "first" else "first"
    return InterceptResendConfig(cfg.first_basis, rule, heavy)


def ir_on_first(particle, cfg: InterceptResendConfig, rng) -> tuple[np.ndarray, str]:
    """Measure the first particle in ``cfg.first_basis``; resend the eigenstate seen."""
    m = qutrit_basis(cfg.first_basis)
    k, substitute = sample(m, as_state(particle), rng)
    return substitute, m.labels[k]


def ir_on_second(particle, memo, cfg: InterceptResendConfig, rng) -> np.ndarray:
    if memo is None:
        raise ValueError("second-particle step needs the first-particle outcome")
    m = qutrit_basis(cfg.second_basis_rule[memo])
    _, substitute = sample(m, as_state(particle), rng)
    return substitute


class InterceptResend:
    name = "ir"

    def __init__(self, cfg: InterceptResendConfig | None = None):
        cfg = cfg or InterceptResendConfig()
        if cfg.heavy_particle != "first":
            raise ValueError("a heavy measurement on the second particle cannot run under sequential access")
        self.cfg = cfg

    def on_first(self, particle, rng):
        return ir_on_first(particle, self.cfg, rng)

    def on_second(self, particle, memo, rng):
        return ir_on_second(particle, memo, self.cfg, rng)

    def registered_label(self, memo):
        return None

    def describe(self) -> dict:
        return {"strategy": self.name, **self.cfg.to_json()}


@dataclass(frozen=True)
class InterceptResendEnumeration:
    """Exact probability that a round is sifted and Bob's outcome matches Alice's state."""

    total: float
    per_first_outcome: dict[str, float]
    sifted_probability: float

    @property
    def per_sifted_round(self) -> float:
        """Probability that a single checked (sifted) round shows no mismatch."""
        return self.total / self.sifted_probability

    @property
    def per_sifted_bucket(self) -> dict[str, float]:
        return {k: v / self.sifted_probability for k, v in self.per_first_outcome.items()}

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "per_first_outcome": self.per_first_outcome,
            "sifted_probability": self.sifted_probability,
            "per_sifted_round": self.per_sifted_round,
            "per_sifted_bucket": self.per_sifted_bucket,
        }


def _ir_tables(cfg: InterceptResendConfig):
    """Branch tables shared by the enumeration and the Monte Carlo.

    Returns ``(p_heavy[10, 3], p_other[10, 3, 3], p_bob[3, 3, 9])`` indexed by
    preparation, heavy outcome, other outcome and Bob outcome.
    """
    heavy_basis = qutrit_basis(cfg.first_basis)
    rule = [qutrit_basis(cfg.second_basis_rule[lbl]) for lbl in heavy_basis.labels]
    preps = all_preparations()
    bob = bob_measurement()
    p_heavy = np.zeros((10, 3))
    p_other = np.zeros((10, 3, 3))
    p_bob = np.zeros((3, 3, 9))
    for n, prep in enumerate(preps):
        heavy, other = (prep.first, prep.second) if cfg.heavy_particle == "first" else (prep.second, prep.first)
        p_heavy[n] = distribution(heavy_basis, heavy)
        for o1 in range(3):
            p_other[n, o1] = distribution(rule[o1], other)
    for o1, e in enumerate(heavy_basis.states):
        for o2, f in enumerate(rule[o1].states):
            resend = tensor_product(e, f) if cfg.heavy_particle == "first" else tensor_product(f, e)
            p_bob[o1, o2] = distribution(bob, resend)
    return p_heavy, p_other, p_bob


def ir_undetected_probability_exact(cfg: InterceptResendConfig | None = None) -> InterceptResendEnumeration:
    """Enumerate Alice's ten choices, Eve's two outcomes and Bob's outcome."""
    cfg = cfg or InterceptResendConfig()
    p_heavy, p_other, p_bob = _ir_tables(cfg)
    labels = qutrit_basis(cfg.first_basis).labels
    buckets = dict.fromkeys(labels, 0.0)
    sifted = 0.0
    for n, prep in enumerate(all_preparations()):
        prior = 1 / 10
        if prep.sequence is not Sequence.AB:
            continue
        sifted += prior
        target = prep.index - 1
        for o1 in range(3):
            for o2 in range(3):
                buckets[labels[o1]] += prior * p_heavy[n, o1] * p_other[n, o1, o2] * p_bob[o1, o2, target]
    buckets = {k: float(v) for k, v in buckets.items()}
    return InterceptResendEnumeration(sum(buckets.values()), buckets, float(sifted))


def _vpick(rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    # row-wise twin of measurement.pick
    cdf = np.cumsum(rows, axis=1)
    k = (cdf <= (u * cdf[:, -1])[:, None]).sum(axis=1)
    return np.minimum(k, rows.shape[1] - 1)


def _alice_block(u: np.ndarray):
    index = 1 + np.minimum((u[:, SLOT_INDEX] * 5).astype(int), 4)
    ab = u[:, SLOT_SEQUENCE] < 0.5
    pair = (index - 1) + np.where(ab, 0, 5)
    return index, ab, pair


def simulate_intercept_resend(cfg: InterceptResendConfig | None, trials: int, seed: int, start: int = 0) -> dict:
    """Per-round outcomes of ``trials`` intercept-resend rounds.

    Rounds ``start .. start+trials-1`` use the engine's streams for ``seed``.
    """
    cfg = cfg or InterceptResendConfig()
    p_heavy, p_other, p_bob = _ir_tables(cfg)
    u = round_uniform_block(seed, start, trials)
    index, ab, pair = _alice_block(u)
    o1 = _vpick(p_heavy[pair], u[:, SLOT_EVE_FIRST])
    o2 = _vpick(p_other[pair, o1], u[:, SLOT_EVE_SECOND])
    bob = _vpick(p_bob[o1, o2], u[:, SLOT_BOB])
    return {
        "index": index,
        "ab": ab,
        "eve_first": o1,
        "eve_second": o2,
        "bob": bob,
        "undetected": ab & (bob == index - 1),
    }


# ---------------------------------------------------------------- detector blinding


@dataclass(frozen=True)
class BlindingConfig:
    first_basis: str = "COMP"
    fake_choice_rule: str = "uniform"

    def __post_init__(self):
        qutrit_basis(self.first_basis)
        if self.fake_choice_rule != "uniform":
            raise ValueError(f"unknown fake choice rule {self.fake_choice_rule!r}")

    def to_json(self) -> dict:
        return {"first_basis": self.first_basis, "fake_choice_rule": self.fake_choice_rule}


def blinding_candidates(outcome_state) -> list[Preparation]:
    """Transmitted states whose first particle could have produced ``outcome_state``."""
    e = as_state(outcome_state)
    return [p for p in all_preparations() if abs(np.vdot(e, p.first)) ** 2 > _NONZERO]


@dataclass(frozen=True)
class BlindingOutcome:
    eve_outcome: str
    fake: Preparation
    detected: bool

    @property
    def eve_sequence(self) -> Sequence:
        return self.fake.sequence


def _choose_fake(candidates, rng) -> Preparation:
    if not candidates:
        raise AssertionError("empty candidate set")
    n = len(candidates)
    return candidates[min(int(rng.random() * n), n - 1)]


def blinding_round(prep: Preparation, cfg: BlindingConfig | None, rng) -> BlindingOutcome:
    """One faked-state round; Bob registers the fake, detection iff the sequences differ."""
    cfg = cfg or BlindingConfig()
    m = qutrit_basis(cfg.first_basis)
    k, state = sample(m, prep.first, rng)
    fake = _choose_fake(blinding_candidates(state), rng)
    return BlindingOutcome(m.labels[k], fake, fake.sequence is not prep.sequence)


class Blinding:
    name = "blinding"

    def __init__(self, cfg: BlindingConfig | None = None):
        self.cfg = cfg or BlindingConfig()

    def on_first(self, particle, rng):
        m = qutrit_basis(self.cfg.first_basis)
        _, state = sample(m, particle, rng)
        fake = _choose_fake(blinding_candidates(state), rng)
        return fake.first, fake

    def on_second(self, particle, memo, rng):
        return memo.second

    def registered_label(self, memo):
        return memo.label

    def describe(self) -> dict:
        return {"strategy": self.name, **self.cfg.to_json()}


@dataclass(frozen=True)
class BlindingEnumeration:
    detection: float
    # undetected and the registered state is exactly what Alice sent
    undetected_exact_copy: float

    @property
    def undetected(self) -> float:
        return 1.0 - self.detection

    def to_json(self) -> dict:
        return {
            "detection": self.detection,
            "undetected": self.undetected,
            "undetected_exact_copy": self.undetected_exact_copy,
        }


def blinding_exact(cfg: BlindingConfig | None = None) -> BlindingEnumeration:
    cfg = cfg or BlindingConfig()
    m = qutrit_basis(cfg.first_basis)
    detect = copy = 0.0
    for prep in all_preparations():
        p = distribution(m, prep.first)
        for k, e in enumerate(m.states):
            if p[k] == 0:
                continue
            cands = blinding_candidates(e)
            for fake in cands:
                w = (1 / 10) * p[k] / len(cands)
                if fake.sequence is not prep.sequence:
                    detect += w
                elif fake.index == prep.index:
                    copy += w
    return BlindingEnumeration(float(detect), float(copy))


def simulate_blinding(cfg: BlindingConfig | None, trials: int, seed: int, start: int = 0) -> dict:
    cfg = cfg or BlindingConfig()
    m = qutrit_basis(cfg.first_basis)
    preps = all_preparations()
    p_first = np.array([distribution(m, p.first) for p in preps])
    cands = [blinding_candidates(e) for e in m.states]
    n_cands = np.array([len(c) for c in cands])
    fake_ab = [np.array([c.sequence is Sequence.AB for c in cl]) for cl in cands]
    fake_index = [np.array([c.index for c in cl]) for cl in cands]

    u = round_uniform_block(seed, start, trials)
    index, ab, pair = _alice_block(u)
    outcome = _vpick(p_first[pair], u[:, SLOT_EVE_FIRST])
    n = n_cands[outcome]
    choice = np.minimum((u[:, SLOT_EVE_CHOICE] * n).astype(int), n - 1)
    eve_ab = np.empty(trials, dtype=bool)
    fake_idx = np.empty(trials, dtype=int)
    for k in range(len(cands)):
        sel = outcome == k
        eve_ab[sel] = fake_ab[k][choice[sel]]
        fake_idx[sel] = fake_index[k][choice[sel]]
    return {
        "index": index,
        "ab": ab,
        "eve_first": outcome,
        "fake_ab": eve_ab,
        "fake_index": fake_idx,
        "detected": eve_ab != ab,
    }


# ---------------------------------------------------------------- memory store


@dataclass(frozen=True)
class MemoryStoreConfig:
    """Distribution of the substitute sent in place of the stored first particle."""

    substitutes: tuple = (ZERO, ONE, TWO)
    weights: tuple = (1 / 3, 1 / 3, 1 / 3)

    def __post_init__(self):
        if len(self.substitutes) != len(self.weights) or not self.weights:
            raise ValueError("one weight per substitute state")
        for s in self.substitutes:
            if as_state(s, normalized=True).size != 3:
                raise ValueError("substitutes must be qutrit states")
        if any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1) > SCALAR_TOL:
            raise ValueError("weights must be a probability distribution")

    def to_json(self) -> dict:
        return {
            "substitutes": [[[float(z.real), float(z.imag)] for z in as_state(s)] for s in self.substitutes],
            "weights": list(self.weights),
        }


@cache
def eavesdropper_ensemble() -> StateEnsemble:
    """The ten transmitted states psi1..psi5, xi1..xi5 with equal priors."""
    return StateEnsemble.uniform([p.joint for p in all_preparations()])


def eve_discrimination_bound() -> float:
    return usd_bound(eavesdropper_ensemble())


@dataclass(frozen=True)
class MemoryRoundOutcome:
    substitute_index: int
    bob_outcome: str
    success: bool
    eve_usd_bound: float


def memory_attack_round(prep: Preparation, cfg: MemoryStoreConfig | None, rng) -> MemoryRoundOutcome:
    """Store the first particle, send a substitute, forward the second; Bob measures.

    Consumes one draw for the substitute and one for Bob's measurement.
    """
    cfg = cfg or MemoryStoreConfig()
    j = pick(cfg.weights, rng.random())
    bob = bob_measurement()
    k, _ = sample(bob, tensor_product(cfg.substitutes[j], prep.second), rng)
    success = prep.sequence is Sequence.AB and bob.labels[k] == f"psi{prep.index}"
    return MemoryRoundOutcome(j, bob.labels[k], success, eve_discrimination_bound())


class MemoryStore:
    name = "memory"

    def __init__(self, cfg: MemoryStoreConfig | None = None):
        self.cfg = cfg or MemoryStoreConfig()

    def on_first(self, particle, rng):
        j = pick(self.cfg.weights, rng.random())
        # the genuine particle stays in Eve's memory
        return self.cfg.substitutes[j], as_state(particle)

    def on_second(self, particle, memo, rng):
        return particle

    def registered_label(self, memo):
        return None

    def describe(self) -> dict:
        return {"strategy": self.name, **self.cfg.to_json()}


@dataclass(frozen=True)
class MemoryEnumeration:
    total: float
    sifted_probability: float
    eve_usd_bound: float

    @property
    def per_sifted_round(self) -> float:
        return self.total / self.sifted_probability

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "sifted_probability": self.sifted_probability,
            "per_sifted_round": self.per_sifted_round,
            "eve_usd_bound": self.eve_usd_bound,
        }


def _memory_bob_table(cfg: MemoryStoreConfig) -> np.ndarray:
    bob = bob_measurement()
    preps = all_preparations()
    table = np.zeros((len(cfg.substitutes), 10, 9))
    for j, s in enumerate(cfg.substitutes):
        for n, prep in enumerate(preps):
            table[j, n] = distribution(bob, tensor_product(s, prep.second))
    return table


def memory_success_exact(cfg: MemoryStoreConfig | None = None) -> MemoryEnumeration:
    cfg = cfg or MemoryStoreConfig()
    table = _memory_bob_table(cfg)
    total = sifted = 0.0
    for n, prep in enumerate(all_preparations()):
        if prep.sequence is not Sequence.AB:
            continue
        sifted += 1 / 10
        for j, w in enumerate(cfg.weights):
            total += (1 / 10) * w * table[j, n, prep.index - 1]
    return MemoryEnumeration(float(total), float(sifted), eve_discrimination_bound())


def simulate_memory(cfg: MemoryStoreConfig | None, trials: int, seed: int, start: int = 0) -> dict:
    cfg = cfg or MemoryStoreConfig()
    table = _memory_bob_table(cfg)
    weights = np.asarray(cfg.weights, dtype=float)
    u = round_uniform_block(seed, start, trials)
    index, ab, pair = _alice_block(u)
    sub = _vpick(np.broadcast_to(weights, (trials, weights.size)), u[:, SLOT_EVE_FIRST])
    bob = _vpick(table[sub, pair], u[:, SLOT_BOB])
    return {
        "index": index,
        "ab": ab,
        "substitute": sub,
        "bob": bob,
        "success": ab & (bob == index - 1),
    }


# ---------------------------------------------------------------- reporting

STRATEGIES = ("ir", "blinding", "memory")


def make_adversary(name: str):
    factories = {"none": NoAdversary, "ir": InterceptResend, "blinding": Blinding, "memory": MemoryStore}
    try:
        return factories[name]()
    except KeyError:
        raise ValueError(f"unknown strategy {name!r}; choose from {sorted(factories)}") from None


def binomial_band(p: float, n: int) -> float:
    """One standard deviation of a frequency estimated from ``n`` Bernoulli(p) trials."""
    return math.sqrt(max(p * (1 - p), 0.0) / n) if n else float("inf")


def mc_agreement(p_exact: float, hits: int, n: int) -> dict:
    if n == 0:
        return {"estimate": None, "exact": p_exact, "n": 0, "sigma": None, "within_3sigma": True}
    est = hits / n
    sigma = binomial_band(p_exact, n)
    if sigma == 0:
        ok = est == p_exact
    else:
        ok = abs(est - p_exact) <= 3 * sigma
    return {"estimate": est, "exact": p_exact, "n": n, "sigma": sigma, "within_3sigma": bool(ok)}

