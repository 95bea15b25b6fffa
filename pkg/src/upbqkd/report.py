"""JSON report documents for the command-line front end.

Each ``cmd_*`` function returns a :class:`ReportDocument`. ``checks`` decide
the strict-mode exit status; ``comparisons`` record published figures whose
derivation is loose (tolerance 0.02) next to the exact value and never gate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .adversary import (
    BlindingConfig,
    InterceptResendConfig,
    MemoryStoreConfig,
    blinding_exact,
    eavesdropper_ensemble,
    exchanged_roles,
    ir_undetected_probability_exact,
    make_adversary,
    mc_agreement,
    memory_success_exact,
    simulate_blinding,
    simulate_intercept_resend,
    simulate_memory,
)
from .bases import (
    ba_upb,
    complete_basis,
    completed_tiles,
    helper_states,
    no_cloning_condition,
    orthogonal_complement_helpers,
    tile_upb,
    unextendibility_margin,
)
from .linalg import MATRIX_TOL, SCALAR_TOL, gram_matrix, matrix_to_json, schmidt_rank, vector_from_json, vector_to_json
from .measurement import ProjectiveMeasurement, StateEnsemble, overlap_matrix, usd_bound, usd_overlap_sum, validate
from .protocol import SessionConfig, run_session, session_document
from .reduced import REDUCED_STATE_TABLE, closed_form, reduced_state

# Published figures. The loose ones are compared at LOOSE_TOL.
PUBLISHED_ALPHAS = (math.sqrt(9 / 7), math.sqrt(7 / 5), math.sqrt(5 / 3), math.sqrt(3))
PUBLISHED_USD_BOUND = 8 / 9
PUBLISHED_IR_TOTAL = 0.6666
PUBLISHED_IR_BRANCHES = {"0": 0.2722, "1": 0.1222, "2": 0.2722}
PUBLISHED_BLINDING_SUCCESS = 0.5
PUBLISHED_MEMORY_SUCCESS = 1 / 3
LOOSE_TOL = 0.02


@dataclass
class Check:
    name: str
    expected: Any
    actual: Any
    tolerance: float | None
    provenance: str  # "paper" for published constants, "derived" for computed oracles
    relation: str = "eq"  # "eq", "ge" (actual >= expected) or "le"

    @property
    def passed(self) -> bool:
        if self.tolerance is None:
            return bool(self.actual == self.expected)
        if self.relation == "ge":
            return bool(self.actual >= self.expected - self.tolerance)
        if self.relation == "le":
            return bool(self.actual <= self.expected + self.tolerance)
        return bool(abs(self.expected - self.actual) <= self.tolerance)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "expected": _plain(self.expected),
            "actual": _plain(self.actual),
            "tolerance": self.tolerance,
            "relation": self.relation,
            "provenance": self.provenance,
            "pass": self.passed,
        }


@dataclass
class ReportDocument:
    command: str
    config_echo: dict
    results: dict
    checks: list[Check] = field(default_factory=list)
    comparisons: list[Check] = field(default_factory=list)
    seed: int = 0
    version: str = __version__

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "config_echo": _plain(self.config_echo),
            "results": _plain(self.results),
            "checks": [c.to_json() for c in self.checks],
            "comparisons": [c.to_json() for c in self.comparisons],
            "all_checks_pass": self.passed,
            "seed": self.seed,
            "version": self.version,
        }

    def dumps(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_json(), indent=indent, sort_keys=True)


def _plain(x):
    """Convert numpy scalars/arrays and tuples to JSON-native values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    return x


def _basis_json(basis, alphas=()) -> dict:
    return {
        "label": basis.label,
        "dims": [basis.dims.dA, basis.dims.dB],
        "stopper_index": basis.stopper_index,
        "alphas": list(alphas),
        "labels": list(basis.labels),
        "states": [vector_to_json(s) for s in basis.states],
    }


def cmd_bases() -> ReportDocument:
    upb, ba = tile_upb(), ba_upb()
    completion = completed_tiles()
    full = completion.full_basis
    dims = full.dims
    helpers = helper_states()
    fourteen = list(full.states) + list(ba.states)

    generic = complete_basis(upb, orthogonal_complement_helpers(upb))
    generic_report = validate(ProjectiveMeasurement.from_basis(generic.full_basis))
    ranks = {lbl: schmidt_rank(s, dims) for lbl, s in zip(full.labels, full.states)}
    no_cloning = no_cloning_condition(upb)
    partial_sum = upb.matrix.T @ upb.matrix.conj()
    margin = unextendibility_margin(completion.appended_states, dims)

    results = {
        "completed_basis": _basis_json(full, completion.normalization_constants),
        "ba_basis": _basis_json(ba),
        "helpers": [vector_to_json(h) for h in helpers],
        "alphas": completion.normalization_constants,
        "gram_labels": list(full.labels) + list(ba.labels),
        "gram_psi_xi": matrix_to_json(gram_matrix(fourteen)),
        "schmidt_ranks": ranks,
        "no_cloning": {f"{lbl}:{S}": ok for (lbl, S), ok in no_cloning.per_state.items()},
        "unextendibility_grid_margin": margin,
        "generic_completion_alphas": generic.normalization_constants,
    }
    checks = [
        Check(f"alpha{k}", a, b, SCALAR_TOL, "paper")
        for k, a, b in zip(range(6, 10), PUBLISHED_ALPHAS, completion.normalization_constants)
    ]
    checks += [
        Check("psi1..psi9 orthonormal", 0.0, full.orthonormality_error(), MATRIX_TOL, "paper"),
        Check("psi1..psi9 complete", 0.0, full.completeness_error(), MATRIX_TOL, "paper"),
        Check(
            "psi1..psi5 incomplete (distance from identity > 0.5)",
            0.5,
            float(np.linalg.norm(partial_sum - np.eye(dims.total), 2)),
            0.0,
            "paper",
            relation="ge",
        ),
        Check("xi1..xi5 orthonormal", 0.0, ba.orthonormality_error(), MATRIX_TOL, "derived"),
    ]
    for lbl, r in ranks.items():
        if lbl in upb.labels:
            checks.append(Check(f"schmidt rank {lbl} = 1", 1, r, None, "paper"))
        else:
            checks.append(Check(f"schmidt rank {lbl} >= 2", 2, r, 0.0, "paper", relation="ge"))
    checks += [
        Check("no-cloning condition on tiles", True, no_cloning.passed, None, "paper"),
        Check("unextendibility grid margin", 0.01, margin, 0.0, "derived", relation="ge"),
        Check("generic completion is a valid measurement", True, generic_report.passed, None, "derived"),
    ]
    return ReportDocument("bases", {}, results, checks)


def cmd_reduced() -> ReportDocument:
    completion = completed_tiles()
    results: dict[str, Any] = {}
    checks = []
    for (S, i) in sorted(REDUCED_STATE_TABLE, key=lambda k: (k[1], k[0])):
        rho = reduced_state(completion, S, i)
        gap = float(np.max(np.abs(rho - closed_form(S, i))))
        results[f"rho_{S}|{i}"] = {"matrix": matrix_to_json(rho), "closed_form_gap": gap}
        checks.append(Check(f"rho_{S}|{i} closed form", 0.0, gap, MATRIX_TOL, "paper"))
        checks.append(Check(f"rho_{S}|{i} trace", 1.0, float(np.trace(rho).real), MATRIX_TOL, "derived"))
    return ReportDocument("reduced", {}, results, checks)


def load_states_file(path) -> StateEnsemble:
    """Read ``{"states": [...], "priors": [...]}`` or a bare list of vector documents."""
    try:
        doc = json.loads(Path(path).read_text())
        if isinstance(doc, list):
            doc = {"states": doc}
        states = [vector_from_json(v) for v in doc["states"]]
        if "priors" in doc:
            return StateEnsemble(tuple(float(p) for p in doc["priors"]), tuple(states))
        return StateEnsemble.uniform(states)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed states file {path}: {exc}") from exc


def cmd_bound(ensemble: str = "ten-state", states_file=None) -> ReportDocument:
    if states_file is not None:
        ens = load_states_file(states_file)
        ensemble = "file"
    elif ensemble == "ten-state":
        ens = eavesdropper_ensemble()
    elif ensemble == "tiles-9":
        ens = StateEnsemble.uniform(completed_tiles().full_basis.states)
    else:
        raise ValueError(f"unknown ensemble {ensemble!r}")
    bound = usd_bound(ens)
    overlap_sum = usd_overlap_sum(ens)
    results = {
        "ensemble": ensemble,
        "n": len(ens.states),
        "priors": ens.priors,
        "overlap_matrix": overlap_matrix(ens.states),
        "overlap_sum": overlap_sum,
        "bound": bound,
    }
    checks = []
    if ensemble == "ten-state":
        checks.append(Check("USD bound for the ten transmitted states", PUBLISHED_USD_BOUND, bound, SCALAR_TOL, "paper"))
        checks.append(Check("weighted overlap sum", 1.0, overlap_sum, SCALAR_TOL, "derived"))
    elif ensemble == "tiles-9":
        checks.append(Check("USD bound for an orthonormal basis", 1.0, bound, SCALAR_TOL, "derived"))
    config = {"ensemble": ensemble, "states_file": str(states_file) if states_file else None}
    return ReportDocument("bound", config, results, checks)


def cmd_session(
    rounds: int,
    seed: int = 0,
    sample_fraction: float = 0.2,
    adversary: str = "none",
    key_encoding: str = "symbols",
    include_transcript: bool = True,
) -> ReportDocument:
    config = SessionConfig(rounds, seed, sample_fraction, make_adversary(adversary), key_encoding)
    report = run_session(config)
    doc = session_document(config, report, include_transcript)
    checks = []
    if adversary == "none":
        sifted_mismatch = sum(
            r.bob_outcome != f"psi{r.prepared_index}" for r in report.transcript if r.sifted
        )
        checks += [
            Check("honest session undetected", False, report.detected, None, "derived"),
            Check("honest keys agree", report.alice_key, report.bob_key, None, "derived"),
            Check("honest sifted rounds all correct", 0, sifted_mismatch, None, "derived"),
        ]
    return ReportDocument("session", config.to_json(), doc, checks, seed=seed)


def _mc_check(name: str, agreement: dict) -> Check:
    """3 sigma band around the exact value; vacuous when no samples fell in the event."""
    if agreement["n"] == 0:
        return Check(name, True, agreement["within_3sigma"], None, "derived")
    return Check(name, agreement["exact"], agreement["estimate"], 3 * agreement["sigma"], "derived")


def _ir_report(trials: int, seed: int) -> ReportDocument:
    cfg = InterceptResendConfig()
    exact = ir_undetected_probability_exact(cfg)
    mirrored_cfg = exchanged_roles(cfg)
    mirrored = ir_undetected_probability_exact(mirrored_cfg)
    sim = simulate_intercept_resend(cfg, trials, seed)
    joint = mc_agreement(exact.total, int(sim["undetected"].sum()), trials)
    n_sifted = int(sim["ab"].sum())
    cond = mc_agreement(exact.per_sifted_round, int(sim["undetected"].sum()), n_sifted)
    buckets = {
        lbl: mc_agreement(exact.per_first_outcome[lbl], int((sim["undetected"] & (sim["eve_first"] == k)).sum()), trials)
        for k, lbl in enumerate(("0", "1", "2"))
    }
    results = {
        "exact": exact.to_json(),
        "exchanged_roles": {"config": mirrored_cfg.to_json(), "exact": mirrored.to_json()},
        "monte_carlo": {"joint": joint, "per_sifted_round": cond, "per_first_outcome": buckets},
    }
    checks = [
        _mc_check("MC vs enumeration (sifted and undetected)", joint),
        _mc_check("MC vs enumeration (per sifted round)", cond),
        Check("exchanged-role symmetry", exact.total, mirrored.total, SCALAR_TOL, "paper"),
    ]
    checks += [
        _mc_check(f"MC vs enumeration (first outcome {lbl})", b) for lbl, b in buckets.items()
    ]
    comparisons = [
        Check("undetected per sifted round vs published total", PUBLISHED_IR_TOTAL, exact.per_sifted_round, LOOSE_TOL, "paper"),
        Check("undetected joint probability vs published total", PUBLISHED_IR_TOTAL, exact.total, LOOSE_TOL, "paper"),
    ]
    comparisons += [
        Check(f"per sifted round, first outcome {lbl} vs published branch", PUBLISHED_IR_BRANCHES[lbl], v, LOOSE_TOL, "paper")
        for lbl, v in exact.per_sifted_bucket.items()
    ]
    return ReportDocument("attack", {"strategy": "ir", **cfg.to_json()}, results, checks, comparisons)


def _blinding_report(trials: int, seed: int) -> ReportDocument:
    cfg = BlindingConfig()
    exact = blinding_exact(cfg)
    sim = simulate_blinding(cfg, trials, seed)
    det = mc_agreement(exact.detection, int(sim["detected"].sum()), trials)
    results = {"exact": exact.to_json(), "monte_carlo": {"detection": det}}
    checks = [
        Check("exact detection probability", 0.5, exact.detection, SCALAR_TOL, "paper"),
        _mc_check("MC vs enumeration (detection)", det),
    ]
    comparisons = [
        Check("undetected vs published blinding success", PUBLISHED_BLINDING_SUCCESS, exact.undetected, LOOSE_TOL, "paper"),
    ]
    return ReportDocument("attack", {"strategy": "blinding", **cfg.to_json()}, results, checks, comparisons)


def _memory_report(trials: int, seed: int) -> ReportDocument:
    cfg = MemoryStoreConfig()
    exact = memory_success_exact(cfg)
    sim = simulate_memory(cfg, trials, seed)
    joint = mc_agreement(exact.total, int(sim["success"].sum()), trials)
    cond = mc_agreement(exact.per_sifted_round, int(sim["success"].sum()), int(sim["ab"].sum()))
    results = {"exact": exact.to_json(), "monte_carlo": {"joint": joint, "per_sifted_round": cond}}
    checks = [
        _mc_check("MC vs enumeration (sifted and matching)", joint),
        _mc_check("MC vs enumeration (per sifted round)", cond),
        Check("eavesdropper USD bound", PUBLISHED_USD_BOUND, exact.eve_usd_bound, SCALAR_TOL, "paper"),
    ]
    comparisons = [
        Check("success per sifted round vs published limit", PUBLISHED_MEMORY_SUCCESS, exact.per_sifted_round, LOOSE_TOL, "paper"),
        Check("joint success vs published limit", PUBLISHED_MEMORY_SUCCESS, exact.total, LOOSE_TOL, "paper"),
    ]
    return ReportDocument("attack", {"strategy": "memory", **cfg.to_json()}, results, checks, comparisons)


def cmd_attack(strategy: str, trials: int = 100_000, seed: int = 0) -> ReportDocument:
    if trials < 1:
        raise ValueError("trials must be at least 1")
    builders = {"ir": _ir_report, "blinding": _blinding_report, "memory": _memory_report}
    try:
        build = builders[strategy]
    except KeyError:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {sorted(builders)}") from None
    doc = build(trials, seed)
    doc.config_echo.update(trials=trials)
    doc.seed = seed
    return doc
