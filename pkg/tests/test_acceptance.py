"""Acceptance gate: one test and one printed PASS/FAIL line per criterion."""

import json
import math

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from upbqkd.adversary import (
    BlindingConfig,
    InterceptResendConfig,
    MemoryStoreConfig,
    blinding_exact,
    exchanged_roles,
    ir_undetected_probability_exact,
    mc_agreement,
    memory_success_exact,
    simulate_blinding,
    simulate_intercept_resend,
    simulate_memory,
)
from upbqkd.bases import complete_basis, completed_tiles, orthogonal_complement_helpers, tile_upb, unextendibility_margin
from upbqkd.cli import main
from upbqkd.linalg import QUTRITS, gram_matrix, schmidt_rank
from upbqkd.measurement import ProjectiveMeasurement, validate, usd_bound, usd_overlap_sum
from upbqkd.adversary import eavesdropper_ensemble
from upbqkd.protocol import SessionConfig, alice_prepare, run_session
from upbqkd.reduced import REDUCED_STATE_TABLE, closed_form, reduced_state
from upbqkd.report import LOOSE_TOL, PUBLISHED_IR_BRANCHES, PUBLISHED_IR_TOTAL, PUBLISHED_MEMORY_SUCCESS
from upbqkd.streams import SLOT_INDEX, SLOT_SEQUENCE, SlotStream, round_uniform_block


def record(n: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {n:2d} {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def note(n: int, detail: str) -> None:
    line = f"CRITERION {n:2d} NOTE: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)


@pytest.fixture(scope="module")
def completion():
    return completed_tiles()


def test_01_basis_structure(completion):
    mat = completion.full_basis.matrix
    gram_err = np.max(np.abs(gram_matrix(completion.full_basis.states) - np.eye(9)))
    res_err = np.max(np.abs(mat.T @ mat.conj() - np.eye(9)))
    record(1, gram_err <= 1e-9 and res_err <= 1e-9, f"gram error {gram_err:.2e}, resolution error {res_err:.2e}")


def test_02_normalization_constants(completion):
    expected = [math.sqrt(9 / 7), math.sqrt(7 / 5), math.sqrt(5 / 3), math.sqrt(3)]
    err = max(abs(a - b) for a, b in zip(completion.normalization_constants, expected))
    record(2, err <= 1e-12, f"max |alpha - closed form| = {err:.2e}")


def test_03_entanglement_split(completion):
    ranks = [schmidt_rank(s, QUTRITS) for s in completion.full_basis.states]
    ok = all(r == 1 for r in ranks[:5]) and all(r >= 2 for r in ranks[5:])
    record(3, ok, f"Schmidt ranks psi1..psi9 = {ranks}")


def test_04_reduced_state_table(completion):
    gaps, traces = [], []
    for S, i in REDUCED_STATE_TABLE:
        rho = reduced_state(completion, S, i)
        gaps.append(np.max(np.abs(rho - closed_form(S, i))))
        traces.append(abs(np.trace(rho).real - 1))
    ok = len(gaps) == 18 and max(gaps) <= 1e-9 and max(traces) <= 1e-9
    record(4, ok, f"{len(gaps)} entries, max gap {max(gaps):.2e}, max trace error {max(traces):.2e}")


def test_05_usd_bound():
    ens = eavesdropper_ensemble()
    bound, overlap = usd_bound(ens), usd_overlap_sum(ens)
    ok = abs(bound - 8 / 9) <= 1e-12 and abs(overlap - 1) <= 1e-12
    record(5, ok, f"bound {bound!r} (8/9), overlap sum {overlap!r} (1)")


def test_06_honest_protocol():
    report = run_session(SessionConfig(10_000, master_seed=2024))
    sifted = [r for r in report.transcript if r.sifted]
    wrong = sum(r.bob_outcome != f"psi{r.prepared_index}" for r in sifted)
    ok = wrong == 0 and report.alice_key == report.bob_key and not report.detected
    record(6, ok, f"{len(sifted)} sifted rounds, {wrong} mismatches, key length {len(report.alice_key)} agrees")


def test_07_preparation_uniformity():
    n, seed = 1_000_000, 77
    u = round_uniform_block(seed, 0, n)
    # vectorized replay of alice_prepare, checked against it on a prefix
    index = 1 + np.minimum((u[:, SLOT_INDEX] * 5).astype(int), 4)
    ab = u[:, SLOT_SEQUENCE] < 0.5
    for j in range(2000):
        p = alice_prepare(SlotStream([u[j, SLOT_INDEX], u[j, SLOT_SEQUENCE]]))
        assert (p.index, p.sequence.value == "AB") == (index[j], ab[j])
    counts = np.bincount((index - 1) + np.where(ab, 0, 5), minlength=10)
    sigma = math.sqrt(0.1 * 0.9 / n)
    z = (counts / n - 0.1) / sigma
    record(7, bool(np.all(np.abs(z) <= 3)), f"10 pairs over {n} draws, max |z| = {np.max(np.abs(z)):.2f}")


def test_08_intercept_resend():
    cfg = InterceptResendConfig()
    exact = ir_undetected_probability_exact(cfg)
    n = 1_000_000
    sim = simulate_intercept_resend(cfg, n, 7)
    joint = mc_agreement(exact.total, int(sim["undetected"].sum()), n)
    cond = mc_agreement(exact.per_sifted_round, int(sim["undetected"].sum()), int(sim["ab"].sum()))
    buckets = [
        mc_agreement(exact.per_first_outcome[lbl], int((sim["undetected"] & (sim["eve_first"] == k)).sum()), n)
        for k, lbl in enumerate(("0", "1", "2"))
    ]
    for lbl, v in exact.per_sifted_bucket.items():
        flag = "agrees" if abs(v - PUBLISHED_IR_BRANCHES[lbl]) <= LOOSE_TOL else "deviates"
        note(8, f"branch {lbl}: exact per sifted round {v:.4f} vs published {PUBLISHED_IR_BRANCHES[lbl]} ({flag})")
    for name, v in (("per sifted round", exact.per_sifted_round), ("joint", exact.total)):
        flag = "agrees" if abs(v - PUBLISHED_IR_TOTAL) <= LOOSE_TOL else "deviates"
        note(8, f"total {name}: exact {v:.4f} vs published {PUBLISHED_IR_TOTAL} ({flag}, tol {LOOSE_TOL})")
    ok = joint["within_3sigma"] and cond["within_3sigma"] and all(b["within_3sigma"] for b in buckets)
    record(
        8,
        ok,
        f"enumeration {exact.total:.6f} vs MC {joint['estimate']:.6f} (3 sigma {3 * joint['sigma']:.1e}); "
        f"per sifted round {exact.per_sifted_round:.6f} vs MC {cond['estimate']:.6f}",
    )


def test_09_attack_symmetry():
    cfg = InterceptResendConfig()
    a = ir_undetected_probability_exact(cfg).total
    b = ir_undetected_probability_exact(exchanged_roles(cfg)).total
    record(9, abs(a - b) <= 1e-12, f"default {a!r}, exchanged roles {b!r}")


def test_10_blinding():
    cfg = BlindingConfig()
    exact = blinding_exact(cfg)
    n = 100_000
    mc = mc_agreement(exact.detection, int(simulate_blinding(cfg, n, 10)["detected"].sum()), n)
    ok = abs(exact.detection - 0.5) <= 1e-12 and mc["within_3sigma"]
    record(10, ok, f"exact detection {exact.detection!r}, MC {mc['estimate']:.5f} (3 sigma {3 * mc['sigma']:.1e})")


def test_11_memory_attack():
    cfg = MemoryStoreConfig()
    exact = memory_success_exact(cfg)
    n = 100_000
    sim = simulate_memory(cfg, n, 11)
    mc = mc_agreement(exact.total, int(sim["success"].sum()), n)
    for name, v in (("per sifted round", exact.per_sifted_round), ("joint", exact.total)):
        flag = "agrees" if abs(v - PUBLISHED_MEMORY_SUCCESS) <= LOOSE_TOL else "deviates"
        note(11, f"{name}: exact {v:.4f} vs published 1/3 ({flag}, tol {LOOSE_TOL})")
    ok = math.isfinite(exact.total) and mc["within_3sigma"]
    record(11, ok, f"enumeration {exact.total:.6f}, MC {mc['estimate']:.6f}; comparison against 1/3 reported above")


def test_12_unextendibility(completion):
    margin = unextendibility_margin(completion.appended_states, QUTRITS, grid_size=100)
    record(12, margin >= 0.01, f"min residual over 10^4 grid product states = {margin:.4f}")


@pytest.mark.parametrize(
    "argv",
    [
        ["bases"],
        ["reduced"],
        ["bound"],
        ["session", "--rounds", "500", "--seed", "3"],
        ["session", "--rounds", "200", "--seed", "3", "--adversary", "blinding"],
        ["attack", "--strategy", "ir", "--trials", "50000", "--seed", "5"],
        ["attack", "--strategy", "blinding", "--trials", "50000", "--seed", "5"],
        ["attack", "--strategy", "memory", "--trials", "50000", "--seed", "5"],
    ],
    ids=lambda a: "-".join(a[:3]),
)
def test_13_determinism(tmp_path, argv):
    texts = []
    for k in range(2):
        out = tmp_path / f"run{k}.json"
        main([*argv, "--no-strict", "--out", str(out)])
        texts.append(json.dumps(json.loads(out.read_text())["results"], sort_keys=True))
    record(13, texts[0] == texts[1], f"'{' '.join(argv)}' results byte-identical across two runs")


def test_14_generic_completion():
    upb = tile_upb()
    result = complete_basis(upb, orthogonal_complement_helpers(upb))
    report = validate(ProjectiveMeasurement.from_basis(result.full_basis))
    record(
        14,
        report.passed,
        f"orthonormality {report.orthonormality_error:.2e}, completeness {report.completeness_error:.2e}",
    )
