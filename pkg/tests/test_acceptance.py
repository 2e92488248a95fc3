"""Acceptance criteria, one test per criterion.

Each test records a ``criterion N: PASS|FAIL`` line (printed immediately and
again in the terminal summary) before asserting.  Run with::

    pytest tests/test_acceptance.py -s
"""

import itertools
import time

import numpy as np
import pytest
import sympy as sp

from conftest import ACCEPTANCE_LINES
from oracles import BB84, BELL, BELL_ORDER, center_first_distribution, kron, users_first_distribution
from qfilenet import qcore
from qfilenet.center import (
    Honest, InterceptResend, ProjectAs, QuantumFile, construct_attack_state, deposit, pair_session,
    xor_hidden_file,
)
from qfilenet.harness import ABORT_QBER, ScenarioConfig, SingleCenter, TwoCenters, run_scenario
from qfilenet.postprocess import final_length, qber
from qfilenet.protocol import (
    Variant, encode_bb84, outcome_distribution_center_first, outcome_distribution_users_first,
    random_string, sift,
)
from qfilenet.qcore import BELL_STATES, DOWN, UP, Basis, BellOutcome
from qfilenet.telenet import SingletPool, chain_teleport, teleport

MILLION = 1_000_000


def verdict(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def philox(key):
    return np.random.Generator(np.random.Philox(key=key))


def random_qubit(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


def random_vector(rng, n):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


@pytest.fixture(scope="module")
def singlet_run():
    cfg = ScenarioConfig(MILLION, Variant.SINGLET_ONLY, Honest(Variant.SINGLET_ONLY), seed=101)
    return run_scenario(cfg)


@pytest.fixture(scope="module")
def full_bell_run():
    return run_scenario(ScenarioConfig(MILLION, Variant.FULL_BELL, Honest(), seed=102))


def check_usable(report, tol=0.001):
    frac = report.sifted_len / report.raw_pairs
    return abs(frac - 1 / 8) <= tol, frac


def check_announced(report, tol=0.0015):
    frac = report.announced_present / report.raw_pairs
    return abs(frac - 1 / 4) <= tol, frac


def check_full_bell(report, tol=0.0015):
    frac = report.same_basis_kept / report.raw_pairs
    ok = abs(frac - 1 / 2) <= tol and report.sifted_len == report.same_basis_kept
    return ok, frac


def honest_sweep(topology, seeds=range(100), n=2000):
    bad = []
    for seed in seeds:
        r = run_scenario(ScenarioConfig(n, Variant.FULL_BELL, Honest(), seed=seed, topology=topology))
        if not (r.sifted_qber == 0.0 and r.qber_estimate == 0.0 and r.keys_agree):
            bad.append(seed)
    return bad


def test_criterion_01_usable_fraction(singlet_run):
    ok, frac = check_usable(singlet_run)
    fast = singlet_run.wall_time < 60.0
    verdict(1, ok and fast, f"usable={frac:.5f} (1/8 +- 0.001), runtime={singlet_run.wall_time:.2f}s (< 60s)")


def test_criterion_02_announced_fraction(singlet_run):
    ok, frac = check_announced(singlet_run)
    verdict(2, ok, f"announced={frac:.5f} (1/4 +- 0.0015)")


def test_criterion_03_full_bell_yield(full_bell_run):
    ok, frac = check_full_bell(full_bell_run)
    discarded = full_bell_run.same_basis_kept - full_bell_run.sifted_len
    verdict(3, ok, f"same-basis={frac:.5f} (1/2 +- 0.0015), discarded same-basis={discarded}")


def test_criterion_04_honest_qber():
    bad = honest_sweep(SingleCenter())
    verdict(4, not bad, f"100 seeds, qber 0 and keys agree; failing seeds={bad}")


def project_prob(a_bit, b_bit, basis, outcome):
    state = qcore.tensor(encode_bb84(a_bit, basis), encode_bb84(b_bit, basis))
    try:
        return qcore.project(state, (0, 1), BELL_STATES[outcome])[0]
    except qcore.ZeroProbability:
        return 0.0


def test_criterion_05_honest_center_learns_nothing():
    # exact: for each basis and outcome, P(outcome | bit) does not depend on Alice's bit
    exact = True
    for basis, k in itertools.product("zx", BELL_ORDER):
        cond = []
        for a_bit in (0, 1):
            total = sum(
                sp.Abs((BELL[k].H * kron(BB84[basis][a_bit], BB84[basis][b_bit]))[0, 0]) ** 2
                for b_bit in (0, 1)
            )
            cond.append(sp.nsimplify(sp.simplify(total / 2)))
        exact &= sp.simplify(cond[0] - cond[1]) == 0
        # same numbers from the library's projection probabilities
        basis_enum, outcome = Basis("zx".index(basis)), BELL_ORDER.index(k)
        lib = [
            sum(project_prob(a_bit, b_bit, basis_enum, outcome) for b_bit in (0, 1)) / 2
            for a_bit in (0, 1)
        ]
        exact &= abs(lib[0] - lib[1]) < 1e-15 and abs(lib[0] - float(cond[0])) < 1e-15
    r = run_scenario(ScenarioConfig(220_000, Variant.FULL_BELL, Honest(), seed=105))
    enough = r.sifted_len >= 100_000
    verdict(
        5, exact and enough and r.cheat_mi < 0.001,
        f"exact independence={exact}, MI={r.cheat_mi:.2e} bits over {r.sifted_len} sifted bits (< 0.001)",
    )


def session(behavior, n, seed, variant=Variant.FULL_BELL):
    streams = philox(seed)
    alice, bob = random_string(streams, n), random_string(streams, n)
    fa = deposit(QuantumFile("alice"), alice.states())
    fb = deposit(QuantumFile("bob"), bob.states())
    ann, log = pair_session(fa, fb, behavior, streams)
    ka, kb = sift(alice, bob, ann, variant)
    return alice, ka, kb


def per_basis_qber(alice, ka, kb):
    bases = alice.bases[ka.source_indices]
    return {
        b: qber(ka.bits[bases == b], kb.bits[bases == b]) for b in (Basis.Z, Basis.X)
    }


def test_criterion_06_project_as_detected():
    behavior = ProjectAs(BellOutcome.PSI_MINUS, BellOutcome.PHI_PLUS)
    alice, ka, kb = session(behavior, 100_000, seed=106)
    by_basis = per_basis_qber(alice, ka, kb)
    r = run_scenario(ScenarioConfig(20_000, Variant.FULL_BELL, behavior, seed=106))
    ok = (
        qber(ka.bits, kb.bits) == 1.0
        and all(v == 1.0 for v in by_basis.values())
        and r.sifted_qber == 1.0
        and r.aborted
        and r.qber_estimate > ABORT_QBER
        and r.final_len == 0
    )
    verdict(6, ok, f"qber Z={by_basis[Basis.Z]}, X={by_basis[Basis.X]}, harness aborted={r.aborted}")


def test_criterion_07_intercept_resend_detected():
    alice, ka, kb = session(InterceptResend(Basis.Z), 100_000, seed=107)
    pooled = qber(ka.bits, kb.bits)
    by_basis = per_basis_qber(alice, ka, kb)
    ok = (
        abs(pooled - 0.25) <= 0.01
        and by_basis[Basis.Z] == 0.0
        and abs(by_basis[Basis.X] - 0.5) <= 0.01
    )
    verdict(
        7, ok,
        f"pooled={pooled:.4f} (0.25 +- 0.01), Z={by_basis[Basis.Z]:.4f}, X={by_basis[Basis.X]:.4f} (0.5 +- 0.01)",
    )


def attack_state_direct(coeffs, branch_map):
    """The post-attack state written out term by term and normalized."""
    a, b, g, d = np.conj(coeffs)
    v = (
        a * np.kron(np.kron(UP, UP), branch_map[0])
        + b * np.kron(np.kron(DOWN, DOWN), branch_map[1])
        + g * np.kron(np.kron(UP, DOWN), branch_map[2])
        + d * np.kron(np.kron(DOWN, UP), branch_map[3])
    )
    return v / np.linalg.norm(v)


def test_criterion_08_attack_state():
    rng = philox(108)
    worst = 0.0
    for _ in range(20):
        d = int(rng.integers(2, 9))
        coeffs = random_vector(rng, 4)
        bm = np.array([random_vector(rng, d) for _ in range(4)])
        for _ in range(1000):
            ok, state = construct_attack_state(*coeffs, bm, rng)
            if ok:
                break
        worst = max(worst, qcore.phase_distance(state, attack_state_direct(coeffs, bm)))
    coeffs = random_vector(rng, 4)
    bm = np.array([random_vector(rng, 3) for _ in range(4)])
    n = 100_000
    hits = sum(construct_attack_state(*coeffs, bm, rng)[0] for _ in range(n))
    freq = hits / n
    verdict(
        8, worst < 1e-12 and abs(freq - 0.25) <= 0.005,
        f"max distance={worst:.1e} (< 1e-12), success={freq:.4f} (1/4 +- 0.005)",
    )


def test_criterion_09_orderings_equivalent():
    users = users_first_distribution()
    centre = center_first_distribution()
    exact = set(users) == set(centre) and all(sp.simplify(users[k] - centre[k]) == 0 for k in users)
    exact &= sum(users.values()) == 1
    lib_u, lib_c = outcome_distribution_users_first(), outcome_distribution_center_first()
    lib_gap = max(abs(lib_u[k] - lib_c.get(k, 0.0)) for k in lib_u)
    lib_oracle_gap = max(abs(lib_u[k] - float(users[k])) for k in users)
    ok = exact and lib_gap < 1e-15 and lib_oracle_gap < 1e-15
    verdict(
        9, ok,
        f"symbolic equality over {len(users)} tuples={exact}, library gap={lib_gap:.1e}, vs oracle={lib_oracle_gap:.1e}",
    )


def test_criterion_10_teleportation():
    rng = philox(110)
    states = [encode_bb84(bit, basis) for basis in Basis for bit in (0, 1)]
    states += [random_qubit(rng) for _ in range(100)]
    worst = 0.0
    for q in states:
        out, _, _ = teleport(q, SingletPool.ideal("c1", "c2", 1), rng)
        worst = max(worst, qcore.phase_distance(out, q))
    worst_chain = 0.0
    for q in states:
        pools = [SingletPool.ideal(f"s{h}", f"s{h + 1}", 1) for h in range(5)]
        out, _ = chain_teleport(q, pools, rng)
        worst_chain = max(worst_chain, qcore.phase_distance(out, q))

    two = TwoCenters(1)
    started = time.perf_counter()
    s_run = run_scenario(ScenarioConfig(MILLION, Variant.SINGLET_ONLY, Honest(Variant.SINGLET_ONLY), seed=201, topology=two))
    runtime = time.perf_counter() - started
    f_run = run_scenario(ScenarioConfig(MILLION, Variant.FULL_BELL, Honest(), seed=202, topology=two))
    c1, usable = check_usable(s_run)
    c2, announced = check_announced(s_run)
    c3, same = check_full_bell(f_run)
    bad = honest_sweep(TwoCenters(3))
    ok = worst < 1e-12 and worst_chain < 1e-12 and c1 and runtime < 60 and c2 and c3 and not bad
    verdict(
        10, ok,
        f"single hop={worst:.1e}, 5 hops={worst_chain:.1e}; inter-center usable={usable:.5f}, "
        f"announced={announced:.5f}, same-basis={same:.5f}, runtime={runtime:.2f}s, failing seeds={bad}",
    )


def test_criterion_11_decoherence_robustness():
    agree, positive = 0, 0
    for seed in range(100):
        r = run_scenario(ScenarioConfig(100_000, Variant.FULL_BELL, Honest(), seed=seed, decoherence_p=0.02))
        agree += r.keys_agree
        positive += r.final_len > 0
    worked = final_length(1000, 0.02, 120, 64)
    ok = agree >= 99 and positive == 100 and worked == 674
    verdict(11, ok, f"keys agree in {agree}/100 (>= 99), final_len > 0 in {positive}/100, worked value={worked}")


def test_criterion_12_xor_round_trip():
    rng = philox(112)
    good = 0
    for _ in range(1000):
        n = int(rng.integers(1, 257))
        a = rng.integers(0, 2, n, dtype=np.uint8)
        b = rng.integers(0, 2, n, dtype=np.uint8)
        good += np.array_equal(a ^ xor_hidden_file(a, b), b)
    verdict(12, good == 1000, f"{good}/1000 round trips")
