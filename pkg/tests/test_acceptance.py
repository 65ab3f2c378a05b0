"""Acceptance run: eight end-to-end criteria, each reported as one PASS/FAIL line.

The lines are printed in the terminal summary (see conftest.py), so they show
up in a plain ``pytest tests/test_acceptance.py`` run.
"""

import random
import time

import pytest

from kbinary import bincx, cli, corpus, devissage as dv, finmod as fm, ladder as ld, linalg as la, nenashev as ne
from kbinary.finmod import BaseRing, Morphism
from kbinary.linalg import IntMatrix

from oracles import invariant_factors, matmul, solve_congruence_brute
from test_linalg import random_unimodular

BUNDLED = "exceptional_ses.json"


@pytest.fixture
def report(acceptance_results):
    """report(number, ok, detail) records the line printed for a criterion."""

    def rec(num, ok, detail):
        acceptance_results[num] = (ok, detail)

    return rec


# 1 -------------------------------------------------------------------------


def test_01_exceptional_round_trip(report, exceptional):
    t = time.time()
    code = cli.main(["verify", BUNDLED])
    cl = dv.classify(exceptional)
    elapsed = time.time() - t
    ok = code == 0 and cl.case == "Exceptional" and cl.pattern and all(cl.conditions().values()) and elapsed < 1
    report(1, ok, "verify exit %d, case %s, conditions %s, %.2fs" % (code, cl.case, cl.conditions(), elapsed))
    assert ok


# 2 -------------------------------------------------------------------------


@pytest.fixture(scope="module")
def sweep6():
    """Reduce every class with length(M) <= 6 and |M| <= 64 over Z/8 once."""
    t = time.time()
    ring = BaseRing(8)
    res = dict(n=0, bad=0, exc=0, pat=0, exc_off_pattern=0, non_semisimple=0, pattern_resolved=[])
    for M in fm.enumerate_modules(ring, 64):
        if M.is_zero() or fm.length(M) > 6 or fm.is_semisimple(M):
            continue
        for S in corpus.exhaustive_ses(ring, 6, 64, middles=[M]):
            res["n"] += 1
            T = dv.reduce(S)
            res["bad"] += bool(dv.verify_certificate(T))
            e = dv.has_exceptional(T)
            p = dv.classify(S).pattern
            res["exc"] += e
            res["pat"] += p
            res["exc_off_pattern"] += e and not p
            if p and not e:
                res["pattern_resolved"].append((S, T))
            if not p:
                res["non_semisimple"] += any(x.kind != "SemisimpleLeaf" for x in T.walk() if not x.children)
    res["seconds"] = time.time() - t
    return res


def test_02_exhaustive_sweep_length_6(sweep6):
    r = sweep6
    # every class outside the pattern reduces to semisimple leaves; leaves only stop on the pattern
    assert r["bad"] == 0 and r["non_semisimple"] == 0 and r["exc_off_pattern"] == 0
    assert r["seconds"] < 1800
    # classes that match the pattern but still reduce do so because both rows split
    for S, T in r["pattern_resolved"]:
        assert T.kind == "SplitStep" and fm.find_splitting(S.i) is not None and fm.find_splitting(S.j) is not None


@pytest.mark.xfail(strict=True, reason="one pattern class in C2+C2+C4+C4 has split rows and gets a complete "
                   "certificate, so exceptional leaves are a strict subset of the pattern; see the decisions ledger")
def test_02_exceptional_exactly_on_pattern(report, sweep6):
    r = sweep6
    main_ok = r["bad"] == 0 and r["non_semisimple"] == 0 and r["exc_off_pattern"] == 0 and r["seconds"] < 1800
    ok = main_ok and r["exc"] == r["pat"]
    report(2, ok, "%d classes, %d verifier failures, every non-pattern class semisimple-only: %s; "
           "%d exceptional leaves vs %d pattern classes (%d of them split and reduce); %.0fs"
           % (r["n"], r["bad"], "yes" if r["non_semisimple"] == 0 else "NO", r["exc"], r["pat"],
              len(r["pattern_resolved"]), r["seconds"]))
    assert r["exc"] == r["pat"]


# 3 -------------------------------------------------------------------------


def test_03_certificate_soundness(report):
    rng = random.Random(20240303)
    rings = [BaseRing(N) for N in (4, 8, 9, 12)]
    failures = exceptional = 0
    t = time.time()
    for k in range(10_000):
        S = corpus.random_ses(rng, rings[k % 4], 4096)
        T = dv.reduce(S)
        failures += bool(dv.verify_certificate(T))
        exceptional += dv.has_exceptional(T)
    report(3, failures == 0, "10000 sequences, %d verifier failures, %d with exceptional leaves, %.0fs"
           % (failures, exceptional, time.time() - t))
    assert failures == 0


# 4 -------------------------------------------------------------------------


def test_04_shortening(report):
    rng = random.Random(4)
    rings = [BaseRing(N) for N in (4, 8, 9, 12)]
    failures = []
    for k in range(1000):
        length = 3 + k % 4
        X = corpus.random_binary_complex(rng, rings[k % 4], length, 4096)
        Y = ld.shorten(X, 0)
        if bincx.validate(Y) or not bincx.is_acyclic(Y) or Y.bounds != (length - 1,):
            failures.append(k)
            continue
        Z = ld.shorten_times(X, 0, length - 2)
        if Z.bounds != (2,) or bincx.validate(Z) or not bincx.is_acyclic(Z):
            failures.append(k)
    report(4, not failures, "1000 complexes of length 3-6, %d failures" % len(failures))
    assert not failures


# 5 -------------------------------------------------------------------------


def test_05_ladder_identities(report):
    rng = random.Random(5)
    rings = [BaseRing(N) for N in (4, 8, 9)]
    failures = 0
    for k in range(300):
        # "lift": a 1-fold ladder given a second direction; "free": a genuinely 2-fold ladder
        L, n = corpus.random_ladder_2fold(rng, rings[k % 3], 64, kind=("lift", "free")[k % 2])
        out = ld.shorten_ladder(L, n)
        bad = ld.validate_ladder(out.main) + ld.validate_ladder(out.switch) + ld.ladder_identity_failures(L, n, out)
        failures += bool(bad)
    report(5, failures == 0, "300 ladders (1-fold lifted and 2-fold), %d failures; J reading" % failures)
    assert failures == 0


# 6 -------------------------------------------------------------------------


def split_middle():
    C2 = fm.module(8, [2])
    M = fm.module(8, [2, 2])
    return ne.diagonal_ses(Morphism.make(C2, M, [[1], [0]]), Morphism.make(M, C2, [[0, 1]]))


def test_06_search_split_and_determinism(acceptance_results, exceptional):
    assert ne.search_extensions(split_middle(), 64).found >= 1
    a = ne.search_extensions(exceptional, 64, jobs=1)
    b = ne.search_extensions(exceptional, 64, jobs=2)
    assert [(x.basis, y.basis) for x, y, _ in a.witnesses] == [(x.basis, y.basis) for x, y, _ in b.witnesses]
    acceptance_results["6b"] = True


@pytest.mark.xfail(strict=True, reason="the bounded search does find 3x3 diagrams around the exceptional "
                   "sequence; see the decisions ledger")
def test_06_search_exceptional_is_empty(report, acceptance_results, exceptional):
    rep = ne.search_extensions(exceptional, 64)
    parts_ok = acceptance_results.get("6b", False)
    ok = rep.found == 0 and parts_ok
    report(6, ok, "exceptional middle: %d diagrams found at bound 64 (expected 0); split middle nonempty and "
           "jobs-determinism %s" % (rep.found, "hold" if parts_ok else "FAIL"))
    assert rep.found == 0


# 7 -------------------------------------------------------------------------


def test_07_linear_algebra_oracles(report):
    rng = random.Random(7)
    cases = mismatches = 0
    for k in range(100_000):
        m, c = rng.randint(1, 4), rng.randint(1, 4)
        rows = [[rng.randint(-10, 10) for _ in range(c)] for _ in range(m)]
        A = IntMatrix.from_rows(rows)
        cases += 1
        snf = la.smith_normal_form(A)
        want = invariant_factors(rows)
        if list(snf.diagonal) != want or snf.U @ A @ snf.V != snf.D:
            mismatches += 1
            continue
        H, U = la.hermite_normal_form(A)
        W = random_unimodular(rng, m)
        H2, _ = la.hermite_normal_form(IntMatrix.from_rows(matmul(W, rows)))
        if U @ A != H or not la.is_hermite_form(H) or H2 != H:
            mismatches += 1
            continue
        if k % 4 == 0:
            moduli = [rng.choice((1, 2, 3, 4, 6, 12) if c <= 3 else (1, 2, 3, 6)) for _ in range(m)]
            b = [rng.randint(-10, 10) for _ in range(m)]
            got = la.solve_congruence(A, b, moduli)
            want = solve_congruence_brute(rows, b, moduli)
            if (got is None) != (want is None):
                mismatches += 1
            elif got is not None and any((sum(a * x for a, x in zip(r, got)) - bb) % q
                                         for r, bb, q in zip(rows, b, moduli)):
                mismatches += 1
    report(7, mismatches == 0, "%d matrices up to 4x4 in [-10,10] (SNF, HNF, congruences), %d mismatches"
           % (cases, mismatches))
    assert cases >= 100_000 and mismatches == 0


# 8 -------------------------------------------------------------------------


def test_08_duality(report, exceptional):
    rng = random.Random(8)
    modules = failures = 0
    for N in (4, 8, 9, 12, 16, 27):
        ring = BaseRing(N)
        for M in fm.enumerate_modules(ring, 256):
            modules += 1
            if fm.dual(M) != M:
                failures += 1
            for _ in range(3):
                f = corpus.random_endomorphism(rng, M, M)
                if fm.dual_morphism(fm.dual_morphism(f)) != f:
                    failures += 1
            if M.is_zero():
                continue
            # exactness: a short exact sequence through M stays exact after dualising
            A = corpus.random_subobject(rng, M)
            K, i = fm.sub_module(A)
            Q, p = fm.quotient(A)
            S = ne.diagonal_ses(i, p)
            if ne.verify_ses(ne.dualize_ses(S)):
                failures += 1
    D = ne.dualize_ses(exceptional)
    dual_ok = ne.verify_ses(D) == []
    ok = failures == 0 and dual_ok
    report(8, ok, "%d modules of order <= 256, %d failures; dual of the exceptional sequence %s"
           % (modules, failures, "valid" if dual_ok else "INVALID"))
    assert ok
