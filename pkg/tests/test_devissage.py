import json
import random
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from kbinary import corpus, devissage as dv, finmod as fm, literals, nenashev as ne
from kbinary.bincx import is_diagonal
from kbinary.finmod import BaseRing, Morphism

from oracles import all_subgroups, apply, elements

R8 = BaseRing(8)
FIXTURES = Path(__file__).parent / "fixtures"


def glen(n):
    """Composition length of a finite abelian group of order n."""
    k, p = 0, 2
    while n > 1:
        while n % p == 0:
            n //= p
            k += 1
        p += 1
    return k


def image_set(f, X):
    return {apply(f.matrix, x, f.tgt.divisors) for x in X}


def preimage_set(f, Y):
    return {x for x in elements(f.src.divisors) if apply(f.matrix, x, f.tgt.divisors) in Y}


def brute_invariants(S):
    """(len U, len U', len M/(iM'+jM'), len C) from element sets."""
    Ep = elements(S.Mp.divisors)
    iM, jM = image_set(S.i, Ep), image_set(S.j, Ep)
    U = iM & jM
    Up = preimage_set(S.i, U) & preimage_set(S.j, U)
    divs = S.M.divisors
    sumIJ = {tuple((a + b) % d for a, b, d in zip(x, y, divs)) for x in iM for y in jM}
    pj = {apply(S.p.matrix, y, S.Mpp.divisors) for y in jM}
    qi = {apply(S.q.matrix, y, S.Mpp.divisors) for y in iM}
    C = {tuple((a + b) % d for a, b, d in zip(x, y, S.Mpp.divisors)) for x in pj for y in qi}
    return (glen(len(U)), glen(len(Up)), glen(S.M.order // len(sumIJ)), glen(S.Mpp.order // len(C)))


def brute_equalizer_length(S):
    best = 0
    for V in all_subgroups(S.Mp.divisors):
        if image_set(S.i, V) == image_set(S.j, V):
            best = max(best, glen(len(V)))
    return best


def alpha_ses(M, alpha):
    Z = fm.zero_module(M.ring)
    return ne.make_ses(Z, M, M, Morphism.zero(Z, M), Morphism.zero(Z, M), Morphism.identity(M), alpha)


def load_fixture(name):
    kind, S = literals.load(FIXTURES / name)
    assert kind == "ses"
    return S


def leaves(T):
    # no deduplication: shared subtrees count once per occurrence
    if T.kind in dv.LEAF_KINDS:
        return [T]
    return [x for c in T.children for x in leaves(c)]


# ---------------------------------------------------------------------------
# classification


def test_exceptional_sequence_classified(exceptional):
    cl = dv.classify(exceptional)
    assert cl.case == "Exceptional"
    assert cl.pattern and not cl.covered
    assert all(cl.conditions().values()) and len(cl.conditions()) == 4
    assert cl.identities_hold
    assert (cl.len_Mp, cl.len_M, cl.len_Mpp) == (3, 6, 3)


def test_zero_kernel_gives_binary_iso():
    M = fm.module(8, [2, 4])
    assert dv.classify(alpha_ses(M, Morphism.make(M, M, [[1, 0], [2, 3]]))).case == "BinaryIso"


def test_equal_maps_give_equal_image():
    M = fm.module(8, [2, 8])
    A = fm.subobject(M, [(0, 2)])
    Mp, i = fm.sub_module(A)
    Mpp, p = fm.quotient(A)
    cl = dv.classify(ne.make_ses(Mp, M, Mpp, i, i, p, p))
    assert cl.case == "EqualImage"
    assert cl.len_equalizer == cl.len_Mp == cl.len_Uprime


def test_classify_rejects_invalid(exceptional):
    S = exceptional
    with pytest.raises(ValueError):
        dv.classify(ne.BinarySES(S.Mp, S.M, S.Mpp, S.i, S.j, S.q, S.p))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([4, 8, 9, 12]))
def test_classify_invariants_match_element_counts(seed, ring):
    S = corpus.random_ses(random.Random(seed), BaseRing(ring), 64)
    cl = dv.classify(S)
    assert (cl.len_U, cl.len_Uprime, cl.len_Q, cl.len_C) == brute_invariants(S)
    assert cl.len_equalizer == brute_equalizer_length(S)
    assert cl.identities_hold


def test_invariants_of_exceptional_match_element_counts(exceptional):
    assert brute_invariants(exceptional) == (1, 0, 1, 0)


def test_coequalizer_dual_to_equalizer(exceptional):
    # coequalizer gap of S equals the equalizer of the dual sequence
    rng = random.Random(5)
    for _ in range(25):
        S = corpus.random_ses(rng, R8, 64)
        a = dv.classify(S).len_coequalizer_gap
        b = dv.classify(ne.dualize_ses(S)).len_equalizer
        assert a == b


# ---------------------------------------------------------------------------
# reduction


def test_c4_multiplication_by_3_gives_two_semisimple_leaves():
    C4 = fm.module(8, [4])
    T = dv.reduce(alpha_ses(C4, Morphism.make(C4, C4, [[3]])))
    ls = leaves(T)
    assert [n.kind for n in ls] == ["SemisimpleLeaf", "SemisimpleLeaf"]
    assert sorted(n.ses.M.divisors for n in ls) == [(2,), (2,)]
    assert dv.verify_certificate(T) == []


def test_squarefree_ring_is_a_single_leaf():
    rng = random.Random(3)
    for _ in range(10):
        S = corpus.random_ses(rng, BaseRing(2), 32)
        T = dv.reduce(S)
        assert T.kind == "SemisimpleLeaf" and not T.children


def test_exceptional_sequence_gives_exceptional_leaf(exceptional):
    T = dv.reduce(exceptional)
    assert dv.has_exceptional(T)
    ex = [n for n in T.walk() if n.kind == "ExceptionalLeaf"]
    assert ex and all(n.data["matches_pattern"] for n in ex)
    # the pattern is exactly what the known case analysis leaves open
    assert all(n.data["outside_known_cases"] for n in ex)
    assert dv.verify_certificate(T) == []


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([4, 8, 9, 12]))
def test_reduce_then_verify(seed, ring):
    S = corpus.random_ses(random.Random(seed), BaseRing(ring), 256)
    T = dv.reduce(S)
    assert dv.verify_certificate(T) == []
    assert T.ses == S


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_small_middles_reduce_to_semisimple_leaves(seed):
    S = corpus.random_ses(random.Random(seed), R8, 64)
    if fm.length(S.M) <= 5:
        assert not dv.has_exceptional(dv.reduce(S))


def test_measure_decreases_along_edges():
    rng = random.Random(11)
    for _ in range(20):
        T = dv.reduce(corpus.random_ses(rng, R8, 256))
        for n in T.walk():
            for c, r in zip(n.children, n.roles):
                if r not in dv.EXEMPT_ROLES:
                    assert dv.measure(c.ses) < dv.measure(n.ses)


def test_tampered_leaf_is_reported():
    C4 = fm.module(8, [4])
    T = dv.reduce(alpha_ses(C4, Morphism.make(C4, C4, [[3]])))
    leaf = leaves(T)[0]
    leaf.ses = alpha_ses(C4, Morphism.identity(C4))
    msgs = dv.verify_certificate(T)
    assert any("non-semisimple" in m for m in msgs)


def test_tampered_sign_is_reported():
    rng = random.Random(4)
    for _ in range(50):
        T = dv.reduce(corpus.random_ses(rng, R8, 256))
        for node in T.walk():
            for k, (w, r) in enumerate(node.terms):
                X = node.ses if r == "self" else node.children[r].ses
                if r != "self" and not is_diagonal(X.complex()):
                    node.terms[k] = (-w, r)
                    assert any("signed sum" in m for m in dv.verify_certificate(T))
                    return
    pytest.fail("no non-diagonal child term found")


def test_tampered_witness_diagram_is_reported():
    rng = random.Random(2)
    for _ in range(50):
        T = dv.reduce(corpus.random_ses(rng, R8, 256))
        node = next((n for n in T.walk() if n.diagrams), None)
        if node is not None:
            node.diagrams = []
            assert any("no witness diagram" in m for m in dv.verify_certificate(T))
            return
    pytest.fail("no diagram found")


def test_reduce_rejects_invalid_input(exceptional):
    S = exceptional
    with pytest.raises(ValueError):
        dv.reduce(ne.BinarySES(S.Mp, S.M, S.Mpp, S.i, S.j, S.q, S.p))


@pytest.mark.parametrize("name,rule", [("rule_R5.json", "R5"), ("rule_R6.json", "R6")])
def test_phi_psi_rules_check_directness(name, rule):
    S = load_fixture(name)
    T = dv.reduce(S)
    assert T.data["rule"] == rule
    d = T.data["directness"]
    assert d and all(d.values() if isinstance(d, dict) else d)
    assert dv.verify_certificate(T) == []


def test_summary_shape():
    C4 = fm.module(8, [4])
    s = dv.summary(dv.reduce(alpha_ses(C4, Morphism.make(C4, C4, [[3]]))))
    assert s["leaves"] == {"semisimple": 2, "exceptional": 0}
    assert s["max_depth"] >= 1
    assert sum(s["rules_used"].values()) >= 3
    json.dumps(s)


# ---------------------------------------------------------------------------
# duality


def test_dual_of_exceptional_is_valid_3_6_3(exceptional):
    D = ne.dualize_ses(exceptional)
    assert ne.verify_ses(D) == []
    assert (fm.length(D.Mp), fm.length(D.M), fm.length(D.Mpp)) == (3, 6, 3)
    assert dv.classify(D).pattern


def test_dual_of_split_is_split():
    M = fm.module(8, [2, 4])
    C2, C4 = fm.module(8, [2]), fm.module(8, [4])
    i = Morphism.make(C2, M, [[1], [0]])
    p = Morphism.make(M, C4, [[0, 1]])
    S = ne.diagonal_ses(i, p)
    Sd = ne.dualize_ses(S)
    assert fm.find_splitting(Sd.i) is not None and fm.find_splitting(Sd.j) is not None


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([4, 8, 9, 12]))
def test_dual_preserves_validity_and_swaps_invariants(seed, ring):
    S = corpus.random_ses(random.Random(seed), BaseRing(ring), 64)
    Sd = ne.dualize_ses(S)
    assert ne.verify_ses(Sd) == []
    a, b = dv.classify(S), dv.classify(Sd)
    assert (a.len_U, a.len_Uprime) == (b.len_Q, b.len_C)
    assert (a.len_Q, a.len_C) == (b.len_U, b.len_Uprime)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_dualized_certificate_verifies(seed):
    S = corpus.random_ses(random.Random(seed), R8, 128)
    T = dv.reduce(S)
    Td = dv.dualize_certificate(T)
    assert dv.verify_certificate(Td) == []
    assert Td.ses == ne.dualize_ses(S) or T.kind == "DualStep"


def test_dualized_exceptional_certificate(exceptional):
    Td = dv.dualize_certificate(dv.reduce(exceptional))
    assert dv.verify_certificate(Td) == []
    assert dv.has_exceptional(Td)
