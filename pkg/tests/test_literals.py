import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from kbinary import bincx, corpus, devissage as dv, finmod as fm, ladder as ld, literals, nenashev as ne
from kbinary.finmod import BaseRing
from kbinary.literals import InvalidLiteral, LiteralError


def roundtrip(d):
    return literals.parse(literals.dumps(d))


def test_bundled_example_is_a_ses(exceptional):
    assert ne.verify_ses(exceptional) == []
    assert [m.divisors for m in exceptional.objects] == [(2, 4), (2, 4, 8), (2, 4)]


def test_ses_roundtrip(exceptional):
    kind, S = roundtrip(literals.ses_to_literal(exceptional))
    assert kind == "ses" and S == exceptional


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([4, 8, 9, 12]), st.integers(1, 4))
def test_complex_roundtrip(seed, ring, length):
    X = corpus.random_binary_complex(random.Random(seed), BaseRing(ring), length, 64)
    kind, Y = roundtrip(literals.complex_to_literal(X))
    assert kind == "complex" and Y == X
    assert bincx.validate(Y) == []


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_ladder_roundtrip(seed):
    L = corpus.random_ladder_1fold(random.Random(seed), BaseRing(8), 3, 64)
    kind, L2 = roundtrip(literals.ladder_to_literal(L))
    assert kind == "ladder"
    assert ld.validate_ladder(L2) == []
    assert literals.ladder_to_literal(L2) == literals.ladder_to_literal(L)


def test_diagram_and_search_roundtrip(exceptional):
    rep = ne.search_extensions(exceptional, 64)
    D = rep.witnesses[0][2]
    kind, D2 = roundtrip(literals.diagram_to_literal(D))
    assert kind == "diagram" and D2 == D
    kind, rep2 = roundtrip(literals.search_to_literal(rep, exceptional))
    assert kind == "search" and rep2.found == rep.found and rep2.middle == exceptional


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_certificate_roundtrip_still_verifies(seed):
    T = dv.reduce(corpus.random_ses(random.Random(seed), BaseRing(8), 128))
    kind, T2 = roundtrip(literals.certificate_to_literal(T))
    assert kind == "certificate"
    assert dv.verify_certificate(T2) == []
    assert dv.summary(T2) == dv.summary(T)


def test_exceptional_certificate_roundtrip(exceptional):
    T = dv.reduce(exceptional)
    _, T2 = roundtrip(literals.certificate_to_literal(T))
    assert dv.verify_certificate(T2) == []
    assert dv.has_exceptional(T2)


def test_bad_json_reports_position():
    with pytest.raises(LiteralError) as ei:
        literals.parse('{"type": "ses",\n  "ring": 8,,\n}')
    assert ei.value.line == 2 and ei.value.col > 1
    assert "line 2" in str(ei.value)


def test_empty_input():
    with pytest.raises(LiteralError):
        literals.parse("   \n")


def test_unknown_type():
    with pytest.raises(LiteralError, match="unknown literal type"):
        literals.parse('{"type": "banana"}')


def test_missing_field(exceptional):
    d = literals.ses_to_literal(exceptional)
    del d["maps"]["q"]
    with pytest.raises(LiteralError, match="'q'"):
        literals.parse(json.dumps(d))


def test_wrong_shape(exceptional):
    d = literals.ses_to_literal(exceptional)
    d["maps"]["i"] = [[1, 0]]
    with pytest.raises(LiteralError, match="matrix"):
        literals.parse(json.dumps(d))


def test_ill_defined_entry_is_invalid(exceptional):
    # C2 -> C8 by 1 is not a homomorphism
    d = {"type": "ses", "ring": 8, "modules": {"Mp": [2], "M": [8], "Mpp": [4]},
         "maps": {"i": [[1]], "j": [[1]], "p": [[1]], "q": [[1]]}}
    with pytest.raises(InvalidLiteral, match="not well defined"):
        literals.parse(json.dumps(d))


def test_divisor_not_dividing_ring():
    d = {"type": "ses", "ring": 8, "modules": {"Mp": [3], "M": [3], "Mpp": []},
         "maps": {"i": [[1]], "j": [[1]], "p": [], "q": []}}
    with pytest.raises(InvalidLiteral):
        literals.parse(json.dumps(d))


def test_non_chain_divisors_are_canonicalised():
    # C4 + C2 written in the other order; the sequence C2 => C4+C2 => C4 splits
    d = {"type": "ses", "ring": 8, "modules": {"Mp": [2], "M": [4, 2], "Mpp": [4]},
         "maps": {"i": [[0], [1]], "j": [[0], [1]], "p": [[1, 0]], "q": [[1, 0]]}}
    kind, S = literals.parse(json.dumps(d))
    assert S.M.divisors == (2, 4)
    assert ne.verify_ses(S) == []
    assert fm.find_splitting(S.i) is not None


def test_written_literal_is_deterministic(exceptional):
    a = literals.dumps(literals.ses_to_literal(exceptional))
    b = literals.dumps(literals.ses_to_literal(literals.parse(a)[1]))
    assert a == b
