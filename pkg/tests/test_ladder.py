import random

import pytest
from hypothesis import given, settings, strategies as st

from kbinary import bincx, corpus, finmod as fm, ladder as ld
from kbinary.bincx import binary_complex
from kbinary.finmod import BaseRing, Morphism
from kbinary.ladder import HypothesisError, Ladder


R2, R4, R8 = BaseRing(2), BaseRing(4), BaseRing(8)


def swap(M):
    """Swap of the two summands of M = X + X (rank 2 over a cyclic X)."""
    return Morphism.make(M, M, [[0, 1], [1, 0]])


def test_identity_ladder_is_valid(exceptional):
    L = ld.identity_ladder(exceptional.complex(), 0)
    assert ld.validate_ladder(L) == []
    for i in range(3):
        assert bincx.is_diagonal(ld.torsion(L, i))
    rel = ld.relation_element(L)
    assert len(rel.terms) == 5  # Q, P and three torsion terms
    assert all(bincx.is_diagonal(X) for X, _ in rel.value.items())


def test_noncommuting_sigma_reported():
    C4 = fm.module(R4, [4])
    one = Morphism.identity(C4)
    P = binary_complex([C4, C4], [one], [one])
    L = Ladder(P, P, 0, {(0,): one, (1,): Morphism.scalar(C4, 3)}, {(0,): one, (1,): one})
    report = ld.validate_ladder(L)
    assert any("sigma does not commute with the top differential" in r for r in report)


def test_involution_flag():
    V = fm.module(R2, [2, 2])
    s = swap(V)
    P = binary_complex([V, V], [s], [s])
    L = Ladder(P, P, 0, {(0,): s, (1,): s}, {(0,): s, (1,): s})
    assert ld.validate_ladder(L) == []
    assert ld.relation_element(L).involution
    assert ld.relation_element(ld.identity_ladder(binary_complex([V, V], [s], [s]), 0)).involution


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([4, 8, 9, 12]), st.integers(1, 3))
def test_torsion_acyclic_and_diagonal_iff_equal(seed, N, length):
    L = corpus.random_ladder_1fold(random.Random(seed), BaseRing(N), length, 64)
    assert ld.validate_ladder(L) == []
    for i in range(L.bounds[0] + 1):
        T = ld.torsion(L, i)
        assert bincx.validate(T) == [] and bincx.is_acyclic(T)
        assert bincx.is_diagonal(T) == (L.sig((i,)) == L.tau_at((i,)))
    with pytest.raises(HypothesisError):
        ld.torsion(L, L.bounds[0] + 1)


def test_kernels_of_a_small_binary_complex():
    # A => A + A => A with the two flavors using opposite summands, A = C2
    A = fm.module(R2, [2])
    AA = fm.DirectSum([(0, A), (1, A)])
    P = binary_complex([A, AA.module, A], [AA.proj[1], AA.inj[0]], [AA.proj[0], AA.inj[1]])
    assert bincx.is_acyclic(P)
    k = ld.boundary_kernels(P, 0)
    assert k.J.obj(()) == A and k.K.obj(()) == A
    assert fm.image(k.incJ[()]) == fm.image(AA.inj[0])
    assert fm.image(k.incK[()]) == fm.image(AA.inj[1])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([2, 4, 8]), st.integers(3, 4))
def test_shorten_preserves_validity_and_acyclicity(seed, N, length):
    rng = random.Random(seed)
    P = corpus.random_binary_complex(rng, BaseRing(N), length, 64)
    S = ld.shorten(P, 0)
    assert S.bounds == (length - 1,)
    assert bincx.validate(S) == [] and bincx.is_acyclic(S)
    k = ld.boundary_kernels(P, 0)
    # degree-wise layout J+K+P0, P2+K+J+P1, P3+J+K
    J, K = k.J.obj(()), k.K.obj(())
    assert S.obj((0,)).order == J.order * K.order * P.obj((0,)).order
    assert S.obj((1,)).order == P.obj((2,)).order * K.order * J.order * P.obj((1,)).order
    assert S.obj((2,)).order == P.obj((3,)).order * J.order * K.order


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.integers(3, 4))
def test_shorten_diagonal_is_diagonal_up_to_the_kernel_swap(seed, length):
    # with d = d' the kernels agree, and the two block diagrams differ only by
    # the positions of the J and K summands
    P = corpus.random_binary_complex(random.Random(seed), R8, length, 64, diagonal=True)
    k = ld.boundary_kernels(P, 0)
    assert k.J == k.K
    sh = ld._Shortener(P, 0)
    S = sh.build()
    assert bincx.is_acyclic(S)

    def swap_jk(deg):
        s = sh.sums[deg]
        blocks = {(nm, nm): Morphism.identity(s.parts[nm]) for nm in s.names if nm not in ("J", "K")}
        if "J" in s.names:
            blocks[("J", "K")] = Morphism.identity(s.parts["K"])
            blocks[("K", "J")] = Morphism.identity(s.parts["J"])
        return s.block(s, blocks)

    for deg in S.degrees():
        if deg[0] == 0:
            continue
        low = (deg[0] - 1,)
        conj = fm.compose(swap_jk(low), fm.compose(S.diff(0, "top", deg), swap_jk(deg)))
        assert conj == S.diff(0, "bottom", deg)
    sw = ld.switch_complex(P, 0)
    assert bincx.is_acyclic(sw)
    assert bincx.is_diagonal(sw) == k.J.is_zero()


def test_shorten_over_f2_length_three():
    rng = random.Random(3)
    for _ in range(20):
        P = corpus.random_binary_complex(rng, R2, 3, 64)
        S = ld.shorten(P, 0)
        assert S.bounds == (2,)
        assert bincx.is_acyclic(S)


def test_double_shorten_reaches_length_two():
    rng = random.Random(11)
    for _ in range(5):
        P = corpus.random_binary_complex(rng, R4, 4, 64)
        assert ld.shorten_times(P, 0, 2) == ld.shorten(ld.shorten(P, 0), 0)
        assert ld.shorten_times(P, 0, 2).bounds == (2,)


def test_switch_complex_small():
    # J = C2: switch complex is C2^2 => C2^2 with id and the swap
    C2 = fm.module(R2, [2])
    one = Morphism.identity(C2)
    P = binary_complex([fm.zero_module(R2), C2, C2, fm.zero_module(R2)], [Morphism.zero(C2, fm.zero_module(R2)), one, Morphism.zero(fm.zero_module(R2), C2)], [Morphism.zero(C2, fm.zero_module(R2)), one, Morphism.zero(fm.zero_module(R2), C2)])
    sw = ld.switch_complex(P, 0)
    assert sw.obj((1,)).divisors == (2, 2) and sw.obj((0,)).divisors == (2, 2)
    assert sw.diff(0, "top", (1,)) == Morphism.identity(sw.obj((1,)))
    assert sw.diff(0, "bottom", (1,)).matrix == ((0, 1), (1, 0))
    assert not bincx.is_diagonal(sw)


def test_shortening_requires_length_three():
    C2 = fm.module(R2, [2])
    one = Morphism.identity(C2)
    with pytest.raises(HypothesisError):
        ld.shorten(binary_complex([C2, C2], [one], [one]), 0)


@pytest.mark.parametrize("kind", ["lift", "free"])
def test_shorten_ladder_identities(kind):
    rng = random.Random(5 if kind == "lift" else 6)
    for _ in range(6):
        L, n = corpus.random_ladder_2fold(rng, R4, 64, kind=kind)
        assert ld.validate_ladder(L) == []
        out = ld.shorten_ladder(L, n)
        assert ld.ladder_identity_failures(L, n, out) == []
        assert out.readings["J"] is None


def test_shorten_identity_ladder_gives_identity_ladders():
    rng = random.Random(2)
    L, n = corpus.random_ladder_2fold(rng, R4, 64, kind="lift")
    I = ld.identity_ladder(L.P, L.j)
    out = ld.shorten_ladder(I, n)
    assert out.main == ld.identity_ladder(out.main.P, L.j)
    assert out.switch == ld.identity_ladder(out.switch.P, L.j)


def test_shorten_ladder_rejects_same_direction():
    L, n = corpus.random_ladder_2fold(random.Random(1), R4, 64, kind="lift")
    with pytest.raises(HypothesisError):
        ld.shorten_ladder(L, L.j)
