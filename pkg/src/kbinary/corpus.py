"""Seeded random generators for modules, complexes, ladders and binary sequences."""

from __future__ import annotations

import random
from functools import lru_cache
from math import gcd
from typing import Optional, Sequence

import numpy as np

from . import finmod
from .bincx import BinaryMultiComplex, binary_complex, tensor_free
from .finmod import BaseRing, FinModule, Morphism
from .linalg import IntMatrix


def random_module(rng: random.Random, ring: BaseRing, max_order: int, min_order: int = 1) -> FinModule:
    divs = [d for d in range(2, ring.N + 1) if ring.N % d == 0]
    for _ in range(100):
        chain, order = [], 1
        rank = rng.randint(0, 4)
        last = 1
        for _ in range(rank):
            opts = [d for d in divs if d % last == 0 and order * d <= max_order]
            if not opts:
                break
            d = rng.choice(opts)
            chain.append(d)
            order *= d
            last = d
        if order >= min_order:
            return FinModule(ring, tuple(chain))
    return FinModule(ring, ())


def random_endomorphism(rng: random.Random, src: FinModule, tgt: FinModule) -> Morphism:
    rows = []
    for e in tgt.divisors:
        rows.append([rng.randrange(0, e, e // gcd(e, a)) for a in src.divisors])
    return Morphism(src, tgt, tuple(tuple(r) for r in rows))


def random_automorphism(rng: random.Random, M: FinModule, tries: int = 64) -> Morphism:
    for _ in range(tries):
        f = random_endomorphism(rng, M, M)
        if finmod.is_iso(f):
            return f
    return Morphism.identity(M)


def random_element(rng: random.Random, M: FinModule) -> tuple[int, ...]:
    return tuple(rng.randrange(d) for d in M.divisors)


def random_subobject(rng: random.Random, M: FinModule, ngens: Optional[int] = None) -> finmod.Subobject:
    k = rng.randint(0, max(1, M.rank)) if ngens is None else ngens
    gens = [random_element(rng, M) for _ in range(k)]
    # bias towards proper multiples so that non-split pieces show up
    gens = [tuple((rng.choice([1, 1, 2, 3]) * x) % d for x, d in zip(g, M.divisors)) for g in gens]
    return finmod.subobject(M, gens)


def random_extension(rng: random.Random, A: FinModule, C: FinModule):
    """A random E with 0 -> A -> E -> C -> 0; returns (E, inclusion, projection)."""
    ring = A.ring
    N = ring.N
    a, c = A.rank, C.rank
    r = a + c
    cols = []
    for m, d in enumerate(A.divisors):
        col = [0] * r
        col[m] = d
        cols.append(col)
    for l, cl in enumerate(C.divisors):
        k = N // cl
        # b in A with k * b == 0
        b = [rng.randrange(0, d, d // gcd(d, k)) if rng.random() < 0.7 else 0 for d in A.divisors]
        col = [0] * r
        for m in range(a):
            col[m] = -b[m]
        col[a + l] = cl
        cols.append(col)
    rel_rows = [[cols[cc][row] for cc in range(len(cols))] for row in range(r)]
    pres = finmod.canonicalize(ring, IntMatrix.from_rows(rel_rows, len(cols)))
    E = pres.module
    inc = Morphism.make(A, E, [row[:a] for row in pres.to_canonical])
    proj = Morphism.make(E, C, [[pres.from_canonical[a + l][k] for k in range(E.rank)] for l in range(c)])
    return E, inc, proj


def random_acyclic_complex(rng: random.Random, ring: BaseRing, length: int, max_order: int):
    """Objects [P_0..P_k] and top differentials d_1..d_k of a random exact complex."""
    B = [finmod.zero_module(ring)]
    budget = max_order
    for _ in range(length):
        B.append(random_module(rng, ring, max(1, int(budget ** 0.5))))
    B.append(finmod.zero_module(ring))
    objs, incs, projs = [], [], []
    for i in range(length + 1):
        E, inc, proj = random_extension(rng, B[i + 1], B[i])
        objs.append(E)
        incs.append(inc)
        projs.append(proj)
    # d_i = inc_{i-1} o proj_i : P_i -> B_i -> P_{i-1}
    diffs = [finmod.compose(incs[i - 1], projs[i]) for i in range(1, length + 1)]
    return objs, diffs


def random_binary_complex(rng: random.Random, ring: BaseRing, length: int, max_order: int, diagonal: bool = False) -> BinaryMultiComplex:
    objs, top = random_acyclic_complex(rng, ring, length, max_order)
    if diagonal:
        return binary_complex(objs, top, top)
    autos = [random_automorphism(rng, M) for M in objs]
    inv = [finmod.invert(g) for g in autos]
    bottom = [finmod.compose(autos[i - 1], finmod.compose(top[i - 1], inv[i])) for i in range(1, length + 1)]
    return binary_complex(objs, top, bottom)


def _random_gl(rng: random.Random, ring: BaseRing, r: int) -> Morphism:
    return random_automorphism(rng, FinModule(ring, (ring.N,) * r))


def random_free_complex(rng: random.Random, ring: BaseRing, length: int, max_rank: int = 2, diagonal: bool = False) -> BinaryMultiComplex:
    """Exact complex of free modules: split pieces, scrambled by automorphisms."""
    N = ring.N
    ranks = [rng.randint(0 if 0 < k < length - 1 else 1, max_rank) for k in range(length)]
    # P_i = F^{b_i} + F^{b_{i+1}}; d_i sends the first block identically onto the second of P_{i-1}
    b = [0] + ranks + [0]
    objs = [FinModule(ring, (N,) * (b[i] + b[i + 1])) for i in range(length + 1)]
    top = []
    for i in range(1, length + 1):
        rows = [[0] * objs[i].rank for _ in range(objs[i - 1].rank)]
        for t in range(b[i]):
            rows[b[i - 1] + t][t] = 1
        top.append(Morphism.make(objs[i], objs[i - 1], rows))
    g = [_random_gl(rng, ring, M.rank) for M in objs]
    top = [finmod.compose(g[i - 1], finmod.compose(top[i - 1], finmod.invert(g[i]))) for i in range(1, length + 1)]
    if diagonal:
        return binary_complex(objs, top, top)
    h = [_random_gl(rng, ring, M.rank) for M in objs]
    bottom = [finmod.compose(h[i - 1], finmod.compose(top[i - 1], finmod.invert(h[i]))) for i in range(1, length + 1)]
    return binary_complex(objs, top, bottom)


def random_multicomplex(rng: random.Random, ring: BaseRing, lengths: Sequence[int], max_order: int) -> BinaryMultiComplex:
    """First direction arbitrary, later directions free factors."""
    Z = random_binary_complex(rng, ring, lengths[0], max_order)
    for k in lengths[1:]:
        Z = tensor_free(Z, random_free_complex(rng, ring, k, max_rank=1))
    return Z


def ring_choice(rng: random.Random, rings: Sequence[int]) -> BaseRing:
    return BaseRing(rng.choice(list(rings)))


# ---------------------------------------------------------------------------
# Ladders


def conjugate_ladder(rng: random.Random, P: BinaryMultiComplex, j: int):
    """A ladder out of P: Q carries P's differentials conjugated by random sigma/tau."""
    from .ladder import Ladder

    sig = {d: random_automorphism(rng, M) for d, M in P.objects.items()}
    tau = {d: random_automorphism(rng, M) for d, M in P.objects.items()}
    if P.n != 1:
        raise ValueError("conjugate_ladder builds 1-fold ladders")
    diffs = {}
    for (a, fl, deg), f in P.diffs.items():
        fam = sig if fl == "top" else tau
        low = (deg[0] - 1,)
        diffs[(a, fl, deg)] = finmod.compose(fam[low], finmod.compose(f, finmod.invert(fam[deg])))
    Q = P.replace(diffs=diffs)
    return Ladder(P, Q, j, sig, tau)


def random_ladder_1fold(rng: random.Random, ring: BaseRing, length: int, max_order: int):
    return conjugate_ladder(rng, random_binary_complex(rng, ring, length, max_order), 0)


def random_free_ladder(rng: random.Random, ring: BaseRing, length: int, max_rank: int = 2):
    return conjugate_ladder(rng, random_free_complex(rng, ring, length, max_rank), 0)


def random_ladder_2fold(rng: random.Random, ring: BaseRing, max_order: int, kind: Optional[str] = None):
    """Returns (ladder, shortening direction).

    kind "lift": a 1-fold ladder tensored with a free complex in a new
    direction, shortened in that new direction.  kind "free": an arbitrary
    complex tensored with a ladder of free complexes, shortened in the
    complex's own direction.
    """
    from .ladder import complex_tensor_free_ladder, ladder_tensor_free

    kind = kind or rng.choice(["lift", "free"])
    if kind == "lift":
        L = random_ladder_1fold(rng, ring, rng.randint(1, 3), max(4, max_order // 8))
        X = random_free_complex(rng, ring, rng.randint(3, 4), max_rank=1)
        return ladder_tensor_free(L, X), 1
    Z = random_binary_complex(rng, ring, rng.randint(3, 4), max(4, max_order // 8))
    LX = random_free_ladder(rng, ring, rng.randint(1, 2), max_rank=1)
    return complex_tensor_free_ladder(Z, LX), 0


# ---------------------------------------------------------------------------
# Binary short exact sequences


def _ses_with_rows(A: finmod.Subobject, B: finmod.Subobject, a: Morphism, b: Morphism):
    """Top row the canonical inclusion/projection of A, bottom row of B twisted by a, b."""
    from .nenashev import BinarySES

    Mp, i = finmod.sub_module(A)
    Mpp, p = finmod.quotient(A)
    _, jB = finmod.sub_module(B)
    _, qB = finmod.quotient(B)
    return BinarySES(Mp, A.ambient, Mpp, i, finmod.compose(jB, a), p, finmod.compose(b, qB))


def random_ses(rng: random.Random, ring: BaseRing, max_order: int, tries: int = 32):
    """A random valid binary short exact sequence with |M| <= max_order."""
    from .nenashev import BinarySES

    M = random_module(rng, ring, max_order)
    for _ in range(tries):
        A = random_subobject(rng, M)
        Mp, _ = finmod.sub_module(A)
        Mpp, _ = finmod.quotient(A)
        if rng.random() < 0.5:
            g = random_automorphism(rng, M)
            B = finmod.image_of(g, A)
        else:
            B = random_subobject(rng, M)
            if finmod.sub_module(B)[0] != Mp or finmod.quotient(B)[0] != Mpp:
                continue
        S = _ses_with_rows(A, B, random_automorphism(rng, Mp), random_automorphism(rng, Mpp))
        # hide the normal form of the top row
        g = random_automorphism(rng, M)
        gi = finmod.invert(g)
        c = finmod.compose
        return BinarySES(
            S.Mp, M, S.Mpp, c(g, S.i), c(g, S.j), c(S.p, gi), c(S.q, gi)
        )
    return _ses_with_rows(finmod.whole(M), finmod.whole(M), Morphism.identity(M), Morphism.identity(finmod.zero_module(ring)))


# ---------------------------------------------------------------------------
# Exhaustive enumeration up to isomorphism
#
# A binary sequence is isomorphic to one whose top row is the canonical
# inclusion of a subobject A followed by the canonical projection; the bottom
# row is then the inclusion of some B twisted by phi in Aut(A) and the
# projection from M/B twisted by psi in Aut(M/A).  Isomorphisms preserving
# the top row are the g in Aut(M) fixing A, acting by
#     phi -> g_B phi g_A^-1,   psi -> gbar_A psi gbar_B^-1.
# Orbits are computed level by level (A, then B, then phi, then psi) with
# Schreier generators for the successive stabilisers.  When a stabiliser
# generating set is truncated orbits can only split, so every isomorphism
# class is still visited at least once.

SCHREIER_CAP = 24
SUBPRODUCTS = 8


def _sub_perms(subs, index, gens):
    return [[index[finmod.image_of(g, X)] for X in subs] for g, _ in gens]


def _prime_of(ring: BaseRing) -> int:
    N = ring.N
    p = next(d for d in range(2, N + 1) if N % d == 0)
    while N % p == 0:
        N //= p
    if N != 1:
        raise ValueError("exhaustive enumeration needs a prime power N")
    return p


CHUNK = 1 << 18
LOOKUP_LIMIT = 1 << 27


def _end_layout(X: FinModule):
    """Mixed-radix layout of End(X): entry (i, j) is step[i, j] * t with 0 <= t < size[i, j]."""
    d = X.divisors
    r = X.rank
    step = np.array([[d[i] // gcd(d[i], d[j]) for j in range(r)] for i in range(r)], dtype=np.int64).reshape(r, r)
    size = np.array([[gcd(d[i], d[j]) for j in range(r)] for i in range(r)], dtype=np.int64).reshape(r, r)
    weight = np.cumprod(np.concatenate([[1], size.reshape(-1)[:-1]])).reshape(r, r) if r else size
    return step, size, weight


def _digits(codes, size, weight):
    """Mixed-radix digits of codes; size and weight share a shape that is broadcast after the first axis."""
    c = codes.reshape((-1,) + (1,) * size.ndim)
    if np.all(size & (size - 1) == 0):
        # power-of-two radices: shifts and masks are much cheaper than division
        return (c >> np.log2(weight).astype(np.int64)[None]) & (size - 1)[None]
    return (c // weight[None]) % size[None]


def _decode(codes, step, size, weight):
    return _digits(codes, size, weight) * step[None]


def automorphism_codes(X: FinModule) -> np.ndarray:
    """Codes (mixed-radix positions in End(X)) of all automorphisms of a p-group module, sorted.

    An endomorphism is invertible iff it is injective on the socle, which is
    a determinant test over F_p.
    """
    p = _prime_of(X.ring)
    r = X.rank
    if not r:
        return np.zeros(1, dtype=np.int64)
    step, size, weight = _end_layout(X)
    total = int(np.prod(size))
    a = np.array(X.divisors, dtype=np.int64)
    # socle coordinate of f(a_k/p e_k) in row m: f[m, k] * (a_k / p) / (e_m / p) mod p
    num = (a // p).reshape(1, r)
    den = (a // p).reshape(r, 1)
    keep = []
    for lo in range(0, total, CHUNK):
        codes = np.arange(lo, min(total, lo + CHUNK), dtype=np.int64)
        soc = (_decode(codes, step, size, weight) * num[None] // den[None]) % p
        det = np.rint(np.linalg.det(soc.astype(np.float64))).astype(np.int64) % p
        keep.append(codes[det != 0])
    return np.concatenate(keep)


def automorphism_array(X: FinModule) -> np.ndarray:
    """All automorphisms as an (n, r, r) array, in code order (small modules only)."""
    step, size, weight = _end_layout(X)
    return _decode(automorphism_codes(X), step, size, weight)


def aut_generators(M: FinModule) -> list[Morphism]:
    """Elementary transvections, unit scalings and swaps of equal summands."""
    d, r = M.divisors, M.rank
    gens = []
    ident = [[int(a == b) for b in range(r)] for a in range(r)]
    for k in range(r):
        for l in range(r):
            if k != l:
                rows = [row[:] for row in ident]
                rows[k][l] = d[k] // gcd(d[k], d[l])
                if rows[k][l] % d[k]:
                    gens.append(Morphism.make(M, M, rows))
        for u in range(2, d[k]):
            if gcd(u, d[k]) == 1:
                rows = [row[:] for row in ident]
                rows[k][k] = u
                gens.append(Morphism.make(M, M, rows))
        if k + 1 < r and d[k] == d[k + 1]:
            rows = [row[:] for row in ident]
            rows[k][k] = rows[k + 1][k + 1] = 0
            rows[k][k + 1] = rows[k + 1][k] = 1
            gens.append(Morphism.make(M, M, rows))
    return gens


def _subproducts(cands, k: int, rng: random.Random):
    """k random subproducts of the candidate generators (they generate the same
    group with high probability; if not, orbits only get finer)."""
    if len(cands) <= k:
        return cands
    compose = finmod.compose
    out = []
    for _ in range(k):
        h = hi = None
        for g, gi in cands:
            if rng.random() < 0.5:
                h, hi = (g, gi) if h is None else (compose(g, h), compose(hi, gi))
        if h is not None:
            out.append((h, hi))
    return out


def _orbits(n: int, perms, gens, cap=SCHREIER_CAP, keep=SUBPRODUCTS):
    """Orbits of a group acting on points 0..n-1.

    perms[k][x] is the image of x under gens[k] = (g, g_inv) (Morphisms).
    Returns (representative, stabiliser generators, orbit size) per orbit.
    Transversal elements are only composed when a Schreier generator is
    built; at most ``cap`` candidates are collected and thinned to ``keep``
    random subproducts.
    """
    compose = finmod.compose
    rng = random.Random(n * 7919 + len(gens))
    seen = bytearray(n)
    out = []
    for x0 in range(n):
        if seen[x0]:
            continue
        parent = {x0: None}
        queue = [x0]
        seen[x0] = 1
        cache = {}

        def trans(x):
            if x not in cache:
                if parent[x] is None:
                    cache[x] = None
                else:
                    px, k = parent[x]
                    g, gi = gens[k]
                    t = trans(px)
                    cache[x] = (g, gi) if t is None else (compose(g, t[0]), compose(t[1], gi))
            return cache[x]

        cands, keys = [], set()
        budget = 6 * cap
        k = 0
        while k < len(queue):
            x = queue[k]
            k += 1
            for gk, perm in enumerate(perms):
                y = perm[x]
                if not seen[y]:
                    seen[y] = 1
                    parent[y] = (x, gk)
                    queue.append(y)
                elif len(cands) < cap and budget > 0:
                    budget -= 1
                    tx, ty = trans(x), trans(y)
                    gg = gens[gk]
                    h, hi = gg if tx is None else (compose(gg[0], tx[0]), compose(tx[1], gg[1]))
                    if ty is not None:
                        h, hi = compose(ty[1], h), compose(hi, ty[0])
                    if h.matrix not in keys and h.matrix != _identity_matrix(h.src):
                        keys.add(h.matrix)
                        cands.append((h, hi))
        out.append((x0, _subproducts(cands, keep, rng), len(queue)))
    return out


@lru_cache(maxsize=None)
def _identity_matrix(M: FinModule):
    return Morphism.identity(M).matrix


def _restrict_aut(g: Morphism, inc: Morphism) -> Morphism:
    return finmod.lift_through_mono(inc, finmod.compose(g, inc))


def _induced_aut(g: Morphism, pr: Morphism) -> Morphism:
    return finmod.descend_through_epi(pr, finmod.compose(pr, g))


class _AutTable:
    """All automorphisms of X, stored as sorted codes and decoded on demand."""

    def __init__(self, X: FinModule):
        self.module = X
        self.codes = automorphism_codes(X)
        self.size = len(self.codes)
        r = X.rank
        self.layout = _end_layout(X)
        self.mods = np.array(X.divisors, dtype=np.int64).reshape(r, 1)
        self.total = int(np.prod(self.layout[1]))
        self._lookup = None  # dense code -> index table, built on first use

    def encode(self, arr):
        step, _, weight = self.layout
        return ((arr // step) * weight).sum(axis=(1, 2))

    def morphism(self, k: int) -> Morphism:
        X = self.module
        A = _decode(self.codes[k:k + 1], *self.layout)[0]
        return Morphism._trusted(X, X, tuple(tuple(int(v) for v in row) for row in A))

    def perm(self, left, right) -> np.ndarray:
        """Index permutation x -> left x right."""
        if not self.module.rank:
            return np.zeros(1, dtype=np.int64)
        step, size, weight = (a.reshape(-1) for a in self.layout)
        L = np.array(left, dtype=np.int64)
        R = np.array(right, dtype=np.int64)
        # vec(L A R) = kron(L, R^T) vec(A) row-major; entries stay far below 2^53, so BLAS floats are exact
        T = (step[:, None] * np.kron(L, R.T).T).astype(np.float64)
        mods = np.repeat(self.mods.reshape(-1), self.module.rank).astype(np.float64)
        fstep, fweight = step.astype(np.float64), weight.astype(np.float64)
        out = np.empty(self.size, dtype=np.int32 if self.size < 2**31 else np.int64)
        pow2 = np.all(mods.astype(np.int64) & (mods.astype(np.int64) - 1) == 0)
        mask, shift = mods.astype(np.int64) - 1, np.log2(step).astype(np.int64)
        for lo in range(0, self.size, CHUNK):
            digits = _digits(self.codes[lo:lo + CHUNK], size, weight)
            if pow2:
                Y = (digits.astype(np.float64) @ T).astype(np.int64)
                Y &= mask
                Y >>= shift
                codes = (Y.astype(np.float64) @ fweight).astype(np.int64)
            else:
                Y = np.mod(digits.astype(np.float64) @ T, mods)
                codes = (np.floor_divide(Y, fstep) @ fweight).astype(np.int64)
            out[lo:lo + CHUNK] = self.index_of(codes)
        return out

    def index_of(self, codes):
        if self._lookup is None and self.total <= LOOKUP_LIMIT:
            self._lookup = np.full(self.total, -1, dtype=np.int32)
            self._lookup[self.codes] = np.arange(self.size, dtype=np.int32)
        if self._lookup is not None:
            return self._lookup[codes]
        return np.searchsorted(self.codes, codes)


def _orbit_representatives(n: int, perms) -> list[int]:
    """Smallest point of every orbit; label propagation with pointer jumping."""
    labels = np.arange(n, dtype=np.int32 if n < 2**31 else np.int64)
    while True:
        before = labels.copy()
        for p in perms:
            np.minimum(labels, labels[p], out=labels)
            labels = labels[labels]
        if np.array_equal(before, labels):
            break
    return np.flatnonzero(labels == np.arange(n, dtype=labels.dtype)).tolist()


_TABLES: dict = {}


def _table(X: FinModule) -> _AutTable:
    if X not in _TABLES:
        _TABLES[X] = _AutTable(X)
    return _TABLES[X]


def exhaustive_ses(
    ring: BaseRing,
    max_length: int,
    max_order: int,
    skip_semisimple: bool = True,
    stats: Optional[dict] = None,
    middles: Optional[Sequence[FinModule]] = None,
):
    """Every binary short exact sequence with |M| <= max_order and length(M) <= max_length,
    up to isomorphism (each class at least once).  Yields BinarySES.

    With skip_semisimple, middle objects that are semisimple are skipped (all
    their sequences are semisimple leaves) and counted in stats instead.
    """
    from .nenashev import BinarySES

    stats = {} if stats is None else stats
    stats.setdefault("skipped_semisimple_middles", [])
    stats.setdefault("per_module", {})
    c = finmod.compose
    for M in middles if middles is not None else finmod.enumerate_modules(ring, max_order):
        if M.is_zero() or finmod.length(M) > max_length:
            continue
        if skip_semisimple and finmod.is_semisimple(M):
            stats["skipped_semisimple_middles"].append(list(M.divisors))
            continue
        count = 0
        G = [(g, finmod.invert(g)) for g in aut_generators(M)]
        subs = finmod.enumerate_subobjects(M)
        info = {}
        for A in subs:
            K, inc = finmod.sub_module(A)
            Q, pr = finmod.quotient(A)
            info[A] = (K, inc, Q, pr)
        index = {A: k for k, A in enumerate(subs)}
        for a, stabA, _ in _orbits(len(subs), _sub_perms(subs, index, G), G):
            A = subs[a]
            K, incA, Q, prA = info[A]
            Bs = [B for B in subs if info[B][0] == K and info[B][2] == Q]
            bindex = {B: k for k, B in enumerate(Bs)}
            for b, stabAB, _ in _orbits(len(Bs), _sub_perms(Bs, bindex, stabA), stabA):
                B = Bs[b]
                _, incB, _, prB = info[B]
                # phi -> g_B phi g_A^-1 and psi -> gbar_A psi gbar_B^-1
                TK, TQ = _table(K), _table(Q)
                perms = [
                    TK.perm(_restrict_aut(g, incB).matrix, _restrict_aut(gi, incA).matrix) for g, gi in stabAB
                ]
                if TQ.size == 1:
                    # nothing left to act on: no stabiliser generators needed
                    phis = [(phi, []) for phi in _orbit_representatives(TK.size, perms)]
                else:
                    phis = [(phi, st) for phi, st, _ in _orbits(TK.size, [q.tolist() for q in perms], stabAB)]
                for phi, stabP in phis:
                    perms = [
                        TQ.perm(_induced_aut(g, prA).matrix, _induced_aut(gi, prB).matrix) for g, gi in stabP
                    ]
                    for psi in _orbit_representatives(TQ.size, perms):
                        count += 1
                        j = c(incB, TK.morphism(phi))
                        q = c(TQ.morphism(psi), prB)
                        yield BinarySES(K, M, Q, incA, j, prA, q)
        stats["per_module"][repr(M)] = count

