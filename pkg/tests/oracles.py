"""Independent brute-force oracles used by the tests.

None of these call into kbinary's linear algebra: they work directly on
integer lists and element enumeration.
"""

from __future__ import annotations

import itertools
from math import gcd


def det(M):
    """Leibniz determinant."""
    n = len(M)
    total = 0
    for perm in itertools.permutations(range(n)):
        sign = 1
        for a in range(n):
            for b in range(a + 1, n):
                if perm[a] > perm[b]:
                    sign = -sign
        prod = 1
        for r in range(n):
            prod *= M[r][perm[r]]
            if not prod:
                break
        total += sign * prod
    return total


def determinantal_divisors(A):
    """D_k = gcd of all k x k minors, k = 1..min(m, n)."""
    m, n = len(A), len(A[0]) if A else 0
    out = []
    for k in range(1, min(m, n) + 1):
        g = 0
        for rows in itertools.combinations(range(m), k):
            for cols in itertools.combinations(range(n), k):
                g = gcd(g, det([[A[r][c] for c in cols] for r in rows]))
        out.append(g)
    return out


def invariant_factors(A):
    """Smith diagonal from determinantal divisors (zeros once a D_k vanishes)."""
    D = determinantal_divisors(A)
    out, prev = [], 1
    for d in D:
        if d == 0:
            out.append(0)
        else:
            out.append(d // prev)
            prev = d
    return out


def matmul(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))] for i in range(len(A))]


def solve_congruence_brute(A, b, moduli):
    """Some x in a complete residue box with A x = b mod moduli, or None."""
    from math import lcm

    L = 1
    for m in moduli:
        L = lcm(L, m)
    n = len(A[0]) if A else 0
    for x in itertools.product(range(L), repeat=n):
        if all((sum(a * v for a, v in zip(row, x)) - bb) % m == 0 for row, bb, m in zip(A, b, moduli)):
            return x
    return None


# ---------------------------------------------------------------------------
# Finite modules as sets of tuples


def elements(divs):
    return list(itertools.product(*(range(d) for d in divs)))


def apply(matrix, x, tgt_divs):
    return tuple(sum(a * v for a, v in zip(row, x)) % e for row, e in zip(matrix, tgt_divs))


def span(gens, divs):
    """Subgroup generated by gens (closure under addition)."""
    zero = tuple(0 for _ in divs)
    S = {zero}
    frontier = [zero]
    while frontier:
        new = []
        for x in frontier:
            for g in gens:
                y = tuple((a + b) % d for a, b, d in zip(x, g, divs))
                if y not in S:
                    S.add(y)
                    new.append(y)
        frontier = new
    return S


def all_subgroups(divs):
    """Every subgroup, as a frozenset (by closure of generator pairs; fine for small groups)."""
    E = elements(divs)
    subs = {frozenset(span([], divs))}
    changed = True
    while changed:
        changed = False
        for S in list(subs):
            for g in E:
                if g not in S:
                    T = frozenset(span(list(S) + [g], divs))
                    if T not in subs:
                        subs.add(T)
                        changed = True
    return subs


def is_exact_at(f_matrix, f_src, f_tgt, g_matrix, g_tgt):
    """ker g == im f for f: f_src -> f_tgt, g: f_tgt -> g_tgt."""
    im = {apply(f_matrix, x, f_tgt) for x in elements(f_src)}
    ker = {y for y in elements(f_tgt) if not any(apply(g_matrix, y, g_tgt))}
    return im == ker
