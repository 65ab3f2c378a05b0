"""JSON literal formats for modules, morphisms, complexes, ladders, sequences,
diagrams, certificates and search reports.

Module literals may list any divisors of N in any order ("C2 + C8 + C4");
they are brought to canonical chain form on reading, and morphism matrices
given in the literal coordinates are transported along.  Everything written
out is already canonical, so reading it back is the identity.
"""

from __future__ import annotations

import json
from importlib import resources
from typing import Any

from . import finmod
from .bincx import BinaryMultiComplex
from .finmod import BaseRing, FinModule, ModuleError, Morphism
from .ladder import Ladder
from .nenashev import BinarySES, NenashevDiagram, SearchReport, build_diagram

KINDS = ("complex", "ladder", "ses", "diagram", "certificate", "search")


class LiteralError(ValueError):
    """Malformed literal: bad JSON or a shape that does not match the schema."""

    def __init__(self, msg: str, line: int = 0, col: int = 0):
        loc = " (line %d, column %d)" % (line, col) if line else ""
        super().__init__(msg + loc)
        self.line, self.col = line, col


class InvalidLiteral(ValueError):
    """Well-formed literal whose data is not a valid morphism or object."""


# ---------------------------------------------------------------------------
# Reading


class _Mod:
    """A literal module: the canonical module plus the coordinate change."""

    def __init__(self, ring: BaseRing, divs, where: str):
        if not isinstance(divs, list) or not all(isinstance(d, int) and not isinstance(d, bool) for d in divs):
            raise LiteralError("%s: divisors must be a list of integers" % where)
        for d in divs:
            if d < 1 or ring.N % d:
                raise InvalidLiteral("%s: %d does not divide %d" % (where, d, ring.N))
        self.lit = list(divs)
        self.pres = finmod.present(ring, divs)
        self.module = self.pres.module

    def morphism_to(self, tgt: "_Mod", rows, where: str) -> Morphism:
        r, c = len(tgt.lit), len(self.lit)
        if not isinstance(rows, list) or len(rows) != r or any(not isinstance(x, list) or len(x) != c for x in rows):
            raise LiteralError("%s: expected a %dx%d integer matrix" % (where, r, c))
        if any(not isinstance(v, int) or isinstance(v, bool) for x in rows for v in x):
            raise LiteralError("%s: matrix entries must be integers" % where)
        # well defined in literal coordinates: column k times its order is zero
        for k, a in enumerate(self.lit):
            for m, e in enumerate(tgt.lit):
                if (rows[m][k] * a) % e:
                    raise InvalidLiteral(
                        "%s: entry (%d, %d) = %d is not well defined (C%d -> C%d)" % (where, m, k, rows[m][k], a, e)
                    )
        F = self.pres.from_canonical
        T = tgt.pres.to_canonical
        RF = [[sum(rows[m][k] * F[k][s] for k in range(c)) for s in range(self.module.rank)] for m in range(r)]
        out = [[sum(T[t][m] * RF[m][s] for m in range(r)) for s in range(self.module.rank)] for t in range(tgt.module.rank)]
        try:
            return Morphism.make(self.module, tgt.module, out)
        except ModuleError as exc:  # pragma: no cover - guarded above
            raise InvalidLiteral("%s: %s" % (where, exc)) from exc


def _need(d: dict, key: str, where: str):
    if not isinstance(d, dict):
        raise LiteralError("%s: expected an object" % where)
    if key not in d:
        raise LiteralError("%s: missing field %r" % (where, key))
    return d[key]


def _ring(d: dict, where: str) -> BaseRing:
    N = _need(d, "ring", where)
    if not isinstance(N, int) or isinstance(N, bool) or N < 2:
        raise LiteralError("%s: ring must be an integer N >= 2" % where)
    return BaseRing(N)


def _deg(x, n, where):
    if not isinstance(x, list) or len(x) != n or not all(isinstance(v, int) for v in x):
        raise LiteralError("%s: degree must be a list of %d integers" % (where, n))
    return tuple(x)


def ses_from_literal(d: dict, where: str = "ses") -> BinarySES:
    ring = _ring(d, where)
    mods = _need(d, "modules", where)
    maps = _need(d, "maps", where)
    L = {k: _Mod(ring, _need(mods, k, where + ".modules"), "%s.modules.%s" % (where, k)) for k in ("Mp", "M", "Mpp")}
    f = {}
    for name, (s, t) in {"i": ("Mp", "M"), "j": ("Mp", "M"), "p": ("M", "Mpp"), "q": ("M", "Mpp")}.items():
        f[name] = L[s].morphism_to(L[t], _need(maps, name, where + ".maps"), "%s.maps.%s" % (where, name))
    return BinarySES(L["Mp"].module, L["M"].module, L["Mpp"].module, f["i"], f["j"], f["p"], f["q"])


def complex_from_literal(d: dict, where: str = "complex") -> BinaryMultiComplex:
    ring = _ring(d, where)
    bounds = _need(d, "bounds", where)
    if not isinstance(bounds, list) or not all(isinstance(b, int) and b >= 0 for b in bounds):
        raise LiteralError("%s: bounds must be a list of nonnegative integers" % where)
    n = len(bounds)
    objs, lits = {}, {}
    for k, o in enumerate(_need(d, "objects", where)):
        w = "%s.objects[%d]" % (where, k)
        deg = _deg(_need(o, "degree", w), n, w)
        m = _Mod(ring, _need(o, "divisors", w), w)
        lits[deg] = m
        objs[deg] = m.module
    zero = _Mod(ring, [], where)
    diffs = {}
    for k, e in enumerate(d.get("diffs", [])):
        w = "%s.diffs[%d]" % (where, k)
        a = _need(e, "direction", w)
        fl = _need(e, "flavor", w)
        if fl not in ("top", "bottom"):
            raise LiteralError("%s: flavor must be 'top' or 'bottom'" % w)
        if not isinstance(a, int) or not 0 <= a < n:
            raise LiteralError("%s: direction out of range" % w)
        deg = _deg(_need(e, "degree", w), n, w)
        low = tuple(x - (c == a) for c, x in enumerate(deg))
        diffs[(a, fl, deg)] = lits.get(deg, zero).morphism_to(lits.get(low, zero), _need(e, "matrix", w), w)
    try:
        return BinaryMultiComplex.build(ring, tuple(bounds), objs, diffs)
    except (ValueError, KeyError) as exc:
        raise InvalidLiteral("%s: %s" % (where, exc)) from exc


def _graded_maps(entries, P: BinaryMultiComplex, where: str, ring: BaseRing, lits) -> dict:
    out = {}
    for k, e in enumerate(entries):
        w = "%s[%d]" % (where, k)
        deg = _deg(_need(e, "degree", w), P.n, w)
        m = lits.get(deg) or _Mod(ring, list(P.obj(deg).divisors), w)
        out[deg] = m.morphism_to(m, _need(e, "matrix", w), w)
    for deg, M in P.objects.items():
        if deg not in out:
            raise LiteralError("%s: missing component in degree %r" % (where, list(deg)))
    return out


def ladder_from_literal(d: dict, where: str = "ladder") -> Ladder:
    P = complex_from_literal(_need(d, "P", where), where + ".P")
    Q = complex_from_literal(_need(d, "Q", where), where + ".Q")
    j = _need(d, "j", where)
    if not isinstance(j, int) or not 0 <= j < P.n:
        raise LiteralError("%s: j out of range" % where)
    lits = {deg: _Mod(P.ring, list(M.divisors), where) for deg, M in P.objects.items()}
    sig = _graded_maps(_need(d, "sigma", where), P, where + ".sigma", P.ring, lits)
    tau = _graded_maps(_need(d, "tau", where), P, where + ".tau", P.ring, lits)
    return Ladder(P, Q, j, sig, tau)


def _pair_lit(x, s: _Mod, t: _Mod, w: str):
    if isinstance(x, dict):
        return (s.morphism_to(t, _need(x, "top", w), w + ".top"), s.morphism_to(t, _need(x, "bottom", w), w + ".bottom"))
    f = s.morphism_to(t, x, w)
    return (f, f)


def diagram_from_literal(d: dict, where: str = "diagram") -> NenashevDiagram:
    ring = _ring(d, where)
    objs = _need(d, "objects", where)
    if not isinstance(objs, list) or len(objs) != 3 or any(not isinstance(r, list) or len(r) != 3 for r in objs):
        raise LiteralError("%s: objects must be a 3x3 grid of divisor lists" % where)
    L = [[_Mod(ring, objs[r][c], "%s.objects[%d][%d]" % (where, r, c)) for c in range(3)] for r in range(3)]
    h, v = _need(d, "h", where), _need(d, "v", where)
    if not isinstance(h, list) or len(h) != 3 or any(not isinstance(r, list) or len(r) != 2 for r in h):
        raise LiteralError("%s: h must be a 3x2 grid" % where)
    if not isinstance(v, list) or len(v) != 2 or any(not isinstance(r, list) or len(r) != 3 for r in v):
        raise LiteralError("%s: v must be a 2x3 grid" % where)
    hh = [[_pair_lit(h[r][c], L[r][c], L[r][c + 1], "%s.h[%d][%d]" % (where, r, c)) for c in range(2)] for r in range(3)]
    vv = [[_pair_lit(v[r][c], L[r][c], L[r + 1][c], "%s.v[%d][%d]" % (where, r, c)) for c in range(3)] for r in range(2)]
    return build_diagram([[L[r][c].module for c in range(3)] for r in range(3)], hh, vv)


def certificate_from_literal(d: dict, where: str = "certificate"):
    from .devissage import CertNode

    kind = _need(d, "kind", where)
    S = ses_from_literal(_need(d, "ses", where), where + ".ses")
    diagrams = [diagram_from_literal(x, "%s.diagrams[%d]" % (where, k)) for k, x in enumerate(d.get("diagrams", []))]
    children = [certificate_from_literal(x, "%s.children[%d]" % (where, k)) for k, x in enumerate(d.get("children", []))]
    terms = []
    for k, t in enumerate(d.get("terms", [])):
        w = "%s.terms[%d]" % (where, k)
        r = _need(t, "role", w)
        if r != "self" and not (isinstance(r, int) and 0 <= r < len(children)):
            raise LiteralError("%s: role must be 'self' or a child index" % w)
        terms.append((int(_need(t, "weight", w)), r))
    return CertNode(kind, S, diagrams, children, list(d.get("roles", [])), terms, dict(d.get("data", {})))


def search_from_literal(d: dict, where: str = "search") -> SearchReport:
    fields = ["bound", "subobjects", "excluded_trivial", "excluded_bound", "pairs", "pruned_sub_types", "pruned_quotient_types"]
    vals = {k: _need(d, k, where) for k in fields}
    ws = [diagram_from_literal(x, "%s.witnesses[%d]" % (where, k)) for k, x in enumerate(d.get("witnesses", []))]
    rep = SearchReport(**vals, witnesses=[(None, None, D) for D in ws])
    rep.middle = ses_from_literal(_need(d, "middle", where), where + ".middle")
    return rep


_READERS = {
    "complex": complex_from_literal,
    "ladder": ladder_from_literal,
    "ses": ses_from_literal,
    "diagram": diagram_from_literal,
    "certificate": certificate_from_literal,
    "search": search_from_literal,
}


def parse(text: str) -> tuple[str, Any]:
    """Parse a literal; returns (kind, object).  Raises LiteralError or InvalidLiteral."""
    if not text.strip():
        raise LiteralError("empty input", 1, 1)
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LiteralError("invalid JSON: %s" % exc.msg, exc.lineno, exc.colno) from exc
    kind = _need(d, "type", "literal")
    if kind not in _READERS:
        raise LiteralError("unknown literal type %r (expected one of %s)" % (kind, ", ".join(KINDS)))
    return kind, _READERS[kind](d)


def load(path) -> tuple[str, Any]:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def exceptional_example() -> BinarySES:
    """The bundled C2+C8+C4 sequence that no reduction rule resolves."""
    text = resources.files("kbinary").joinpath("data/exceptional_ses.json").read_text(encoding="utf-8")
    return parse(text)[1]


# ---------------------------------------------------------------------------
# Writing (canonical coordinates)


def _mat(f: Morphism):
    return [list(r) for r in f.matrix]


def _divs(M: FinModule):
    return list(M.divisors)


def ses_to_literal(S: BinarySES) -> dict:
    return {
        "type": "ses",
        "ring": S.ring.N,
        "modules": {"Mp": _divs(S.Mp), "M": _divs(S.M), "Mpp": _divs(S.Mpp)},
        "maps": {k: _mat(getattr(S, k)) for k in ("i", "j", "p", "q")},
    }


def complex_to_literal(X: BinaryMultiComplex) -> dict:
    return {
        "type": "complex",
        "ring": X.ring.N,
        "bounds": list(X.bounds),
        "objects": [{"degree": list(d), "divisors": _divs(M)} for d, M in sorted(X.objects.items())],
        "diffs": [
            {"direction": a, "flavor": fl, "degree": list(deg), "matrix": _mat(f)}
            for (a, fl, deg), f in sorted(X.diffs.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2]))
        ],
    }


def ladder_to_literal(L: Ladder) -> dict:
    return {
        "type": "ladder",
        "j": L.j,
        "P": complex_to_literal(L.P),
        "Q": complex_to_literal(L.Q),
        "sigma": [{"degree": list(d), "matrix": _mat(f)} for d, f in sorted(L.sigma.items())],
        "tau": [{"degree": list(d), "matrix": _mat(f)} for d, f in sorted(L.tau.items())],
    }


def _pair_out(pair):
    t, b = pair
    return _mat(t) if t == b else {"top": _mat(t), "bottom": _mat(b)}


def diagram_to_literal(D: NenashevDiagram) -> dict:
    return {
        "type": "diagram",
        "ring": D.obj[0][0].ring.N,
        "objects": [[_divs(M) for M in row] for row in D.obj],
        "h": [[_pair_out(p) for p in row] for row in D.h],
        "v": [[_pair_out(p) for p in row] for row in D.v],
    }


def certificate_to_literal(T) -> dict:
    return {
        "type": "certificate",
        "kind": T.kind,
        "ses": ses_to_literal(T.ses),
        "data": _jsonable(T.data),
        "diagrams": [diagram_to_literal(D) for D in T.diagrams],
        "roles": list(T.roles),
        "terms": [{"weight": w, "role": r} for w, r in T.terms],
        "children": [certificate_to_literal(c) for c in T.children],
    }


def search_to_literal(rep: SearchReport, middle: BinarySES) -> dict:
    return {
        "type": "search",
        "middle": ses_to_literal(middle),
        "bound": rep.bound,
        "subobjects": rep.subobjects,
        "excluded_trivial": rep.excluded_trivial,
        "excluded_bound": rep.excluded_bound,
        "pairs": rep.pairs,
        "pruned_sub_types": rep.pruned_sub_types,
        "pruned_quotient_types": rep.pruned_quotient_types,
        "witnesses": [diagram_to_literal(D) for _, _, D in rep.witnesses],
    }


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def dumps(d: dict) -> str:
    return json.dumps(d, indent=1, sort_keys=True) + "\n"
