"""Command-line entry point: verify, reduce, shorten, search and corpus.

Exit codes: 0 success, 1 invalid input or failed hypothesis, 2 parse error,
3 the reduction stopped at an exceptional leaf.
"""

from __future__ import annotations

import argparse
import csv
import json
import random
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

from . import bincx, corpus, devissage, finmod, ladder, literals, nenashev
from .bincx import BinaryMultiComplex
from .finmod import BaseRing
from .literals import InvalidLiteral, LiteralError
from .nenashev import BinarySES

OK, INVALID, PARSE, EXCEPTIONAL = 0, 1, 2, 3


class Failure(Exception):
    def __init__(self, code: int, msg: str):
        super().__init__(msg)
        self.code = code


# ---------------------------------------------------------------------------
# helpers


def _bundled(name: str):
    ref = resources.files("kbinary").joinpath("data", name)
    return ref if ref.is_file() else None


def _read(path: str):
    p = Path(path)
    if p.is_file():
        text = p.read_text(encoding="utf-8")
    else:
        ref = _bundled(p.name) if p.parent == Path(".") else None
        if ref is None:
            raise Failure(PARSE, "%s: no such file" % path)
        text = ref.read_text(encoding="utf-8")
    try:
        return literals.parse(text)
    except LiteralError as exc:
        raise Failure(PARSE, "%s: parse error: %s" % (path, exc)) from exc
    except InvalidLiteral as exc:
        raise Failure(INVALID, "%s: %s" % (path, exc)) from exc


def _as_ses(kind: str, obj, path: str) -> BinarySES:
    if kind == "ses":
        return obj
    if kind == "complex" and obj.n == 1 and obj.bounds[0] == 2:
        return nenashev.ses_from_complex(obj)
    raise Failure(INVALID, "%s: expected a binary short exact sequence, got a %s" % (path, kind))


def _emit(args, human: str, payload: dict):
    if args.format == "json":
        print(json.dumps(payload, sort_keys=True))
    else:
        print(human)


def _write_literal(path: str, d: dict, check):
    """Write a literal after checking that its text parses back and verifies."""
    text = literals.dumps(d)
    _, back = literals.parse(text)
    bad = check(back)
    if bad:
        raise Failure(INVALID, "refusing to write %s: %s" % (path, "; ".join(bad[:3])))
    Path(path).write_text(text, encoding="utf-8")


def _complex_report(X: BinaryMultiComplex) -> list[str]:
    bad = bincx.validate(X)
    return bad if bad else bincx.acyclicity_failures(X)


def _search_report(rep) -> list[str]:
    out = ["middle: " + m for m in nenashev.verify_ses(rep.middle)]
    for k, (_, _, D) in enumerate(rep.witnesses):
        out += ["witness %d: %s" % (k, m) for m in nenashev.verify_diagram(D)]
        if D.row(1) != rep.middle:
            out.append("witness %d: middle row differs from the searched sequence" % k)
    return out


VERIFIERS = {
    "ses": (nenashev.verify_ses, "valid binary short exact sequence"),
    "complex": (_complex_report, "valid acyclic binary multicomplex"),
    "ladder": (ladder.validate_ladder, "valid ladder"),
    "diagram": (nenashev.verify_diagram, "valid 3x3 diagram"),
    "certificate": (devissage.verify_certificate, "valid certificate"),
    "search": (_search_report, "valid search report"),
}


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    kind, obj = _read(args.path)
    check, ok_msg = VERIFIERS[kind]
    bad = check(obj)
    human = ok_msg if not bad else "invalid %s:\n" % kind + "\n".join("  " + m for m in bad)
    _emit(args, human, {"kind": kind, "valid": not bad, "violations": bad})
    return OK if not bad else INVALID


# ---------------------------------------------------------------------------
# reduce


def _reduce_one(args) -> int:
    kind, obj = _read(args.path)
    S = _as_ses(kind, obj, args.path)
    bad = nenashev.verify_ses(S)
    if bad:
        raise Failure(INVALID, "invalid sequence:\n" + "\n".join("  " + m for m in bad))
    T = devissage.reduce(S)
    summ = devissage.summary(T)
    payload = {"summary": summ, "root": T.kind, "root_case": devissage.classify(S).case}
    if args.verify:
        problems = devissage.verify_certificate(T)
        payload["verification"] = problems
        if problems:
            _emit(args, "certificate failed verification:\n" + "\n".join(problems), payload)
            return INVALID
    if args.output:
        _write_literal(args.output, literals.certificate_to_literal(T), devissage.verify_certificate)
    exc = devissage.has_exceptional(T)
    lines = [
        "root: %s (case %s)" % (T.kind, payload["root_case"]),
        "leaves: %d semisimple, %d exceptional" % (summ["leaves"]["semisimple"], summ["leaves"]["exceptional"]),
        "depth: %d" % summ["max_depth"],
        "rules: " + ", ".join("%s=%d" % kv for kv in summ["rules_used"].items()),
    ]
    if args.verify:
        lines.append("certificate verified")
    if exc:
        lines.append("ExceptionalLeaf reached: no reduction rule applies")
    _emit(args, "\n".join(lines), payload)
    return EXCEPTIONAL if exc else OK


def _parse_spec(text: str) -> dict:
    out = {"ring": 8, "maxlen": 6, "maxorder": 64}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in part:
            raise Failure(INVALID, "corpus spec: expected key=value, got %r" % part)
        k, v = (s.strip() for s in part.split("=", 1))
        if k not in out:
            raise Failure(INVALID, "corpus spec: unknown key %r (ring, maxlen, maxorder)" % k)
        try:
            out[k] = int(v)
        except ValueError:
            raise Failure(INVALID, "corpus spec: %s must be an integer" % k) from None
    if out["ring"] < 2 or out["maxlen"] < 1 or out["maxorder"] < 1:
        raise Failure(INVALID, "corpus spec: values out of range")
    return out


def _sweep_middle(job):
    ring, maxlen, maxorder, divs = job
    M = finmod.module(ring, divs)
    rules, leaves = Counter(), Counter()
    row = {"middle": repr(M), "divisors": list(M.divisors), "length": finmod.length(M), "order": M.order}
    n = bad = exc = pat = mismatch = 0
    depths = []
    for S in corpus.exhaustive_ses(BaseRing(ring), maxlen, maxorder, middles=[M]):
        n += 1
        T = devissage.reduce(S)
        if devissage.verify_certificate(T):
            bad += 1
        rules[T.data.get("rule", T.kind)] += 1
        s = devissage.summary(T)
        leaves.update({k: v for k, v in s["leaves"].items() if v})
        depths.append(s["max_depth"])
        e = devissage.has_exceptional(T)
        p = devissage.classify(S).pattern
        exc += e
        pat += p
        mismatch += e != p
    row.update(sequences=n, verifier_failures=bad, exceptional=exc, pattern=pat, mismatches=mismatch,
               rules=dict(sorted(rules.items())), leaves=dict(sorted(leaves.items())), depths=depths)
    return row


def _reduce_corpus(args) -> int:
    spec = _parse_spec(args.corpus)
    ring = BaseRing(spec["ring"])
    skipped, jobs = [], []
    for M in finmod.enumerate_modules(ring, spec["maxorder"]):
        if M.is_zero() or finmod.length(M) > spec["maxlen"]:
            continue
        if finmod.is_semisimple(M):
            skipped.append(repr(M))
            continue
        jobs.append((ring.N, spec["maxlen"], spec["maxorder"], tuple(M.divisors)))
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_sweep_middle, jobs))
    else:
        rows = [_sweep_middle(j) for j in jobs]
    rows.sort(key=lambda r: (r["length"], r["order"], r["divisors"]))
    rules = sorted({k for r in rows for k in r["rules"]})
    totals = {k: sum(r[k] for r in rows) for k in ("sequences", "verifier_failures", "exceptional", "pattern", "mismatches")}
    payload = {"spec": spec, "skipped_semisimple": skipped, "totals": totals,
               "rows": [{k: v for k, v in r.items() if k != "depths"} for r in rows]}
    width = max([len(r["middle"]) for r in rows] + [6])
    head = "%-*s %6s " % (width, "middle", "seqs") + " ".join("%6s" % k for k in rules) + "  exc  pat  bad"
    lines = [head]
    for r in rows:
        lines.append("%-*s %6d " % (width, r["middle"], r["sequences"])
                     + " ".join("%6d" % r["rules"].get(k, 0) for k in rules)
                     + " %4d %4d %4d" % (r["exceptional"], r["pattern"], r["verifier_failures"]))
    lines.append("total %d sequences, %d exceptional, %d matching the pattern, %d verifier failures, %d mismatches"
                 % (totals["sequences"], totals["exceptional"], totals["pattern"], totals["verifier_failures"],
                    totals["mismatches"]))
    lines.append("skipped %d semisimple middles" % len(skipped))
    if args.report:
        files = write_sweep_report(Path(args.report), rows, rules)
        payload["report_files"] = [str(f) for f in files]
        lines.append("report: " + ", ".join(str(f) for f in files))
    _emit(args, "\n".join(lines), payload)
    if totals["verifier_failures"] or totals["mismatches"]:
        return INVALID
    return EXCEPTIONAL if totals["exceptional"] else OK


def write_sweep_report(out: Path, rows: list[dict], rules: list[str]) -> list[Path]:
    from . import plotting

    out.mkdir(parents=True, exist_ok=True)
    table = out / "sweep.csv"
    with open(table, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["middle", "length", "order", "sequences"] + ["rule_" + k for k in rules]
                   + ["exceptional", "pattern", "verifier_failures"])
        for r in rows:
            w.writerow([r["middle"], r["length"], r["order"], r["sequences"]]
                       + [r["rules"].get(k, 0) for k in rules]
                       + [r["exceptional"], r["pattern"], r["verifier_failures"]])
    figs = [
        plotting.rule_bars(rows, rules, out / "sweep_rules.png"),
        plotting.depth_histogram([d for r in rows for d in r["depths"]], out / "sweep_depths.png"),
    ]
    return [table] + figs


def cmd_reduce(args) -> int:
    if args.corpus:
        return _reduce_corpus(args)
    if not args.path:
        raise Failure(INVALID, "reduce needs an input file or --corpus")
    return _reduce_one(args)


# ---------------------------------------------------------------------------
# shorten


def cmd_shorten(args) -> int:
    kind, X = _read(args.path)
    if kind != "complex":
        raise Failure(INVALID, "%s: expected a complex, got a %s" % (args.path, kind))
    if args.times < 0:
        raise Failure(INVALID, "--times must be non-negative")
    bad = _complex_report(X)
    if bad:
        raise Failure(INVALID, "input is not a valid acyclic complex:\n" + "\n".join("  " + m for m in bad))
    try:
        Y = ladder.shorten_times(X, args.direction, args.times)
    except ladder.HypothesisError as exc:
        raise Failure(INVALID, str(exc)) from exc
    bad = _complex_report(Y)
    if bad:
        raise Failure(INVALID, "shortened complex failed verification: " + "; ".join(bad[:3]))
    if args.output:
        _write_literal(args.output, literals.complex_to_literal(Y), _complex_report)
    payload = {"bounds_in": list(X.bounds), "bounds_out": list(Y.bounds), "diagonal": bincx.is_diagonal(Y),
               "objects": {",".join(map(str, d)): list(M.divisors) for d, M in sorted(Y.objects.items())}}
    human = "shortened %s -> %s in direction %d (%s)" % (
        list(X.bounds), list(Y.bounds), args.direction, "diagonal" if payload["diagonal"] else "not diagonal")
    if not args.output and args.format == "human":
        human += "\n" + literals.dumps(literals.complex_to_literal(Y)).rstrip()
    _emit(args, human, payload)
    return OK


# ---------------------------------------------------------------------------
# search


def cmd_search(args) -> int:
    kind, obj = _read(args.path)
    S = _as_ses(kind, obj, args.path)
    try:
        rep = nenashev.search_extensions(S, bound=args.bound, jobs=args.jobs)
    except ValueError as exc:
        raise Failure(INVALID, str(exc)) from exc
    rep.middle = S
    if args.output:
        _write_literal(args.output, literals.search_to_literal(rep, S), _search_report)
    payload = {
        "bound": rep.bound,
        "found": rep.found,
        "subobjects": rep.subobjects,
        "excluded_trivial": rep.excluded_trivial,
        "excluded_bound": rep.excluded_bound,
        "pairs": rep.pairs,
        "pruned_sub_types": rep.pruned_sub_types,
        "pruned_quotient_types": rep.pruned_quotient_types,
        "witnesses": [{"A": [list(r) for r in A.basis], "B": [list(r) for r in B.basis]} for A, B, _ in rep.witnesses],
    }
    lines = ["%d extensions found <= bound %d" % (rep.found, rep.bound),
             "subobjects %d, pairs %d, pruned by subobject types %d, by quotient types %d"
             % (rep.subobjects, rep.pairs, rep.pruned_sub_types, rep.pruned_quotient_types)]
    for k, (_, _, D) in enumerate(rep.witnesses):
        lines.append("witness %d: top row %s, bottom row %s" % (k, D.row(0), D.row(2)))
    _emit(args, "\n".join(lines), payload)
    return OK


# ---------------------------------------------------------------------------
# corpus


def _generate(kind: str, rng: random.Random, rings, max_order: int, length: int):
    ring = corpus.ring_choice(rng, rings)
    if kind == "ses":
        S = corpus.random_ses(rng, ring, max_order)
        return S, literals.ses_to_literal(S), S.M.order
    if kind == "complex":
        X = corpus.random_binary_complex(rng, ring, length, max_order)
        return X, literals.complex_to_literal(X), max(M.order for M in X.objects.values())
    L = corpus.random_ladder_1fold(rng, ring, length, max_order)
    return L, literals.ladder_to_literal(L), max(M.order for M in L.P.objects.values())


def cmd_corpus(args) -> int:
    if args.count < 0:
        raise Failure(INVALID, "--count must be non-negative")
    rings = [int(r) for r in args.rings.split(",")]
    if any(r < 2 for r in rings):
        raise Failure(INVALID, "--rings: every ring must be >= 2")
    rng = random.Random(args.seed)
    out = Path(args.output) if args.output else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    check = VERIFIERS[args.kind][0]
    rows, depths = [], []
    for k in range(args.count):
        obj, lit, order = _generate(args.kind, rng, rings, args.max_order, args.length)
        bad = check(obj)
        row = {"index": k, "ring": lit.get("ring", lit.get("P", {}).get("ring")), "order": order, "valid": not bad}
        if args.kind == "ses":
            T = devissage.reduce(obj)
            row["root_rule"] = T.data.get("rule", T.kind)
            row["exceptional"] = devissage.has_exceptional(T)
            depths.append(devissage.summary(T)["max_depth"])
        rows.append(row)
        if out:
            _write_literal(str(out / ("%s_%04d.json" % (args.kind, k))), lit, check)
    invalid = sum(not r["valid"] for r in rows)
    payload = {"kind": args.kind, "seed": args.seed, "count": len(rows), "invalid": invalid, "items": rows}
    lines = ["generated %d %s literal(s) with seed %d, %d invalid" % (len(rows), args.kind, args.seed, invalid)]
    if out:
        lines.append("written to %s" % out)
    if args.report:
        from . import plotting

        rep = Path(args.report)
        rep.mkdir(parents=True, exist_ok=True)
        table = rep / ("corpus_%s.csv" % args.kind)
        keys = list(rows[0]) if rows else ["index", "ring", "order", "valid"]
        with open(table, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        files = [table, plotting.order_histogram([r["order"] for r in rows], rep / ("corpus_%s_orders.png" % args.kind),
                                                 "%s corpus, seed %d" % (args.kind, args.seed))]
        if depths:
            files.append(plotting.depth_histogram(depths, rep / "corpus_ses_depths.png"))
        payload["report_files"] = [str(f) for f in files]
        lines.append("report: " + ", ".join(str(f) for f in files))
    _emit(args, "\n".join(lines), payload)
    return INVALID if invalid else OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kbinary", description="Binary complexes, devissage certificates and shortening.")
    ap.add_argument("--format", choices=("human", "json"), default="human")
    ap.add_argument("--seed", type=int, default=0, help="seed for every randomized step")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        # allow the global flags after the subcommand as well
        p.add_argument("--format", choices=("human", "json"), default=argparse.SUPPRESS)
        p.add_argument("--seed", type=int, default=argparse.SUPPRESS)

    p = sub.add_parser("verify", help="check a literal file")
    p.add_argument("path")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("reduce", help="build a devissage certificate, or sweep a corpus")
    p.add_argument("path", nargs="?")
    p.add_argument("-o", "--output", help="write the certificate here")
    p.add_argument("--verify", action="store_true", help="re-check the certificate")
    p.add_argument("--corpus", help='exhaustive sweep, e.g. "ring=8,maxlen=6,maxorder=64"')
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--report", help="directory for the sweep CSV and figures")
    common(p)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("shorten", help="iterated Grayson shortening of a complex")
    p.add_argument("path")
    p.add_argument("--direction", type=int, default=0)
    p.add_argument("--times", type=int, default=1)
    p.add_argument("-o", "--output")
    common(p)
    p.set_defaults(func=cmd_shorten)

    p = sub.add_parser("search", help="look for 3x3 diagrams around a sequence")
    p.add_argument("path")
    p.add_argument("--bound", type=int, default=64)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--output")
    common(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("corpus", help="generate seeded random literals")
    p.add_argument("--kind", choices=("ses", "complex", "ladder"), default="ses")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--rings", default="4,8,9,12")
    p.add_argument("--max-order", type=int, default=256)
    p.add_argument("--length", type=int, default=3, help="complex and ladder length")
    p.add_argument("-o", "--output", help="directory for the literal files")
    p.add_argument("--report", help="directory for the CSV and figures")
    common(p)
    p.set_defaults(func=cmd_corpus)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Failure as exc:
        if args.format == "json":
            print(json.dumps({"error": str(exc), "exit": exc.code}, sort_keys=True))
        else:
            print("error: %s" % exc, file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
