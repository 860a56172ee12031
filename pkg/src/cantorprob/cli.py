"""Command-line front end.

Every verb prints a JSON document to stdout holding its receipts: the
invariants re-checked on the produced object, each with the list of problems
found.  Exit codes: 0 ok, 2 unparsable input, 3 failed receipt, 4 violated
precondition.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from typing import Dict, List

from . import serialize
from .dot import export_dot
from .errors import MeasureError, ParseError, PreconditionError, ReceiptFailure
from .generic import (build_generic, deepen_traces, los_split, product_tower,
                      split_avoiding, verify_generic)
from .homeo import (EmbeddingWitness, build_generic_embedding, build_retraction,
                    extend_homeomorphism, homogeneity_map)
from .rat import format_rat, parse_rat
from .space import Morphism, compose_all, prime_decompose, pullback, validate_morphism
from .tower import ClosedTrace, Clopen, LevelMapFamily, Tower, canonical, cylinder_measure, \
    empty_trace, lift_clopen
from .valueset import (check_closure_star, check_h_conditions, classify_finite,
                       finite, madic_pullback_guard, parse_kind)

EXIT_OK, EXIT_PARSE, EXIT_RECEIPT, EXIT_PRECONDITION = 0, 2, 3, 4


# ---------------------------------------------------------------- helpers

def _json_default(x):
    if isinstance(x, Fraction):
        return format_rat(x)
    if isinstance(x, (set, frozenset, tuple)):
        return sorted(x) if isinstance(x, (set, frozenset)) else list(x)
    if isinstance(x, Clopen):
        return {"level": x.level, "atoms": sorted(x.atoms)}
    raise TypeError(type(x).__name__)


def _emit(doc: dict):
    sys.stdout.write(json.dumps(doc, indent=1, sort_keys=True, default=_json_default,
                                ensure_ascii=False) + "\n")


def _tower_problems(t: Tower) -> List[str]:
    problems = []
    for n, b in enumerate(t.bonds):
        try:
            validate_morphism(b.domain, b.codomain, b.map)
        except MeasureError as exc:
            problems.append(f"bond {n}: {exc}")
    return problems


def _write(obj, path, fmt: str):
    if not path:
        return None
    if fmt == "dot":
        if isinstance(obj, Tower):
            text = export_dot(obj)
        elif isinstance(obj, LevelMapFamily):
            text = export_dot(obj.source, [t for t in (obj.source_trace,) if t], obj)
        else:
            raise PreconditionError(f"no DOT form for {type(obj).__name__}")
        serialize.write_atomic(path, text)
    else:
        serialize.save(obj, path)
    return path


def _ratio(text: str) -> Fraction:
    try:
        return parse_rat(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError("<argument>", text, str(exc)) from exc


def _clopen_arg(t: Tower, text: str) -> Clopen:
    """``level:atom,atom,...``"""
    level, sep, atoms = text.partition(":")
    if not sep:
        raise ParseError("<argument>", text, "clopen must look like level:atom,atom")
    try:
        n = int(level)
    except ValueError as exc:
        raise ParseError("<argument>", text, "level must be an integer") from exc
    names = [a for a in atoms.split(",") if a]
    if n > t.last or any(a not in t.levels[n] for a in names):
        raise ParseError("<argument>", text, "unknown level or atom")
    return canonical(t, n, names)


def _partition_arg(t: Tower, text: str) -> List[Clopen]:
    return [_clopen_arg(t, b) for b in text.split(";") if b.strip()]


class Result:
    def __init__(self, verb: str):
        self.doc: Dict = {"verb": verb, "receipts": {}}

    def receipt(self, name: str, problems):
        self.doc["receipts"][name] = {"ok": not problems, "problems": list(problems)}

    def failed(self) -> List[str]:
        return [k for k, v in self.doc["receipts"].items() if not v["ok"]]


# ---------------------------------------------------------------- verbs

def cmd_build_generic(a, res: Result):
    t = build_generic(a.budget, a.denominator_bound, offset=a.offset, zero_allowed=a.zero_allowed)
    res.doc.update(levels=len(t), deepest_atoms=len(t.deepest))
    res.receipt("bonds", _tower_problems(t))
    return t


def cmd_product(a, res: Result):
    t = product_tower(a.levels)
    res.receipt("bonds", _tower_problems(t))
    res.doc.update(levels=len(t))
    return t


def cmd_split(a, res: Result):
    t = serialize.load(a.tower, Tower)
    u = _clopen_arg(t, a.clopen)
    r0 = _ratio(a.ratio)
    t2, U0, U1 = los_split(t, u, r0)
    L = t2.last
    inside, p0, p1 = lift_clopen(t2, u, L), lift_clopen(t2, U0, L), lift_clopen(t2, U1, L)
    problems = []
    if cylinder_measure(t2, U0) != r0:
        problems.append("first part has the wrong mass")
    if cylinder_measure(t2, U1) != cylinder_measure(t, u) - r0:
        problems.append("second part has the wrong mass")
    if p0 & p1 or (p0 | p1) != inside:
        problems.append("parts do not partition the clopen")
    res.receipt("los_split", problems)
    res.receipt("bonds", _tower_problems(t2))
    res.doc.update(parts=[U0, U1], masses=[cylinder_measure(t2, U0), cylinder_measure(t2, U1)])
    return t2


def cmd_split_avoiding(a, res: Result):
    t = serialize.load(a.tower, Tower)
    w = _clopen_arg(t, a.clopen)
    a0 = serialize.load(a.trace0, ClosedTrace) if a.trace0 else empty_trace(t)
    a1 = serialize.load(a.trace1, ClosedTrace) if a.trace1 else empty_trace(t)
    r0 = _ratio(a.ratio)
    if a.deepen:
        r1 = cylinder_measure(t, w) - r0
        t, (a0, a1) = deepen_traces(t, [a0, a1], min(r0, r1) / 2)
        w = canonical(t, w.level, w.atoms)
    t2, W0, W1 = split_avoiding(t, w, a0, a1, r0)
    L = t2.last
    problems = []
    if cylinder_measure(t2, W0) != r0:
        problems.append("first part has the wrong mass")
    if not a0.at(t2, L) <= lift_clopen(t2, W0, L) or not a1.at(t2, L) <= lift_clopen(t2, W1, L):
        problems.append("a trace left its part")
    res.receipt("split_avoiding", problems)
    res.receipt("bonds", _tower_problems(t2))
    res.doc.update(parts=[W0, W1])
    return t2


def cmd_pullback(a, res: Result):
    f = serialize.load(a.f, Morphism)
    g = serialize.load(a.g, Morphism)
    pb = madic_pullback_guard(f, g, a.madic) if a.madic else pullback(f, g)
    problems = []
    for name, p in (("left", pb.proj_left), ("right", pb.proj_right)):
        try:
            validate_morphism(p.domain, p.codomain, p.map)
        except MeasureError as exc:
            problems.append(f"{name} projection: {exc}")
    res.receipt("projections", problems)
    res.doc.update(weights={lab: w for lab, w in pb.space.items()})
    return pb.space


def cmd_decompose(a, res: Result):
    f = serialize.load(a.f, Morphism)
    factors = prime_decompose(f)
    problems = [f"factor {i} is not prime" for i, g in enumerate(factors) if not g.is_prime()]
    if factors and compose_all(factors).map != f.map:
        problems.append("factors do not compose to f")
    res.receipt("prime_factors", problems)
    res.doc.update(factors=[serialize.to_obj(g) for g in factors])
    return None


def cmd_embed(a, res: Result):
    k = serialize.load(a.anchor, Tower) if a.anchor else Tower.single()
    w = build_generic_embedding(k, a.budget, a.denominator_bound)
    res.receipt("embedding", w.check())
    res.doc.update(levels=len(w.base), covered=w.covered,
                   bounds=[b for _, b in w.schedule])
    return w


def cmd_retract(a, res: Result):
    w = serialize.load(a.witness, EmbeddingWitness)
    p = serialize.load(a.measure, Tower) if a.measure else None
    r = build_retraction(w, p)
    res.receipt("retraction", r.receipts)
    res.doc.update(levels=r.levels)
    return r


def _load_h(path) -> List[Dict[str, str]]:
    if not path:
        return []
    try:
        with open(path, encoding="utf-8") as fh:
            h = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(path, "$", str(exc)) from exc
    if not isinstance(h, list) or not all(isinstance(x, dict) for x in h):
        raise ParseError(path, "$", "h must be a list of atom maps, one per level")
    return h


def cmd_extend(a, res: Result):
    A = serialize.load(a.a, Tower)
    B = serialize.load(a.b, Tower)
    kt = serialize.load(a.ktrace, ClosedTrace) if a.ktrace else empty_trace(A)
    lt = serialize.load(a.ltrace, ClosedTrace) if a.ltrace else empty_trace(B)
    fam = extend_homeomorphism(A, kt, B, lt, _load_h(a.h), a.depth)
    res.receipt("family", fam.receipts)
    res.doc.update(pairs=fam.pairs)
    return fam


def cmd_homogeneity(a, res: Result):
    t = serialize.load(a.tower, Tower)
    U, V = _partition_arg(t, a.u), _partition_arg(t, a.v)
    k = serialize.load(a.trace, ClosedTrace) if a.trace else None
    fam = homogeneity_map(t, U, V, k, a.depth)
    res.receipt("family", fam.receipts)
    res.doc.update(pairs=fam.pairs)
    return fam


def cmd_verify(a, res: Result):
    t = serialize.load(a.tower, Tower)
    rep = verify_generic(t, a.depth, a.bound, family=a.family)
    res.doc.update(report=rep.to_json())
    res.receipt("genericity", [f"level {u.level} atoms {sorted(u.atoms)} ratio {format_rat(r)}"
                               for u, r in rep.failures])
    return None


def cmd_valueset(a, res: Result):
    if a.action == "classify":
        v = finite(x for x in a.set.split(",") if x.strip())
        res.doc.update(m=classify_finite(v))
        return None
    v = parse_kind(a.kind) if a.kind else finite(x for x in a.set.split(",") if x.strip())
    star = check_closure_star(v, a.bound)
    h = check_h_conditions(v, a.bound)
    res.doc.update(closure_star=star, h_conditions=h)
    res.receipt("implication", [] if h["implication"]["ok"] else [str(h["implication"]["witness"])])
    return None


def cmd_export_dot(a, res: Result):
    t = serialize.load(a.tower, Tower)
    traces = [serialize.load(p, ClosedTrace) for p in a.trace or []]
    fam = serialize.load(a.family, LevelMapFamily) if a.family else None
    text = export_dot(t, traces, fam)
    if a.output:
        serialize.write_atomic(a.output, text)
    else:
        sys.stdout.write(text)
    res.receipt("render", [])
    res.doc["quiet"] = not a.output
    return None


def cmd_report(a, res: Result):
    from .report import write_report
    written = write_report(a.out, a.depth, a.bound, a.budget, a.product_levels)
    missing = [p for p in written.values() if not os.path.exists(p)]
    res.receipt("files", missing)
    res.doc.update(files=sorted(written))
    return None


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cantorprob", description=__doc__.split("\n")[0])
    ap.add_argument("--format", choices=["json", "dot"], default="json",
                    help="format of the -o output (dot for towers and families)")
    sub = ap.add_subparsers(dest="verb", required=True)

    def verb(name, fn, help_text, out=True):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(fn=fn)
        if out:
            p.add_argument("-o", "--output", help="output file (written atomically)")
        return p

    p = verb("build-generic", cmd_build_generic, "fair scheduler build of a generic tower")
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--denominator-bound", type=int, default=6)
    p.add_argument("--offset", type=int, default=0, help="scheduler phase offset")
    p.add_argument("--zero-allowed", action="store_true")

    p = verb("product", cmd_product, "product tower of enumerated finite spaces")
    p.add_argument("--levels", type=int, required=True)

    p = verb("split", cmd_split, "(łoś) split of a clopen")
    p.add_argument("--tower", required=True)
    p.add_argument("--clopen", required=True, help="level:atom,atom")
    p.add_argument("--ratio", required=True, help="mass of the first part, e.g. 1/3")

    p = verb("split-avoiding", cmd_split_avoiding, "split keeping two traces apart")
    p.add_argument("--tower", required=True)
    p.add_argument("--clopen", required=True)
    p.add_argument("--trace0")
    p.add_argument("--trace1")
    p.add_argument("--ratio", required=True)
    p.add_argument("--deepen", action="store_true", help="halve traces first when needed")

    p = verb("pullback", cmd_pullback, "amalgamate two arrows into a common space")
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--madic", type=int, default=0, help="apply the m-adic guard")

    p = verb("decompose", cmd_decompose, "prime factorization of a surjection", out=False)
    p.add_argument("--f", required=True)

    p = verb("embed", cmd_embed, "generic base with a measure-zero copy of an anchor")
    p.add_argument("--anchor", help="anchor tower (default: one point)")
    p.add_argument("--budget", type=int, default=60)
    p.add_argument("--denominator-bound", type=int, default=4)

    p = verb("retract", cmd_retract, "measure preserving retraction onto the anchor")
    p.add_argument("--witness", required=True)
    p.add_argument("--measure", help="tower with the anchor's shape and the target measure")

    p = verb("extend", cmd_extend, "extend a map between traces to a homeomorphism family")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--ktrace")
    p.add_argument("--ltrace")
    p.add_argument("--h", help="JSON list of per-level atom maps")
    p.add_argument("--depth", type=int, default=3)

    p = verb("homogeneity", cmd_homogeneity, "map one clopen partition onto another")
    p.add_argument("--tower", required=True)
    p.add_argument("--u", required=True, help="blocks 'level:a,b;level:c'")
    p.add_argument("--v", required=True)
    p.add_argument("--trace")
    p.add_argument("--depth", type=int, default=3)

    p = verb("verify", cmd_verify, "check d-genericity of a tower", out=False)
    p.add_argument("--tower", required=True)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--bound", type=int, default=6)
    p.add_argument("--family", choices=["atoms", "all"], default="atoms")

    p = verb("valueset", cmd_valueset, "value-set predicates", out=False)
    p.add_argument("action", choices=["check", "classify"])
    p.add_argument("--kind", help="all | zero | madic:M | finite:r,r,...")
    p.add_argument("--set", help="comma separated rationals")
    p.add_argument("--bound", type=int, default=12)

    p = verb("export-dot", cmd_export_dot, "layered DOT diagram of a tower")
    p.add_argument("--tower", required=True)
    p.add_argument("--trace", action="append")
    p.add_argument("--family")

    p = verb("report", cmd_report, "CSV tables and PNG figures", out=False)
    p.add_argument("--out", required=True)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--bound", type=int, default=6)
    p.add_argument("--budget", type=int, default=60)
    p.add_argument("--product-levels", type=int, default=8)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    res = Result(a.verb)
    try:
        if a.verb == "valueset" and not (a.kind or a.set):
            raise ParseError("<argument>", "--kind/--set", "give a value set")
        out = a.fn(a, res)
        if out is not None and a.verb != "export-dot":
            res.doc["output"] = _write(out, getattr(a, "output", None), a.format)
        failed = res.failed()
        if failed:
            raise ReceiptFailure(failed[0], res.doc["receipts"][failed[0]]["problems"])
    except ParseError as exc:
        res.doc.update(error="parse", path=exc.path, location=exc.location, message=str(exc))
        _emit(res.doc)
        return EXIT_PARSE
    except ReceiptFailure as exc:
        res.doc.update(error="receipt", invariant=exc.invariant)
        _emit(res.doc)
        return EXIT_RECEIPT
    except MeasureError as exc:
        res.doc.update(error="precondition", kind=type(exc).__name__, message=str(exc))
        if getattr(exc, "report", None) is not None:
            res.doc["report"] = exc.report
        _emit(res.doc)
        return EXIT_PRECONDITION
    if not res.doc.pop("quiet", False):
        _emit(res.doc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
