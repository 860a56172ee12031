"""JSON interchange for every domain type.

Rationals are written as ``"num/den"`` strings.  Atom order of a space is
significant and kept as a list; maps are JSON objects.  Output is
deterministic (sorted keys, fixed indentation), so equal values give equal
bytes.
"""

from __future__ import annotations

import json
import os
import tempfile
from fractions import Fraction
from typing import Any

from .errors import MeasureError, ParseError
from .homeo import AnchoredTower, EmbeddingWitness, Retraction
from .rat import format_rat, parse_rat
from .space import Morphism, ProbSpace
from .tower import ClosedTrace, Clopen, LevelMapFamily, Tower
from .valueset import ValueSet, parse_kind


def _space(s: ProbSpace) -> dict:
    out = {"atoms": [[a, format_rat(w)] for a, w in s.items()]}
    if s.allow_zero:
        out["allow_zero"] = True
    return out


def _tower(t: Tower) -> dict:
    return {"levels": [_space(s) for s in t.levels],
            "bonds": [dict(b.map) for b in t.bonds]}


def _trace(tr: ClosedTrace) -> dict:
    return {"levels": [sorted(s) for s in tr.levels],
            "schedule": [[n, format_rat(b)] for n, b in tr.schedule]}


def to_obj(x: Any) -> dict:
    if isinstance(x, ProbSpace):
        return {"type": "space", **_space(x)}
    if isinstance(x, Morphism):
        return {"type": "morphism", "domain": _space(x.domain),
                "codomain": _space(x.codomain), "map": dict(x.map)}
    if isinstance(x, Tower):
        return {"type": "tower", **_tower(x)}
    if isinstance(x, Clopen):
        return {"type": "clopen", "level": x.level, "atoms": sorted(x.atoms)}
    if isinstance(x, ClosedTrace):
        return {"type": "trace", **_trace(x)}
    if isinstance(x, LevelMapFamily):
        out = {"type": "family", "source": _tower(x.source), "target": _tower(x.target),
               "pairs": [list(p) for p in x.pairs], "maps": [dict(m) for m in x.maps],
               "receipts": list(x.receipts)}
        if x.source_trace is not None:
            out["source_trace"] = _trace(x.source_trace)
        if x.target_trace is not None:
            out["target_trace"] = _trace(x.target_trace)
        return out
    if isinstance(x, AnchoredTower):
        return {"type": "anchored", **_anchored(x)}
    if isinstance(x, EmbeddingWitness):
        return {"type": "embedding", **_anchored(x.anchored),
                "schedule": [[n, format_rat(b)] for n, b in x.schedule],
                "covered": x.covered}
    if isinstance(x, Retraction):
        return {"type": "retraction", **_anchored(x.anchored), "levels": list(x.levels),
                "targets": [_space(f.codomain) for f in x.maps],
                "maps": [dict(f.map) for f in x.maps], "receipts": list(x.receipts)}
    if isinstance(x, ValueSet):
        if x.kind == "Custom":
            raise TypeError("custom value sets carry code and cannot be serialized")
        return {"type": "valueset", "kind": x.describe()}
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _anchored(a: AnchoredTower) -> dict:
    return {"base": _tower(a.base), "anchor": _tower(a.anchor),
            "anchor_maps": [[m, dict(mp)] for m, mp in a.anchor_maps]}


def dumps(x: Any) -> str:
    return json.dumps(to_obj(x), indent=1, sort_keys=True, ensure_ascii=False) + "\n"


def write_atomic(path, text: str):
    """Write via a temporary file in the same directory, then rename."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save(x: Any, path):
    write_atomic(path, dumps(x))


# ---------------------------------------------------------------- parsing

class _Reader:
    def __init__(self, path):
        self.path = str(path)

    def fail(self, where, msg):
        raise ParseError(self.path, where, msg)

    def get(self, obj, key, where, kind=None):
        if not isinstance(obj, dict) or key not in obj:
            self.fail(where, f"missing field {key!r}")
        val = obj[key]
        if kind is not None and not isinstance(val, kind):
            self.fail(f"{where}.{key}", f"expected {kind.__name__}")
        return val

    def rat(self, text, where) -> Fraction:
        if not isinstance(text, (str, int)) or isinstance(text, bool):
            self.fail(where, "rational must be a 'num/den' string")
        try:
            return parse_rat(str(text))
        except (ValueError, ZeroDivisionError) as exc:
            self.fail(where, str(exc))

    def space(self, obj, where) -> ProbSpace:
        atoms = self.get(obj, "atoms", where, list)
        items = []
        for i, pair in enumerate(atoms):
            if not isinstance(pair, list) or len(pair) != 2:
                self.fail(f"{where}.atoms[{i}]", "expected [label, weight]")
            items.append((str(pair[0]), self.rat(pair[1], f"{where}.atoms[{i}]")))
        return ProbSpace(items, allow_zero=bool(obj.get("allow_zero", False)))

    def tower(self, obj, where) -> Tower:
        levels = [self.space(s, f"{where}.levels[{i}]")
                  for i, s in enumerate(self.get(obj, "levels", where, list))]
        bonds = self.get(obj, "bonds", where, list)
        if len(bonds) != len(levels) - 1:
            self.fail(f"{where}.bonds", "need one bond per consecutive pair of levels")
        ms = [Morphism(levels[i + 1], levels[i], b) for i, b in enumerate(bonds)]
        return Tower(levels, ms)

    def trace(self, obj, where) -> ClosedTrace:
        levels = self.get(obj, "levels", where, list)
        sched = [(int(n), self.rat(b, f"{where}.schedule"))
                 for n, b in obj.get("schedule", [])]
        return ClosedTrace(tuple(frozenset(map(str, s)) for s in levels), tuple(sched))

    def anchored(self, obj, where) -> AnchoredTower:
        base = self.tower(self.get(obj, "base", where), f"{where}.base")
        anchor = self.tower(self.get(obj, "anchor", where), f"{where}.anchor")
        maps = [(int(m), dict(mp)) for m, mp in self.get(obj, "anchor_maps", where, list)]
        return AnchoredTower(base, anchor, maps)


def from_obj(obj: Any, path="<input>") -> Any:
    r = _Reader(path)
    kind = r.get(obj, "type", "$", str)
    try:
        if kind == "space":
            return r.space(obj, "$")
        if kind == "morphism":
            return Morphism(r.space(r.get(obj, "domain", "$"), "$.domain"),
                            r.space(r.get(obj, "codomain", "$"), "$.codomain"),
                            r.get(obj, "map", "$", dict))
        if kind == "tower":
            return r.tower(obj, "$")
        if kind == "clopen":
            return Clopen(int(r.get(obj, "level", "$")), frozenset(r.get(obj, "atoms", "$", list)))
        if kind == "trace":
            return r.trace(obj, "$")
        if kind == "family":
            fam = LevelMapFamily(r.tower(r.get(obj, "source", "$"), "$.source"),
                                 r.tower(r.get(obj, "target", "$"), "$.target"),
                                 [tuple(p) for p in r.get(obj, "pairs", "$", list)],
                                 [dict(m) for m in r.get(obj, "maps", "$", list)],
                                 list(obj.get("receipts", [])))
            if "source_trace" in obj:
                fam.source_trace = r.trace(obj["source_trace"], "$.source_trace")
            if "target_trace" in obj:
                fam.target_trace = r.trace(obj["target_trace"], "$.target_trace")
            return fam
        if kind == "anchored":
            return r.anchored(obj, "$")
        if kind == "embedding":
            sched = tuple((int(n), r.rat(b, "$.schedule")) for n, b in obj.get("schedule", []))
            return EmbeddingWitness(r.anchored(obj, "$"), sched, int(obj.get("covered", -1)))
        if kind == "retraction":
            at = r.anchored(obj, "$")
            targets = [r.space(s, f"$.targets[{i}]") for i, s in enumerate(r.get(obj, "targets", "$", list))]
            levels = [int(n) for n in r.get(obj, "levels", "$", list)]
            maps = [Morphism(at.base.levels[n], T, mp)
                    for n, T, mp in zip(levels, targets, r.get(obj, "maps", "$", list))]
            return Retraction(at.base, levels, maps, at, list(obj.get("receipts", [])))
        if kind == "valueset":
            return parse_kind(r.get(obj, "kind", "$", str))
    except MeasureError as exc:
        raise ParseError(path, "$", f"{type(exc).__name__}: {exc}") from exc
    except (TypeError, ValueError, KeyError, IndexError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(path, "$", str(exc)) from exc
    r.fail("$.type", f"unknown type {kind!r}")


def loads(text: str, path="<input>") -> Any:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(path, f"line {exc.lineno} column {exc.colno}", exc.msg) from exc
    return from_obj(obj, path)


def load(path, expect=None) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(path, "file", exc.strerror or str(exc)) from exc
    x = loads(text, path)
    if expect is not None and not isinstance(x, expect):
        raise ParseError(path, "$.type", f"expected {expect.__name__}, got {type(x).__name__}")
    return x
