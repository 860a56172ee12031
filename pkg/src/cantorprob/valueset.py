"""Value-set policies: which rationals may occur as measures of clopen sets.

A value set ``V`` is a countable subset of ``[0, 1]`` containing 1.  Infinite
kinds are scanned over members with denominator at most a caller-supplied
bound, and every report states that bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, List, Optional, Tuple

from .errors import (AllAtomsZero, CodomainMismatch, NonMAdicInput,
                     PreconditionViolated, ZAtomNotPowerDenominator)
from .rat import ONE, ZERO, format_rat, is_madic, is_power_of, rat, rationals_up_to
from .space import Morphism, ProbSpace, pullback
from .tower import ClosedTrace, Tower, trace_from_deepest

KINDS = ("AllRationals", "RationalsWithZero", "Finite", "MAdic", "Custom")


def _key(r: Fraction):
    return (r.denominator, r.numerator)


@dataclass(frozen=True)
class ValueSet:
    kind: str
    values: Tuple[Fraction, ...] = ()
    m: int = 0
    predicate: Optional[Callable[[Fraction], bool]] = field(default=None, compare=False)
    generator: Optional[Callable[[int], Iterable[Fraction]]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown value-set kind {self.kind!r}")
        if self.kind == "Finite":
            vals = tuple(sorted({rat(v) for v in self.values}))
            if ONE not in vals:
                raise ValueError("a value set must contain 1")
            if any(not ZERO <= v <= ONE for v in vals):
                raise ValueError("values must lie in [0, 1]")
            object.__setattr__(self, "values", vals)
        if self.kind == "MAdic" and self.m < 2:
            raise ValueError("m-adic value sets need m >= 2")
        if self.kind == "Custom" and (self.predicate is None or self.generator is None):
            raise ValueError("custom value sets need a predicate and a generator")

    @property
    def finite(self) -> bool:
        return self.kind == "Finite"

    def contains(self, r) -> bool:
        r = rat(r)
        if not ZERO <= r <= ONE:
            return False
        if self.kind == "AllRationals":
            return r > 0
        if self.kind == "RationalsWithZero":
            return True
        if self.kind == "Finite":
            return r in self.values
        if self.kind == "MAdic":
            return r > 0 and is_madic(r, self.m)
        return bool(self.predicate(r))

    __contains__ = contains

    def members(self, bound: int) -> List[Fraction]:
        """Members with denominator <= ``bound`` (all members if finite).

        Ordered by denominator, then numerator.
        """
        if self.kind == "Finite":
            return sorted(self.values, key=_key)
        if self.kind == "Custom":
            pool = {rat(r) for r in self.generator(bound)}
            return sorted((r for r in pool if r.denominator <= bound and self.contains(r)), key=_key)
        pool = [ZERO] if self.kind == "RationalsWithZero" else []
        pool += [ONE] + rationals_up_to(bound)
        return sorted((r for r in pool if self.contains(r)), key=_key)

    def describe(self) -> str:
        if self.kind == "Finite":
            return "finite:" + ",".join(format_rat(v) for v in self.values)
        if self.kind == "MAdic":
            return f"madic:{self.m}"
        return {"AllRationals": "all", "RationalsWithZero": "zero"}.get(self.kind, "custom")


def all_rationals() -> ValueSet:
    return ValueSet("AllRationals")


def rationals_with_zero() -> ValueSet:
    return ValueSet("RationalsWithZero")


def finite(values) -> ValueSet:
    return ValueSet("Finite", tuple(rat(v) for v in values))


def madic(m: int) -> ValueSet:
    return ValueSet("MAdic", m=int(m))


def custom(predicate, generator) -> ValueSet:
    return ValueSet("Custom", predicate=predicate, generator=generator)


def parse_kind(text: str) -> ValueSet:
    """``all``, ``zero``, ``madic:M`` or ``finite:r1,r2,...``."""
    head, _, rest = text.partition(":")
    head = head.strip().lower()
    if head == "all":
        return all_rationals()
    if head == "zero":
        return rationals_with_zero()
    if head == "madic":
        return madic(int(rest))
    if head == "finite":
        return finite(x for x in rest.split(",") if x.strip())
    raise ValueError(f"unknown value-set kind {text!r}")


# ---------------------------------------------------------------- predicates

def check_closure_star(v: ValueSet, bound: int = 12) -> dict:
    """Search for ``α <= β < γ`` in V with ``αβ/γ`` outside V.

    Only positive members take part (weights of atoms are positive).
    """
    ms = [r for r in v.members(bound) if r > 0]
    scanned = 0
    for i, a in enumerate(ms):
        for b in ms[i:]:
            if b < a:
                continue
            for c in ms:
                if c <= b:
                    continue
                scanned += 1
                q = a * b / c
                if not v.contains(q):
                    return {"condition": "closure_star", "kind": v.describe(), "bound": bound,
                            "closed": False, "violation": [a, b, c], "value": q,
                            "scanned": scanned}
    return {"condition": "closure_star", "kind": v.describe(), "bound": bound,
            "closed": True, "violation": None, "value": None, "scanned": scanned}


def check_h_conditions(v: ValueSet, bound: int = 12) -> dict:
    """(H0) ``1 ∈ V``; (H1) differences stay in V; (H2) sums below 1 stay in V.

    Also replays the derivation of (H2) from (H0) and (H1) on every scanned
    pair: ``1 - β``, then ``(1 - β) - α``, then ``1 - ((1 - β) - α) = α + β``.
    """
    ms = [r for r in v.members(bound) if r > 0]
    h0 = v.contains(ONE)
    h1_fail, h2_fail, implication_fail = None, None, None
    pairs = 0
    for i, a in enumerate(ms):
        for b in ms[i:]:
            lo, hi = min(a, b), max(a, b)
            pairs += 1
            if lo != hi and h1_fail is None and not v.contains(hi - lo):
                h1_fail = [lo, hi, hi - lo]
            s = a + b
            if s < 1:
                ok = v.contains(s)
                if not ok and h2_fail is None:
                    h2_fail = [a, b, s]
                steps = [ONE - hi, ONE - hi - lo, s]
                derivable = h0 and all(v.contains(x) for x in steps[:2]) and \
                    v.contains(ONE - steps[1])
                if derivable and not ok and implication_fail is None:
                    implication_fail = [a, b]
    return {
        "kind": v.describe(), "bound": bound, "pairs": pairs,
        "H0": {"ok": h0, "witness": None if h0 else [ONE]},
        "H1": {"ok": h1_fail is None, "witness": h1_fail},
        "H2": {"ok": h2_fail is None, "witness": h2_fail},
        "implication": {"ok": implication_fail is None, "witness": implication_fail},
    }


def classify_finite(v: ValueSet) -> int:
    """The ``m`` with ``V = {1/m, 2/m, ..., 1}`` for a finite V obeying (H0), (H1)."""
    report = check_h_conditions(v)
    if not v.finite or ZERO in v.values or not report["H0"]["ok"] or not report["H1"]["ok"]:
        raise PreconditionViolated("need a finite V without 0 satisfying (H0) and (H1)", report)
    r = v.values[0]
    if r.numerator != 1:
        raise AssertionError(f"least element {r} of a conforming set is not 1/m")
    m = r.denominator
    if v.values != tuple(Fraction(k, m) for k in range(1, m + 1)):
        raise AssertionError(f"conforming set {v.values} is not of the form k/{m}")
    return m


def uniform_space(m: int) -> ProbSpace:
    if m < 1:
        raise ValueError("m must be positive")
    return ProbSpace([(str(i), Fraction(1, m)) for i in range(m)])


def madic_pullback_guard(f: Morphism, g: Morphism, m: int):
    """Pullback of m-adic arrows over a base with atoms ``1/m^i``."""
    if f.codomain != g.codomain:
        raise CodomainMismatch("pullback needs arrows into the same space")
    for a, w in f.codomain.items():
        if w.numerator != 1 or not is_power_of(w.denominator, m):
            raise ZAtomNotPowerDenominator(f"base atom {a!r} has weight {w}")
    for side in (f.domain, g.domain):
        for a, w in side.items():
            if not is_madic(w, m):
                raise NonMAdicInput(f"atom {a!r} has weight {w}, not {m}-adic")
    pb = pullback(f, g)
    bad = [w for _, w in pb.space.items() if not is_madic(w, m)]
    if bad:
        raise AssertionError(f"guarded pullback produced non-{m}-adic weights {bad[:3]}")
    return pb


# ---------------------------------------------------------------- supports

def support(t: Tower) -> Tuple[Tower, ClosedTrace]:
    """Prune zero-weight atoms level by level.

    Returns the strictly positive pruned tower and the shadow of the closure
    of the removed region (deepest zero atoms and their images), which has
    measure zero at the deepest level.
    """
    levels, bonds = [], []
    for n, space in enumerate(t.levels):
        kept = [(a, w) for a, w in space.items() if w > 0]
        if not kept:
            raise AllAtomsZero(f"level {n} has no positive atom")
        levels.append(ProbSpace(kept))
        if n:
            bonds.append(Morphism(levels[n], levels[n - 1],
                                  {a: t.bonds[n - 1].map[a] for a in levels[n].atoms}))
    pruned = Tower(levels, bonds)
    zeros = [a for a, w in t.deepest.items() if w == 0]
    removed = trace_from_deepest(t, zeros, ZERO if zeros else None)
    return pruned, removed
