"""Inverse sequences of finite probability spaces.

A :class:`Tower` is a finite initial segment ``S_0 <- S_1 <- ... <- S_L`` of
an inverse sequence in the category of finite strictly positive rational
probability spaces.  Clopen subsets of the limit are represented by atom sets
at some level, the limit measure by weight sums (cylinder semantics).
Towers are append-only: :meth:`Tower.push_level` returns a new tower that
shares the existing levels, so clopens and traces built against a prefix stay
valid for every extension.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .errors import (BondMismatch, CodomainMismatch, LevelOutOfRange,
                     NonSurjectiveBond)
from .rat import ONE, ZERO
from .space import Morphism, ProbSpace, terminal, validate_morphism


class Tower:
    __slots__ = ("levels", "bonds", "_cache")

    def __init__(self, levels: Sequence[ProbSpace], bonds: Sequence[Morphism],
                 check: bool = True, _cache=None):
        self.levels: Tuple[ProbSpace, ...] = tuple(levels)
        self.bonds: Tuple[Morphism, ...] = tuple(bonds)
        # composite maps; extensions start from a copy (siblings must not share)
        self._cache: Dict[Tuple[int, int], Dict[str, str]] = (
            {} if _cache is None else _cache)
        if check:
            if not self.levels:
                raise BondMismatch("a tower needs at least one level")
            if len(self.bonds) != len(self.levels) - 1:
                raise BondMismatch("need exactly one bond per consecutive pair")
            for n, b in enumerate(self.bonds):
                if b.domain != self.levels[n + 1] or b.codomain != self.levels[n]:
                    raise BondMismatch(f"bond {n} does not map level {n + 1} to {n}")

    @classmethod
    def single(cls, space: Optional[ProbSpace] = None) -> "Tower":
        return cls([space if space is not None else terminal()], [])

    def __len__(self) -> int:
        return len(self.levels)

    @property
    def last(self) -> int:
        return len(self.levels) - 1

    @property
    def deepest(self) -> ProbSpace:
        return self.levels[-1]

    def level(self, n: int) -> ProbSpace:
        self._check_level(n)
        return self.levels[n]

    def _check_level(self, n: int):
        if not 0 <= n < len(self.levels):
            raise LevelOutOfRange(f"level {n} not built (tower has {len(self.levels)})")

    def push_level(self, nxt: ProbSpace, bond: Morphism) -> "Tower":
        if bond.codomain != self.levels[-1] or bond.domain != nxt:
            raise BondMismatch("bond must map the new level onto the deepest one")
        return Tower(self.levels + (nxt,), self.bonds + (bond,), check=False,
                     _cache=dict(self._cache))

    def composite(self, m: int, n: int) -> Dict[str, str]:
        """Atom map of the composite bond ``level m -> level n`` (n <= m)."""
        self._check_level(m)
        self._check_level(n)
        if n > m:
            raise LevelOutOfRange(f"no bond from level {m} up to level {n}")
        if m == n:
            return {a: a for a in self.levels[m].atoms}
        key = (m, n)
        hit = self._cache.get(key)
        if hit is None:
            inner = self.bonds[m - 1].map
            if m - 1 == n:
                hit = inner
            else:
                outer = self.composite(m - 1, n)
                hit = {a: outer[b] for a, b in inner.items()}
            self._cache[key] = hit
        return hit

    def composite_morphism(self, m: int, n: int) -> Morphism:
        return Morphism(self.levels[m], self.levels[n], self.composite(m, n),
                        check=False)

    def lift(self, atoms: Iterable[str], n: int, m: int) -> FrozenSet[str]:
        """Preimage at level ``m`` of an atom set at level ``n``."""
        self._check_level(n)
        self._check_level(m)
        cur = frozenset(atoms)
        for j in range(n, m):
            cur = self.bonds[j].preimage(cur)
        return cur

    def project(self, atoms: Iterable[str], m: int, n: int) -> FrozenSet[str]:
        """Image at level ``n`` of an atom set at level ``m``."""
        comp = self.composite(m, n)
        return frozenset(comp[a] for a in atoms)

    def __eq__(self, other):
        if not isinstance(other, Tower):
            return NotImplemented
        return self.levels == other.levels and self.bonds == other.bonds

    def __hash__(self):
        return hash(self.levels)

    def __repr__(self):
        sizes = ",".join(str(len(s)) for s in self.levels)
        return f"Tower(levels=[{sizes}])"


# ---------------------------------------------------------------- clopens

@dataclass(frozen=True)
class Clopen:
    level: int
    atoms: FrozenSet[str]

    def __post_init__(self):
        object.__setattr__(self, "atoms", frozenset(self.atoms))


def canonical(t: Tower, level: int, atoms: Iterable[str]) -> Clopen:
    """Present an atom set at the coarsest level where it is a cylinder."""
    t._check_level(level)
    cur = frozenset(atoms)
    while level > 0:
        bond = t.bonds[level - 1]
        img = bond.image(cur)
        if bond.preimage(img) != cur:
            break
        cur, level = img, level - 1
    if not cur:
        level = 0
    return Clopen(level, cur)


def clopen(t: Tower, level: int, atoms: Iterable[str]) -> Clopen:
    atoms = frozenset(atoms)
    bad = atoms - set(t.level(level).atoms)
    if bad:
        raise LevelOutOfRange(f"atoms {sorted(bad)[:3]} not at level {level}")
    return canonical(t, level, atoms)


def whole(t: Tower) -> Clopen:
    return Clopen(0, frozenset(t.levels[0].atoms))


def lift_clopen(t: Tower, u: Clopen, m: int) -> FrozenSet[str]:
    if m < u.level:
        raise LevelOutOfRange(f"cannot present a level-{u.level} clopen at level {m}")
    return t.lift(u.atoms, u.level, m)


def cylinder_measure(t: Tower, u: Clopen) -> Fraction:
    return t.level(u.level).mass(u.atoms)


def clopen_algebra_op(t: Tower, a: Clopen, b: Clopen, op: str) -> Clopen:
    t._check_level(a.level)
    t._check_level(b.level)
    m = max(a.level, b.level)
    x, y = lift_clopen(t, a, m), lift_clopen(t, b, m)
    if op == "union":
        r = x | y
    elif op == "intersection":
        r = x & y
    elif op == "difference":
        r = x - y
    else:
        raise ValueError(f"unknown clopen operation {op!r}")
    return canonical(t, m, r)


def complement(t: Tower, a: Clopen) -> Clopen:
    return clopen_algebra_op(t, whole(t), a, "difference")


# ---------------------------------------------------------------- traces

@dataclass(frozen=True)
class ClosedTrace:
    """Per-level shadow of a closed subset of the limit.

    ``levels[n]`` is the set of level-``n`` atoms meeting the set; the bond
    image of ``levels[n+1]`` must equal ``levels[n]``.  ``schedule`` holds
    ``(level, bound)`` pairs: certified upper bounds on the trace measure.
    """

    levels: Tuple[FrozenSet[str], ...]
    schedule: Tuple[Tuple[int, Fraction], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(frozenset(s) for s in self.levels))
        object.__setattr__(self, "schedule",
                           tuple(sorted((int(n), Fraction(b)) for n, b in self.schedule)))

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def bounds(self) -> Dict[int, Fraction]:
        return dict(self.schedule)

    def is_empty(self) -> bool:
        return all(not s for s in self.levels)

    def at(self, t: Tower, n: int) -> FrozenSet[str]:
        """Trace set at level ``n``; beyond the built depth, plain preimage."""
        if n < len(self.levels):
            return self.levels[n]
        return t.lift(self.levels[-1], len(self.levels) - 1, n)

    def extend_to(self, t: Tower, n: int) -> "ClosedTrace":
        lv = list(self.levels)
        while len(lv) <= n:
            lv.append(t.bonds[len(lv) - 1].preimage(lv[-1]))
        return ClosedTrace(tuple(lv), self.schedule)

    def routed(self, atoms: Iterable[str], bound: Optional[Fraction] = None) -> "ClosedTrace":
        """Append the next level's set, optionally certifying a bound there."""
        n = len(self.levels)
        sched = self.schedule + (((n, Fraction(bound)),) if bound is not None else ())
        return ClosedTrace(self.levels + (frozenset(atoms),), sched)

    def with_bound(self, n: int, bound: Fraction) -> "ClosedTrace":
        sched = dict(self.schedule)
        sched[n] = Fraction(bound)
        return ClosedTrace(self.levels, tuple(sched.items()))

    def measure(self, t: Tower, n: int) -> Fraction:
        return t.level(n).mass(self.at(t, n))

    def current_bound(self) -> Optional[Fraction]:
        return self.schedule[-1][1] if self.schedule else None

    def check(self, t: Tower) -> List[str]:
        """Compatibility and schedule problems, empty when the trace is sound."""
        problems = []
        if len(self.levels) > len(t.levels):
            problems.append("trace deeper than tower")
            return problems
        for n in range(len(self.levels) - 1):
            img = t.bonds[n].image(self.levels[n + 1])
            if img != self.levels[n]:
                problems.append(f"incompatible at level {n + 1}")
        prev = None
        for n, b in self.schedule:
            if n >= len(self.levels):
                problems.append(f"schedule names unbuilt level {n}")
                continue
            if self.measure(t, n) > b:
                problems.append(f"measure at level {n} exceeds bound {b}")
            if prev is not None and b * 2 > prev:
                problems.append(f"bound at level {n} does not halve {prev}")
            prev = b
        return problems

    def is_measure_zero_certified(self, t: Tower) -> bool:
        if self.check(t):
            return False
        return self.is_empty() or len(self.schedule) >= 2


def trace_from_deepest(t: Tower, atoms: Iterable[str], bound=None) -> ClosedTrace:
    """Trace whose deepest set is ``atoms``; coarser levels are its images."""
    cur = frozenset(atoms)
    lv = [cur]
    for n in range(t.last, 0, -1):
        cur = t.bonds[n - 1].image(cur)
        lv.append(cur)
    lv.reverse()
    sched = () if bound is None else ((t.last, bound),)
    return ClosedTrace(tuple(lv), sched)


def empty_trace(t: Tower) -> ClosedTrace:
    return ClosedTrace(tuple(frozenset() for _ in t.levels))


# ---------------------------------------------------------------- splitting

def child_labels(space: ProbSpace, atom: str, k: int = 2) -> List[str]:
    out = []
    for i in range(k):
        lab = f"{atom}.{i}"
        while lab in space:
            lab += "'"
        out.append(lab)
    return out


def split_atom(t: Tower, atom: str, parts: Sequence[Fraction],
               labels: Optional[Sequence[str]] = None) -> Tower:
    """Append a level in which deepest atom ``atom`` splits into ``parts``.

    With two parts the new bond is prime.  Zero parts are only accepted in
    zero-allowed towers.
    """
    D = t.deepest
    if sum(parts, ZERO) != D.weight(atom):
        raise ValueError(f"parts of {atom!r} must sum to {D.weight(atom)}")
    labels = list(labels) if labels is not None else child_labels(D, atom, len(parts))
    items, mapping = [], {}
    for a in D.atoms:
        if a == atom:
            for lab, w in zip(labels, parts):
                items.append((lab, Fraction(w)))
                mapping[lab] = a
        else:
            items.append((a, D.weight(a)))
            mapping[a] = a
    allow_zero = D.allow_zero or any(Fraction(w) == 0 for w in parts)
    nxt = ProbSpace(items, allow_zero=allow_zero, check=False)
    return t.push_level(nxt, Morphism(nxt, D, mapping, check=False))


def push_space(t: Tower, space: ProbSpace, mapping: Mapping[str, str]) -> Tower:
    """Append ``space`` with a validated bond onto the deepest level."""
    return t.push_level(space, validate_morphism(space, t.deepest, mapping))


# ---------------------------------------------------------------- measures

def equip_measure(levels: Sequence[Sequence[str]],
                  bonds: Sequence[Mapping[str, str]]) -> Tower:
    """Assign uniform-split weights to a tower of bare finite sets.

    ``bonds[n]`` maps level ``n+1`` onto level ``n``.  The first level gets
    the uniform measure and every fiber divides its parent's mass equally.
    """
    if not levels or not levels[0]:
        raise NonSurjectiveBond("levels must be nonempty")
    base = [str(a) for a in levels[0]]
    w = {a: Fraction(1, len(base)) for a in base}
    spaces = [ProbSpace([(a, w[a]) for a in base], check=False)]
    morphs = []
    for n, bond in enumerate(bonds):
        atoms = [str(a) for a in levels[n + 1]]
        prev = spaces[-1]
        fib: Dict[str, List[str]] = {s: [] for s in prev.atoms}
        for a in atoms:
            s = str(bond[a]) if a in bond else None
            if s not in fib:
                raise NonSurjectiveBond(f"level {n + 1} atom {a!r} maps outside level {n}")
            fib[s].append(a)
        empty = [s for s, v in fib.items() if not v]
        if empty:
            raise NonSurjectiveBond(f"bond {n} misses {empty[:3]}")
        new_w = {}
        for s, members in fib.items():
            for a in members:
                new_w[a] = prev.weight(s) / len(members)
        sp = ProbSpace([(a, new_w[a]) for a in atoms], check=False)
        morphs.append(Morphism(sp, prev, {a: str(bond[a]) for a in atoms}, check=False))
        spaces.append(sp)
    return Tower(spaces, morphs)


def factor_through(t: Tower, m: int, q: Mapping[str, str], T: ProbSpace) -> Morphism:
    """Validate an atom map ``level m -> T`` as a measure preserving surjection."""
    return validate_morphism(t.level(m), T, q)


# ---------------------------------------------------------------- families

@dataclass
class LevelMapFamily:
    """Weight preserving bijections between paired levels of two towers.

    ``pairs[k] = (n_k, m_k)`` pairs level ``n_k`` of ``source`` with level
    ``m_k`` of ``target``; ``maps[k]`` is the atom bijection.  Consecutive
    maps commute with the composite bonds on both sides.
    """

    source: Tower
    target: Tower
    pairs: List[Tuple[int, int]]
    maps: List[Dict[str, str]]
    receipts: List[str] = field(default_factory=list)
    source_trace: Optional["ClosedTrace"] = None
    target_trace: Optional["ClosedTrace"] = None

    @property
    def depth(self) -> int:
        return len(self.pairs) - 1

    def inverse(self) -> "LevelMapFamily":
        return LevelMapFamily(self.target, self.source,
                              [(m, n) for n, m in self.pairs],
                              [{v: k for k, v in mp.items()} for mp in self.maps],
                              source_trace=self.target_trace, target_trace=self.source_trace)

    def then(self, other: "LevelMapFamily") -> "LevelMapFamily":
        """``other ∘ self``, level by level (requires matching middle levels)."""
        if [m for _, m in self.pairs] != [n for n, _ in other.pairs]:
            raise CodomainMismatch("families are paired at different middle levels")
        maps = [{a: o[s[a]] for a in s} for s, o in zip(self.maps, other.maps)]
        return LevelMapFamily(self.source, other.target,
                              [(n, m) for (n, _), (_, m) in zip(self.pairs, other.pairs)],
                              maps)

    def is_identity(self) -> bool:
        return all(n == m for n, m in self.pairs) and all(
            all(k == v for k, v in mp.items()) for mp in self.maps) and \
            self.source.levels[:1] == self.target.levels[:1]

    def image(self, k: int, atoms: Iterable[str]) -> FrozenSet[str]:
        mp = self.maps[k]
        return frozenset(mp[a] for a in atoms)

    def check(self) -> List[str]:
        problems = []
        for k, ((n, m), mp) in enumerate(zip(self.pairs, self.maps)):
            S, T = self.source.level(n), self.target.level(m)
            if set(mp) != set(S.atoms) or set(mp.values()) != set(T.atoms) \
                    or len(set(mp.values())) != len(mp):
                problems.append(f"map {k} is not a bijection")
                continue
            if any(S.weight(a) != T.weight(b) for a, b in mp.items()):
                problems.append(f"map {k} does not preserve weights")
        for k in range(len(self.pairs) - 1):
            (n0, m0), (n1, m1) = self.pairs[k], self.pairs[k + 1]
            if n1 < n0 or m1 < m0:
                problems.append(f"pairs {k}, {k + 1} are not increasing")
                continue
            ca = self.source.composite(n1, n0)
            cb = self.target.composite(m1, m0)
            lo, hi = self.maps[k], self.maps[k + 1]
            if any(lo[ca[a]] != cb[hi[a]] for a in hi):
                problems.append(f"maps {k}, {k + 1} do not commute with bonds")
        return problems
