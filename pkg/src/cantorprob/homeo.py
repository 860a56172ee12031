"""Extension engines: anchored towers, retractions and homeomorphism families.

An anchored tower is a base tower together with level maps from a second
tower ``k`` (the anchor) into it; it is the finite shadow of a continuous map
from the limit of ``k`` into the limit of the base.  The engines here extend
base towers one prime step at a time (:func:`extend_along_prime`) or by
amalgamating two towers over a common quotient, and certify every result by
re-running the invariants they promise.

Trace routing: when an atom carrying trace (or anchor image) is split, the
trace follows one designated child.  A closed measure-zero set can always be
placed inside any positive-measure piece, so this is a legitimate choice of
the finite shadow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .errors import (AnchorIncompatible, BondIncompatibleH, CodomainMismatch,
                     InsufficientCoverage, InsufficientGenericity, NotPrime,
                     PartitionMeasureMismatch, PreconditionError,
                     TraceMismatch, TraceNotMeasureZero)
from .generic import (Scheduler, SplitTask, deepen_traces, los_split,
                      positive_atoms, realizable, split_avoiding)
from .rat import ONE, ZERO
from .space import (Morphism, ProbSpace, compose_all, pair_label, prime_decompose,
                    pullback, terminal, to_terminal, validate_morphism)
from .tower import (ClosedTrace, Clopen, LevelMapFamily, Tower, canonical,
                    child_labels, cylinder_measure, lift_clopen, split_atom,
                    trace_from_deepest)


# ---------------------------------------------------------------- anchors

@dataclass
class AnchoredTower:
    """Base tower with level maps from an anchor tower.

    ``anchor_maps[n] = (m, a)`` maps atoms of anchor level ``m`` to atoms of
    base level ``n``.
    """

    base: Tower
    anchor: Tower
    anchor_maps: List[Tuple[int, Dict[str, str]]]

    def image(self, n: int) -> frozenset:
        return frozenset(self.anchor_maps[n][1].values())

    def image_trace(self, schedule=()) -> ClosedTrace:
        return ClosedTrace(tuple(self.image(n) for n in range(len(self.base))), schedule)

    def check(self) -> List[str]:
        problems = []
        if len(self.anchor_maps) != len(self.base):
            return ["one anchor map per base level is required"]
        for n in range(len(self.base) - 1):
            m0, a0 = self.anchor_maps[n]
            m1, a1 = self.anchor_maps[n + 1]
            if m1 < m0:
                problems.append(f"anchor level decreases at base level {n + 1}")
                continue
            kp = self.anchor.composite(m1, m0)
            bond = self.base.bonds[n].map
            if any(bond[a1[x]] != a0[kp[x]] for x in a1):
                problems.append(f"square at base level {n + 1} does not commute")
        return problems


@dataclass
class EmbeddingWitness:
    anchored: AnchoredTower
    schedule: Tuple[Tuple[int, Fraction], ...]
    covered: int = -1  # deepest anchor level realized injectively
    log: List[str] = field(default_factory=list)

    @property
    def base(self) -> Tower:
        return self.anchored.base

    def trace(self) -> ClosedTrace:
        return self.anchored.image_trace(self.schedule)

    def bounds(self) -> List[Fraction]:
        return [b for _, b in self.schedule]

    def check(self) -> List[str]:
        problems = list(self.anchored.check())
        problems += self.trace().check(self.base)
        m, amap = self.anchored.anchor_maps[-1]
        if self.covered >= 0 and m == self.covered and len(set(amap.values())) != len(amap):
            problems.append("anchor map not injective at the deepest level")
        return problems


class _Anchor:
    """Mutable builder behind the anchored engines."""

    def __init__(self, base: Tower, anchor: Tower, maps=None, schedule=()):
        self.t = base
        self.k = anchor
        if maps is None:
            only = base.levels[0].atoms[0] if len(base.levels[0]) == 1 else None
            if only is None:
                raise AnchorIncompatible("default anchoring needs a one-point base level")
            maps = [(0, {x: only for x in anchor.levels[0].atoms})]
        self.maps = [(m, dict(a)) for m, a in maps]
        self.schedule = dict(schedule)

    @property
    def m(self) -> int:
        return self.maps[-1][0]

    @property
    def amap(self) -> Dict[str, str]:
        return self.maps[-1][1]

    def carriers(self) -> Dict[str, List[str]]:
        out: Dict[str, List[str]] = {}
        for x in sorted(self.amap):
            out.setdefault(self.amap[x], []).append(x)
        return out

    def follow(self, start: int, choose: Callable[[int, str, Tuple[str, ...], str], str]):
        """Extend anchor maps over base levels added after ``start``.

        ``choose(level, parent, children, x)`` picks the child receiving anchor
        atom ``x`` when its image is split.
        """
        m, amap = self.maps[-1]
        for j in range(start, self.t.last):
            fib = self.t.bonds[j].fibers
            new = {}
            for x, c in amap.items():
                kids = fib[c]
                new[x] = kids[0] if len(kids) == 1 else choose(j + 1, c, kids, x)
            amap = new
            self.maps.append((m, dict(amap)))

    def split_routed(self, atom: str, parts, route: Callable[[str], int]):
        """Cut a deepest atom; anchor atom ``x`` inside it goes to child ``route(x)``."""
        start = self.t.last
        labels = child_labels(self.t.deepest, atom, len(parts))
        self.t = split_atom(self.t, atom, parts, labels)
        new = {x: (labels[route(x)] if c == atom else c) for x, c in self.amap.items()}
        self.maps.append((self.m, new))
        assert self.t.last == start + 1

    def smaller_child(self, atom: str, parts) -> int:
        return min(range(len(parts)), key=lambda i: (parts[i], i))

    def los(self, u: Clopen, r: Fraction):
        """(łoś) split with anchor fibers routed to the lighter child."""
        before = self.t.last
        t2, U0, U1 = los_split(self.t, u, r)
        if t2.last == before:
            return U0, U1
        bond = t2.bonds[-1]
        cut = next(c for c, f in bond.fibers.items() if len(f) == 2)
        kids = bond.fibers[cut]
        ws = [t2.deepest.weight(c) for c in kids]
        pick = kids[min(range(2), key=lambda i: (ws[i], i))]
        self.t = t2
        self.maps.append((self.m, {x: (pick if c == cut else c) for x, c in self.amap.items()}))
        return U0, U1

    def shrink(self):
        """Halve every anchor-carrying atom, keeping anchors in the first half."""
        for c in [a for a in self.t.deepest.atoms if a in self.carriers()]:
            w = self.t.deepest.weight(c)
            self.split_routed(c, [w / 2, w / 2], lambda x: 0)

    def measure(self) -> Fraction:
        return self.t.deepest.mass(set(self.amap.values()))

    def certify(self):
        """Record a bound at the deepest level if it halves the last one."""
        mu = self.measure()
        if not self.schedule:
            self.schedule[self.t.last] = mu
            return True
        last = self.schedule[max(self.schedule)]
        if mu * 2 <= last:
            self.schedule[self.t.last] = last / 2
            return True
        return False

    def injective(self) -> bool:
        return len(set(self.amap.values())) == len(self.amap)

    def raise_level(self):
        m = self.m
        kp = self.k.composite(m + 1, m)
        self.maps[-1] = (m + 1, {x: self.amap[kp[x]] for x in self.k.levels[m + 1].atoms})

    def refine(self) -> bool:
        """Make the anchor map injective on the next anchor level; False if done."""
        if self.injective():
            if self.m >= self.k.last:
                return False
            self.raise_level()
        for c, xs in list(self.carriers().items()):
            cur = c
            for i in range(len(xs) - 1):
                w = self.t.deepest.weight(cur)
                first = xs[i]
                labels = child_labels(self.t.deepest, cur)
                self.split_routed(cur, [w / 2, w / 2],
                                  lambda x, first=first: 0 if x == first else 1)
                cur = labels[1]
        return True

    def witness(self, covered: int, log=None) -> EmbeddingWitness:
        sched = tuple(sorted(self.schedule.items()))
        return EmbeddingWitness(AnchoredTower(self.t, self.k, list(self.maps)), sched,
                                covered, list(log or []))


# ---------------------------------------------------------------- (E) step

def extend_along_prime(t: Tower, g: Morphism, f: Morphism,
                       b: Optional[Dict[str, str]] = None,
                       anchor: Optional[Dict[str, str]] = None,
                       deepen: bool = True):
    """Lift ``g: S_L -> X`` along a prime ``f: Y -> X``.

    ``anchor`` maps anchor atoms to deepest base atoms and ``b`` maps the same
    anchor atoms to ``Y``.  Returns ``(tower, h, anchor')`` where ``h`` maps
    the new deepest level onto ``Y`` with ``f∘h = g`` (through the new
    bonds), ``h∘anchor' = b`` and fibers of exact ``Y``-mass.
    """
    b = dict(b or {})
    anchor = dict(anchor or {})
    if not f.is_prime():
        raise NotPrime("f must have exactly one two-point fiber")
    if g.domain != t.deepest:
        raise CodomainMismatch("g must start at the deepest level")
    if g.codomain != f.codomain:
        raise CodomainMismatch("g and f need the same codomain")
    if set(b) != set(anchor):
        raise AnchorIncompatible("b and the anchor map must share their domain")
    x0 = next(x for x, fib in f.fibers.items() if len(fib) == 2)
    y0, y1 = f.fibers[x0]
    Y = f.domain
    for x in anchor:
        if f.map[b[x]] != g.map[anchor[x]]:
            raise AnchorIncompatible(f"f∘b and g∘anchor disagree at {x!r}")
    L = t.last
    W = frozenset(a for a in t.deepest.atoms if g.map[a] == x0)
    A0 = frozenset(anchor[x] for x in anchor if b[x] == y0)
    A1 = frozenset(anchor[x] for x in anchor if b[x] == y1)
    a0, a1 = trace_from_deepest(t, A0), trace_from_deepest(t, A1)
    r0, r1 = Y.weight(y0), Y.weight(y1)
    builder = _Anchor(t, Tower.single(), maps=[(0, dict(anchor))])
    if deepen and (t.deepest.mass(A0) >= r0 or t.deepest.mass(A1) >= r1):
        t2, (a0, a1) = deepen_traces(t, [a0, a1], min(r0, r1) / 2)
        builder.t = t2

        def route(level, c, kids, x, sets=(a0, a1)):
            for tr in sets:
                if c in tr.levels[level - 1]:
                    return next(k for k in kids if k in tr.levels[level])
            return kids[0]

        builder.follow(L, route)
        t = t2
    Lw = t.last
    w_clopen = canonical(t, Lw, t.lift(W, L, Lw))
    t, W0, W1 = split_avoiding(t, w_clopen, a0, a1, r0)
    builder.t = t
    builder.follow(Lw, lambda level, c, kids, x: kids[0])
    comp = t.composite(t.last, L)
    part0 = lift_clopen(t, W0, t.last)
    part1 = lift_clopen(t, W1, t.last)
    finv = {f.map[y]: y for y in Y.atoms if y not in (y0, y1)}
    h = {}
    for z in t.deepest.atoms:
        if z in part0:
            h[z] = y0
        elif z in part1:
            h[z] = y1
        else:
            h[z] = finv[g.map[comp[z]]]
    hm = validate_morphism(t.deepest, Y, h)
    return t, hm, builder.amap


# ---------------------------------------------------------------- embeddings

EMBED_KINDS = ("refine", "split", "shrink")


def build_generic_embedding(k: Tower, budget: int, bound: int = 4) -> EmbeddingWitness:
    """Embed the limit of ``k`` into a generic base with measure-zero image.

    Tasks rotate through three kinds: anchor refinement (separate the images
    of the next anchor level), a (łoś) split from the base scheduler with
    anchor fibers routed to the lighter part, and a shrink halving every
    anchor-carrying atom.  Each shrink certifies a halved bound.
    """
    b = _Anchor(Tower.single(), k)
    b.certify()
    sched = iter(Scheduler(bound))
    covered = -1
    log = []
    for i in range(budget):
        kind = EMBED_KINDS[i % 3]
        if kind == "refine":
            changed = b.refine()
            if b.injective():
                covered = b.m
            log.append(f"refine:{'level ' + str(b.m) if changed else 'done'}")
        elif kind == "split":
            level, idx, r = next(sched)
            t = b.t
            if level <= t.last:
                atoms = positive_atoms(t.levels[level])
                if idx < len(atoms):
                    u = canonical(t, level, [atoms[idx]])
                    deep = lift_clopen(t, u, t.last)
                    if r < cylinder_measure(t, u) and not realizable(
                            [t.deepest.weight(a) for a in deep], [r]):
                        b.los(u, r)
            log.append(f"split:{level},{idx},{r}")
        else:
            b.shrink()
            b.certify()
            log.append(f"shrink:{b.schedule[max(b.schedule)]}")
    if b.injective():
        covered = max(covered, b.m)
    return b.witness(covered, log)


@dataclass
class Retraction:
    """Measure preserving maps from base levels onto the anchor's levels."""

    base: Tower
    levels: List[int]
    maps: List[Morphism]
    anchored: AnchoredTower
    receipts: List[str] = field(default_factory=list)

    def __iter__(self):
        return iter(self.maps)

    def __len__(self):
        return len(self.maps)

    def check(self, p: Tower) -> List[str]:
        problems = []
        k = self.anchored.anchor
        m_anchor, amap = self.anchored.anchor_maps[-1]
        for m, (n, f) in enumerate(zip(self.levels, self.maps)):
            try:
                validate_morphism(self.base.levels[n], p.levels[m], f.map)
            except Exception as exc:  # receipts report, never raise
                problems.append(f"f_{m}: {exc}")
                continue
            comp = self.base.composite(self.base.last, n)
            kp = k.composite(m_anchor, m)
            for x, c in amap.items():
                if f.map[comp[c]] != kp[x]:
                    problems.append(f"f_{m}∘η differs from the identity at {x!r}")
                    break
        for m in range(1, len(self.maps)):
            n0, n1 = self.levels[m - 1], self.levels[m]
            comp = self.base.composite(n1, n0)
            kb = p.bonds[m - 1].map
            f0, f1 = self.maps[m - 1].map, self.maps[m].map
            if any(f0[comp[z]] != kb[f1[z]] for z in f1):
                problems.append(f"f_{m - 1}, f_{m} do not commute with bonds")
        return problems


def remeasure(k: Tower, spaces: Sequence[ProbSpace]) -> Tower:
    """Same shape as ``k`` with new level measures, bonds revalidated."""
    if len(spaces) != len(k):
        raise PreconditionError("one space per anchor level is required")
    bonds = []
    for n, bnd in enumerate(k.bonds):
        bonds.append(validate_morphism(spaces[n + 1], spaces[n], bnd.map))
    for s, old in zip(spaces, k.levels):
        if set(s.atoms) != set(old.atoms):
            raise PreconditionError("measure must live on the anchor's atoms")
    return Tower(spaces, bonds)


def build_retraction(w: EmbeddingWitness, p: Optional[Tower] = None) -> Retraction:
    """Measure preserving retraction of the base onto the anchor.

    ``p`` is the target measure on the anchor tower (default: the anchor's
    own).  The base is extended prime by prime along each anchor bond.
    """
    k = w.anchored.anchor
    p = k if p is None else p
    if len(p) != len(k) or any(set(a.atoms) != set(b.atoms) for a, b in zip(p.levels, k.levels)):
        raise PreconditionError("p must be a measure on the anchor's levels")
    m_anchor, amap = w.anchored.anchor_maps[-1]
    if w.covered < k.last or m_anchor < k.last or len(set(amap.values())) != len(amap):
        raise InsufficientCoverage(max(w.covered + 1, 0))
    t = w.base
    anchor = dict(amap)
    g = to_terminal(t.deepest)
    levels, maps = [], []
    for m in range(len(p)):
        bond = to_terminal(p.levels[0]) if m == 0 else p.bonds[m - 1]
        primes = prime_decompose(bond)
        kp = k.composite(m_anchor, m)
        for i, f in enumerate(primes):
            rest = primes[i + 1:]
            down = compose_all(rest).map if rest else {a: a for a in p.levels[m].atoms}
            b = {x: down[kp[x]] for x in anchor}
            t, g, anchor = extend_along_prime(t, g, f, b, anchor)
        if not primes:
            g = Morphism(t.deepest, p.levels[m], g.map if m else
                         {a: p.levels[0].atoms[0] for a in t.deepest.atoms}, check=True)
        levels.append(t.last)
        maps.append(g)
    # anchor maps over the extended base: copy the witness maps, then follow
    anchored = _extend_anchor_maps(w.anchored, t, anchor)
    r = Retraction(t, levels, maps, anchored)
    r.receipts = r.check(p)
    return r


def _extend_anchor_maps(at: AnchoredTower, t: Tower, final: Dict[str, str]) -> AnchoredTower:
    maps = list(at.anchor_maps)
    m = maps[-1][0]
    for n in range(len(maps), len(t)):
        comp = t.composite(t.last, n)
        maps.append((m, {x: comp[c] for x, c in final.items()}))
    return AnchoredTower(t, at.anchor, maps)


# ---------------------------------------------------------------- families

@dataclass
class _Side:
    tower: Tower
    trace: ClosedTrace


def _append_level(side: _Side, space: ProbSpace, bond: Morphism, trace_set, halving: bool):
    side.tower = side.tower.push_level(space, bond)
    bound = None
    if halving and trace_set:
        mu = space.mass(trace_set)
        prev = side.trace.current_bound()
        if prev is None or mu * 2 <= prev:
            bound = prev / 2 if prev is not None else mu
    side.trace = side.trace.routed(trace_set, bound)


def _refinement_rounds(a: _Side, b: _Side, depth: int, project_a, project_b):
    """``depth`` identical refinement rounds on two label-identical deepest levels.

    Each round halves every trace atom (trace kept in the first half) and the
    heaviest other atom; ties go to the first atom in the projection order of
    side A on odd rounds and side B on even rounds.
    """
    pairs = [(a.tower.last, b.tower.last)]
    for rnd in range(1, depth + 1):
        D = a.tower.deepest
        tr = a.trace.levels[-1]
        proj = project_a if rnd % 2 else project_b
        others = [x for x in D.atoms if x not in tr]
        targets = [x for x in D.atoms if x in tr]
        if others:
            heavy = min(others, key=lambda x: (-D.weight(x), proj(x), x))
            targets.append(heavy)
        new_trace = set(tr)
        for x in targets:
            w = a.tower.deepest.weight(x)
            labels = child_labels(a.tower.deepest, x)
            for side in (a, b):
                side.tower = split_atom(side.tower, x, [w / 2, w / 2], labels)
            if x in new_trace:
                new_trace.discard(x)
                new_trace.add(labels[0])
            for side in (a, b):
                side.trace = side.trace.routed(new_trace)
        for side in (a, b):
            if new_trace:
                prev = side.trace.current_bound()
                mu = side.tower.deepest.mass(new_trace)
                if prev is None or mu * 2 <= prev:
                    side.trace = side.trace.with_bound(
                        side.tower.last, prev / 2 if prev is not None else mu)
        pairs.append((a.tower.last, b.tower.last))
    return pairs


def _amalgamate(A: Tower, B: Tower, p: Morphism, q: Morphism, ka: ClosedTrace,
                lb: ClosedTrace, related: Callable[[str, str], bool], depth: int,
                extend: bool = True) -> LevelMapFamily:
    pb = pullback(p, q)
    if not extend:
        tasks = []
        for x, fib in pb.proj_left.fibers.items():
            if len(fib) > 1:
                tasks.append(SplitTask(A.last, Clopen(A.last, frozenset([x])),
                                       pb.space.weight(fib[0])))
        raise InsufficientGenericity(tasks)
    ka = ka.extend_to(A, A.last)
    lb = lb.extend_to(B, B.last)
    diag = {lab for lab, (x, y) in zip(pb.space.atoms, pb.pairs)
            if x in ka.levels[-1] and y in lb.levels[-1] and related(x, y)}
    sa, sb = _Side(A, ka), _Side(B, lb)
    _append_level(sa, pb.space, pb.proj_left, diag, True)
    _append_level(sb, pb.space, pb.proj_right, diag, True)
    LA, LB = A.last, B.last
    pa = lambda z: sa.tower.composite(sa.tower.last, LA)[z] if z in sa.tower.deepest else z
    qb = lambda z: sb.tower.composite(sb.tower.last, LB)[z] if z in sb.tower.deepest else z
    pairs = _refinement_rounds(sa, sb, depth, pa, qb)
    maps = [{z: z for z in sa.tower.levels[n].atoms} for n, _ in pairs]
    fam = LevelMapFamily(sa.tower, sb.tower, pairs, maps)
    fam.source_trace, fam.target_trace = sa.trace, sb.trace
    return fam


def _identity_family(t: Tower, k: ClosedTrace, depth: int) -> LevelMapFamily:
    sa, sb = _Side(t, k.extend_to(t, t.last)), _Side(t, k.extend_to(t, t.last))
    proj = lambda z: z
    pairs = _refinement_rounds(sa, sb, depth, proj, proj)
    maps = [{z: z for z in sa.tower.levels[n].atoms} for n, _ in pairs]
    fam = LevelMapFamily(sa.tower, sb.tower, pairs, maps)
    fam.source_trace, fam.target_trace = sa.trace, sb.trace
    return fam


def _partition_map(t: Tower, parts: Sequence[Clopen], S: ProbSpace) -> Morphism:
    L = t.last
    m = {}
    for i, u in enumerate(parts):
        for a in lift_clopen(t, u, L):
            if a in m:
                raise PreconditionError("clopens of a partition must be disjoint")
            m[a] = str(i)
    if set(m) != set(t.deepest.atoms):
        raise PreconditionError("clopens of a partition must cover the space")
    return Morphism(t.deepest, S, m, check=False)


def homogeneity_map(t: Tower, U: Sequence[Clopen], V: Sequence[Clopen],
                    k: Optional[ClosedTrace] = None, depth: int = 3,
                    extend: bool = True) -> LevelMapFamily:
    """Measure preserving correspondence sending each ``U_i`` onto ``V_i``.

    The trace ``k`` must meet ``U_i`` and ``V_i`` in the same atoms; it is
    fixed by the result.  Returns a family with ``depth + 1`` paired levels
    between two extensions of ``t``.
    """
    if len(U) != len(V):
        raise PartitionMeasureMismatch("partitions have different sizes")
    mus = [cylinder_measure(t, u) for u in U]
    if mus != [cylinder_measure(t, v) for v in V]:
        raise PartitionMeasureMismatch("U_i and V_i must have equal measures")
    if any(mu == 0 for mu in mus):
        raise PartitionMeasureMismatch("partition blocks must be nonempty")
    k = k if k is not None else ClosedTrace((frozenset(),))
    k = k.extend_to(t, t.last)
    L = t.last
    S = ProbSpace([(str(i), mu) for i, mu in enumerate(mus)])
    p, q = _partition_map(t, U, S), _partition_map(t, V, S)
    kl = k.levels[-1]
    for i in range(len(U)):
        ku = {a for a in kl if p.map[a] == str(i)}
        kv = {a for a in kl if q.map[a] == str(i)}
        if ku != kv:
            raise TraceMismatch(f"trace meets U_{i} and V_{i} differently")
    if p.map == q.map:
        fam = _identity_family(t, k, depth)
    else:
        fam = _amalgamate(t, t, p, q, k, k, lambda x, y: x == y, depth, extend)
    fam.receipts = fam.check() + _image_receipts(fam, t, U, V) + \
        _trace_receipts(fam, t, t, [{a: a for a in lv} for lv in k.levels[:L + 1]])
    return fam


def _image_receipts(fam: LevelMapFamily, t: Tower, U, V) -> List[str]:
    problems = []
    for j, (n, m) in enumerate(fam.pairs):
        for i, (u, v) in enumerate(zip(U, V)):
            lu = fam.source.lift(u.atoms, u.level, n)
            lv = fam.target.lift(v.atoms, v.level, m)
            if fam.image(j, lu) != lv:
                problems.append(f"pair {j}: image of U_{i} is not V_{i}")
    return problems


def _trace_receipts(fam: LevelMapFamily, A: Tower, B: Tower, h: List[Dict[str, str]]) -> List[str]:
    """``H`` restricted to the trace agrees with ``h`` at every level ``h`` covers."""
    problems = []
    src, tgt = fam.source_trace, fam.target_trace
    for j, (n, m) in enumerate(fam.pairs):
        ts = src.at(fam.source, n)
        if fam.image(j, ts) != tgt.at(fam.target, m):
            problems.append(f"pair {j}: trace is not carried onto trace")
            continue
        for lvl, hl in enumerate(h):
            ca = fam.source.composite(n, lvl)
            cb = fam.target.composite(m, lvl)
            for z in ts:
                if hl.get(ca[z]) != cb[fam.maps[j][z]]:
                    problems.append(f"pair {j}: trace map differs from h at level {lvl}")
                    break
    return problems


def check_h(A: Tower, kTrace: ClosedTrace, B: Tower, lTrace: ClosedTrace,
            h: Sequence[Dict[str, str]]):
    if not h:
        return
    for n, hn in enumerate(h):
        if n >= len(kTrace.levels) or n >= len(lTrace.levels):
            raise BondIncompatibleH(f"h given beyond the traces at level {n}")
        if set(hn) != set(kTrace.levels[n]) or set(hn.values()) != set(lTrace.levels[n]) \
                or len(set(hn.values())) != len(hn):
            raise BondIncompatibleH(f"h_{n} is not a bijection between the trace sets")
    for n in range(len(h) - 1):
        ba, bb = A.bonds[n].map, B.bonds[n].map
        for x, y in h[n + 1].items():
            if bb[y] != h[n][ba[x]]:
                raise BondIncompatibleH(f"h does not commute with bonds at level {n + 1}")


def extend_homeomorphism(A: Tower, kTrace: ClosedTrace, B: Tower, lTrace: ClosedTrace,
                         h: Sequence[Dict[str, str]], depth: int = 3,
                         extend: bool = True) -> LevelMapFamily:
    """Measure preserving correspondence of ``A`` with ``B`` restricting to ``h``.

    ``h[n]`` is a bijection from ``kTrace``'s level-``n`` atoms to
    ``lTrace``'s, commuting with both towers' bonds.
    """
    for name, tr, t in (("kTrace", kTrace, A), ("lTrace", lTrace, B)):
        if not tr.is_measure_zero_certified(t):
            raise TraceNotMeasureZero(f"{name} lacks a halving schedule")
    h = [dict(x) for x in h]
    check_h(A, kTrace, B, lTrace, h)
    if A == B and kTrace == lTrace and all(all(x == y for x, y in hn.items()) for hn in h):
        fam = _identity_family(A, kTrace, depth)
    else:
        top = len(h) - 1
        ca, cb = A.composite(A.last, max(top, 0)), B.composite(B.last, max(top, 0))
        if top < 0:
            related = lambda x, y: True
        else:
            related = lambda x, y: h[top].get(ca[x]) == cb[y]
        p, q = to_terminal(A.deepest), to_terminal(B.deepest)
        fam = _amalgamate(A, B, p, q, kTrace, lTrace, related, depth, extend)
    fam.receipts = fam.check() + _trace_receipts(fam, A, B, h)
    return fam
