"""Generic towers: splitting, scheduling, verification and the product model.

The limit of a generic tower carries the universal homogeneous rational
measure: every clopen set splits into clopen pieces of any prescribed
positive rational masses.  :func:`build_generic` enforces that property for
a bounded window of split tasks served by a fair :class:`Scheduler`, and
:func:`verify_generic` checks the window without extending the tower.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

from .errors import (EmptyClopen, NotSubset, RatioOutOfRange,
                     ScheduleInsufficient, TracesNotDisjoint, ZeroDenominator)
from .rat import ZERO, lcm_of_denominators, rationals_up_to
from .space import Morphism, ProbSpace
from .tower import (ClosedTrace, Clopen, Tower, canonical, child_labels,
                    cylinder_measure, lift_clopen, split_atom)

WORKERS_ENV = "CANTORPROB_WORKERS"
_BITSET_LIMIT = 1 << 22


@dataclass(frozen=True)
class SplitTask:
    level: int
    atoms: Clopen
    ratio: Fraction


# ---------------------------------------------------------------- subset sums

def realizable(weights: Sequence[Fraction], targets: Iterable[Fraction]) -> set:
    """The targets that are sums of some sub-multiset of ``weights``."""
    targets = set(targets)
    if not targets:
        return set()
    weights = [w for w in weights if w > 0]
    D = lcm_of_denominators(list(weights) + list(targets))
    if D <= _BITSET_LIMIT:
        reach = 1
        top = max(targets) * D
        mask = (1 << (int(top) + 1)) - 1
        for w in weights:
            reach |= (reach << int(w * D)) & mask
        return {r for r in targets if (reach >> int(r * D)) & 1}
    hi = max(targets)
    sums = {ZERO}
    for w in weights:
        sums |= {s + w for s in sums if s + w <= hi}
    return targets & sums


# ---------------------------------------------------------------- (łoś) split

def split_plan(space: ProbSpace, atoms: Sequence[str], r0: Fraction):
    """Greedy apportioning of mass ``r0`` over ``atoms`` in order.

    Returns ``(taken, cut)``: whole atoms going to the first part, and
    ``(atom, amount)`` for the one atom that must be cut (or ``None``).
    """
    acc = ZERO
    taken = []
    for a in atoms:
        w = space.weight(a)
        if acc + w <= r0:
            taken.append(a)
            acc += w
            if acc == r0:
                return taken, None
        else:
            return taken, (a, r0 - acc)
    raise RatioOutOfRange(f"mass {r0} exceeds the atoms' total {acc}")


def los_split(t: Tower, u: Clopen, r0, zero_child: bool = False):
    """Partition clopen ``u`` into clopens of measures ``r0`` and ``m(u) - r0``.

    Works at the deepest level; at most one atom is cut, by appending one
    prime level.  ``zero_child`` (zero-allowed towers only) attaches a third,
    weightless child to the cut atom.  Returns ``(tower, U0, U1)``.
    """
    r0 = Fraction(r0)
    if not u.atoms:
        raise EmptyClopen("cannot split the empty clopen")
    mu = cylinder_measure(t, u)
    if not ZERO < r0 < mu:
        raise RatioOutOfRange(f"need 0 < {r0} < {mu}")
    L = t.last
    deep = lift_clopen(t, u, L)
    D = t.deepest
    order = [a for a in D.atoms if a in deep]
    taken, cut = split_plan(D, [a for a in order if D.weight(a) > 0], r0)
    part0 = set(taken)
    if cut is not None:
        a, amount = cut
        parts = [amount, D.weight(a) - amount]
        if zero_child:
            parts.append(ZERO)
        labels = child_labels(D, a, len(parts))
        t = split_atom(t, a, parts, labels)
        part0.add(labels[0])
        deep = t.bonds[-1].preimage(deep)
        L = t.last
    U0 = canonical(t, L, part0)
    U1 = canonical(t, L, deep - part0)
    return t, U0, U1


def conditional(t: Tower, u: Clopen, a: Clopen) -> Fraction:
    """Relative measure ``m(a) / m(u)`` for ``a`` inside ``u``."""
    m = max(u.level, a.level)
    if not lift_clopen(t, a, m) <= lift_clopen(t, u, m):
        raise NotSubset("a is not contained in u")
    mu = cylinder_measure(t, u)
    if mu == 0:
        raise ZeroDenominator("conditioning on a null clopen")
    return cylinder_measure(t, a) / mu


# ---------------------------------------------------------------- traces

def deepen_traces(t: Tower, traces: Sequence[ClosedTrace], target) -> Tuple[Tower, List[ClosedTrace]]:
    """Halve every nonempty trace until each measures less than ``target``.

    Each pass cuts every trace atom of the deepest level in half (one prime
    level per atom) and keeps the trace in the first half only.  The schedule
    records a halved bound at the end of each pass.
    """
    target = Fraction(target)
    traces = [tr.extend_to(t, t.last) for tr in traces]
    seen = set()
    for tr in traces:
        cur = tr.levels[-1]
        if seen & cur:
            raise TracesNotDisjoint("traces share a deepest-level atom")
        seen |= cur
    while any(tr.levels[-1] and tr.measure(t, t.last) >= target for tr in traces):
        start = []
        for tr in traces:
            if tr.levels[-1] and tr.current_bound() is None:
                tr = tr.with_bound(t.last, tr.measure(t, t.last))
            start.append(tr)
        traces = start
        owner = {}
        for i, tr in enumerate(traces):
            for a in tr.levels[-1]:
                owner[a] = i
        for a in [x for x in t.deepest.atoms if x in owner]:
            w = t.deepest.weight(a)
            labels = child_labels(t.deepest, a)
            t = split_atom(t, a, [w / 2, w / 2], labels)
            i = owner[a]
            nxt = []
            for j, tr in enumerate(traces):
                cur = tr.levels[-1]
                if j == i:
                    cur = (cur - {a}) | {labels[0]}
                nxt.append(tr.routed(cur))
            traces = nxt
        traces = [tr.with_bound(t.last, tr.current_bound() / 2) if tr.levels[-1] else tr
                  for tr in traces]
    return t, traces


def split_avoiding(t: Tower, w: Clopen, a0: ClosedTrace, a1: ClosedTrace, r0):
    """Partition ``w`` into masses ``r0``, ``m(w) - r0`` with trace ``a_i`` in part ``i``.

    The traces' deepest-level hulls are kept whole and the rest of ``w`` is
    split with :func:`los_split`.  Raises :class:`ScheduleInsufficient` when a
    hull is not lighter than its part; :func:`deepen_traces` fixes that.
    """
    r0 = Fraction(r0)
    mw = cylinder_measure(t, w)
    if not ZERO < r0 < mw:
        raise RatioOutOfRange(f"need 0 < {r0} < {mw}")
    r1 = mw - r0
    L = t.last
    W = lift_clopen(t, w, L)
    h0, h1 = a0.at(t, L), a1.at(t, L)
    if not (h0 <= W and h1 <= W):
        raise NotSubset("traces must lie inside w")
    if h0 & h1:
        raise TracesNotDisjoint("trace hulls overlap at the deepest level")
    D = t.deepest
    d0, d1 = D.mass(h0), D.mass(h1)
    if d0 >= r0 or d1 >= r1:
        raise ScheduleInsufficient(
            f"hull masses ({d0}, {d1}) not below parts ({r0}, {r1})")
    rest = canonical(t, L, W - h0 - h1)
    t, V0, V1 = los_split(t, rest, r0 - d0)
    L2 = t.last
    lifted0 = t.lift(h0, L, L2)
    lifted1 = t.lift(h1, L, L2)
    W0 = canonical(t, L2, lift_clopen(t, V0, L2) | lifted0)
    W1 = canonical(t, L2, lift_clopen(t, V1, L2) | lifted1)
    return t, W0, W1


# ---------------------------------------------------------------- scheduler

class Scheduler:
    """Fair, deterministic enumeration of single-atom split tasks.

    A task ``(level, index, r)`` asks for a sub-clopen of mass ``r`` inside
    the ``index``-th positive atom of ``level``.  Stage ``s`` (from 1) admits
    levels ``<= s - 1`` and denominators ``<= min(s + 1, bound)`` and emits
    the tasks not admitted before, ordered by level, atom index, then ``r``
    (denominator first).  ``offset`` rotates the order inside each stage
    without moving stage boundaries.  Level ``l`` of a tower grown by one
    prime split per task has ``l + 1`` positive atoms, which is what makes the
    enumeration independent of the tower.
    """

    def __init__(self, bound: int, offset: int = 0):
        if bound < 1:
            raise ValueError("denominator bound must be >= 1")
        self.bound = bound
        self.offset = offset

    def _den_cap(self, s: int) -> int:
        return min(s + 1, self.bound)

    def stage(self, s: int) -> List[Tuple[int, int, Fraction]]:
        cap, prev_cap = self._den_cap(s), self._den_cap(s - 1) if s > 1 else 0
        tasks = []
        for level in range(s):
            if level == s - 1:
                rs = rationals_up_to(cap)
            else:
                rs = [r for r in rationals_up_to(cap) if r.denominator > prev_cap]
            for i in range(level + 1):
                tasks.extend((level, i, r) for r in rs)
        if tasks and self.offset:
            k = self.offset % len(tasks)
            tasks = tasks[k:] + tasks[:k]
        return tasks

    def __iter__(self) -> Iterator[Tuple[int, int, Fraction]]:
        s = 1
        while True:
            yield from self.stage(s)
            s += 1

    def stage_of(self, depth: int, bound: int) -> int:
        if bound > self.bound:
            raise ValueError("scheduler never emits denominators above its bound")
        return max(depth + 1, bound - 1, 1)

    def coverage_index(self, depth: int, bound: int) -> int:
        """Tasks to run so that every (level <= depth, den <= bound) task is served."""
        return sum(len(self.stage(s)) for s in range(1, self.stage_of(depth, bound) + 1))


def positive_atoms(space: ProbSpace) -> List[str]:
    return [a for a in space.atoms if space.weight(a) > 0]


@dataclass
class BuildLog:
    served: int = 0
    splits: int = 0
    skipped: List[Tuple[int, int, Fraction]] = field(default_factory=list)


def serve_task(t: Tower, task, zero_child: bool = False, log: Optional[BuildLog] = None) -> Tower:
    level, i, r = task
    if log is not None:
        log.served += 1
    if level > t.last:
        if log is not None:
            log.skipped.append(task)
        return t
    atoms = positive_atoms(t.levels[level])
    if i >= len(atoms):
        if log is not None:
            log.skipped.append(task)
        return t
    u = canonical(t, level, [atoms[i]])
    mu = cylinder_measure(t, u)
    if r >= mu:
        return t
    deep = lift_clopen(t, u, t.last)
    D = t.deepest
    if realizable([D.weight(a) for a in deep], [r]):
        return t
    t, _, _ = los_split(t, u, r, zero_child=zero_child)
    if log is not None:
        log.splits += 1
    return t


def build_generic(budget: int, bound: int, offset: int = 0,
                  zero_allowed: bool = False, log: Optional[BuildLog] = None) -> Tower:
    """Run the scheduler for ``budget`` tasks starting from the one-point space."""
    if budget < 0:
        raise ValueError("budget must be >= 0")
    t = Tower.single()
    sched = iter(Scheduler(bound, offset))
    for _ in range(budget):
        t = serve_task(t, next(sched), zero_child=zero_allowed, log=log)
    return t


# ---------------------------------------------------------------- verifier

@dataclass
class GenericityReport:
    depth: int
    bound: int
    family: str
    checked: int = 0
    clopens: int = 0
    failures: List[Tuple[Clopen, Fraction]] = field(default_factory=list)
    measured: List[Tuple[Fraction, Fraction]] = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return not self.failures

    def profile(self):
        """Failure list keyed by clopen measure and target (label free)."""
        return sorted((str(m), str(r)) for m, r in self.measured)

    def to_json(self):
        return {
            "depth": self.depth, "bound": self.bound, "family": self.family,
            "checked": self.checked, "clopens": self.clopens,
            "failure_count": len(self.failures),
            "failures": [{"level": u.level, "atoms": sorted(u.atoms),
                          "ratio": f"{r.numerator}/{r.denominator}"}
                         for u, r in self.failures],
        }


def _candidate_clopens(t: Tower, depth: int, family: str) -> List[Clopen]:
    top = min(depth, t.last)
    seen = {}
    if family == "atoms":
        for level in range(top + 1):
            for a in positive_atoms(t.levels[level]):
                u = canonical(t, level, [a])
                seen.setdefault((u.level, tuple(sorted(u.atoms))), u)
    elif family == "all":
        atoms = positive_atoms(t.levels[top])
        for k in range(1, len(atoms) + 1):
            for combo in combinations(atoms, k):
                u = canonical(t, top, combo)
                seen.setdefault((u.level, tuple(sorted(u.atoms))), u)
    else:
        raise ValueError(f"unknown clopen family {family!r}")
    return [seen[k] for k in sorted(seen)]


def _check_clopen(args):
    weights, mu, bound = args
    targets = rationals_up_to(bound, ZERO, mu)
    ok = realizable(weights, targets)
    return len(targets), [r for r in targets if r not in ok]


def verify_generic(t: Tower, depth: int, bound: int, family: str = "atoms",
                   workers: Optional[int] = None) -> GenericityReport:
    """Check the split window without extending ``t``.

    For every clopen of the family at levels ``<= depth`` and every rational
    ``r`` with denominator ``<= bound`` and ``0 < r < m(u)``, report whether
    some clopen inside ``u`` already has measure ``r``.  ``family="atoms"``
    checks the single-atom generators; ``"all"`` every union of atoms.
    """
    rep = GenericityReport(depth, bound, family)
    us = _candidate_clopens(t, depth, family)
    D = t.deepest
    jobs = []
    for u in us:
        deep = lift_clopen(t, u, t.last)
        jobs.append(([D.weight(a) for a in sorted(deep)], cylinder_measure(t, u), bound))
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_check_clopen, jobs))
    else:
        results = [_check_clopen(j) for j in jobs]
    rep.clopens = len(us)
    measured = []
    for u, (n, fails), job in zip(us, results, jobs):
        rep.checked += n
        for r in fails:
            rep.failures.append((u, r))
            measured.append((job[1], r))
    rep.measured = measured
    return rep


# ---------------------------------------------------------------- product model

def _partitions(total: int, k: int, smallest: int = 1):
    """Nondecreasing k-tuples of positive integers summing to ``total``."""
    if k == 1:
        if total >= smallest:
            yield (total,)
        return
    for first in range(smallest, total // k + 1):
        for rest in _partitions(total - first, k - 1, first):
            yield (first,) + rest


def enumerate_spaces() -> Iterator[ProbSpace]:
    """All finite strictly positive rational spaces up to isomorphism.

    Ordered by common denominator, then atom count, then the ascending
    weight tuple.  Atoms are labelled ``"0", "1", ...``.
    """
    D = 1
    while True:
        for k in range(1, D + 1):
            for parts in _partitions(D, k):
                ws = [Fraction(p, D) for p in parts]
                if lcm_of_denominators(ws) != D:
                    continue
                yield ProbSpace([(str(i), w) for i, w in enumerate(ws)], check=False)
        D += 1


def product_tower(level_count: int) -> Tower:
    """Level ``k`` is the product of the first ``k + 1`` enumerated spaces."""
    if level_count < 1:
        raise ValueError("need at least one level")
    spaces = enumerate_spaces()
    first = next(spaces)
    levels = [first]
    bonds = []
    for _ in range(level_count - 1):
        F = next(spaces)
        prev = levels[-1]
        items, mapping = [], {}
        for x, y in product(prev.atoms, F.atoms):
            lab = f"{x}:{y}"
            items.append((lab, prev.weight(x) * F.weight(y)))
            mapping[lab] = x
        sp = ProbSpace(items, check=False)
        bonds.append(Morphism(sp, prev, mapping, check=False))
        levels.append(sp)
    return Tower(levels, bonds)
