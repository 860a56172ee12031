"""Finite rational probability spaces and measure preserving surjections.

A :class:`ProbSpace` is a finite ordered set of string-labelled atoms with
exact rational weights summing to one.  A :class:`Morphism` is a surjection
between two spaces whose fibers carry exactly the mass of their image atom.
Both are immutable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

from .errors import (CodomainMismatch, DuplicateLabel, FiberSumMismatch,
                     NotSurjective, SquareDoesNotCommute, WeightsDoNotSumToOne,
                     ZeroOrNegativeWeight)
from .rat import ONE, ZERO, rat


class ProbSpace:
    """Finite probability space with strictly positive rational weights.

    ``allow_zero=True`` switches to the zero-allowed validation mode where
    weights may vanish (they still sum to one).
    """

    __slots__ = ("atoms", "_weight", "allow_zero", "_hash")

    def __init__(self, weights: Iterable[Tuple[str, object]],
                 allow_zero: bool = False, check: bool = True):
        atoms = []
        table: Dict[str, Fraction] = {}
        for label, w in weights:
            label = str(label)
            if label in table:
                raise DuplicateLabel(label)
            table[label] = rat(w)
            atoms.append(label)
        self.atoms: Tuple[str, ...] = tuple(atoms)
        self._weight = table
        self.allow_zero = allow_zero
        self._hash = None
        if check:
            self._validate()

    def _validate(self):
        if not self.atoms:
            raise WeightsDoNotSumToOne("a probability space needs an atom")
        for a in self.atoms:
            w = self._weight[a]
            if w < 0 or (w == 0 and not self.allow_zero):
                raise ZeroOrNegativeWeight(f"atom {a!r} has weight {w}")
        total = sum(self._weight.values(), ZERO)
        if total != ONE:
            raise WeightsDoNotSumToOne(f"weights sum to {total}")

    def weight(self, atom: str) -> Fraction:
        return self._weight[atom]

    def mass(self, atoms: Iterable[str]) -> Fraction:
        w = self._weight
        return sum((w[a] for a in atoms), ZERO)

    def items(self):
        return [(a, self._weight[a]) for a in self.atoms]

    def weights(self) -> Dict[str, Fraction]:
        return dict(self._weight)

    def __contains__(self, atom) -> bool:
        return atom in self._weight

    def __len__(self) -> int:
        return len(self.atoms)

    def __iter__(self):
        return iter(self.atoms)

    def __eq__(self, other):
        if not isinstance(other, ProbSpace):
            return NotImplemented
        return self.atoms == other.atoms and self._weight == other._weight

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(self.items()))
        return self._hash

    def __repr__(self):
        body = ", ".join(f"{a}: {w}" for a, w in self.items())
        return f"ProbSpace({{{body}}})"


def new_space(weights: Sequence[Tuple[str, object]],
              allow_zero: bool = False) -> ProbSpace:
    """Validated space with atoms in the order given."""
    return ProbSpace(weights, allow_zero=allow_zero)


def terminal() -> ProbSpace:
    return ProbSpace([("0", ONE)], check=False)


class Morphism:
    """Measure preserving surjection ``domain -> codomain``.

    Construct through :func:`validate_morphism` unless the map is known to be
    valid (``check=False`` is for internal builders that preserve the laws by
    construction).
    """

    __slots__ = ("domain", "codomain", "map", "_fibers")

    def __init__(self, domain: ProbSpace, codomain: ProbSpace,
                 mapping: Mapping[str, str], check: bool = True):
        self.domain = domain
        self.codomain = codomain
        self.map: Dict[str, str] = dict(mapping)
        self._fibers = None
        if check:
            _check_morphism(self)

    def __call__(self, atom: str) -> str:
        return self.map[atom]

    @property
    def fibers(self) -> Dict[str, Tuple[str, ...]]:
        """Codomain atom -> domain atoms over it, in domain order."""
        if self._fibers is None:
            fib: Dict[str, list] = {s: [] for s in self.codomain.atoms}
            for a in self.domain.atoms:
                fib[self.map[a]].append(a)
            self._fibers = {s: tuple(v) for s, v in fib.items()}
        return self._fibers

    def preimage(self, atoms: Iterable[str]) -> frozenset:
        fib = self.fibers
        out = set()
        for s in atoms:
            out.update(fib[s])
        return frozenset(out)

    def image(self, atoms: Iterable[str]) -> frozenset:
        return frozenset(self.map[a] for a in atoms)

    def compose(self, inner: "Morphism") -> "Morphism":
        """``self ∘ inner``; closure of the category keeps the laws."""
        if inner.codomain != self.domain:
            raise CodomainMismatch("inner codomain differs from outer domain")
        m = {a: self.map[inner.map[a]] for a in inner.domain.atoms}
        return Morphism(inner.domain, self.codomain, m, check=False)

    def is_prime(self) -> bool:
        sizes = sorted(len(f) for f in self.fibers.values())
        return bool(sizes) and sizes[-1] == 2 and (len(sizes) < 2 or sizes[-2] == 1)

    def __eq__(self, other):
        if not isinstance(other, Morphism):
            return NotImplemented
        return (self.domain == other.domain and self.codomain == other.codomain
                and self.map == other.map)

    def __hash__(self):
        return hash((self.domain, self.codomain,
                     tuple(sorted(self.map.items()))))

    def __repr__(self):
        return f"Morphism({len(self.domain)} -> {len(self.codomain)} atoms)"


def _check_morphism(f: Morphism):
    dom, cod = f.domain, f.codomain
    missing = [a for a in dom.atoms if a not in f.map]
    if missing:
        raise NotSurjective(f"map undefined on {missing[:3]}")
    extra = set(f.map) - set(dom.atoms)
    if extra:
        raise NotSurjective(f"map defined outside the domain: {sorted(extra)[:3]}")
    mass: Dict[str, Fraction] = {}
    for a in dom.atoms:
        s = f.map[a]
        if s not in cod:
            raise NotSurjective(f"{a!r} maps to {s!r}, not an atom of the codomain")
        mass[s] = mass.get(s, ZERO) + dom.weight(a)
    uncovered = [s for s in cod.atoms if s not in mass]
    if uncovered:
        raise NotSurjective(f"codomain atoms {uncovered[:3]} are not covered")
    for s in cod.atoms:
        if mass[s] != cod.weight(s):
            raise FiberSumMismatch(s, cod.weight(s), mass[s])


def validate_morphism(domain: ProbSpace, codomain: ProbSpace,
                      mapping: Mapping[str, str]) -> Morphism:
    return Morphism(domain, codomain, mapping, check=True)


def identity(space: ProbSpace) -> Morphism:
    return Morphism(space, space, {a: a for a in space.atoms}, check=False)


def to_terminal(space: ProbSpace) -> Morphism:
    t = terminal()
    return Morphism(space, t, {a: "0" for a in space.atoms}, check=False)


def pair_label(x: str, y: str) -> str:
    return f"({x},{y})"


@dataclass(frozen=True)
class Pullback:
    space: ProbSpace
    proj_left: Morphism
    proj_right: Morphism
    pairs: Tuple[Tuple[str, str], ...]

    def label(self, x: str, y: str) -> str:
        return pair_label(x, y)


def pullback(f: Morphism, g: Morphism) -> Pullback:
    """Fiber product of ``f: X -> Z`` and ``g: Y -> Z``.

    Atom ``(x, y)`` with ``f(x) = g(y) = z`` gets weight ``w(x) w(y) / w(z)``.
    In zero-allowed mode an atom over a zero-weight ``z`` gets weight zero.
    """
    if f.codomain != g.codomain:
        raise CodomainMismatch("pullback needs arrows into the same space")
    Z, X, Y = f.codomain, f.domain, g.domain
    gfib = g.fibers
    items, left, right, pairs = [], {}, {}, []
    for x in X.atoms:
        z = f.map[x]
        wz = Z.weight(z)
        for y in gfib[z]:
            w = ZERO if wz == 0 else X.weight(x) * Y.weight(y) / wz
            lab = pair_label(x, y)
            items.append((lab, w))
            left[lab] = x
            right[lab] = y
            pairs.append((x, y))
    allow_zero = X.allow_zero or Y.allow_zero or Z.allow_zero
    W = ProbSpace(items, allow_zero=allow_zero, check=False)
    return Pullback(W, Morphism(W, X, left, check=False),
                    Morphism(W, Y, right, check=False), tuple(pairs))


def pullback_mediator(p: Morphism, q: Morphism, pb: Pullback) -> Morphism:
    """The unique ``h: S -> W`` with ``proj_left∘h = p`` and ``proj_right∘h = q``.

    ``h`` is only a map of atoms: it need not preserve measure or be onto, so
    the result is returned unvalidated.
    """
    if p.domain != q.domain:
        raise CodomainMismatch("p and q need a common domain")
    X, Y = pb.proj_left.codomain, pb.proj_right.codomain
    if p.codomain != X or q.codomain != Y:
        raise CodomainMismatch("p, q must land in the pullback's factors")
    h = {}
    members = set(pb.pairs)
    for s in p.domain.atoms:
        x, y = p.map[s], q.map[s]
        if (x, y) not in members:
            raise SquareDoesNotCommute(f"f({x}) != g({y}) at {s!r}")
        h[s] = pair_label(x, y)
    return Morphism(p.domain, pb.space, h, check=False)


def prime_decompose(f: Morphism) -> list:
    """Factor ``f`` into prime surjections ``g_1, ..., g_k``.

    ``g_1 ∘ ... ∘ g_k == f``; ``g_1`` has codomain ``f.codomain`` and ``g_k``
    has domain ``f.domain``.  At each step the first codomain group (in
    codomain order) with two or more members gives up its lexicographically
    last member as a new atom.
    """
    X, D = f.codomain, f.domain
    fib = f.fibers
    # groups: ordered list of (codomain atom, sorted member list)
    groups = [(s, sorted(fib[s])) for s in X.atoms]
    prev_space = X
    prev_label = {s: s for s in X.atoms}  # group key -> label in prev space
    factors = []
    while True:
        idx = next((i for i, (_, mem) in enumerate(groups) if len(mem) >= 2), None)
        if idx is None:
            break
        key, members = groups[idx]
        peeled = members[-1]
        new_groups = list(groups)
        new_groups[idx] = (key, members[:-1])
        new_groups.insert(idx + 1, ("\x00" + peeled, [peeled]))
        labels = _group_labels(new_groups)
        items = [(labels[k], D.mass(mem)) for k, mem in new_groups]
        space = ProbSpace(items, check=False)
        mapping = {}
        for k, _ in new_groups:
            parent = key if k == "\x00" + peeled else k
            mapping[labels[k]] = prev_label[parent]
        factors.append(Morphism(space, prev_space, mapping, check=False))
        groups, prev_space, prev_label = new_groups, space, labels
    if factors:
        # the last space is D with its atoms in group order; use D itself
        last = factors[-1]
        factors[-1] = Morphism(D, last.codomain, last.map, check=False)
    return factors


def _group_labels(groups) -> Dict[str, str]:
    """Singleton groups take their member's label, others the codomain label."""
    labels = {}
    used = set()
    for key, mem in groups:
        if len(mem) == 1:
            labels[key] = mem[0]
            used.add(mem[0])
    for key, mem in groups:
        if len(mem) != 1:
            lab = key
            while lab in used:
                lab += "*"
            labels[key] = lab
            used.add(lab)
    return labels


def compose_all(factors: Sequence[Morphism]) -> Morphism:
    """``factors[0] ∘ factors[1] ∘ ...``."""
    out = factors[-1]
    for g in reversed(factors[:-1]):
        out = g.compose(out)
    return out


def iso_check(S: ProbSpace, T: ProbSpace) -> Optional[Dict[str, str]]:
    """First weight preserving bijection ``S -> T`` in lexicographic order.

    Equal-weight atoms are interchangeable, so greedy matching in atom order
    finds the lexicographically first bijection whenever one exists.
    """
    if len(S) != len(T):
        return None
    free = list(T.atoms)
    out = {}
    for a in S.atoms:
        w = S.weight(a)
        for i, b in enumerate(free):
            if T.weight(b) == w:
                out[a] = b
                del free[i]
                break
        else:
            return None
    return out
