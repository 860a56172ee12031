import random
from fractions import Fraction

import pytest
from hypothesis import settings, strategies as st

from cantorprob.space import Morphism, ProbSpace

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def random_weights(rng: random.Random, n: int, den: int):
    """``n`` positive weights summing to one, all with denominator dividing ``den``."""
    cuts = sorted(rng.sample(range(1, den), n - 1)) if n > 1 else []
    edges = [0] + cuts + [den]
    return [Fraction(edges[i + 1] - edges[i], den) for i in range(n)]


def random_space(rng, n, den, prefix="a"):
    ws = random_weights(rng, n, den)
    return ProbSpace([(f"{prefix}{i}", w) for i, w in enumerate(ws)])


def random_refinement(rng, Z: ProbSpace, max_size: int, den_cap: int, prefix="x"):
    """A space over ``Z`` with at most ``max_size`` atoms and the map onto ``Z``.

    Each Z-atom of weight ``p/q`` splits into pieces with denominators
    dividing ``q * s`` for a small ``s`` keeping the result within ``den_cap``.
    """
    extra = max_size - len(Z)
    items, mapping = [], {}
    for z, w in Z.items():
        k = 1
        if extra > 0 and rng.random() < 0.6:
            k = rng.randint(1, 1 + min(extra, 3))
        scale = 1
        for s in range(den_cap // w.denominator, 0, -1):
            if (w * w.denominator * s).numerator >= k and w.denominator * s <= den_cap:
                scale = s
                break
        units = w.numerator * scale
        k = min(k, units)
        extra -= k - 1
        cuts = sorted(rng.sample(range(1, units), k - 1)) if k > 1 else []
        edges = [0] + cuts + [units]
        for i in range(k):
            lab = f"{prefix}{len(items)}"
            items.append((lab, Fraction(edges[i + 1] - edges[i], w.denominator * scale)))
            mapping[lab] = z
    X = ProbSpace(items)
    return X, Morphism(X, Z, mapping)


@pytest.fixture
def rng():
    return random.Random(20261015)


@st.composite
def spaces(draw, max_atoms=5, den=24):
    n = draw(st.integers(1, max_atoms))
    cuts = sorted(draw(st.sets(st.integers(1, den - 1), min_size=n - 1, max_size=n - 1))) if n > 1 else []
    edges = [0] + cuts + [den]
    return ProbSpace([(f"s{i}", Fraction(edges[i + 1] - edges[i], den)) for i in range(n)])


@st.composite
def morphisms(draw, max_atoms=6, den=24):
    """Surjection built by merging consecutive atoms of a random space."""
    X = draw(spaces(max_atoms, den))
    n = len(X)
    flags = draw(st.lists(st.booleans(), min_size=n - 1, max_size=n - 1))
    groups, cur = [], [X.atoms[0]]
    for a, cut in zip(X.atoms[1:], flags):
        if cut:
            groups.append(cur)
            cur = [a]
        else:
            cur.append(a)
    groups.append(cur)
    Z = ProbSpace([(f"z{i}", X.mass(g)) for i, g in enumerate(groups)])
    mapping = {a: f"z{i}" for i, g in enumerate(groups) for a in g}
    return Morphism(X, Z, mapping)
