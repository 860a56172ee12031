from fractions import Fraction as F
from itertools import combinations

import pytest
from hypothesis import given, strategies as st

from cantorprob.errors import (EmptyClopen, NotSubset, RatioOutOfRange, ScheduleInsufficient,
                               TracesNotDisjoint, ZeroDenominator)
from cantorprob.generic import (BuildLog, Scheduler, build_generic, conditional, deepen_traces,
                                enumerate_spaces, los_split, positive_atoms, product_tower,
                                realizable, split_avoiding, verify_generic)
from cantorprob.rat import rationals_up_to
from cantorprob.space import validate_morphism
from cantorprob.tower import (Clopen, Tower, canonical, cylinder_measure, lift_clopen,
                              trace_from_deepest)

from test_tower import dyadic


def subset_sums(weights):
    """Oracle: every subset sum by plain enumeration."""
    out = set()
    for k in range(len(weights) + 1):
        for c in combinations(weights, k):
            out.add(sum(c, F(0)))
    return out


def oracle_failures(t: Tower, depth: int, bound: int):
    """Independent genericity check over single-atom clopens."""
    fails = set()
    for level in range(min(depth, t.last) + 1):
        for a in positive_atoms(t.levels[level]):
            deep = t.lift([a], level, t.last)
            sums = subset_sums([t.deepest.weight(x) for x in deep])
            mu = t.levels[level].weight(a)
            for r in rationals_up_to(bound, F(0), mu):
                if r not in sums:
                    fails.add((frozenset(deep), r))
    return fails


@given(st.lists(st.integers(1, 12), min_size=1, max_size=8), st.integers(2, 30))
def test_realizable_matches_enumeration(nums, den):
    ws = [F(n, den) for n in nums]
    targets = [F(k, den * 2) for k in range(0, 2 * sum(nums) + 2)]
    assert realizable(ws, targets) == set(targets) & subset_sums(ws)


@given(st.integers(0, 15), st.integers(1, 15))
def test_los_split_exact_on_dyadic(i, k):
    t = dyadic(4)
    u = canonical(t, 4, t.deepest.atoms[: i + 1])
    mu = cylinder_measure(t, u)
    r = mu * F(k, 16)
    if not 0 < r < mu:
        return
    t2, U0, U1 = los_split(t, u, r)
    L = t2.last
    p0, p1, whole = lift_clopen(t2, U0, L), lift_clopen(t2, U1, L), lift_clopen(t2, u, L)
    assert cylinder_measure(t2, U0) == r and cylinder_measure(t2, U1) == mu - r
    assert not p0 & p1 and p0 | p1 == whole
    assert len(t2) - len(t) <= 1
    for b in t2.bonds:
        validate_morphism(b.domain, b.codomain, b.map)


def test_los_split_errors():
    t = dyadic(1)
    u = canonical(t, 1, ["r0"])
    with pytest.raises(RatioOutOfRange):
        los_split(t, u, F(1, 2))
    with pytest.raises(EmptyClopen):
        los_split(t, Clopen(1, frozenset()), F(1, 4))


def test_conditional():
    t = dyadic(2)
    u = canonical(t, 1, ["r0"])
    a = canonical(t, 2, ["r00"])
    assert conditional(t, u, a) == F(1, 2)
    with pytest.raises(NotSubset):
        conditional(t, a, u)
    with pytest.raises(ZeroDenominator):
        conditional(t, Clopen(1, frozenset()), Clopen(1, frozenset()))


def test_deepen_traces_halves_and_certifies():
    t = dyadic(2)
    a0 = trace_from_deepest(t, ["r00"])
    a1 = trace_from_deepest(t, ["r11"])
    t2, (b0, b1) = deepen_traces(t, [a0, a1], F(1, 20))
    for tr in (b0, b1):
        assert tr.check(t2) == []
        assert tr.measure(t2, t2.last) < F(1, 20)
        assert tr.is_measure_zero_certified(t2)
    with pytest.raises(TracesNotDisjoint):
        deepen_traces(t, [a0, a0], F(1, 20))


def test_split_avoiding_keeps_traces_apart():
    t = dyadic(3)
    w = canonical(t, 0, ["r"])
    a0 = trace_from_deepest(t, ["r000"])
    a1 = trace_from_deepest(t, ["r001"])
    t2, W0, W1 = split_avoiding(t, w, a0, a1, F(1, 3))
    L = t2.last
    assert cylinder_measure(t2, W0) == F(1, 3)
    assert a0.at(t2, L) <= lift_clopen(t2, W0, L)
    assert a1.at(t2, L) <= lift_clopen(t2, W1, L)
    heavy = trace_from_deepest(t, [a for a in t.deepest.atoms if a.startswith("r0")])
    far = trace_from_deepest(t, ["r111"])
    with pytest.raises(ScheduleInsufficient):
        split_avoiding(t, w, heavy, far, F(1, 3))


def test_scheduler_fair_and_deterministic():
    s = Scheduler(6)
    n = s.coverage_index(3, 6)
    it = iter(s)
    first = [next(it) for _ in range(n)]
    assert first == [x for st_ in range(1, s.stage_of(3, 6) + 1) for x in s.stage(st_)]
    wanted = {(lv, i, r) for lv in range(4) for i in range(lv + 1) for r in rationals_up_to(6)}
    assert wanted <= set(first)
    rotated = Scheduler(6, offset=5)
    m = rotated.coverage_index(3, 6)
    it2 = iter(rotated)
    assert m == n and set(next(it2) for _ in range(m)) == set(first)


def test_build_generic_shape():
    log = BuildLog()
    t = build_generic(165, 6, log=log)
    assert not log.skipped and log.splits == t.last
    for n, s in enumerate(t.levels):
        assert len(positive_atoms(s)) == n + 1
    assert all(b.is_prime() for b in t.bonds)
    assert build_generic(165, 6) == t


@pytest.mark.parametrize("budget", [10, 40, 165])
def test_verifier_matches_brute_force(budget):
    t = build_generic(budget, 6)
    rep = verify_generic(t, 3, 6)
    got = {(frozenset(lift_clopen(t, u, t.last)), r) for u, r in rep.failures}
    assert got == oracle_failures(t, 3, 6)


def test_verifier_parallel_equals_serial():
    t = build_generic(40, 6)
    a = verify_generic(t, 3, 6, workers=1)
    b = verify_generic(t, 3, 6, workers=2)
    assert a.to_json() == b.to_json()


def test_enumerate_spaces_prefix():
    it = enumerate_spaces()
    first = [tuple(w for _, w in next(it).items()) for _ in range(5)]
    assert first[0] == (1,)
    assert first[1] == (F(1, 2), F(1, 2))
    assert all(sum(ws) == 1 for ws in first)


def test_product_tower_valid():
    t = product_tower(4)
    for b in t.bonds:
        validate_morphism(b.domain, b.codomain, b.map)
