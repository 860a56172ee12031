from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from cantorprob.errors import NonMAdicInput, PreconditionViolated, ZAtomNotPowerDenominator
from cantorprob.generic import build_generic, verify_generic
from cantorprob.space import Morphism, ProbSpace, to_terminal, validate_morphism
from cantorprob.tower import Tower, split_atom
from cantorprob.valueset import (all_rationals, check_closure_star, check_h_conditions,
                                 classify_finite, custom, finite, madic, madic_pullback_guard,
                                 parse_kind, rationals_with_zero, support, uniform_space)


def test_closure_star_dyadic_counterexample():
    rep = check_closure_star(madic(2), 4)
    assert rep["violation"] == [F(1, 2), F(1, 2), F(3, 4)] and rep["value"] == F(1, 3)


@pytest.mark.parametrize("bound", [2, 5, 9])
def test_closure_star_all_rationals(bound):
    assert check_closure_star(all_rationals(), bound)["closed"]


def test_closure_star_half_and_one():
    # 1/2 * 1/2 / 1 = 1/4 is outside {1/2, 1}
    rep = check_closure_star(finite(["1/2", "1"]), 4)
    assert not rep["closed"] and rep["value"] == F(1, 4)


def test_h_conditions_examples():
    bad = check_h_conditions(finite(["2/5", "3/5", "1"]))
    assert not bad["H1"]["ok"] and bad["H1"]["witness"][2] == F(1, 5)
    good = check_h_conditions(finite(["1/4", "2/4", "3/4", "1"]))
    assert all(good[k]["ok"] for k in ("H0", "H1", "H2", "implication"))
    assert all(check_h_conditions(all_rationals(), 7)[k]["ok"] for k in ("H0", "H1", "H2"))


def test_classify_finite():
    assert classify_finite(finite(["1/5", "2/5", "3/5", "4/5", "1"])) == 5
    assert classify_finite(finite(["1"])) == 1
    with pytest.raises(PreconditionViolated) as info:
        classify_finite(finite(["2/5", "3/5", "1"]))
    assert info.value.report["H1"]["ok"] is False


def test_uniform_space():
    assert uniform_space(1).items() == [("0", 1)]
    assert all(w == F(1, 4) for _, w in uniform_space(4).items())


def _set_partitions(items):
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[head] + part[i]] + part[i + 1:]
        yield [[head]] + part


def test_uniform_six_quotients_respect_values():
    X = uniform_space(6)
    v = finite([F(k, 6) for k in range(1, 7)])
    count = 0
    for blocks in _set_partitions(list(X.atoms)):
        Z = ProbSpace([(f"b{i}", X.mass(b)) for i, b in enumerate(blocks)])
        assert all(v.contains(w) for _, w in Z.items())
        validate_morphism(X, Z, {a: f"b{i}" for i, b in enumerate(blocks) for a in b})
        count += 1
    assert count == 203


def test_madic_guard():
    Z = ProbSpace([("z0", F(1, 2)), ("z1", F(1, 2))])
    X = ProbSpace([("x0", F(1, 4)), ("x1", F(1, 4)), ("x2", F(1, 2))])
    Y = ProbSpace([("y0", F(1, 8)), ("y1", F(3, 8)), ("y2", F(1, 2))])
    f = Morphism(X, Z, {"x0": "z0", "x1": "z0", "x2": "z1"})
    g = Morphism(Y, Z, {"y0": "z0", "y1": "z0", "y2": "z1"})
    pb = madic_pullback_guard(f, g, 2)
    assert pb.space.weight("(x0,y0)") == F(1, 16)
    Z3 = ProbSpace([("z0", F(3, 4)), ("z1", F(1, 4))])
    X3 = ProbSpace([("x0", F(1, 2)), ("x1", F(1, 4)), ("x2", F(1, 4))])
    f3 = Morphism(X3, Z3, {"x0": "z0", "x1": "z0", "x2": "z1"})
    with pytest.raises(ZAtomNotPowerDenominator):
        madic_pullback_guard(f3, f3, 2)
    T = ProbSpace([("a", F(1, 3)), ("b", F(2, 3))])
    with pytest.raises(NonMAdicInput):
        madic_pullback_guard(to_terminal(T), to_terminal(T), 2)


@given(st.sampled_from([2, 3, 5]), st.data())
def test_madic_guard_over_terminal(m, data):
    def space(tag):
        n = data.draw(st.integers(1, 4))
        den = m ** data.draw(st.integers(1, 3))
        if den < n:
            n = 1
        cuts = sorted(data.draw(st.sets(st.integers(1, den - 1), min_size=n - 1, max_size=n - 1))) if n > 1 else []
        edges = [0] + cuts + [den]
        return ProbSpace([(f"{tag}{i}", F(edges[i + 1] - edges[i], den)) for i in range(n)])
    pb = madic_pullback_guard(to_terminal(space("x")), to_terminal(space("y")), m)
    for _, w in pb.space.items():
        d = w.denominator
        while d % m == 0:
            d //= m
        assert d == 1


def test_parse_kind_and_members():
    assert parse_kind("madic:3").m == 3
    assert parse_kind("finite:1/2,1").values == (F(1, 2), F(1))
    assert F(0) in rationals_with_zero().members(3)
    v = custom(lambda r: r.denominator % 2 == 0 or r == 1, lambda b: [F(1, 2), F(1, 4), F(1)])
    assert v.members(4) == [F(1), F(1, 2), F(1, 4)]


def test_support_prunes_zero_atoms():
    t = Tower.single()
    t = split_atom(t, "0", [F(1, 2), F(1, 2), F(0)])
    pruned, removed = support(t)
    assert pruned.deepest.atoms == ("0.0", "0.1")
    assert removed.levels[-1] == {"0.2"}
    positive = build_generic(30, 4)
    same, empty = support(positive)
    assert same == positive and empty.is_empty()


def test_support_of_zero_allowed_build_matches_positive_build():
    z = build_generic(165, 6, zero_allowed=True)
    pruned, _ = support(z)
    a = verify_generic(pruned, 3, 6)
    b = verify_generic(build_generic(165, 6), 3, 6)
    assert a.profile() == b.profile()
