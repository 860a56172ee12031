from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from cantorprob.errors import BondMismatch, LevelOutOfRange, NonSurjectiveBond
from cantorprob.space import new_space, validate_morphism
from cantorprob.tower import (ClosedTrace, Clopen, LevelMapFamily, Tower, canonical,
                              clopen_algebra_op, complement, cylinder_measure, empty_trace,
                              equip_measure, lift_clopen, split_atom, trace_from_deepest,
                              whole)


def dyadic(depth):
    levels = [["r"]]
    bonds = []
    for _ in range(depth):
        nxt = [a + s for a in levels[-1] for s in "01"]
        bonds.append({a: a[:-1] for a in nxt})
        levels.append(nxt)
    return equip_measure(levels, bonds)


def test_equip_measure_uniform_split():
    t = dyadic(3)
    assert [len(s) for s in t.levels] == [1, 2, 4, 8]
    assert all(w == F(1, 8) for _, w in t.deepest.items())
    with pytest.raises(NonSurjectiveBond):
        equip_measure([["a", "b"], ["c"]], [{"c": "a"}])


def test_tower_rejects_bad_bond():
    t = dyadic(1)
    with pytest.raises(BondMismatch):
        Tower([t.levels[0], t.levels[1]], [])
    with pytest.raises(LevelOutOfRange):
        t.level(5)


def test_composite_and_lift():
    t = dyadic(3)
    c = t.composite(3, 1)
    assert c["r011"] == "r0"
    assert t.lift(["r1"], 1, 3) == {"r100", "r101", "r110", "r111"}
    assert t.project(["r100", "r011"], 3, 1) == {"r1", "r0"}


def test_canonical_descends_to_coarsest():
    t = dyadic(3)
    u = canonical(t, 3, ["r000", "r001", "r010", "r011"])
    assert u == Clopen(1, frozenset(["r0"]))
    v = canonical(t, 3, ["r000", "r001", "r111"])
    assert v.level == 2 or v.level == 3
    assert lift_clopen(t, v, 3) == {"r000", "r001", "r111"}


@given(st.sets(st.integers(0, 15), min_size=1))
def test_cylinder_measure_level_independent(idx):
    t = dyadic(4)
    atoms = [t.deepest.atoms[i] for i in sorted(idx)]
    u = canonical(t, 4, atoms)
    expect = F(len(atoms), 16)
    assert cylinder_measure(t, u) == expect
    assert t.deepest.mass(lift_clopen(t, u, 4)) == expect


def test_clopen_algebra():
    t = dyadic(2)
    a = canonical(t, 1, ["r0"])
    b = canonical(t, 2, ["r01", "r10"])
    inter = clopen_algebra_op(t, a, b, "intersection")
    assert lift_clopen(t, inter, 2) == {"r01"}
    uni = clopen_algebra_op(t, a, b, "union")
    assert cylinder_measure(t, uni) == F(3, 4)
    diff = clopen_algebra_op(t, a, b, "difference")
    assert lift_clopen(t, diff, 2) == {"r00"}
    assert cylinder_measure(t, complement(t, a)) == F(1, 2)
    assert cylinder_measure(t, whole(t)) == 1


def test_split_atom_prime_and_cache_isolation():
    t = dyadic(1)
    a = split_atom(t, "r0", [F(1, 8), F(3, 8)])
    b = split_atom(t, "r1", [F(1, 4), F(1, 4)])
    assert a.bonds[-1].is_prime() and b.bonds[-1].is_prime()
    validate_morphism(a.deepest, a.levels[1], a.bonds[-1].map)
    # siblings built from one parent must not share composite maps
    assert set(a.composite(2, 0)) == set(a.deepest.atoms)
    assert set(b.composite(2, 0)) == set(b.deepest.atoms)


def test_closed_trace_schedule_checks():
    t = dyadic(3)
    tr = ClosedTrace((frozenset({"r"}), frozenset({"r0"}), frozenset({"r00"}), frozenset({"r000"})),
                     ((1, F(1, 2)), (2, F(1, 4)), (3, F(1, 8))))
    assert tr.check(t) == [] and tr.is_measure_zero_certified(t)
    bad = ClosedTrace(tr.levels, ((1, F(1, 2)), (2, F(1, 3))))
    assert any("halve" in p for p in bad.check(t))
    broken = ClosedTrace((frozenset({"r"}), frozenset({"r0"}), frozenset({"r11"})))
    assert any("incompatible" in p for p in broken.check(t))
    assert empty_trace(t).is_measure_zero_certified(t)
    assert tr.at(t, 3) == {"r000"}
    d = trace_from_deepest(t, ["r000", "r111"])
    assert d.levels[1] == {"r0", "r1"}


def test_level_map_family_checks():
    t = dyadic(2)
    ident = LevelMapFamily(t, t, [(0, 0), (1, 1), (2, 2)],
                           [{a: a for a in s.atoms} for s in t.levels])
    assert ident.check() == [] and ident.is_identity()
    swap = {"r00": "r10", "r01": "r11", "r10": "r00", "r11": "r01"}
    fam = LevelMapFamily(t, t, [(1, 1), (2, 2)], [{"r0": "r1", "r1": "r0"}, swap])
    assert fam.check() == []
    assert fam.then(fam.inverse()).is_identity()
    bad = LevelMapFamily(t, t, [(1, 1), (2, 2)], [{"r0": "r0", "r1": "r1"}, swap])
    assert any("commute" in p for p in bad.check())
