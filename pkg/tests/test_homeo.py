from fractions import Fraction as F

import pytest

from cantorprob.errors import (AnchorIncompatible, BondIncompatibleH, CodomainMismatch,
                               InsufficientCoverage, InsufficientGenericity, NotPrime,
                               PartitionMeasureMismatch, TraceMismatch, TraceNotMeasureZero)
from cantorprob.generic import build_generic, deepen_traces
from cantorprob.homeo import (build_generic_embedding, build_retraction, extend_along_prime,
                              extend_homeomorphism, homogeneity_map, remeasure)
from cantorprob.space import ProbSpace, to_terminal, validate_morphism
from cantorprob.tower import (ClosedTrace, Tower, canonical, empty_trace, equip_measure,
                              lift_clopen, trace_from_deepest)

from test_tower import dyadic


def test_extend_along_prime_without_anchor():
    t = Tower.single()
    Y = ProbSpace([("a", F(1, 3)), ("b", F(2, 3))])
    t2, h, anchor = extend_along_prime(t, to_terminal(t.deepest), to_terminal(Y))
    assert anchor == {}
    validate_morphism(t2.deepest, Y, h.map)


def test_extend_along_prime_routes_anchor():
    t = dyadic(2)
    Y = ProbSpace([("a", F(1, 3)), ("b", F(2, 3))])
    g = to_terminal(t.deepest)
    anchor = {"p": "r00", "q": "r11"}
    b = {"p": "b", "q": "a"}
    t2, h, a2 = extend_along_prime(t, g, to_terminal(Y), b, anchor)
    validate_morphism(t2.deepest, Y, h.map)
    assert {x: h.map[c] for x, c in a2.items()} == b
    comp = t2.composite(t2.last, 2)
    assert comp[a2["p"]] == "r00" and comp[a2["q"]] == "r11"


def test_extend_along_prime_errors():
    t = dyadic(1)
    Y = ProbSpace([("a", F(1, 3)), ("b", F(1, 3)), ("c", F(1, 3))])
    with pytest.raises(NotPrime):
        extend_along_prime(t, to_terminal(t.deepest), to_terminal(Y))
    Y2 = ProbSpace([("a", F(1, 3)), ("b", F(2, 3))])
    with pytest.raises(CodomainMismatch):
        extend_along_prime(t, to_terminal(t.levels[0]), to_terminal(Y2))
    with pytest.raises(AnchorIncompatible):
        extend_along_prime(t, to_terminal(t.deepest), to_terminal(Y2), {"p": "a"}, {})


@pytest.mark.parametrize("weights", [
    [("0", F(1))],
    [("x", F(1, 3)), ("y", F(2, 3))],
    [("x", F(1, 2)), ("y", F(1, 3)), ("z", F(1, 6))],
])
def test_embedding_then_retraction(weights):
    k = Tower.single(ProbSpace(weights))
    w = build_generic_embedding(k, 45)
    assert w.check() == []
    assert w.trace().is_measure_zero_certified(w.base)
    r = build_retraction(w)
    assert r.receipts == []


def test_embedding_of_two_level_anchor():
    k = equip_measure([["a", "b"], ["a0", "a1", "b0"]], [{"a0": "a", "a1": "a", "b0": "b"}])
    w = build_generic_embedding(k, 60)
    assert w.covered == 1 and w.check() == []
    r = build_retraction(w)
    assert r.receipts == [] and len(r.maps) == 2
    p = remeasure(k, [ProbSpace([("a", F(1, 5)), ("b", F(4, 5))]),
                      ProbSpace([("a0", F(1, 10)), ("a1", F(1, 10)), ("b0", F(4, 5))])])
    assert build_retraction(w, p).receipts == []


def test_retraction_needs_coverage():
    k = Tower.single(ProbSpace([("x", F(1, 3)), ("y", F(2, 3))]))
    w = build_generic_embedding(k, 0)
    with pytest.raises(InsufficientCoverage):
        build_retraction(w)


def _partition_case():
    t = build_generic(165, 6)
    a = t.deepest.atoms
    U = [canonical(t, t.last, [a[0]]), canonical(t, t.last, a[1:])]
    V = [canonical(t, t.last, [a[6]]), canonical(t, t.last, [x for x in a if x != a[6]])]
    return t, U, V, a


def test_homogeneity_images_and_trace():
    t, U, V, a = _partition_case()
    k = trace_from_deepest(t, [a[3]])
    fam = homogeneity_map(t, U, V, k, 3)
    assert fam.receipts == [] and fam.depth == 3
    for j, (n, m) in enumerate(fam.pairs):
        for u, v in zip(U, V):
            assert fam.image(j, lift_clopen(fam.source, u, n)) == lift_clopen(fam.target, v, m)


def test_homogeneity_identity_when_partitions_agree():
    t, U, _, _ = _partition_case()
    fam = homogeneity_map(t, U, U, None, 2)
    assert fam.is_identity() and fam.receipts == []


def test_homogeneity_errors():
    t, U, V, a = _partition_case()
    with pytest.raises(PartitionMeasureMismatch):
        homogeneity_map(t, U, list(reversed(V)), None, 1)
    with pytest.raises(TraceMismatch):
        homogeneity_map(t, U, V, trace_from_deepest(t, [a[0]]), 1)
    with pytest.raises(InsufficientGenericity) as info:
        homogeneity_map(t, U, V, None, 1, extend=False)
    assert info.value.tasks


def test_extend_homeomorphism_identity_and_round_trip():
    A = build_generic(165, 6)
    ident = extend_homeomorphism(A, empty_trace(A), A, empty_trace(A), [], 2)
    assert ident.is_identity()
    B = build_generic(165, 6, offset=3)
    fam = extend_homeomorphism(A, empty_trace(A), B, empty_trace(B), [], 2)
    assert fam.receipts == []
    assert fam.then(fam.inverse()).is_identity()
    assert fam.inverse().then(fam).is_identity()


def test_extend_homeomorphism_errors():
    t = dyadic(2)
    heavy = trace_from_deepest(t, ["r00"])
    with pytest.raises(TraceNotMeasureZero):
        extend_homeomorphism(t, heavy, t, heavy, [], 1)
    t2, (k, l) = deepen_traces(t, [heavy, trace_from_deepest(t, ["r11"])], F(1, 16))
    h = [{"r": "r"}, {"r0": "r0"}]
    with pytest.raises(BondIncompatibleH):
        extend_homeomorphism(t2, k, t2, l, h, 1)
