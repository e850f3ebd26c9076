import random
from itertools import product
from math import comb, factorial

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraisse_eq.generic import (
    SearchLimitError,
    check_extension_property,
    enumerate_members,
    local_type,
    one_point_extensions,
    random_member,
    realize_class_maps,
    saturate,
)
from fraisse_eq.iso import automorphisms, induced_class_map, is_embedding
from fraisse_eq.structure import K0, ClassSpec, FinStructure, StructureError, encode, from_classes, induced, relabel, validate

from oracles import brute_force_k0_codes, structure_code

P3 = ClassSpec({3})
ORD = ClassSpec(max_arity=2, allow_point_order=True)


def expected_extension_count(A: FinStructure) -> int:
    """Count one-point extensions with A fixed: per arity, label the new subsets
    with old classes or fresh ones (fresh up to renaming), times the ways to
    insert fresh classes into an existing class order."""
    spec, m = A.spec, A.universe
    total = 1
    for n in spec.tracked(m + 1):
        items = comb(m, n - 1)
        k = A.num_classes(n) if n in A.relations else 0
        count = 0
        for f in product(range(k + items), repeat=items):
            fresh = []
            for c in f:
                if c >= k and c not in fresh:
                    fresh.append(c)
            if fresh != list(range(k, k + len(fresh))):
                continue
            count += factorial(k + len(fresh)) // factorial(k) if n in spec.ordered_arities else 1
        total *= count
    if A.point_order is not None:
        total *= m + 1
    return total


# -- enumeration ---------------------------------------------------------------


@pytest.mark.parametrize("size,count", [(0, 1), (1, 1), (2, 2), (3, 10)])
def test_enumeration_matches_brute_force(size, count):
    members = enumerate_members(K0, size)
    assert len(members) == count
    assert {structure_code(S) for S in members} == brute_force_k0_codes(size)
    assert all(validate(S).ok for S in members)


def test_enumeration_with_orders_and_point_orders():
    # with an order on the 3-classes, every E3 partition of a 3-set still has one class
    assert len(enumerate_members(P3, 3)) == 10
    # with a point order, each of the 2 orderless types on 2 points is rigid up to the order
    assert len(enumerate_members(ORD, 2)) == 2
    assert len(enumerate_members(ClassSpec(max_arity=3, allow_point_order=True), 3)) == 25


def test_enumeration_guard():
    with pytest.raises(SearchLimitError):
        enumerate_members(K0, 6)


# -- one-point extensions ------------------------------------------------------


def test_extensions_of_empty_and_point():
    assert len(one_point_extensions(FinStructure.empty(K0))) == 1
    exts = one_point_extensions(FinStructure.uniform(K0, 1))
    assert len(exts) == 2
    assert sorted(S.num_classes(1) for S in exts) == [1, 2]


@pytest.mark.parametrize(
    "A",
    [
        FinStructure.uniform(P3, 2),
        FinStructure.uniform(P3, 3),
        from_classes(P3, 3, {1: [[(0,)], [(1,), (2,)]], 2: [[(0, 1)], [(0, 2), (1, 2)]]}),
        random_member(ORD, 3, random.Random(4)),
        random_member(K0, 3, random.Random(9)),
    ],
)
def test_extension_count_matches_oracle(A):
    exts = one_point_extensions(A)
    assert len(exts) == expected_extension_count(A)
    assert len({S.key() for S in exts}) == len(exts)
    for S in exts:
        assert validate(S).ok and induced(S, range(A.universe)) == A


def test_fresh_class_takes_every_order_position():
    A = FinStructure.uniform(P3, 3)
    positions = set()
    for S in one_point_extensions(A):
        if S.num_classes(3) == 2:
            positions.add(S.order_positions(3)[0])
    assert positions == {0, 1}


# -- extension property --------------------------------------------------------


def test_empty_structure_misses_the_point():
    missing = check_extension_property(FinStructure.empty(K0), 1)
    assert len(missing) == 1
    assert missing[0].base == () and missing[0].extension.universe == 1


def test_one_point_class_misses_a_fresh_class():
    M = FinStructure.uniform(K0, 3)
    missing = check_extension_property(M, 2)
    assert missing
    assert any(x.extension.num_classes(1) == 2 for x in missing)


@pytest.mark.parametrize("spec", [K0, P3])
def test_level_two_saturation_certifies(spec):
    res = saturate(FinStructure.empty(spec), 2, 60)
    assert res.certified
    assert check_extension_property(res.structure, 2) == []


def test_point_order_caps_the_finite_level():
    # a finite order has a greatest point, and nothing can be added above it
    res = saturate(FinStructure.empty(ORD), 2, 30)
    assert not res.certified and res.saturation_level == 1
    top = res.structure.point_order[-1]
    assert any(x.base == (top,) for x in res.missing)
    assert saturate(FinStructure.empty(ORD), 1, 5).certified


def test_ordered_arity_needs_a_class_above_the_top():
    # at level 4 a three-point base asks for a new 3-class above its own; for the top class of a
    # finite structure no point can supply it
    M = FinStructure.uniform(P3, 3)
    above = [
        x.extension
        for x in check_extension_property(M, 4)
        if x.base == (0, 1, 2) and x.extension.class_orders[3][-1] != x.extension.class_of((0, 1, 2))
    ]
    assert above


def test_level_one_saturation():
    res = saturate(FinStructure.empty(K0), 1, 4)
    assert res.certified and res.structure.universe == 1


def test_saturated_structure_is_a_fixed_point():
    M = saturate(FinStructure.empty(P3), 2, 60).structure
    again = saturate(M, 2, M.universe)
    assert again.certified and again.structure == M


def test_budget_exhaustion_reports_missing():
    res = saturate(FinStructure.empty(K0), 3, 3)
    assert not res.certified
    assert res.missing and res.saturation_level < 3


def test_level_guard():
    with pytest.raises(SearchLimitError):
        check_extension_property(FinStructure.uniform(K0, 2), 6)


@settings(max_examples=12, deadline=None)
@given(st.sampled_from([K0, P3]), st.integers(0, 4), st.integers(0, 2**32))
def test_saturation_keeps_the_start(spec, m, seed):
    M = random_member(spec, m, random.Random(seed), max_classes=2)
    res = saturate(M, 2, 80, seed=seed % 7)
    assert res.certified
    assert induced(res.structure, range(m)) == M
    assert validate(res.structure).ok


def test_saturation_is_deterministic():
    a = saturate(FinStructure.empty(P3), 2, 60, seed=3)
    b = saturate(FinStructure.empty(P3), 2, 60, seed=3)
    assert encode(a.structure) == encode(b.structure)


def test_local_types_are_relabeling_invariant():
    M = random_member(P3, 5, random.Random(1))
    perm = [3, 0, 4, 1, 2]
    T = relabel(M, perm)
    assert local_type(M, (0, 2, 4)) == local_type(T, tuple(perm[x] for x in (0, 2, 4)))


# -- class maps ----------------------------------------------------------------


def test_empty_class_maps():
    r = realize_class_maps(K0, {})
    assert r.structure.universe == 0 and r.is_automorphism and r.mapping == {}


def test_swap_of_two_point_classes():
    r = realize_class_maps(K0, {1: {0: 1, 1: 0}})
    F, g = r.structure, r.mapping
    assert r.is_automorphism
    perm = tuple(g[p] for p in range(F.universe))
    assert perm in automorphisms(F)
    a, b = r.blocks[(1, 0)][0], r.blocks[(1, 1)][0]
    assert induced_class_map(F, perm, 1)[F.class_of((a,))] == F.class_of((b,))


def test_order_reversing_class_map_is_rejected():
    with pytest.raises(StructureError):
        realize_class_maps(P3, {3: {0: 1, 1: 0}})


def test_order_respecting_shift_gives_partial_isomorphism():
    r = realize_class_maps(P3, {3: {0: 1}})
    assert not r.is_automorphism
    F = r.structure
    dom = sorted(r.mapping)
    assert is_embedding(induced(F, dom), F, [r.mapping[p] for p in dom])
