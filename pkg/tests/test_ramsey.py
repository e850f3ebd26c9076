import random
from itertools import permutations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraisse_eq.amalgam import joint_embed
from fraisse_eq.generic import random_member
from fraisse_eq.iso import isomorphism
from fraisse_eq.ramsey import (
    build_witness_B,
    check_no_mono,
    classes_convex,
    enumeration_coloring,
    enumerations,
    forbidden_triple_scan,
    plant_z4,
    ramsey_hosts,
    verify_z4,
    z4_find,
)
from fraisse_eq.structure import ClassSpec, FinStructure, StructureError, from_classes, induced, validate

ORD3 = ClassSpec(max_arity=3, allow_point_order=True)
ORD5 = ClassSpec(max_arity=5, allow_point_order=True)
LINE = ClassSpec(max_arity=1, allow_point_order=True)
P3 = ClassSpec({3}, max_arity=6)
P36 = ClassSpec({3, 6}, max_arity=6)


# -- witness -------------------------------------------------------------------


def test_point_witness_shape():
    W = build_witness_B(ORD5, 1)
    B = W.B
    assert B.universe == 6 and validate(B).ok
    assert B.num_classes(1) == 6
    assert B.class_of((0, 1)) == B.class_of((4, 5))
    others = [p for p in permutations(range(6), 2) if p[0] < p[1] and p not in ((0, 1), (4, 5))]
    assert len({B.class_of(p) for p in others}) == len(others)
    assert B.class_of((0, 1)) not in {B.class_of(p) for p in others}
    for k in (3, 4, 5):
        assert B.num_classes(k) == 1


def test_point_witness_copies_are_isomorphic():
    W = build_witness_B(ORD3, 1)
    first, second = (induced(W.B, list(c)) for c in W.copies)
    assert isomorphism(first, second) == (0, 1, 2, 3)


def test_block_witness_for_triples():
    W = build_witness_B(P3, 3)
    assert W.B.universe == 18 and validate(W.B).ok
    first, second = (induced(W.B, list(c)) for c in W.copies)
    assert isomorphism(first, second) is not None


@pytest.mark.parametrize(
    "spec,n",
    [(ClassSpec(max_arity=3), 1), (P36, 3), (ClassSpec({3}, max_arity=5), 3), (ClassSpec({4}, max_arity=8), 3)],
)
def test_witness_preconditions(spec, n):
    with pytest.raises(StructureError):
        build_witness_B(spec, n)


# -- coloring ------------------------------------------------------------------


def test_designated_copies_get_opposite_colors():
    W = build_witness_B(ORD3, 1)
    B = W.B
    c12, c34 = B.class_of((0, 1)), B.class_of((2, 3))
    names = list(range(B.num_classes(2)))
    names.remove(c12)
    names.remove(c34)
    enum = [c12, c34] + names
    col = enumeration_coloring(B, W.A, 1, enum)
    assert col.color(W.copies[0]) == "red" and col.color(W.copies[1]) == "green"
    rev = enumeration_coloring(B, W.A, 1, list(reversed(enum)))
    assert rev.color(W.copies[0]) == "green" and rev.color(W.copies[1]) == "red"


def test_equal_pair_classes_color_green():
    W = build_witness_B(ORD3, 1)
    # a pattern whose first and last pairs share a class
    pattern = induced(W.B, [0, 1, 4, 5])
    col = enumeration_coloring(W.B, pattern, 1, range(W.B.num_classes(2)))
    assert col.color((0, 1, 4, 5)) == "green"


def test_enumeration_must_list_every_class_once():
    W = build_witness_B(ORD3, 1)
    k = W.B.num_classes(2)
    with pytest.raises(StructureError):
        enumeration_coloring(W.B, W.A, 1, range(k - 1))
    with pytest.raises(StructureError):
        enumeration_coloring(W.B, W.A, 1, [0] + list(range(k)))


def test_witness_itself_has_no_monochromatic_copy():
    W = build_witness_B(ORD3, 1)
    for enum in enumerations(W.B, 1, 3, random.Random(0)):
        v = check_no_mono(W.B, W, enumeration_coloring(W.B, W.A, 1, enum))
        assert v.ok and v.opposite_ok and v.copies_of_B == 1
        assert v.message == "no monochromatic B-copy"


def test_host_without_B_is_vacuous():
    W = build_witness_B(ORD3, 1)
    C = FinStructure.uniform(ORD3, 7)
    v = check_no_mono(C, W, enumeration_coloring(C, W.A, 1, [0]))
    assert v.ok and v.copies_of_B == 0


def test_generated_hosts():
    W = build_witness_B(ORD3, 1)
    rng = random.Random(3)
    for C in ramsey_hosts(W, 10, 12, rng):
        assert C.universe <= 12 and validate(C).ok
        for enum in enumerations(C, 1, 3, rng):
            v = check_no_mono(C, W, enumeration_coloring(C, W.A, 1, enum))
            assert v.ok and v.opposite_ok and v.copies_of_B >= 1


def test_enumerations_are_distinct():
    C = build_witness_B(ORD3, 1).B
    out = enumerations(C, 1, 5, random.Random(1))
    assert len(out) == 5 == len(set(out))
    assert out[0] == tuple(range(C.num_classes(2)))


# -- convexity -----------------------------------------------------------------


def _line(classes, order):
    return FinStructure.from_labels(LINE, len(classes), {1: classes}, point_order=order)


def test_single_class_has_no_forbidden_triple():
    assert forbidden_triple_scan(_line([0, 0, 0, 0], [2, 0, 3, 1])) == []


def test_split_class_gives_one_triple():
    C = _line([0, 1, 0], [0, 1, 2])
    assert forbidden_triple_scan(C) == [(0, 1, 2)]
    assert not classes_convex(C)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=0, max_size=7), st.randoms(use_true_random=False))
def test_sorting_by_class_makes_classes_convex(labels, rnd):
    order = sorted(range(len(labels)), key=lambda p: (labels[p], rnd.random()))
    C = _line(labels, order)
    assert forbidden_triple_scan(C) == [] and classes_convex(C)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 7), st.integers(0, 2**32))
def test_scan_and_convexity_agree(m, seed):
    C = random_member(ORD3, m, random.Random(seed), max_classes=3)
    assert (forbidden_triple_scan(C) == []) == classes_convex(C)


# -- Z/4Z-increasing sequences -------------------------------------------------


def test_planted_sequence_is_found():
    M, blocks = plant_z4(P3, 3)
    found = z4_find(M, 3)
    assert [s.blocks for s in found] == [blocks]
    assert verify_z4(M, 3, blocks)


def test_planted_sequence_inside_a_larger_host():
    M0, blocks = plant_z4(P3, 3)
    M = joint_embed(P3, M0, random_member(P3, 4, random.Random(2), max_classes=2))
    found = z4_find(M, 3, limit=5)
    assert blocks in [s.blocks for s in found]
    assert all(verify_z4(M, 3, s.blocks) for s in found)


def test_colored_types_exclude_the_plant():
    M, blocks = plant_z4(P3, 3)
    assert not verify_z4(M, 3, blocks, colored=True)


def test_ordered_double_arity_excludes_sequences():
    M, blocks = plant_z4(P36, 3)
    assert validate(M).ok
    assert z4_find(M, 3) == []
    assert not verify_z4(M, 3, blocks)


def test_too_small_structure():
    M = FinStructure.uniform(P3, 5)
    assert z4_find(M, 3) == []


def test_unordered_arity_is_rejected():
    with pytest.raises(StructureError):
        z4_find(from_classes(ClassSpec(max_arity=2), 6, {}), 1)
