import json
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraisse_eq import _comb
from fraisse_eq.generic import random_member
from fraisse_eq.structure import (
    K0,
    ClassSpec,
    DecodeError,
    FinStructure,
    StructureError,
    class_sort,
    decode,
    encode,
    from_classes,
    from_document,
    induced,
    relabel,
    to_document,
    validate,
)

from oracles import partition_of

SPECS = [K0, ClassSpec({3}), ClassSpec(max_arity=3, allow_point_order=True), ClassSpec({3, 4}, max_arity=4)]


@st.composite
def members(draw, max_size=6):
    spec = draw(st.sampled_from(SPECS))
    m = draw(st.integers(0, max_size))
    seed = draw(st.integers(0, 2**32))
    return random_member(spec, m, random.Random(seed), max_classes=draw(st.sampled_from([None, 2, 3])))


# -- combinatorics --------------------------------------------------------------


def test_colex_rank_roundtrip():
    for m in range(7):
        for n in range(m + 1):
            rows = _comb.combos(m, n)
            assert len(rows) == _comb.n_subsets(m, n)
            assert _comb.ranks(rows).tolist() == list(range(len(rows)))


def test_colex_prefix_property():
    # subsets of the first m points come first, so growing the universe keeps indices
    assert np.array_equal(_comb.combos(7, 3)[: _comb.n_subsets(5, 3)], _comb.combos(5, 3))


# -- validation ----------------------------------------------------------------


def test_two_points_one_pair_class_is_valid():
    S = FinStructure.from_labels(K0, 2, {1: [0, 1], 2: [0]})
    assert validate(S).ok


def test_arity_above_universe_is_reported():
    S = FinStructure(2, {1: np.array([0, 0]), 2: np.array([0]), 3: np.array([], dtype=np.int64)})
    assert "arity exceeds universe" in [v[0] for v in validate(S).violations]


def test_order_relating_class_to_itself_is_reported():
    spec = ClassSpec({3})
    S = FinStructure(4, {1: np.zeros(4, int), 2: np.zeros(6, int), 3: np.array([0, 0, 1, 1])}, {3: (0, 0, 1)}, spec=spec)
    assert "order irreflexivity" in [v[0] for v in validate(S).violations]


def test_missing_order_and_stray_point_order():
    spec = ClassSpec({3})
    S = FinStructure(3, {1: np.zeros(3, int), 2: np.zeros(3, int), 3: np.zeros(1, int)}, spec=spec)
    assert ("order missing", 3) in validate(S).violations
    T = FinStructure(1, {1: np.zeros(1, int)}, point_order=(0,))
    assert validate(T).first().startswith("point order disallowed")


def test_spec_rejects_orders_on_low_arities():
    with pytest.raises(StructureError):
        ClassSpec({2})
    with pytest.raises(StructureError):
        ClassSpec({5}, max_arity=4)


@settings(max_examples=60, deadline=None)
@given(members())
def test_random_members_validate(S):
    assert validate(S).ok


# -- substructures -------------------------------------------------------------


def test_induced_on_everything_and_nothing():
    S = from_classes(K0, 3, {1: [[(0,)], [(1,), (2,)]]})
    assert induced(S, [0, 1, 2]) == S
    E = induced(S, [])
    assert E.universe == 0 and E.relations == {}


def test_induced_pair_of_one_class():
    S = from_classes(K0, 3, {1: [[(0,)], [(1,), (2,)]]})
    T = induced(S, [1, 2])
    assert T.universe == 2 and T.num_classes(1) == 1


@settings(max_examples=60, deadline=None)
@given(members(), st.randoms(use_true_random=False))
def test_induced_matches_direct_restriction(S, rnd):
    pts = rnd.sample(range(S.universe), rnd.randint(0, S.universe))
    T = induced(S, pts)
    assert validate(T).ok
    for n in T.arities:
        # same partition as restricting S and renaming points
        want = {frozenset(tuple(sorted(pts.index(x) for x in s)) for s in b if set(s) <= set(pts)) for b in partition_of(S, n)}
        assert partition_of(T, n) == {b for b in want if b}


@settings(max_examples=40, deadline=None)
@given(members(), st.randoms(use_true_random=False))
def test_relabel_inverts(S, rnd):
    perm = list(range(S.universe))
    rnd.shuffle(perm)
    inv = [0] * len(perm)
    for i, p in enumerate(perm):
        inv[p] = i
    assert relabel(relabel(S, perm), inv) == S


def test_class_sort():
    S = FinStructure.uniform(K0, 3)
    assert class_sort(S, 2) == (0,)
    spec = ClassSpec({3})
    T = FinStructure.from_labels(spec, 4, {1: [0] * 4, 2: [0] * 6, 3: [5, 5, 9, 9]}, {3: [9, 5]})
    assert class_sort(T, 3) == (1, 0)
    with pytest.raises(StructureError):
        class_sort(T, 5)


# -- serialization -------------------------------------------------------------


def test_roundtrip_empty():
    E = FinStructure.empty(K0)
    assert decode(encode(E)) == E


def test_roundtrip_size_five_fields():
    S = random_member(ClassSpec({3}), 5, random.Random(7))
    T = decode(encode(S))
    assert T.universe == S.universe
    for n in S.arities:
        assert np.array_equal(T.relations[n], S.relations[n])
    assert dict(T.class_orders) == dict(S.class_orders)
    assert T.point_order == S.point_order and T.spec == S.spec


@settings(max_examples=60, deadline=None)
@given(members())
def test_roundtrip_property(S):
    assert decode(encode(S)) == S
    assert json.loads(encode(S)) == to_document(S)


def test_duplicate_subset_is_rejected():
    doc = to_document(FinStructure.uniform(K0, 2))
    doc["relations"]["1"]["classes"] = [[[0], [1]], [[1]]]
    with pytest.raises(DecodeError, match="twice"):
        from_document(doc)


def test_bad_documents():
    with pytest.raises(DecodeError):
        decode(b"{not json")
    with pytest.raises(DecodeError):
        from_document({"universe": 2, "spec": K0.to_json(), "relations": {"1": {"classes": [[[0]]]}}})
    with pytest.raises(DecodeError):
        from_document({"universe": -1, "spec": K0.to_json()})
