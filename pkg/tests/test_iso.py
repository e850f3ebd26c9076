import random
from itertools import combinations, permutations

from hypothesis import given, settings
from hypothesis import strategies as st

from fraisse_eq.generic import random_member
from fraisse_eq.iso import (
    automorphisms,
    canonical_form,
    copies,
    embeddings,
    induced_class_map,
    is_embedding,
    isomorphism,
)
from fraisse_eq.structure import K0, ClassSpec, FinStructure, from_classes, relabel

from oracles import brute_embeddings, structure_code

SPECS = [K0, ClassSpec({3}), ClassSpec(max_arity=2, allow_point_order=True)]


def _member(spec, m, seed, max_classes=3):
    return random_member(spec, m, random.Random(seed), max_classes=max_classes)


# -- canonical form ------------------------------------------------------------


def test_single_points_share_a_key():
    a = FinStructure.uniform(K0, 1)
    b = from_classes(K0, 1, {})
    assert canonical_form(a) == canonical_form(b)


def test_two_point_types_have_distinct_keys():
    joint = from_classes(K0, 2, {1: [[(0,), (1,)]]})
    split = from_classes(K0, 2, {1: [[(0,)], [(1,)]]})
    keys = {canonical_form(relabel(S, p)) for S in (joint, split) for p in permutations(range(2))}
    assert len(keys) == 2


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(SPECS), st.integers(0, 6), st.integers(0, 2**32), st.randoms(use_true_random=False))
def test_key_invariant_under_relabeling(spec, m, seed, rnd):
    S = _member(spec, m, seed)
    perm = list(range(m))
    rnd.shuffle(perm)
    T = relabel(S, perm)
    assert canonical_form(S) == canonical_form(T)
    assert isomorphism(S, T) is not None


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 4), st.integers(0, 2**32), st.integers(0, 2**32))
def test_key_agrees_with_brute_force_invariant(m, s1, s2):
    S, T = _member(K0, m, s1), _member(K0, m, s2)
    same = structure_code(S) == structure_code(T)
    assert (canonical_form(S) == canonical_form(T)) == same
    assert (isomorphism(S, T) is not None) == same


# -- embeddings ----------------------------------------------------------------


def test_empty_structure_embeds_once():
    C = _member(K0, 4, 1)
    assert embeddings(FinStructure.empty(K0), C) == [()]


def test_single_point_embeds_everywhere():
    C = _member(K0, 5, 3)
    assert len(embeddings(FinStructure.uniform(K0, 1), C)) == 5


def test_split_pair_does_not_embed_in_joint_pair():
    A = from_classes(K0, 2, {1: [[(0,)], [(1,)]]})
    C = from_classes(K0, 2, {1: [[(0,), (1,)]]})
    assert embeddings(A, C) == []


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(SPECS), st.integers(0, 3), st.integers(0, 5), st.integers(0, 2**32), st.integers(0, 2**32))
def test_embeddings_match_brute_force(spec, a, c, s1, s2):
    A, C = _member(spec, a, s1, 2), _member(spec, c, s2, 2)
    found = embeddings(A, C)
    assert found == sorted(found)
    assert set(found) == set(brute_embeddings(A, C))
    assert all(is_embedding(A, C, e) for e in found)
    assert copies(A, C) == sorted({tuple(sorted(e)) for e in found})


# -- automorphisms -------------------------------------------------------------


def test_one_point_has_only_identity():
    assert automorphisms(FinStructure.uniform(K0, 1)) == [(0,)]


def test_uniform_pair_has_both_permutations():
    assert sorted(automorphisms(FinStructure.uniform(K0, 2))) == [(0, 1), (1, 0)]


def test_ordered_classes_are_fixed():
    # two 3-classes on 6 points; each class has the same shape, so only the order separates them
    spec = ClassSpec({3})
    a, b = (0, 1, 2), (3, 4, 5)
    S = from_classes(spec, 6, {3: [[a], [b], [s for s in _triples(6) if s not in (a, b)]]}, {3: [0, 1, 2]})
    auts = automorphisms(S)
    assert auts
    for g in auts:
        assert all(x == y for x, y in induced_class_map(S, g, 3).items())
    # without the order the two blocks can swap
    T = from_classes(K0, 6, {3: [[a], [b], [s for s in _triples(6) if s not in (a, b)]]})
    assert any(induced_class_map(T, g, 3)[0] != 0 for g in automorphisms(T))


def _triples(m):
    return list(combinations(range(m), 3))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(SPECS), st.integers(0, 5), st.integers(0, 2**32))
def test_automorphisms_match_brute_force(spec, m, seed):
    S = _member(spec, m, seed, 2)
    assert set(automorphisms(S)) == set(brute_embeddings(S, S))
