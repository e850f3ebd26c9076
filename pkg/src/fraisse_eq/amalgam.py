"""Amalgamation and joint embedding for the classes K0, K_P and ordered K0.

The amalgam C of B1 and B2 over A lives on B1's points followed by the
private points of B2 (in B2's order).  Each class relation of C is the finest
equivalence containing the classes of B1 and B2 and the group of crossing
subsets (those meeting both private parts); for K_P a few further merges tie
the crossing group to an existing class, and class orders are interleaved
with B1-only classes before B2-only classes between shared classes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from . import _comb
from .iso import is_embedding
from .structure import ClassSpec, FinStructure, StructureError, validate


class AmalgamationError(StructureError):
    """The two sides order a pair of shared classes oppositely."""

    def __init__(self, message, conflict=None):
        super().__init__(message)
        self.conflict = conflict


class PostconditionError(RuntimeError):
    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate or {}


class UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y):
        x, y = self.find(x), self.find(y)
        if x == y:
            return x
        if self.size[x] < self.size[y]:
            x, y = y, x
        self.parent[y] = x
        self.size[x] += self.size[y]
        return x


def finest_closure(n_items: int, groups: Iterable[Iterable[int]]) -> list[int]:
    """Finest partition of ``range(n_items)`` putting each group in one block.

    Blocks are numbered by their least item.
    """
    uf = UnionFind(n_items)
    for g in groups:
        g = list(g)
        for x in g[1:]:
            uf.union(g[0], x)
    names: dict[int, int] = {}
    return [names.setdefault(uf.find(i), len(names)) for i in range(n_items)]


def merge_orders(rank1: Mapping, rank2: Mapping) -> list:
    """Interleave two linear orders that agree on their common items.

    Between consecutive common items (and beyond the extreme ones) the items
    only in the first order come before those only in the second.
    """
    shared = sorted((k for k in rank1 if k in rank2), key=rank1.__getitem__)
    for a, b in zip(shared, shared[1:]):
        if rank2[a] > rank2[b]:
            raise AmalgamationError(f"shared items {a!r} and {b!r} are ordered oppositely", (a, b))
    r1_shared = [rank1[k] for k in shared]
    r2_shared = [rank2[k] for k in shared]
    gaps1 = [[] for _ in range(len(shared) + 1)]
    gaps2 = [[] for _ in range(len(shared) + 1)]
    for k in sorted((k for k in rank1 if k not in rank2), key=rank1.__getitem__):
        gaps1[int(np.searchsorted(r1_shared, rank1[k]))].append(k)
    for k in sorted((k for k in rank2 if k not in rank1), key=rank2.__getitem__):
        gaps2[int(np.searchsorted(r2_shared, rank2[k]))].append(k)
    out = []
    for g in range(len(shared) + 1):
        out.extend(gaps1[g])
        out.extend(gaps2[g])
        if g < len(shared):
            out.append(shared[g])
    return out


@dataclass(frozen=True)
class AmalgamProblem:
    """B1 and B2 glued along embeddings of A (``glue[i][a]`` is the image of a)."""

    A: FinStructure
    B1: FinStructure
    B2: FinStructure
    glue1: tuple
    glue2: tuple

    def __post_init__(self):
        object.__setattr__(self, "glue1", tuple(int(x) for x in self.glue1))
        object.__setattr__(self, "glue2", tuple(int(x) for x in self.glue2))

    @classmethod
    def over_prefix(cls, A, B1, B2) -> "AmalgamProblem":
        """A sits on the first |A| points of both sides."""
        return cls(A, B1, B2, tuple(range(A.universe)), tuple(range(A.universe)))

    def check(self) -> None:
        for name, B, glue in (("glue1", self.B1, self.glue1), ("glue2", self.B2, self.glue2)):
            if not is_embedding(self.A, B, glue):
                raise StructureError(f"{name} is not an embedding of A")

    def layout(self) -> tuple[int, list[int]]:
        """Size of the amalgam and the position of each B2 point in it."""
        b1 = self.B1.universe
        shared = {b2: self.glue1[a] for a, b2 in enumerate(self.glue2)}
        pos, nxt = [], b1
        for q in range(self.B2.universe):
            if q in shared:
                pos.append(shared[q])
            else:
                pos.append(nxt)
                nxt += 1
        return nxt, pos


def _amalgamate(p: AmalgamProblem, spec: ClassSpec, ordered: bool) -> FinStructure:
    p.check()
    A, B1, B2 = p.A, p.B1, p.B2
    size, b2pos = p.layout()
    b1n, b2n = B1.universe, B2.universe
    b2pos_arr = np.array(b2pos, dtype=np.int64)
    in_b2 = np.zeros(size, dtype=bool)
    in_b2[b2pos_arr] = True
    rels, orders = {}, {}
    for n in spec.tracked(size):
        rows = _comb.combos(size, n)
        total = len(rows)
        inside1 = rows.max(axis=1) < b1n
        inside2 = in_b2[rows].all(axis=1)
        crossing = np.flatnonzero(~inside1 & ~inside2).tolist()
        groups: list[list[int]] = []
        # B1 subsets are the colex prefix of C's subsets
        rel1 = B1.relations.get(n)
        members1 = {}
        if rel1 is not None:
            for idx, c in enumerate(rel1.tolist()):
                members1.setdefault(c, []).append(idx)
        rel2 = B2.relations.get(n)
        members2 = {}
        if rel2 is not None:
            c_idx = _comb.ranks(np.sort(b2pos_arr[_comb.combos(b2n, n)], axis=1)).tolist()
            for idx, c in zip(c_idx, rel2.tolist()):
                members2.setdefault(c, []).append(idx)
        groups.extend(members1.values())
        groups.extend(members2.values())
        if crossing:
            groups.append(crossing)
            if ordered and n <= max(b1n, b2n):
                groups.append([crossing[0], *_kp_targets(n, A, B1, B2, p, members1, members2)])
        labels = np.array(finest_closure(total, groups), dtype=np.int64)
        rels[n] = labels
        if n in spec.ordered_arities:
            rank1, rank2 = {}, {}
            if n in B1.class_orders:
                for r, c in enumerate(B1.class_orders[n]):
                    rank1[int(labels[members1[c][0]])] = r
            if n in B2.class_orders:
                for r, c in enumerate(B2.class_orders[n]):
                    rank2[int(labels[members2[c][0]])] = r
            present = sorted(set(labels.tolist()))
            stray = [c for c in present if c not in rank1 and c not in rank2]
            # only arity n > max(|B1|, |B2|) has a class with no B-side member
            rank1.update({c: len(rank1) + i for i, c in enumerate(stray)})
            orders[n] = merge_orders(rank1, rank2)
    point_order = None
    if B1.point_order is not None and B2.point_order is not None:
        r1 = {q: r for r, q in enumerate(B1.point_order)}
        r2 = {b2pos[q]: r for r, q in enumerate(B2.point_order)}
        try:
            point_order = merge_orders(r1, r2)
        except AmalgamationError as exc:
            raise StructureError(f"point orders disagree on A: {exc}") from None
    elif (B1.point_order is None) != (B2.point_order is None):
        raise StructureError("only one side carries a point order")
    C = FinStructure.from_labels(spec, size, rels, orders, point_order)
    _check_post(p, C, b2pos, spec)
    return C


def _kp_targets(n, A, B1, B2, p, members1, members2) -> list[int]:
    """Subsets whose classes absorb the crossing group (K_P rule)."""
    b1n, b2n = B1.universe, B2.universe
    # colex rank 0 is {0..n-1}, the lex-least n-subset of B1
    lex1 = 0 if n <= b1n else None
    lex2 = None
    if n <= b2n:
        _, b2pos = p.layout()
        lex2 = _comb.rank(sorted(b2pos[x] for x in range(n)))
    if (n <= b1n and len(members1) == 1) or (n <= b2n and len(members2) == 1):
        if n <= A.universe:
            # the single-class side puts every A-subset in its one class
            return [_comb.rank(sorted(p.glue1[x] for x in range(n)))]
        return [t for t in (lex1, lex2) if t is not None]
    return [lex1 if lex1 is not None else lex2]


def _check_post(p: AmalgamProblem, C: FinStructure, b2pos, spec) -> None:
    report = validate(C, spec)
    cert = {"universe": C.universe, "b2_positions": list(b2pos)}
    if not report.ok:
        raise PostconditionError(f"amalgam is not a class member: {report.first()}", cert)
    if not is_embedding(p.B1, C, list(range(p.B1.universe))):
        raise PostconditionError("B1 is not an induced substructure of the amalgam", cert)
    if not is_embedding(p.B2, C, b2pos):
        raise PostconditionError("B2 is not an induced substructure of the amalgam", cert)


def amalgamate_k0(p: AmalgamProblem, spec: ClassSpec | None = None) -> FinStructure:
    spec = spec or p.B1.spec
    for S in (p.A, p.B1, p.B2):
        if S.class_orders:
            raise StructureError("K0 amalgamation takes structures without class orders")
    return _amalgamate(p, spec, ordered=False)


def amalgamate_kp(spec: ClassSpec, p: AmalgamProblem) -> FinStructure:
    return _amalgamate(p, spec, ordered=True)


def amalgamate(p: AmalgamProblem, spec: ClassSpec | None = None) -> FinStructure:
    """K_P amalgamation when ``spec`` orders some arity, K0 otherwise."""
    spec = spec or p.B1.spec
    if spec.ordered_arities:
        return amalgamate_kp(spec, p)
    return amalgamate_k0(p, spec)


def amalgamate_point_order(p: AmalgamProblem, spec: ClassSpec | None = None) -> FinStructure:
    spec = spec or p.B1.spec
    if p.B1.point_order is None or p.B2.point_order is None:
        raise StructureError("both sides need a point order")
    return amalgamate(p, spec)


def joint_embed(spec: ClassSpec, B1: FinStructure, B2: FinStructure) -> FinStructure:
    empty = FinStructure.empty(spec)
    return amalgamate(AmalgamProblem(empty, B1, B2, (), ()), spec)
