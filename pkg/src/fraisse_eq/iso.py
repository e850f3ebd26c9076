"""Embeddings, automorphisms and canonical forms by backtracking.

An embedding of A into C is an injective point map under which two n-subsets
of A lie in the same class iff their images do, class orders are preserved
for ordered arities, and the point order is preserved when present.  The
search extends a partial map one source point at a time and checks every
subset that becomes fully mapped, lowest arity first.
"""

from __future__ import annotations

from itertools import combinations
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from . import _comb
from .structure import FinStructure, StructureError, induced

Labels = Mapping[int, Sequence[int]]


class _Search:
    def __init__(
        self,
        src: FinStructure,
        tgt: FinStructure,
        seed: Mapping[int, int] | None = None,
        point_colors: tuple[Sequence, Sequence] | None = None,
        labels: tuple[Labels, Labels] | None = None,
        label_map: Callable[[int, int], int] | None = None,
        surjective: bool = False,
    ):
        self.src, self.tgt = src, tgt
        seed = dict(seed or {})
        for a, b in seed.items():
            if not (0 <= a < src.universe and 0 <= b < tgt.universe):
                raise StructureError(f"seed pair {a}->{b} out of range")
        if len(set(seed.values())) != len(seed):
            raise StructureError("seed map is not injective")
        self.seed = seed
        self.order = list(seed) + [p for p in range(src.universe) if p not in seed]
        self.arities = [n for n in src.arities if n in tgt.relations]
        self.src_rel = {n: src.relations[n].tolist() for n in self.arities}
        self.tgt_rel = {n: tgt.relations[n] for n in self.arities}
        self.ordered = [n for n in self.arities if n in src.class_orders and n in tgt.class_orders]
        self.src_pos = {n: src.order_positions(n) for n in self.ordered}
        self.tgt_pos = {n: tgt.order_positions(n) for n in self.ordered}
        self.src_rank = src.point_rank() if tgt.point_order is not None else None
        self.tgt_rank = tgt.point_rank() if src.point_order is not None else None
        if self.src_rank is None or self.tgt_rank is None:
            self.src_rank = self.tgt_rank = None
        self.colors = point_colors
        self.labels = labels
        self.label_map = label_map or (lambda n, c: c)
        self.surjective = surjective
        # checks[i]: subsets made of order[:i+1] that contain order[i]
        self.checks = []
        for i, p in enumerate(self.order):
            level = []
            for n in self.arities:
                for rest in combinations(range(i), n - 1):
                    pos = rest + (i,)
                    pts = sorted(self.order[j] for j in pos)
                    level.append((n, pos, self.src_rel[n][_comb.rank(pts)]))
            self.checks.append(level)

    def run(self) -> Iterator[tuple]:
        k, m = self.src.universe, self.tgt.universe
        if k > m or (self.surjective and k != m):
            return
        fwd = {n: {} for n in self.arities}
        bwd = {n: {} for n in self.arities}
        img = [0] * k
        used = [False] * m

        def try_point(i: int, t: int, trail: list) -> bool:
            p = self.order[i]
            if self.colors is not None and self.colors[0][p] != self.colors[1][t]:
                return False
            if self.src_rank is not None:
                rp, rt = self.src_rank[p], self.tgt_rank[t]
                for j in range(i):
                    if (self.src_rank[self.order[j]] < rp) != (self.tgt_rank[img[j]] < rt):
                        return False
            img[i] = t
            for n, pos, sc in self.checks[i]:
                tc = int(self.tgt_rel[n][_comb.rank(sorted(img[j] for j in pos))])
                have = fwd[n].get(sc)
                if have is not None:
                    if have != tc:
                        return False
                    continue
                if tc in bwd[n]:
                    return False
                if self.labels is not None:
                    sl, tl = self.labels[0].get(n), self.labels[1].get(n)
                    if sl is not None and tl is not None and self.label_map(n, sl[sc]) != tl[tc]:
                        return False
                if n in self.src_pos:
                    sp, tp = self.src_pos[n], self.tgt_pos[n]
                    a, b = sp[sc], tp[tc]
                    for sc2, tc2 in fwd[n].items():
                        if (sp[sc2] < a) != (tp[tc2] < b):
                            return False
                fwd[n][sc] = tc
                bwd[n][tc] = sc
                trail.append((n, sc, tc))
            return True

        def undo(trail):
            for n, sc, tc in trail:
                del fwd[n][sc]
                del bwd[n][tc]

        def rec(i: int) -> Iterator[tuple]:
            if i == k:
                out = [0] * k
                for j, p in enumerate(self.order):
                    out[p] = img[j]
                yield tuple(out)
                return
            p = self.order[i]
            cands = [self.seed[p]] if p in self.seed else range(m)
            for t in cands:
                if used[t]:
                    continue
                trail: list = []
                if try_point(i, t, trail):
                    used[t] = True
                    yield from rec(i + 1)
                    used[t] = False
                undo(trail)

        yield from rec(0)


def iter_embeddings(A: FinStructure, C: FinStructure, **kw) -> Iterator[tuple]:
    """Embeddings of A into C as tuples ``image[a]``, in lexicographic order."""
    if kw.get("seed"):
        # seeded searches assign seed points first; sort to keep output order stable
        yield from sorted(_Search(A, C, **kw).run())
        return
    yield from _Search(A, C, **kw).run()


def embeddings(A: FinStructure, C: FinStructure, **kw) -> list[tuple]:
    return list(iter_embeddings(A, C, **kw))


def first_embedding(A: FinStructure, C: FinStructure, **kw) -> tuple | None:
    return next(_Search(A, C, **kw).run(), None)


def copies(A: FinStructure, C: FinStructure) -> list[tuple]:
    """Image sets of embeddings of A into C, as sorted point tuples."""
    return sorted({tuple(sorted(e)) for e in iter_embeddings(A, C)})


def automorphisms(S: FinStructure, **kw) -> list[tuple]:
    return list(_Search(S, S, surjective=True, **kw).run())


def iter_automorphisms(S: FinStructure, **kw) -> Iterator[tuple]:
    return _Search(S, S, surjective=True, **kw).run()


def isomorphism(S: FinStructure, T: FinStructure, **kw) -> tuple | None:
    if S.universe != T.universe:
        return None
    return next(_Search(S, T, surjective=True, **kw).run(), None)


def is_embedding(A: FinStructure, C: FinStructure, image: Sequence[int]) -> bool:
    """Direct check: the substructure of C on the image, relabeled, equals A."""
    if len(image) != A.universe or len(set(image)) != len(image):
        return False
    if any(not 0 <= c < C.universe for c in image):
        return False
    sub = induced(C, list(image))
    if sub.universe != A.universe or sub.arities != A.arities:
        return False
    for n in A.arities:
        if not np.array_equal(sub.relations[n], A.relations[n]):
            return False
    if dict(sub.class_orders) != dict(A.class_orders):
        return False
    if (A.point_order is None) != (sub.point_order is None):
        return False
    return A.point_order is None or A.point_order == sub.point_order


def induced_class_map(S: FinStructure, perm: Sequence[int], n: int) -> dict[int, int]:
    """Class permutation of arity n induced by an automorphism of S."""
    out = {}
    rows = _comb.combos(S.universe, n)
    table = np.asarray(perm, dtype=np.int64)
    images = _comb.ranks(np.sort(table[rows], axis=1))
    rel = S.relations[n]
    for src_c, tgt_c in zip(rel.tolist(), rel[images].tolist()):
        out.setdefault(src_c, tgt_c)
    return out


# -- canonical form ---------------------------------------------------------


def _point_invariants(S: FinStructure) -> list[tuple]:
    m = S.universe
    inv = [[] for _ in range(m)]
    for n in S.arities:
        rel = S.relations[n]
        sizes = np.bincount(rel)
        pos = S.order_positions(n)
        rows = _comb.combos(m, n)
        for p in range(m):
            hit = rel[np.any(rows == p, axis=1)]
            feats = sorted((int(sizes[c]), pos[c] if pos else -1) for c in hit.tolist())
            inv[p].append(tuple(feats))
    return [tuple(v) for v in inv]


def canonical_form(S: FinStructure) -> bytes:
    """Key equal for two structures exactly when they are isomorphic.

    Minimises a column code over point orderings; orderings are restricted to
    those sorting an isomorphism invariant, and to the point order when one
    exists (isomorphisms must preserve it).
    """
    m = S.universe
    arities = S.arities
    rel = {n: S.relations[n].tolist() for n in arities}
    pos = {n: S.order_positions(n) for n in arities}
    if S.point_order is not None:
        invs = [()] * m
        slots = None
    else:
        invs = _point_invariants(S)
        slots = sorted(invs)
    states = [((), {n: {} for n in arities})]
    code = []
    for i in range(m):
        best = None
        nxt = []
        for perm, fo in states:
            if slots is None:
                cands = [S.point_order[i]]
            else:
                cands = [p for p in range(m) if p not in perm and invs[p] == slots[i]]
            for p in cands:
                new_perm = perm + (p,)
                new_fo = {n: dict(d) for n, d in fo.items()}
                col = []
                for n in arities:
                    for rest in combinations(range(i), n - 1):
                        pts = sorted(new_perm[j] for j in rest + (i,))
                        c = rel[n][_comb.rank(pts)]
                        if pos[n] is not None:
                            col.append(pos[n][c])
                        else:
                            col.append(new_fo[n].setdefault(c, len(new_fo[n])))
                col = tuple(col)
                if best is None or col < best:
                    best, nxt = col, [(new_perm, new_fo)]
                elif col == best:
                    nxt.append((new_perm, new_fo))
        code.append(best)
        states = nxt
    head = (
        m,
        tuple(arities),
        tuple(sorted(S.class_orders)),
        S.point_order is not None,
        tuple(slots or ()),
    )
    return repr((head, tuple(code))).encode()
