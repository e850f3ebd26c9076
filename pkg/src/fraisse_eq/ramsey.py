"""Witness structures and colorings showing failures of the Ramsey property.

The witness B is a run of six n-blocks a1 < a2 < a3 < a4 < b1 < b2 in which
a1a2 and b1b2 share a class of arity 2n that a3a4 avoids.  The copies
a1a2a3a4 and a3a4b1b2 of A are isomorphic, and coloring a copy of A by
comparing the classes of its first and last block pairs in a fixed
enumeration always gives these two copies opposite colors.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from itertools import combinations, permutations, product
from typing import Sequence

from . import _comb
from .amalgam import AmalgamProblem, amalgamate
from .generic import TypeReader, _normalize, random_extension
from .iso import isomorphism, iter_embeddings
from .structure import ClassSpec, FinStructure, StructureError, induced, relabel


@dataclass(frozen=True)
class RamseyWitness:
    B: FinStructure
    n: int
    blocks: tuple          # six n-blocks in increasing order
    copies: tuple          # point tuples of the two designated copies of A

    @property
    def A(self) -> FinStructure:
        return induced(self.B, list(self.copies[0]))


def build_witness_B(spec: ClassSpec, n: int) -> RamseyWitness:
    """The 6n-point witness; n = 1 uses a point order, larger n the class order of arity n."""
    if n < 1:
        raise StructureError("n must be positive")
    if n == 1:
        if not spec.allow_point_order:
            raise StructureError("the n = 1 witness needs a point order")
        if spec.max_arity < 2:
            raise StructureError("the witness needs arity 2")
    else:
        if n not in spec.ordered_arities:
            raise StructureError(f"arity {n} must be ordered")
        if 2 * n in spec.ordered_arities:
            raise StructureError(
                f"arity {2 * n} is ordered as well; then a1a2 and b1b2 cannot share a class while "
                "the two copies of A stay isomorphic"
            )
        if spec.max_arity < 2 * n:
            raise StructureError(f"the witness needs arity {2 * n} to be tracked")
    m = 6 * n
    blocks = [tuple(range(i * n, (i + 1) * n)) for i in range(6)]
    block_index = {b: i for i, b in enumerate(blocks)}
    unions = {}
    for i, j in combinations(range(6), 2):
        unions[tuple(sorted(blocks[i] + blocks[j]))] = (i, j)
    rels, orders = {}, {}
    for k in spec.tracked(m):
        labels = []
        for row in _comb.combos(m, k).tolist():
            row = tuple(row)
            if k == n:
                # blocks get classes 1..6; for n = 1 every point is a block
                labels.append(1 + block_index[row] if row in block_index else 0)
            elif k == 2 * n:
                pair = unions.get(row)
                if pair is None:
                    labels.append(0)
                elif pair in ((0, 1), (4, 5)):
                    labels.append(1)
                else:
                    labels.append(2 + pair[0] * 6 + pair[1])
            else:
                labels.append(0)
        rels[k] = labels
        if k in spec.ordered_arities:
            orders[k] = sorted(set(labels))
    point_order = tuple(range(m)) if spec.allow_point_order else None
    B = FinStructure.from_labels(spec, m, rels, orders, point_order)
    copies = (tuple(range(0, 4 * n)), tuple(range(2 * n, 6 * n)))
    return RamseyWitness(B, n, tuple(blocks), copies)


# -- colorings -------------------------------------------------------------------------


@dataclass
class CopyColoring:
    n: int
    enumeration: tuple
    colors: dict = field(default_factory=dict)   # sorted image tuple -> "red" | "green"
    pairs: dict = field(default_factory=dict)    # sorted image tuple -> (first pair class, last pair class)

    def color(self, points) -> str:
        return self.colors[tuple(sorted(points))]


def _pair_class(C: FinStructure, pts) -> int:
    return C.class_of(sorted(pts))


def enumeration_coloring(C: FinStructure, A: FinStructure, n: int, enumeration: Sequence[int]) -> CopyColoring:
    """Red iff the first block pair's class comes strictly before the last pair's."""
    k = 2 * n
    if k not in C.relations:
        raise StructureError(f"arity {k} is not tracked in C")
    if A.universe != 4 * n:
        raise StructureError(f"the pattern must have {4 * n} points")
    present = set(C.relations[k].tolist())
    enumeration = tuple(int(c) for c in enumeration)
    if len(set(enumeration)) != len(enumeration):
        raise StructureError("the enumeration repeats a class")
    missing = present - set(enumeration)
    if missing:
        raise StructureError(f"the enumeration misses classes {sorted(missing)}")
    where = {c: i for i, c in enumerate(enumeration)}
    out = CopyColoring(n, enumeration)
    for e in iter_embeddings(A, C):
        key = tuple(sorted(e))
        if key in out.colors:
            continue
        first = _pair_class(C, e[: 2 * n])
        last = _pair_class(C, e[2 * n:])
        out.pairs[key] = (first, last)
        out.colors[key] = "red" if where[first] < where[last] else "green"
    return out


@dataclass
class MonoVerdict:
    ok: bool
    copies_of_B: int
    violation: tuple | None = None
    opposite_ok: bool = True

    @property
    def message(self) -> str:
        if self.ok:
            return "no monochromatic B-copy"
        return f"monochromatic B-copy at {self.violation}"


def check_no_mono(C: FinStructure, witness: RamseyWitness, coloring: CopyColoring) -> MonoVerdict:
    """Every embedded B has its two designated A-copies colored differently."""
    first, second = witness.copies
    count = 0
    opposite = True
    for e in iter_embeddings(witness.B, C):
        count += 1
        c1 = tuple(sorted(e[p] for p in first))
        c2 = tuple(sorted(e[p] for p in second))
        if coloring.colors[c1] == coloring.colors[c2]:
            return MonoVerdict(False, count, tuple(e), False)
        # the first copy's first pair and the second copy's last pair share a class
        f1, l1 = coloring.pairs[c1]
        f2, l2 = coloring.pairs[c2]
        if not (f1 == l2 and l1 == f2):
            opposite = False
    return MonoVerdict(True, count, None, opposite)


# -- convexity -------------------------------------------------------------------------


def forbidden_triple_scan(C: FinStructure) -> list[tuple[int, int, int]]:
    """Triples a < b < c with a, c in one point class and b outside it."""
    if C.point_order is None:
        raise StructureError("the scan needs a point order")
    order = list(C.point_order)
    if C.universe == 0:
        return []
    cls = C.relations[1].tolist()
    out = []
    for i, j, k in combinations(range(len(order)), 3):
        a, b, c = order[i], order[j], order[k]
        if cls[a] == cls[c] and cls[a] != cls[b]:
            out.append((a, b, c))
    return out


def classes_convex(C: FinStructure) -> bool:
    """Each point class occupies an interval of the point order."""
    if C.point_order is None:
        raise StructureError("convexity needs a point order")
    if C.universe == 0:
        return True
    cls = C.relations[1].tolist()
    seq = [cls[p] for p in C.point_order]
    closed = set()
    for prev, cur in zip(seq, seq[1:]):
        if cur != prev:
            closed.add(prev)
            if cur in closed:
                return False
    return True


# -- Z/4Z-increasing sequences ----------------------------------------------------------------


class _BlockTypes:
    """Isomorphism types of block sequences, with block membership as point colors."""

    def __init__(self, M: FinStructure, n: int, colored: bool):
        self.M, self.n, self.colored = M, n, colored
        self.reader = TypeReader.of(M)
        self.cache: dict = {}
        self.inv_cache: dict = {}
        self.perms = list(permutations(range(n)))
        self._maps: dict = {}
        self._spread_cache: dict = {}

    def _index_maps(self, k: int):
        """For each choice of within-block permutations, how lex subset positions move."""
        hit = self._maps.get(k)
        if hit is None:
            size = k * self.n
            arities = [a for a in self.M.spec.tracked(size) if a in self.reader.rel]
            hit = []
            for choice in product(self.perms, repeat=k):
                sigma = [b * self.n + i for b, p in enumerate(choice) for i in p]
                maps = {}
                for a in arities:
                    combos = self.reader.lex_combos(size, a)
                    where = {c: j for j, c in enumerate(combos)}
                    maps[a] = [where[tuple(sorted(sigma[x] for x in c))] for c in combos]
                hit.append((sigma, maps))
            self._maps[k] = hit
        return hit

    def _spreads(self, k: int, a: int) -> list:
        """How many points each lex a-subset of k blocks takes from every block."""
        hit = self._spread_cache.get((k, a))
        if hit is None:
            hit = [
                tuple(sum(1 for x in combo if x // self.n == i) for i in range(k))
                for combo in self.reader.lex_combos(k * self.n, a)
            ]
            self._spread_cache[(k, a)] = hit
        return hit

    def _raw0(self, blocks):
        pts = tuple(x for b in blocks for x in b)
        return pts, self.reader.raw(pts)

    def invariant(self, blocks: tuple) -> tuple:
        """Cheap necessary condition for two block sequences to have one type."""
        hit = self.inv_cache.get(blocks)
        if hit is None:
            pts, raw = self._raw0(blocks)
            out = []
            for a in sorted(raw):
                counts: dict[int, int] = {}
                for c in raw[a]:
                    counts[c] = counts.get(c, 0) + 1
                spreads = self._spreads(len(blocks), a)
                feats = sorted(zip(spreads, [counts[c] for c in raw[a]]))
                out.append((a, tuple(feats)))
            hit = self.inv_cache[blocks] = tuple(out)
        return hit

    def key(self, blocks: tuple) -> tuple:
        hit = self.cache.get(blocks)
        if hit is None:
            pts, raw = self._raw0(blocks)
            pos = self.reader.pos
            best = None
            for sigma, maps in self._index_maps(len(blocks)):
                moved = {a: [raw[a][j] for j in maps[a]] for a in raw}
                pp = self.reader.point_pattern([pts[x] for x in sigma])
                if self.colored:
                    t = (tuple((a, tuple(v)) for a, v in sorted(moved.items())), pp)
                else:
                    t = _normalize(moved, pos, pp)
                if best is None or t < best:
                    best = t
            hit = self.cache[blocks] = best
        return hit

    def same(self, s: tuple, t: tuple) -> bool:
        """Colored isomorphism between two block sequences (block i onto block i)."""
        if self.invariant(s) != self.invariant(t):
            return False
        if len(s) == 2:
            return self.key(s) == self.key(t)
        ps = [x for b in s for x in b]
        pt = [x for b in t for x in b]
        colors = [i for i, b in enumerate(s) for _ in b]
        S, T = induced(self.M, ps), induced(self.M, pt)
        if self.colored:
            labels = (
                {k: _class_names(self.M, ps, k) for k in S.arities},
                {k: _class_names(self.M, pt, k) for k in T.arities},
            )
            return isomorphism(S, T, point_colors=(colors, colors), labels=labels) is not None
        return isomorphism(S, T, point_colors=(colors, colors)) is not None


def _class_names(M: FinStructure, pts, k) -> list[int]:
    """Class of M behind each canonical class of induced(M, pts) at arity k."""
    rows = _comb.combos(len(pts), k).tolist()
    sub = induced(M, list(pts)).relations[k].tolist()
    out = {}
    for row, c in zip(rows, sub):
        out.setdefault(c, M.class_of(sorted(pts[j] for j in row)))
    return [out[c] for c in range(len(out))]


@dataclass(frozen=True)
class Z4Sequence:
    blocks: tuple   # six n-blocks, sorted point tuples


def z4_find(
    M: FinStructure,
    n: int,
    limit: int | None = None,
    colored: bool = False,
    prune: bool = True,
) -> list[Z4Sequence]:
    """Sequences of six disjoint n-blocks increasing in the class order of arity n with
    a1a2 ~ a2a3 ~ a3a4 in type, a1a2a3a4 ~ a3a4a5a6 in type, and
    a1a2, a5a6 in one class of arity 2n that a3a4 avoids.

    With ``colored`` the types are taken in the color expansion (classes kept
    by name).  With ``prune``, a sequence is abandoned at its fourth block
    when arity 2n is ordered: the type condition moves a1a2 onto a3a4 and
    a3a4 onto a5a6, whose class is that of a1a2, so the order between the
    two classes would have to point both ways.
    """
    if n not in M.class_orders:
        raise StructureError(f"arity {n} is not ordered in this structure")
    if 2 * n > M.spec.max_arity:
        raise StructureError(f"arity {2 * n} is not tracked")
    if M.universe < 6 * n:
        return []
    pos = M.order_positions(n)
    rel = M.relations[n].tolist()
    rows = [tuple(r) for r in _comb.combos(M.universe, n).tolist()]
    sizes: dict[int, int] = {}
    for c in rel:
        sizes[c] = sizes.get(c, 0) + 1
    # blocks grouped by class; classes with few members are tried first
    by_class: dict[int, list] = {}
    for r, c in zip(rows, rel):
        by_class.setdefault(c, []).append(r)
    ordered_2n = (2 * n) in M.class_orders
    types = _BlockTypes(M, n, colored)
    out: list[Z4Sequence] = []

    def cls2(x, y):
        return M.class_of(sorted(x + y))

    # the type conditions chain block i onto block i + 1, so all six blocks share one type
    block_type = {b: types.key((b,)) for b in rows}

    def later(c, used, kind):
        """Blocks of the given type in classes above c, disjoint from the used points."""
        cands = [d for d in by_class if pos[d] > pos[c]]
        cands.sort(key=lambda d: (sizes[d], pos[d]))
        for d in cands:
            for b in by_class[d]:
                if used.isdisjoint(b) and block_type[b] == kind:
                    yield d, b

    def rec(seq, classes, used):
        if limit is not None and len(out) >= limit:
            return
        k = len(seq)
        if k == 6:
            out.append(Z4Sequence(tuple(seq)))
            return
        for d, b in later(classes[-1], used, block_type[seq[0]]):
            s = seq + [b]
            if k == 2 and not types.same((s[0], s[1]), (s[1], s[2])):
                continue
            if k == 3:
                if not types.same((s[0], s[1]), (s[2], s[3])):
                    continue
                if cls2(s[0], s[1]) == cls2(s[2], s[3]):
                    continue
                if prune and ordered_2n:
                    continue
            # the four-block type condition restricts to a2a3 ~ a4a5 and a3a4 ~ a5a6
            if k == 4 and not types.same((s[1], s[2]), (s[3], s[4])):
                continue
            if k == 5:
                if cls2(s[4], s[5]) != cls2(s[0], s[1]):
                    continue
                if not types.same((s[2], s[3]), (s[4], s[5])):
                    continue
                if not types.same(tuple(s[:4]), tuple(s[2:])):
                    continue
            rec(s, classes + [d], used | set(b))
            if limit is not None and len(out) >= limit:
                return

    starts = sorted(by_class, key=lambda d: (sizes[d], pos[d]))
    for c in starts:
        for b in by_class[c]:
            rec([b], [c], set(b))
            if limit is not None and len(out) >= limit:
                return out
    for s in out:
        if not verify_z4(M, n, s.blocks, colored):
            raise RuntimeError(f"z4 search produced an invalid sequence {s.blocks}")
    return out


def verify_z4(M: FinStructure, n: int, blocks, colored: bool = False) -> bool:
    """Independent check of the three conditions through colored isomorphism tests."""
    blocks = tuple(tuple(sorted(b)) for b in blocks)
    if len(blocks) != 6 or any(len(b) != n for b in blocks):
        return False
    pts = [x for b in blocks for x in b]
    if len(set(pts)) != 6 * n:
        return False
    pos = M.order_positions(n)
    cl = [pos[M.class_of(list(b))] for b in blocks]
    if any(x >= y for x, y in zip(cl, cl[1:])):
        return False

    def sub(idx):
        ps = [x for i in idx for x in blocks[i]]
        colors = [j for j, i in enumerate(idx) for _ in blocks[i]]
        return ps, colors

    def iso(i1, i2):
        p1, c1 = sub(i1)
        p2, c2 = sub(i2)
        S, T = induced(M, p1), induced(M, p2)
        labels = None
        if colored:
            labels = (
                {k: _class_names(M, p1, k) for k in S.arities},
                {k: _class_names(M, p2, k) for k in T.arities},
            )
        return isomorphism(S, T, point_colors=(c1, c2), labels=labels) is not None

    if not (iso((0, 1), (1, 2)) and iso((0, 1), (2, 3))):
        return False
    if not iso((0, 1, 2, 3), (2, 3, 4, 5)):
        return False
    c12 = M.class_of(sorted(blocks[0] + blocks[1]))
    c34 = M.class_of(sorted(blocks[2] + blocks[3]))
    c56 = M.class_of(sorted(blocks[4] + blocks[5]))
    return c12 == c56 and c12 != c34


def plant_z4(spec: ClassSpec, n: int) -> tuple[FinStructure, tuple]:
    """6n points in six blocks forming a Z/4Z-increasing sequence.

    Block classes increase; a1a2 and a5a6 share a class of arity 2n and every
    other union of two blocks has its own class.  When arity 2n is ordered the
    classes are listed by their first block pair, which is a valid member but
    (necessarily) no longer carries the pattern.
    """
    if n not in spec.ordered_arities or spec.max_arity < 2 * n:
        raise StructureError(f"need arity {n} ordered and arity {2 * n} tracked")
    m = 6 * n
    blocks = [tuple(range(i * n, (i + 1) * n)) for i in range(6)]
    index = {b: i for i, b in enumerate(blocks)}
    unions = {tuple(sorted(blocks[i] + blocks[j])): (i, j) for i, j in combinations(range(6), 2)}
    rels, orders = {}, {}
    for k in spec.tracked(m):
        labels = []
        for row in _comb.combos(m, k).tolist():
            row = tuple(row)
            if k == n:
                labels.append(1 + index[row] if row in index else 0)
            elif k == 2 * n and row in unions:
                i, j = unions[row]
                labels.append(1 if (i, j) in ((0, 1), (4, 5)) else 2 + 6 * i + j)
            else:
                labels.append(0)
        rels[k] = labels
        if k in spec.ordered_arities:
            orders[k] = sorted(set(labels))
    return FinStructure.from_labels(spec, m, rels, orders), tuple(blocks)


# -- generated hosts --------------------------------------------------------------------


def ramsey_hosts(witness: RamseyWitness, count: int, max_size: int, rng: random.Random) -> list[FinStructure]:
    """Seeded members containing B: self-amalgams over a random induced A, then random points.

    Points are shuffled at the end so that B does not sit on a prefix.
    """
    B = witness.B
    m = B.universe
    if max_size < m:
        raise StructureError(f"hosts need at least {m} points")
    out = []
    for _ in range(count):
        C = B
        shared = rng.randint(max(0, 2 * m - max_size), m)
        if shared < m:
            sub = sorted(rng.sample(range(m), shared))
            A = induced(B, sub)
            C = amalgamate(AmalgamProblem(A, B, B, sub, sub), B.spec)
        if C.universe < max_size:
            C = random_extension(C, rng.randint(0, max_size - C.universe), rng, max_classes=2)
        perm = list(range(C.universe))
        rng.shuffle(perm)
        out.append(relabel(C, perm))
    return out


def enumerations(C: FinStructure, n: int, count: int, rng: random.Random) -> list[tuple]:
    """Distinct enumerations of the classes of arity 2n: ascending, descending, then shuffles."""
    names = list(range(C.num_classes(2 * n)))
    out = [tuple(names), tuple(reversed(names))]
    seen = set(out)
    # there are only k! enumerations of k classes
    cap = math.factorial(len(names))
    while len(seen) < min(count, cap):
        rng.shuffle(names)
        if tuple(names) not in seen:
            seen.add(tuple(names))
            out.append(tuple(names))
    return list(dict.fromkeys(out))[:count]
