"""Small members, one-point extensions and finite generic approximations.

A finite structure M has the extension property at level k when, for every
B of size at most k, every A <= B and every embedding of A into M, some
embedding of B into M extends it.  It is enough to look at one-point
extensions B of substructures A of size below k, which is what the checker
and the saturation loop do.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Iterator, Mapping, Sequence

import numpy as np

from . import _comb
from .iso import canonical_form, is_embedding
from .structure import (
    ClassSpec,
    FinStructure,
    StructureError,
    induced,
    validate,
)

SIZE_GUARD = 5


class SearchLimitError(StructureError):
    """A request exceeds a configured enumeration guard."""


# -- random members -----------------------------------------------------------


def random_member(spec: ClassSpec, m: int, rng: random.Random, max_classes: int | None = None) -> FinStructure:
    """A random class member on m points (labels drawn uniformly per subset)."""
    rels, orders = {}, {}
    for n in spec.tracked(m):
        count = _comb.n_subsets(m, n)
        k = rng.randint(1, max(1, min(count, max_classes or count)))
        rels[n] = [rng.randrange(k) for _ in range(count)]
        if n in spec.ordered_arities:
            labels = sorted(set(rels[n]))
            rng.shuffle(labels)
            orders[n] = labels
    point_order = None
    if spec.allow_point_order:
        point_order = list(range(m))
        rng.shuffle(point_order)
    return FinStructure.from_labels(spec, m, rels, orders, point_order)


def random_extension(S: FinStructure, extra: int, rng: random.Random, max_classes: int = 3) -> FinStructure:
    """Random member on |S| + extra points inducing S on its first |S| points."""
    for _ in range(extra):
        opts = list(_extension_choices(S, rng=rng, max_new=max_classes))
        S = opts[0]
    return S


# -- one-point extensions -----------------------------------------------------


def _growth(count: int, k: int, max_new: int | None = None) -> Iterator[tuple]:
    """Assign ``count`` items to classes 0..k-1 or fresh classes k, k+1, ...

    Fresh classes appear in order of first use.
    """
    out = [0] * count

    def rec(i, fresh):
        if i == count:
            yield tuple(out)
            return
        top = k + fresh + (1 if max_new is None or fresh < max_new else 0)
        for c in range(top):
            out[i] = c
            yield from rec(i + 1, fresh + (c == k + fresh))

    yield from rec(0, 0)


def _interleavings(old: Sequence[int], fresh: Sequence[int]) -> Iterator[list]:
    """Every linear order on old + fresh that keeps the old items in order."""
    total = len(old) + len(fresh)
    for perm in permutations(fresh):
        for slots in combinations(range(total), len(fresh)):
            out, it_old, it_new = [], iter(old), iter(perm)
            slot_set = set(slots)
            for i in range(total):
                out.append(next(it_new) if i in slot_set else next(it_old))
            yield out


def _extension_choices(A: FinStructure, rng: random.Random | None = None, max_new: int | None = None):
    """All (or, with rng, one random) one-point extensions of A."""
    spec = A.spec
    m = A.universe
    per_arity = []
    for n in spec.tracked(m + 1):
        count = _comb.n_subsets(m, n - 1)
        k = A.num_classes(n) if n in A.relations else 0
        options = []
        if rng is not None:
            top = k + (max_new if max_new is not None else count)
            assign = [rng.randrange(max(top, 1)) for _ in range(count)]
            fresh_ids = sorted({c for c in assign if c >= k})
            remap = {c: k + i for i, c in enumerate(sorted(fresh_ids, key=assign.index))}
            assigns = [tuple(remap.get(c, c) for c in assign)]
        else:
            assigns = _growth(count, k, max_new)
        for assign in assigns:
            labels = np.concatenate([A.relations[n], np.array(assign, dtype=np.int64)]) if n in A.relations else np.array(assign, dtype=np.int64)
            if n in spec.ordered_arities:
                old = list(A.class_orders.get(n, ()))
                fresh = list(range(k, k + len(set(a for a in assign if a >= k))))
                if rng is not None:
                    ordering = old[:]
                    for f in fresh:
                        ordering.insert(rng.randint(0, len(ordering)), f)
                    orders = [ordering]
                else:
                    orders = list(_interleavings(old, fresh))
                options.extend((labels, o) for o in orders)
            else:
                options.append((labels, None))
        per_arity.append((n, options))
    if A.point_order is not None:
        slots = [rng.randint(0, m)] if rng is not None else range(m + 1)
        point_orders = [list(A.point_order[:i]) + [m] + list(A.point_order[i:]) for i in slots]
    else:
        point_orders = [None]

    def rec(i, rels, orders):
        if i == len(per_arity):
            for po in point_orders:
                yield FinStructure.from_labels(spec, m + 1, rels, orders, po)
            return
        n, options = per_arity[i]
        for labels, order in options:
            rels[n] = labels
            if order is not None:
                orders[n] = order
            yield from rec(i + 1, rels, orders)
            orders.pop(n, None)

    yield from rec(0, {}, {})


def one_point_extensions(A: FinStructure, spec: ClassSpec | None = None) -> list[FinStructure]:
    """Members on |A| + 1 points inducing A on the old points (A fixed pointwise)."""
    if spec is not None and spec != A.spec:
        raise StructureError("structure and spec disagree")
    return list(_extension_choices(A))


def enumerate_members(spec: ClassSpec, size: int, guard: int = SIZE_GUARD) -> list[FinStructure]:
    """One member per isomorphism type of the given size, sorted by canonical key."""
    if size < 0:
        raise StructureError("size must be nonnegative")
    if size > guard:
        raise SearchLimitError(
            f"size {size} exceeds the enumeration guard {guard}; the number of types grows "
            "roughly like the product of Bell numbers of C(size, n) over the tracked arities"
        )
    level = {canonical_form(FinStructure.empty(spec)): FinStructure.empty(spec)}
    for _ in range(size):
        nxt: dict[bytes, FinStructure] = {}
        for key in sorted(level):
            for E in _extension_choices(level[key]):
                nxt.setdefault(canonical_form(E), E)
        level = nxt
    return [level[k] for k in sorted(level)]


# -- local types ----------------------------------------------------------------


def _normalize(raw: Mapping[int, Sequence[int]], pos: Mapping[int, Mapping | None], point_pattern) -> tuple:
    out = []
    for n in sorted(raw):
        ids: dict[int, int] = {}
        seq = tuple(ids.setdefault(c, len(ids)) for c in raw[n])
        p = pos.get(n)
        order = tuple(ids[c] for c in sorted(ids, key=p.__getitem__)) if p else None
        out.append((n, seq, order))
    return (tuple(out), point_pattern)


class TypeReader:
    """Computes the labeled type of a point tuple inside a fixed structure."""

    def __init__(self, spec: ClassSpec, rel, pos, prank):
        self.spec = spec
        self.rel = rel
        self.pos = pos
        self.prank = prank
        self._combos: dict[tuple[int, int], list] = {}

    @classmethod
    def of(cls, M: FinStructure) -> "TypeReader":
        return cls(
            M.spec,
            {n: M.relations[n].tolist() for n in M.arities},
            {n: M.order_positions(n) for n in M.arities},
            M.point_rank(),
        )

    def lex_combos(self, k: int, n: int) -> list:
        key = (k, n)
        if key not in self._combos:
            self._combos[key] = list(combinations(range(k), n))
        return self._combos[key]

    def raw(self, pts: Sequence[int]) -> dict[int, list[int]]:
        k = len(pts)
        out = {}
        for n in self.spec.tracked(k):
            if n not in self.rel:
                continue
            rel = self.rel[n]
            out[n] = [rel[_comb.rank(sorted(pts[j] for j in c))] for c in self.lex_combos(k, n)]
        return out

    def point_pattern(self, pts: Sequence[int]):
        if self.prank is None:
            return None
        return tuple(sorted(range(len(pts)), key=lambda i: self.prank[pts[i]]))

    def type_of(self, pts: Sequence[int]) -> tuple:
        return _normalize(self.raw(pts), self.pos, self.point_pattern(pts))


def local_type(M: FinStructure, pts: Sequence[int]) -> tuple:
    """Hashable description of induced(M, pts) with its point labels kept."""
    return TypeReader.of(M).type_of(pts)


# -- extension property -----------------------------------------------------------


@dataclass(frozen=True)
class MissingExtension:
    base: tuple          # the points of M carrying the embedded copy of A
    extension: FinStructure  # one-point extension of induced(M, base); new point last
    key: bytes           # canonical key of the extension, for ordering

    def sort_key(self):
        return (self.extension.universe, self.key, self.base)


class _Requirements:
    """Cache of one-point extension types keyed by the type of the base."""

    def __init__(self):
        self.cache: dict[tuple, list[tuple[tuple, FinStructure, bytes]]] = {}

    def over(self, reader: TypeReader, base: Sequence[int], restrict):
        t = reader.type_of(base)
        hit = self.cache.get(t)
        if hit is None:
            A = restrict(list(base))
            hit = []
            for E in _extension_choices(A):
                hit.append((local_type(E, range(E.universe)), E, canonical_form(E)))
            self.cache[t] = hit
        return hit


def check_extension_property(M: FinStructure, k: int, guard: int = SIZE_GUARD) -> list[MissingExtension]:
    """Missing one-point extensions over bases of size < k, sorted deterministically."""
    if k > guard:
        raise SearchLimitError(f"level {k} exceeds the enumeration guard {guard}")
    reader = TypeReader.of(M)
    req = _Requirements()
    missing = []
    for size in range(0, min(k - 1, M.universe) + 1):
        for base in combinations(range(M.universe), size):
            need = req.over(reader, base, lambda pts: induced(M, pts))
            have = set()
            rest = [x for x in range(M.universe) if x not in base]
            for x in rest:
                have.add(reader.type_of(base + (x,)))
            for t, E, key in need:
                if t not in have:
                    missing.append(MissingExtension(base, E, key))
    missing.sort(key=MissingExtension.sort_key)
    return missing


# -- saturation -------------------------------------------------------------------


@dataclass
class GenericApproximation:
    structure: FinStructure
    saturation_level: int
    target_level: int
    missing: list[MissingExtension] = field(default_factory=list)
    build_log: list[dict] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.saturation_level >= self.target_level and not self.missing


_GENERIC = -1  # stands for "a class distinct from every class in sight"


class _Builder:
    """Mutable structure that grows one point at a time."""

    def __init__(self, M: FinStructure, palette: int = 3, seed: int = 0):
        self.palette = palette
        self.rng = random.Random(seed)
        self.spec = M.spec
        self.m = M.universe
        self.rel = {n: M.relations[n].tolist() for n in M.arities}
        self.order = {n: list(M.class_orders[n]) for n in M.class_orders}
        self.points = list(M.point_order) if M.point_order is not None else None
        self.next = {n: (max(r) + 1 if r else 0) for n, r in self.rel.items()}
        self.reader = TypeReader(self.spec, self.rel, {}, None)
        self.refresh()

    def refresh(self):
        self.reader.pos = {n: {c: i for i, c in enumerate(o)} for n, o in self.order.items()}
        if self.points is not None:
            prank = [0] * self.m
            for i, p in enumerate(self.points):
                prank[p] = i
            self.reader.prank = prank

    def fresh(self, n: int) -> int:
        c = self.next.get(n, 0)
        self.next[n] = c + 1
        return c

    def structure(self) -> FinStructure:
        return FinStructure.from_labels(self.spec, self.m, self.rel, self.order, self.points)

    def restrict(self, pts: Sequence[int]) -> FinStructure:
        k = len(pts)
        rels, orders = {}, {}
        for n in self.spec.tracked(k):
            if n not in self.rel:
                continue
            rel = self.rel[n]
            rels[n] = [rel[_comb.rank(sorted(pts[j] for j in row))] for row in _comb.combos(k, n).tolist()]
            if n in self.order:
                orders[n] = self.order[n]
        po = None
        if self.points is not None:
            po = sorted(range(k), key=lambda i: self.reader.prank[pts[i]])
        return FinStructure.from_labels(self.spec, k, rels, orders, po)

    # -- adding a point realizing a one-point extension over a base -------------

    def add_point(self, base: tuple, E: FinStructure, missing: Mapping[tuple, set]) -> int:
        m, u = self.m, len(base)
        y = m
        upos = {p: j for j, p in enumerate(base)}
        if self.points is not None:
            self._place_point(base, E)
        new: dict[int, list[int]] = {}
        arities = self.spec.tracked(m + 1)
        for n in arities:
            self.rel.setdefault(n, [])
            if n in self.spec.ordered_arities:
                self.order.setdefault(n, [])
        # class maps from E's classes on the base to the classes of M
        emap = {}
        for n in arities:
            emap[n] = {}
            if n > u:
                continue
            erel = E.relations[n]
            for row in combinations(range(u), n):
                emap[n].setdefault(int(erel[_comb.rank(row)]), self.rel[n][_comb.rank(sorted(base[j] for j in row))])

        def e_class(n, S):
            return int(E.relations[n][_comb.rank(sorted(upos[s] for s in S) + [u])])

        for n in arities:
            if n == 2:
                continue
            new[n] = self._fill_arity(n, base, upos, emap[n], e_class, E)
        if 2 in arities:
            new[2] = self._fill_pairs(base, upos, emap[2], e_class, new, missing)
        for n in arities:
            self.rel[n].extend(new[n])
        self.m += 1
        self.refresh()
        return y

    def _place_point(self, base, E):
        m = self.m
        anchor = 0
        u = len(base)
        for q in E.point_order:
            if q == u:
                self.points.insert(anchor, m)
                return
            anchor = self.points.index(base[q]) + 1

    def _fill_arity(self, n, base, upos, emap, e_class, E) -> list[int]:
        m = self.m
        rows = _comb.combos(m, n - 1).tolist()
        rel = self.rel[n]
        out = []
        groups: dict[int, int] = {}
        if n == 1:
            ec = e_class(1, ())
            if ec in emap:
                return [emap[ec]]
            taken = {rel[p] for p in base}
            counts: dict[int, int] = {}
            for c in rel:
                counts[c] = counts.get(c, 0) + 1
            free = sorted((cnt, c) for c, cnt in counts.items() if c not in taken)
            return [free[0][1] if free else self.fresh(1)]
        default = rel[0] if rel else None
        for S in rows:
            if all(s in upos for s in S):
                ec = e_class(n, S)
                if ec in emap:
                    out.append(emap[ec])
                    continue
                if ec not in groups:
                    groups[ec] = self.fresh(n)
                out.append(groups[ec])
            else:
                if default is None:
                    default = next(iter(groups.values()), None)
                    if default is None:
                        default = self.fresh(n)
                        if n in self.order:
                            self.order[n].append(default)
                out.append(default)
        if n in self.order and groups:
            order = self.order[n]
            anchor = 0
            for ec in E.class_orders[n]:
                if ec in groups:
                    order.insert(anchor, groups[ec])
                    anchor += 1
                elif ec in emap:
                    anchor = order.index(emap[ec]) + 1
        return out

    def _fill_pairs(self, base, upos, emap, e_class, new, missing) -> list[int]:
        m = self.m
        rel1, rel2 = self.rel[1], self.rel[2]
        e_y = new[1][0]
        triples = new.get(3)
        pos3 = self.reader.pos.get(3) if triples is not None else None
        if pos3 is not None:
            pos3 = {c: i for i, c in enumerate(self.order[3])}
        prank = None
        if self.points is not None:
            prank = [0] * (m + 1)
            for i, p in enumerate(self.points):
                prank[p] = i
        u_classes = {rel2[_comb.rank(sorted(pair))] for pair in combinations(base, 2)}
        existing = sorted(set(rel2))
        chosen: dict[int, int] = {}
        groups: dict[int, int] = {}

        def sig(a, b, ca, cb):
            raw = {1: [rel1[a], rel1[b], e_y], 2: [rel2[_comb.rank((a, b))], ca, cb]}
            pos = {}
            if triples is not None:
                raw[3] = [triples[_comb.rank((a, b))]]
                pos[3] = pos3
            pp = None
            if prank is not None:
                pp = tuple(sorted(range(3), key=lambda i: prank[(a, b, m)[i]]))
            return _normalize(raw, pos, pp)

        for w in list(base) + [w for w in range(m) if w not in upos]:
            if w in upos:
                ec = e_class(2, (w,))
                if ec in emap:
                    chosen[w] = emap[ec]
                    continue
                if ec in groups:
                    chosen[w] = groups[ec]
                    continue
                used = set(groups.values())
                allowed = [c for c in existing if c not in u_classes and c not in used]
            else:
                ec = None
                allowed = existing
            score = 0
            special: dict[int, int] = {}
            for w2, c2 in chosen.items():
                a, b = (w2, w) if w2 < w else (w, w2)
                miss = missing.get((a, b))
                if not miss:
                    continue
                d = rel2[_comb.rank((a, b))]

                def gain(cv):
                    ca, cb = (c2, cv) if w2 < w else (cv, c2)
                    return sig(a, b, ca, cb) in miss

                g0 = gain(_GENERIC)
                score += g0
                for cv in {d, c2}:
                    special[cv] = special.get(cv, 0) + gain(cv) - g0
            cands = list(allowed)
            if not cands or len(existing) < self.palette:
                cands.append(None)
            scores = [score + special.get(c, 0) for c in cands]
            top = max(scores)
            best = self.rng.choice([c for c, v in zip(cands, scores) if v == top])
            if best is None:
                best = self.fresh(2)
                existing.append(best)
            chosen[w] = best
            if ec is not None:
                groups[ec] = best
        return [chosen[w] for w in range(m)]


def saturate(
    M: FinStructure,
    k: int,
    point_budget: int,
    guard: int = SIZE_GUARD,
    palette: int = 3,
    seed: int = 0,
) -> GenericApproximation:
    """Grow M by one-point extensions until the extension property holds at level k.

    Missing extensions are handled in (|B|, canonical key, base) order.  Each
    new point realizes its target extension over the base exactly; its
    remaining pair classes are chosen greedily to realize as many other
    missing extensions as possible, from a palette of ``palette`` pair classes
    where possible (ties broken by a generator seeded with ``seed``).

    Orders put a ceiling on what a finite structure can satisfy: with a
    point order, level 2 asks for a point above the greatest point, and an
    ordered arity n asks for a class above the greatest class once k > n.
    Such runs stop at the budget with the gap in ``missing``.
    """
    if k > guard:
        raise SearchLimitError(f"level {k} exceeds the enumeration guard {guard}")
    if point_budget < M.universe:
        raise StructureError("point budget is below the size of the input")
    b = _Builder(M, palette, seed)
    req = _Requirements()
    missing: dict[tuple, set] = {}
    heap: list = []

    def open_base(base):
        need = req.over(b.reader, base, b.restrict)
        have = {b.reader.type_of(base + (x,)) for x in range(b.m) if x not in base}
        gap = {t for t, _, _ in need if t not in have}
        if gap:
            missing[base] = gap
            for t, E, key in need:
                if t in gap:
                    heapq.heappush(heap, (E.universe, key, base, t, E))

    for size in range(0, min(k - 1, b.m) + 1):
        for base in combinations(range(b.m), size):
            open_base(base)
    all_bases = [base for size in range(0, min(k - 1, b.m) + 1) for base in combinations(range(b.m), size)]
    log = []
    while heap:
        size_b, key, base, t, E = heap[0]
        if t not in missing.get(base, ()):
            heapq.heappop(heap)
            continue
        if b.m >= point_budget:
            break
        heapq.heappop(heap)
        y = b.add_point(base, E, missing)
        got = b.reader.type_of(base + (y,))
        if got != t:
            raise RuntimeError(f"new point {y} does not realize its target over {base}")
        for other in all_bases:
            gap = missing.get(other)
            if gap:
                gap.discard(b.reader.type_of(other + (y,)))
                if not gap:
                    del missing[other]
        fresh_bases = [s + (y,) for size in range(0, k - 1) for s in combinations(range(y), size)]
        for nb in fresh_bases:
            open_base(nb)
        all_bases.extend(fresh_bases)
        log.append({"point": y, "base": list(base), "extension": key.decode()})
    out = b.structure()
    report = validate(out, out.spec)
    if not report.ok:
        raise RuntimeError(f"saturation produced an invalid structure: {report.first()}")
    if not is_embedding(M, out, list(range(M.universe))):
        raise RuntimeError("saturation lost the input structure")
    final = check_extension_property(out, k, guard)
    if not heap and final:
        raise RuntimeError("independent extension check disagrees with the saturation loop")
    level = min([k] + [len(x.base) for x in final])
    return GenericApproximation(out, level, k, final, log)


# -- realizing class maps by an automorphism ------------------------------------------


@dataclass(frozen=True)
class Realization:
    structure: FinStructure
    mapping: dict        # point map; a full permutation when is_automorphism
    is_automorphism: bool
    blocks: dict         # (arity, class name) -> tuple of points carrying that class


def _complete(rho: Mapping[int, int]) -> dict[int, int]:
    """Extend a finite partial injection to a permutation of its names."""
    sigma = dict(rho)
    for start in set(rho) - set(rho.values()):
        end = start
        while end in rho:
            end = rho[end]
        sigma[end] = start
    return sigma


def realize_class_maps(
    spec: ClassSpec,
    rho: Mapping[int, Mapping[int, int]],
    host: FinStructure | None = None,
) -> Realization:
    """A member F and a point map of F inducing each rho[i] on named i-classes.

    Every class name gets its own block of i fresh points whose i-subset lies
    in that class.  Other subsets inside the blocks of one arity share one
    class per arity, and subsets spread over blocks of different arities
    share a global class.  Moving each block onto the block of its image
    gives the map.  For an ordered arity the induced class permutation of a
    finite automorphism is the identity, so a non-identity rho there yields a
    partial isomorphism defined on the domain blocks instead.

    Without a host, class names of ordered arities are ordered as integers.
    """
    rho = {int(i): {int(a): int(b) for a, b in r.items()} for i, r in rho.items() if r}
    pos = {}
    for i, r in rho.items():
        if i < 1 or i > spec.max_arity:
            raise StructureError(f"arity {i} is outside 1..{spec.max_arity}")
        if len(set(r.values())) != len(r):
            raise StructureError(f"rho_{i} is not injective")
        if host is not None:
            if i not in host.relations:
                raise StructureError(f"host has no arity {i}")
            names = set(host.relations[i].tolist())
            bad = [c for c in list(r) + list(r.values()) if c not in names]
            if bad:
                raise StructureError(f"rho_{i} names unknown classes {sorted(set(bad))}")
        if i in spec.ordered_arities:
            p = host.order_positions(i) if host is not None else None
            key = p.__getitem__ if p is not None else (lambda c: c)
            pos[i] = key
            for a, b in combinations(sorted(r, key=key), 2):
                if key(r[a]) <= key(r[b]):
                    continue
                raise StructureError(f"rho_{i} does not respect the class order: {a}->{r[a]}, {b}->{r[b]}")
    sigma = {i: _complete(r) for i, r in rho.items()}
    blocks: dict[tuple[int, int], tuple] = {}
    owner: list[int] = []
    for i in sorted(sigma):
        for c in sorted(sigma[i]):
            start = len(owner)
            blocks[(i, c)] = tuple(range(start, start + i))
            owner.extend([i] * i)
    m = len(owner)
    block_of = {pts: name for name, pts in blocks.items()}
    rels, orders = {}, {}
    for n in spec.tracked(m):
        labels = []
        names: dict = {}
        for row in _comb.combos(m, n).tolist():
            hit = block_of.get(tuple(row))
            if hit is not None and hit[0] == n:
                tag = ("name", hit[1])
            elif len({owner[p] for p in row}) == 1:
                tag = ("inside", owner[row[0]])
            else:
                tag = ("across",)
            labels.append(names.setdefault(tag, len(names)))
        rels[n] = labels
        if n in spec.ordered_arities:
            key = pos.get(n, lambda c: c)
            tags = sorted(names, key=lambda t: (t[0] == "name", key(t[1]) if t[0] == "name" else str(t)))
            orders[n] = [names[t] for t in tags]
    F = FinStructure.from_labels(spec, m, rels, orders, tuple(range(m)) if spec.allow_point_order else None)
    full = {}
    for (i, c), pts in blocks.items():
        for p, q in zip(pts, blocks[(i, sigma[i][c])]):
            full[p] = q
    rigid = any(i in spec.ordered_arities and any(a != b for a, b in sigma[i].items()) for i in sigma)
    if spec.allow_point_order and any(p != q for p, q in full.items()):
        rigid = True
    if not rigid:
        return Realization(F, full, True, blocks)
    partial = {}
    for i, r in rho.items():
        for c in r:
            for p, q in zip(blocks[(i, c)], blocks[(i, r[c])]):
                partial[p] = q
    return Realization(F, partial, False, blocks)
