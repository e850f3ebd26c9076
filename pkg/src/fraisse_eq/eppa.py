"""Extension of partial isomorphisms for colored class structures.

The colored expansion gives every class of every arity its own color, so a
color-preserving map must send each subset into its own class.  A search for
an extension B of A fixes |B| and looks for permutations g_j of B extending
the given partial maps.  Once the g_j are fixed, the colors of B are forced to
be constant along orbits (twisted by chi for permorphisms); the search tracks
these orbits with a union-find whose edges carry palette permutations.  An
orbit holding subsets of A must get one consistent color, and every orbit
avoiding A gets one extra color per arity that every chi fixes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence


from . import _comb
from .generic import random_member
from .iso import automorphisms, embeddings, first_embedding, induced_class_map, is_embedding
from .structure import ClassSpec, FinStructure, StructureError, induced


# -- colored structures ------------------------------------------------------------


@dataclass(frozen=True)
class ColoredStructure:
    """A class structure whose classes carry palette colors.

    ``colors[n][c]`` is the color of class c of arity n.  Each subset has
    exactly the color of its class, so no subset carries two colors.
    """

    base: FinStructure
    colors: Mapping[int, Mapping[int, int]]
    injective: bool = True

    def __post_init__(self):
        if self.base.class_orders or self.base.point_order is not None:
            raise StructureError("colored structures are built on orderless members")
        colors = {int(n): {int(c): int(v) for c, v in cmap.items()} for n, cmap in self.colors.items()}
        for n in self.base.arities:
            have = colors.get(n, {})
            missing = set(range(self.base.num_classes(n))) - set(have)
            if missing:
                raise StructureError(f"arity {n} classes {sorted(missing)} have no color")
            if self.injective and len(set(have.values())) != len(have):
                raise StructureError(f"arity {n} coloring is not injective")
        object.__setattr__(self, "colors", colors)

    @property
    def universe(self) -> int:
        return self.base.universe

    def subset_colors(self, n: int) -> list[int]:
        cmap = self.colors[n]
        return [cmap[c] for c in self.base.relations[n].tolist()]

    def color_of(self, subset: Sequence[int]) -> int:
        n = len(subset)
        return self.colors[n][self.base.class_of(sorted(subset))]

    def palette(self, n: int) -> set[int]:
        return set(self.colors.get(n, {}).values())

    def forget(self) -> FinStructure:
        return self.base

    @classmethod
    def from_subset_colors(cls, spec: ClassSpec, m: int, colors: Mapping[int, Sequence[int]]) -> "ColoredStructure":
        """Colored structure whose classes are exactly the color classes."""
        base = FinStructure.from_labels(spec, m, colors)
        cmap = {}
        for n, seq in colors.items():
            rel = base.relations[n].tolist()
            cmap[n] = {}
            for c, v in zip(rel, seq):
                cmap[n].setdefault(c, int(v))
        return cls(base, cmap)


def color_expand(M: FinStructure) -> ColoredStructure:
    """Color each class by its canonical identifier."""
    if M.class_orders or M.point_order is not None:
        raise StructureError("color expansion takes orderless structures")
    return ColoredStructure(M, {n: {c: c for c in range(M.num_classes(n))} for n in M.arities})


@dataclass(frozen=True)
class PartialMap:
    """Injective point map with an optional per-arity palette permutation."""

    mapping: Mapping[int, int]
    chi: Mapping[int, Mapping[int, int]] | None = None

    def __post_init__(self):
        object.__setattr__(self, "mapping", {int(a): int(b) for a, b in self.mapping.items()})
        if self.chi is not None:
            object.__setattr__(
                self, "chi", {int(n): {int(a): int(b) for a, b in c.items()} for n, c in self.chi.items()}
            )

    @property
    def domain(self) -> list[int]:
        return sorted(self.mapping)

    @property
    def image(self) -> list[int]:
        return [self.mapping[a] for a in self.domain]

    def twist(self, n: int, color: int) -> int:
        if not self.chi or n not in self.chi:
            return color
        return self.chi[n].get(color, color)

    def has_identity_chi(self) -> bool:
        return not self.chi or all(a == b for c in self.chi.values() for a, b in c.items())


@dataclass
class EppaCertificate:
    verdict: str                      # "found", "exhausted" or "refuted"
    B: ColoredStructure | None = None
    automorphisms: list[tuple] = field(default_factory=list)
    bound: int | None = None
    reason: str = ""

    @property
    def found(self) -> bool:
        return self.verdict == "found"

    def to_document(self) -> dict:
        doc = {"verdict": self.verdict, "bound": self.bound, "reason": self.reason}
        if self.B is not None:
            doc["universe"] = self.B.universe
            doc["subset_colors"] = {str(n): self.B.subset_colors(n) for n in self.B.base.arities}
            doc["automorphisms"] = [list(g) for g in self.automorphisms]
        return doc


def random_partial_isomorphism(A: ColoredStructure, rng: random.Random, max_domain: int | None = None) -> PartialMap:
    """A uniformly chosen color-preserving partial isomorphism on a random domain."""
    m = A.universe
    if m == 0:
        return PartialMap({})
    dom = sorted(rng.sample(range(m), rng.randint(1, min(m, max_domain or m))))
    sub = induced(A.base, dom)
    src_labels = {}
    for n in sub.arities:
        src_labels[n] = [A.color_of([dom[i] for i in members[0]]) for members in sub.classes(n)]
    tgt_labels = {n: [A.colors[n][c] for c in range(A.base.num_classes(n))] for n in A.base.arities}
    options = embeddings(sub, A.base, labels=(src_labels, tgt_labels))
    image = rng.choice(options)
    return PartialMap({x: int(y) for x, y in zip(dom, image)})


# -- input checks ----------------------------------------------------------------


def _check_maps(A: ColoredStructure, maps: Sequence[PartialMap]) -> None:
    m = A.universe
    for j, p in enumerate(maps):
        pts = list(p.mapping) + list(p.mapping.values())
        if any(not 0 <= x < m for x in pts):
            raise StructureError(f"map {j} leaves the universe of A")
        if len(set(p.mapping.values())) != len(p.mapping):
            raise StructureError(f"map {j} is not injective")
        for n, c in (p.chi or {}).items():
            if not 1 <= n <= A.base.spec.max_arity:
                raise StructureError(f"map {j}: chi is given at arity {n}, outside the tracked arities")
            if set(c) != set(c.values()):
                raise StructureError(f"map {j}: the palette of arity {n} is not closed under chi")


def _refutation(A: ColoredStructure, maps: Sequence[PartialMap]) -> str | None:
    """Why some map is not a partial (chi-)isomorphism of A, or None."""
    for j, p in enumerate(maps):
        dom = p.domain
        for n in A.base.arities:
            for S in combinations(dom, n):
                want = p.twist(n, A.color_of(S))
                got = A.color_of([p.mapping[x] for x in S])
                if got != want:
                    return f"map {j} sends {list(S)} (color {A.color_of(S)}) to color {got}, expected {want}"
    return None


# -- the search engine ----------------------------------------------------------------


class _Orbits:
    """Union-find over subsets of B with palette permutations on the edges.

    For a node x with parent y, color(x) = f[x][color(y)].  Roots keep the
    bitmask of colors still possible for their component.
    """

    def __init__(self, masks: list[int], width: int):
        k = len(masks)
        self.parent = list(range(k))
        self.f: list[tuple | None] = [None] * k
        self.allowed = masks[:]
        self.size = [1] * k
        self.width = width
        self.trail: list = []

    def union(self, s, t, chi) -> bool:
        """Impose color(t) = chi(color(s)); False on contradiction."""
        rs, Fs = self._path(s)
        rt, Ft = self._path(t)
        h = _compose(_inverse(Ft), _compose(chi, Fs))
        if rs == rt:
            if h is None:
                return True
            mask = self.allowed[rs]
            keep = 0
            for c in _bits(mask):
                if h[c] == c:
                    keep |= 1 << c
            if keep != mask:
                self.trail.append(("mask", rs, mask))
                self.allowed[rs] = keep
            return keep != 0
        if self.size[rs] >= self.size[rt]:
            # color(rt) = h(color(rs))
            keep = _preimage(h, self.allowed[rt], self.allowed[rs])
            self.trail.append(("link", rt, rs, self.allowed[rs]))
            self.parent[rt], self.f[rt] = rs, h
            self.size[rs] += self.size[rt]
            self.allowed[rs] = keep
            return keep != 0
        hinv = _inverse(h)
        keep = _preimage(hinv, self.allowed[rs], self.allowed[rt])
        self.trail.append(("link", rs, rt, self.allowed[rt]))
        self.parent[rs], self.f[rs] = rt, hinv
        self.size[rt] += self.size[rs]
        self.allowed[rt] = keep
        return keep != 0

    def _path(self, x):
        chain = []
        while self.parent[x] != x:
            chain.append(self.f[x])
            x = self.parent[x]
        F = None
        for fx in chain:
            F = _compose(F, fx)
        return x, F

    def mark(self) -> int:
        return len(self.trail)

    def undo(self, mark: int) -> None:
        while len(self.trail) > mark:
            item = self.trail.pop()
            if item[0] == "mask":
                self.allowed[item[1]] = item[2]
            else:
                _, child, root, old = item
                self.parent[child], self.f[child] = child, None
                self.size[root] -= self.size[child]
                self.allowed[root] = old

    def color(self, x) -> int:
        r, F = self._path(x)
        mask = self.allowed[r]
        c = max(_bits(mask)) if mask >> (self.width - 1) & 1 else min(_bits(mask))
        return c if F is None else F[c]


def _compose(a, b):
    """a after b, with None for the identity."""
    if a is None:
        return b
    if b is None:
        return a
    return tuple(a[i] for i in b)


def _inverse(a):
    if a is None:
        return None
    out = [0] * len(a)
    for i, v in enumerate(a):
        out[v] = i
    return tuple(out)


def _bits(mask: int):
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


def _preimage(h, target_mask: int, mask: int) -> int:
    """Colors c in mask with h(c) in target_mask."""
    keep = 0
    for c in _bits(mask):
        if target_mask >> (c if h is None else h[c]) & 1:
            keep |= 1 << c
    return keep


class _Palette:
    """Color indices per arity; the last index is the extra uniform color."""

    def __init__(self, A: ColoredStructure, maps: Sequence[PartialMap], arities):
        self.index: dict[int, dict[int, int]] = {}
        self.colors: dict[int, list[int]] = {}
        for n in arities:
            cols = set(A.palette(n))
            for p in maps:
                if p.chi and n in p.chi:
                    cols |= set(p.chi[n])
            cols = sorted(cols)
            extra = (cols[-1] + 1) if cols else 0
            self.colors[n] = cols + [extra]
            self.index[n] = {c: i for i, c in enumerate(self.colors[n])}

    def width(self, n):
        return len(self.colors[n])

    def chi(self, n, p: PartialMap):
        if p.has_identity_chi() or not p.chi or n not in p.chi:
            return None
        idx = self.index[n]
        return tuple(idx[p.twist(n, c)] for c in self.colors[n])


def _search_size(A: ColoredStructure, maps: Sequence[PartialMap], s: int, budget: list[int] | None):
    """Permutations g_j of range(s) extending the maps with consistent orbit colors."""
    a = A.universe
    spec = A.base.spec
    arities = spec.tracked(s)
    palette = _Palette(A, maps, arities)
    # one union-find per arity; nodes are colex ranks of n-subsets of range(s)
    orbits, chis = {}, []
    for n in arities:
        w = palette.width(n)
        full = (1 << w) - 1
        masks = [full] * _comb.n_subsets(s, n)
        if n in A.base.relations:
            idx = palette.index[n]
            for r, col in enumerate(A.subset_colors(n)):
                masks[r] = 1 << idx[col]
        orbits[n] = _Orbits(masks, w)
    for p in maps:
        chis.append({n: palette.chi(n, p) for n in arities})
    k = len(maps)
    g = [[-1] * s for _ in range(k)]
    used = [[False] * s for _ in range(k)]
    touched = [False] * s
    for x in range(a):
        touched[x] = True
    # subsets containing x, by arity, as sorted point tuples
    through = [
        [(n, rest) for n in arities for rest in combinations([q for q in range(s) if q != x], n - 1)]
        for x in range(s)
    ]

    def assign(j, x, t) -> bool:
        g[j][x] = t
        used[j][t] = True
        gj = g[j]
        for n, rest in through[x]:
            if any(gj[q] < 0 for q in rest):
                continue
            S = tuple(sorted(rest + (x,)))
            T = sorted(gj[q] for q in S)
            if not orbits[n].union(_comb.rank(S), _comb.rank(T), chis[j][n]):
                return False
        return True

    def unassign(j, x):
        used[j][g[j][x]] = False
        g[j][x] = -1

    for j, p in enumerate(maps):
        for x in sorted(p.mapping):
            if not assign(j, x, p.mapping[x]):
                return None
    variables = [(j, x) for x in range(s) for j in range(k) if g[j][x] < 0]

    def rec(i):
        if budget is not None:
            budget[0] -= 1
            if budget[0] < 0:
                raise _BudgetExceeded
        if i == len(variables):
            return True
        j, x = variables[i]
        was_touched = touched[x]
        touched[x] = True
        fresh_seen = False
        for t in range(s):
            if used[j][t]:
                continue
            if not touched[t]:
                if fresh_seen:
                    continue
                fresh_seen = True
            new_touch = not touched[t]
            touched[t] = True
            mk = {n: o.mark() for n, o in orbits.items()}
            ok = assign(j, x, t)
            if ok and rec(i + 1):
                return True
            for n, o in orbits.items():
                o.undo(mk[n])
            unassign(j, x)
            if new_touch:
                touched[t] = False
        touched[x] = was_touched
        return False

    if not rec(0):
        return None
    colors = {}
    for n in arities:
        o = orbits[n]
        colors[n] = [palette.colors[n][o.color(r)] for r in range(_comb.n_subsets(s, n))]
    B = ColoredStructure.from_subset_colors(spec, s, colors)
    return B, [tuple(gj) for gj in g]


class _BudgetExceeded(Exception):
    pass


def _verify(A: ColoredStructure, maps: Sequence[PartialMap], B: ColoredStructure, gs: list[tuple]) -> None:
    a = A.universe
    if not is_embedding(A.base, B.base, list(range(a))):
        raise RuntimeError("certificate: A is not induced in B")
    for n in A.base.arities:
        if A.subset_colors(n) != B.subset_colors(n)[: _comb.n_subsets(a, n)]:
            raise RuntimeError("certificate: colors of A changed")
    labels = {n: [B.colors[n][c] for c in range(B.base.num_classes(n))] for n in B.base.arities}
    for p, gmap in zip(maps, gs):
        if any(gmap[x] != y for x, y in p.mapping.items()):
            raise RuntimeError("certificate: automorphism does not extend its map")
        hit = first_embedding(
            B.base,
            B.base,
            seed=dict(enumerate(gmap)),
            labels=(labels, labels),
            label_map=p.twist,
            surjective=True,
        )
        if hit != tuple(gmap):
            raise RuntimeError("certificate: permutation is not a (chi-)automorphism of B")


def permorphism_search(
    A: ColoredStructure,
    maps: Sequence[PartialMap],
    bound: int | None = None,
    node_budget: int | None = None,
) -> EppaCertificate:
    """Smallest B (up to ``bound`` points) on which every map extends to a chi-permorphism."""
    _check_maps(A, maps)
    bound = A.universe + 6 if bound is None else bound
    if bound < A.universe:
        raise StructureError("bound is below the size of A")
    why = _refutation(A, maps)
    if why is not None:
        return EppaCertificate("refuted", bound=bound, reason=why)
    budget = [node_budget] if node_budget is not None else None
    for s in range(A.universe, bound + 1):
        try:
            hit = _search_size(A, maps, s, budget)
        except _BudgetExceeded:
            return EppaCertificate("exhausted", bound=s - 1, reason=f"node budget ran out at size {s}")
        if hit is not None:
            B, gs = hit
            _verify(A, maps, B, gs)
            return EppaCertificate("found", B, gs, bound, f"extension on {s} points")
    return EppaCertificate("exhausted", bound=bound, reason=f"no extension on at most {bound} points")


def eppa_search(A: ColoredStructure, maps: Sequence[PartialMap], bound: int | None = None, **kw) -> EppaCertificate:
    """Color-preserving version: every chi must be the identity."""
    for j, p in enumerate(maps):
        if not p.has_identity_chi():
            raise StructureError(f"map {j} carries a non-identity chi; use permorphism_search")
    return permorphism_search(A, maps, bound, **kw)


def eppa_search_k0(A: FinStructure, maps: Sequence[Mapping[int, int]], bound: int | None = None, **kw) -> EppaCertificate:
    """Uncolored version: extend partial isomorphisms of a class member.

    A partial isomorphism moves classes; the class map it induces on A is
    completed to a permutation of A's classes and used as chi on the color
    expansion.
    """
    C = color_expand(A)
    out = []
    for j, p in enumerate(maps):
        p = {int(x): int(y) for x, y in p.items()}
        chi = {}
        for n in A.arities:
            seen: dict[int, int] = {}
            for S in combinations(sorted(p), n):
                src = A.class_of(list(S))
                dst = A.class_of(sorted(p[x] for x in S))
                if seen.setdefault(src, dst) != dst:
                    return EppaCertificate("refuted", bound=bound, reason=f"map {j} splits class {src} of arity {n}")
            if len(set(seen.values())) != len(seen):
                return EppaCertificate("refuted", bound=bound, reason=f"map {j} merges classes of arity {n}")
            chi[n] = _complete_perm(seen, range(A.num_classes(n)))
        out.append(PartialMap(p, chi))
    return permorphism_search(C, out, bound, **kw)


def _complete_perm(partial: Mapping[int, int], names) -> dict[int, int]:
    sigma = dict(partial)
    for start in set(partial) - set(partial.values()):
        end = start
        while end in partial:
            end = partial[end]
        sigma[end] = start
    for c in names:
        sigma.setdefault(c, c)
    return sigma


# -- finite-order rigidity and the failure certificate -------------------------------------


def rigidity_violations(S: FinStructure, limit: int | None = None) -> list[tuple]:
    """Automorphisms of S that move a class of some ordered arity."""
    bad = []
    for count, g in enumerate(automorphisms(S)):
        if limit is not None and count >= limit:
            break
        for n in S.class_orders:
            cmap = induced_class_map(S, g, n)
            if any(a != b for a, b in cmap.items()):
                bad.append((n, g))
    return bad


@dataclass
class FailureCertificate:
    arity: int
    witness: tuple
    phi: dict
    candidates_checked: int
    automorphisms_checked: int
    analytic_ok: bool
    exhaustive_ok: bool
    bound: int

    @property
    def holds(self) -> bool:
        return self.analytic_ok and self.exhaustive_ok

    def to_document(self) -> dict:
        return {
            "verdict": "failure" if self.holds else "inconclusive",
            "arity": self.arity,
            "witness": [list(b) for b in self.witness],
            "phi": {str(k): v for k, v in sorted(self.phi.items())},
            "candidates_checked": self.candidates_checked,
            "automorphisms_checked": self.automorphisms_checked,
            "analytic": self.analytic_ok,
            "exhaustive": self.exhaustive_ok,
            "bound_extra_points": self.bound,
        }


def _check_witness(spec: ClassSpec, M: FinStructure, n: int, witness) -> tuple:
    if n not in spec.ordered_arities:
        raise StructureError(f"arity {n} is not ordered in this class")
    if len(witness) != 3:
        raise StructureError("the witness consists of three n-subsets")
    blocks = tuple(tuple(sorted(int(x) for x in b)) for b in witness)
    pts = [x for b in blocks for x in b]
    if any(len(b) != n for b in blocks) or len(set(pts)) != 3 * n:
        raise StructureError("witness blocks must be pairwise disjoint n-subsets")
    if any(not 0 <= x < M.universe for x in pts):
        raise StructureError("witness leaves the structure")
    pos = M.order_positions(n)
    ca, cb, cc = (pos[M.class_of(list(b))] for b in blocks)
    if not ca < cb < cc:
        raise StructureError("witness classes must be distinct and increasing in the class order")
    return blocks


def verify_eppa_failure(
    spec: ClassSpec,
    M: FinStructure,
    n: int,
    witness,
    bound: int = 8,
    samples: int = 50,
    seed: int = 0,
) -> FailureCertificate:
    """Check that fixing a and moving b onto c extends to no automorphism of any finite F.

    ``bound`` counts points of F beyond the 3n witness points.  Candidates F
    are induced on the witness plus up to ``bound`` further points of M:
    all of them when there are few enough, else a seeded sample.
    """
    a, b, c = _check_witness(spec, M, n, witness)
    phi = {x: x for x in a}
    phi.update(dict(zip(b, c)))
    dom = sorted(phi)
    src = induced(M, dom)
    tgt = induced(M, [phi[x] for x in dom])
    if not is_embedding(src, tgt, list(range(len(dom)))):
        raise StructureError("fixing a and moving b onto c is not a partial isomorphism of M")
    core = sorted(set(a) | set(b) | set(c))
    rest = [x for x in range(M.universe) if x not in core]
    rng = random.Random(seed)
    subsets = []
    total = sum(_comb.n_subsets(len(rest), k) for k in range(min(bound, len(rest)) + 1))
    if total <= 5000:
        for k in range(min(bound, len(rest)) + 1):
            subsets.extend(combinations(rest, k))
        exhaustive = True
    else:
        exhaustive = False
        for _ in range(samples):
            k = rng.randint(0, min(bound, len(rest)))
            subsets.append(tuple(sorted(rng.sample(rest, k))))
    analytic_ok = True
    exhaustive_ok = exhaustive
    auts = 0
    for extra in subsets:
        pts = core + list(extra)
        F = induced(M, pts)
        where = {p: i for i, p in enumerate(pts)}
        seed_map = {where[x]: where[y] for x, y in phi.items()}
        # (ii) no automorphism of F extends phi
        if first_embedding(F, F, seed=seed_map, surjective=True) is not None:
            exhaustive_ok = False
            analytic_ok = False
        # (i) automorphisms of F fix every class of arity n
        if len(extra) <= 2:
            for count, g in enumerate(automorphisms(F)):
                auts += 1
                if any(x != y for x, y in induced_class_map(F, g, n).items()):
                    analytic_ok = False
                if count >= 200:
                    break
    return FailureCertificate(n, (a, b, c), phi, len(subsets), auts, analytic_ok, exhaustive_ok, bound)


def witness_blocks(spec: ClassSpec, n: int) -> FinStructure:
    """3n points in three blocks whose n-classes increase; every other subset in one class per arity."""
    m = 3 * n
    rels, orders = {}, {}
    blocks = [tuple(range(i * n, (i + 1) * n)) for i in range(3)]
    for k in spec.tracked(m):
        labels = []
        for row in _comb.combos(m, k).tolist():
            labels.append(1 + blocks.index(tuple(row)) if k == n and tuple(row) in blocks else 0)
        rels[k] = labels
        if k in spec.ordered_arities:
            orders[k] = sorted(set(labels))
    return FinStructure.from_labels(spec, m, rels, orders)


def eppa_failure_instance(spec: ClassSpec, n: int, host: FinStructure | None = None):
    """A structure carrying the canonical witness, and the witness blocks.

    The witness blocks come first; the host (for example a level-2 generic
    approximation) is jointly embedded after them.
    """
    from .amalgam import joint_embed

    W = witness_blocks(spec, n)
    M = W if host is None else joint_embed(spec, W, host)
    return M, tuple(tuple(range(i * n, (i + 1) * n)) for i in range(3))


def orderless_analogue(n: int, bound: int = 4) -> EppaCertificate:
    """Same witness with no class orders: the map extends (uncolored search)."""
    spec = ClassSpec(max_arity=n)
    W = witness_blocks(spec, n)
    phi = {x: x for x in range(n)}
    phi.update({n + i: 2 * n + i for i in range(n)})
    return eppa_search_k0(W, [phi], bound=W.universe + bound)


def sample_rigidity(spec: ClassSpec, count: int, max_size: int = 6, seed: int = 0) -> list:
    """Rigidity violations over seeded random members of the class."""
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        S = random_member(spec, rng.randint(1, max_size), rng, max_classes=3)
        out.extend((S, v) for v in rigidity_violations(S))
    return out
