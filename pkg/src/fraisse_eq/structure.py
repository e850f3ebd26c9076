"""Finite structures with equivalence relations on n-subsets.

A structure on points ``0..m-1`` carries, for every tracked arity ``n``, a
partition of its n-subsets into classes.  Arities in ``spec.ordered_arities``
additionally carry a linear order on their classes, and a structure may carry
a linear order on its points.

Relations are stored as integer arrays indexed by the colex rank of the
subset (see :mod:`fraisse_eq._comb`).  Class identifiers are canonical:
``0..k-1`` numbered by the lexicographically least member of each class.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _comb


class StructureError(ValueError):
    """Bad input to a structure operation."""


class DecodeError(StructureError):
    """A serialized document does not describe a valid structure."""


@dataclass(frozen=True)
class ClassSpec:
    """Which arities carry class orders, and how many arities are tracked.

    ``ordered_arities`` never contains 1 or 2.  ``allow_point_order`` admits
    structures that also carry a linear order on points.
    """

    ordered_arities: frozenset = frozenset()
    max_arity: int = 3
    allow_point_order: bool = False

    def __post_init__(self):
        object.__setattr__(self, "ordered_arities", frozenset(int(n) for n in self.ordered_arities))
        if self.max_arity < 1:
            raise StructureError("max_arity must be positive")
        bad = self.ordered_arities & {1, 2}
        if bad:
            raise StructureError(f"arities {sorted(bad)} cannot carry a class order")
        if any(n < 1 for n in self.ordered_arities):
            raise StructureError("ordered arities must be positive")
        over = [n for n in self.ordered_arities if n > self.max_arity]
        if over:
            raise StructureError(f"ordered arities {sorted(over)} exceed max_arity {self.max_arity}")

    def tracked(self, m: int) -> range:
        return range(1, min(m, self.max_arity) + 1)

    def to_json(self) -> dict:
        return {
            "ordered_arities": sorted(self.ordered_arities),
            "max_arity": self.max_arity,
            "allow_point_order": self.allow_point_order,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "ClassSpec":
        try:
            return cls(
                ordered_arities=frozenset(doc.get("ordered_arities", ())),
                max_arity=int(doc["max_arity"]),
                allow_point_order=bool(doc.get("allow_point_order", False)),
            )
        except (KeyError, TypeError) as exc:
            raise DecodeError(f"bad spec: {exc}") from None


K0 = ClassSpec()


def _frozen(arr) -> np.ndarray:
    a = np.array(arr, dtype=np.int64).reshape(-1)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FinStructure:
    universe: int
    relations: Mapping[int, np.ndarray]
    class_orders: Mapping[int, tuple] = field(default_factory=dict)
    point_order: tuple | None = None
    spec: ClassSpec = K0

    def __post_init__(self):
        object.__setattr__(
            self, "relations", MappingProxyType({int(n): _frozen(a) for n, a in self.relations.items()})
        )
        object.__setattr__(
            self,
            "class_orders",
            MappingProxyType({int(n): tuple(int(c) for c in o) for n, o in self.class_orders.items()}),
        )
        if self.point_order is not None:
            object.__setattr__(self, "point_order", tuple(int(p) for p in self.point_order))

    # -- construction ------------------------------------------------------

    @classmethod
    def from_labels(
        cls,
        spec: ClassSpec,
        universe: int,
        relations: Mapping[int, Sequence[int]],
        class_orders: Mapping[int, Sequence[int]] | None = None,
        point_order: Sequence[int] | None = None,
    ) -> "FinStructure":
        """Build a structure from arbitrary class labels (colex-indexed).

        Labels are renamed to canonical class identifiers; ``class_orders``
        lists labels from least to greatest.
        """
        class_orders = class_orders or {}
        rels, orders = {}, {}
        for n, labels in relations.items():
            labels = np.asarray(labels, dtype=np.int64).reshape(-1)
            canon, rename = canonical_labels(universe, n, labels)
            rels[n] = canon
            if n in class_orders:
                orders[n] = tuple(rename[int(c)] for c in class_orders[n] if int(c) in rename)
        return cls(universe, rels, orders, None if point_order is None else tuple(point_order), spec)

    @classmethod
    def uniform(cls, spec: ClassSpec, universe: int, point_order=None) -> "FinStructure":
        """Every tracked arity has a single class."""
        rels = {n: np.zeros(_comb.n_subsets(universe, n), dtype=np.int64) for n in spec.tracked(universe)}
        orders = {n: (0,) for n in rels if n in spec.ordered_arities}
        if point_order is None and spec.allow_point_order:
            point_order = tuple(range(universe))
        return cls(universe, rels, orders, point_order, spec)

    @classmethod
    def empty(cls, spec: ClassSpec = K0) -> "FinStructure":
        return cls(0, {}, {}, () if spec.allow_point_order else None, spec)

    # -- queries -----------------------------------------------------------

    @property
    def arities(self) -> list[int]:
        return sorted(self.relations)

    def num_classes(self, n: int) -> int:
        rel = self.relations[n]
        return int(rel.max()) + 1 if len(rel) else 0

    def class_of(self, subset: Iterable[int]) -> int:
        s = tuple(sorted(subset))
        return int(self.relations[len(s)][_comb.rank(s)])

    def members(self, n: int, cls_id: int) -> list[tuple]:
        idx = np.flatnonzero(self.relations[n] == cls_id)
        rows = _comb.combos(self.universe, n)[idx]
        return sorted(tuple(int(x) for x in r) for r in rows)

    def classes(self, n: int) -> list[list[tuple]]:
        """Members of every class of arity n, by class identifier."""
        out: list[list[tuple]] = [[] for _ in range(self.num_classes(n))]
        for row, c in zip(_comb.combos(self.universe, n).tolist(), self.relations[n].tolist()):
            out[c].append(tuple(row))
        for members in out:
            members.sort()
        return out

    def order_positions(self, n: int) -> dict[int, int] | None:
        order = self.class_orders.get(n)
        return None if order is None else {c: i for i, c in enumerate(order)}

    def point_rank(self) -> list[int] | None:
        if self.point_order is None:
            return None
        rank = [0] * self.universe
        for i, p in enumerate(self.point_order):
            rank[p] = i
        return rank

    # -- equality ----------------------------------------------------------

    def key(self) -> tuple:
        return (
            self.universe,
            tuple((n, self.relations[n].tobytes()) for n in sorted(self.relations)),
            tuple(sorted(self.class_orders.items())),
            self.point_order,
            self.spec,
        )

    def __eq__(self, other):
        if not isinstance(other, FinStructure):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        parts = [f"m={self.universe}"]
        for n in self.arities:
            parts.append(f"E{n}:{self.num_classes(n)}")
        if self.class_orders:
            parts.append(f"orders={sorted(self.class_orders)}")
        if self.point_order is not None:
            parts.append("point-ordered")
        return f"FinStructure({', '.join(parts)})"


def canonical_labels(universe: int, n: int, labels: np.ndarray) -> tuple[np.ndarray, dict[int, int]]:
    """Rename labels so classes are numbered by their lex-least member."""
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) == 0:
        return _frozen(labels), {}
    values, inverse = np.unique(labels, return_inverse=True)
    lex = _comb.lex_ranks(universe, n)
    if len(lex) != len(labels):
        raise StructureError(f"arity {n}: expected {len(lex)} subsets, got {len(labels)}")
    first = np.full(len(values), np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(first, inverse, lex)
    order = np.argsort(first, kind="stable")
    new_id = np.empty(len(values), dtype=np.int64)
    new_id[order] = np.arange(len(values))
    rename = {int(v): int(new_id[i]) for i, v in enumerate(values)}
    return _frozen(new_id[inverse]), rename


# -- validation --------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def first(self) -> str:
        if self.ok:
            return "ok"
        axiom, detail = self.violations[0]
        return f"{axiom}: {detail}"


def validate(S: FinStructure, spec: ClassSpec | None = None) -> ValidationReport:
    """Report every violated axiom of S as a member of the class described by spec."""
    spec = spec or S.spec
    m = S.universe
    bad: list[tuple[str, object]] = []
    if m < 0:
        return ValidationReport((("universe", m),))
    for n in sorted(S.relations):
        if n > m:
            bad.append(("arity exceeds universe", n))
        elif n > spec.max_arity:
            bad.append(("arity exceeds max_arity", n))
    for n in spec.tracked(m):
        rel = S.relations.get(n)
        if rel is None:
            bad.append(("partition totality", f"no E{n} data"))
            continue
        if len(rel) != _comb.n_subsets(m, n):
            bad.append(("partition totality", f"E{n} covers {len(rel)} of {_comb.n_subsets(m, n)} subsets"))
            continue
        if len(rel) and rel.min() < 0:
            bad.append(("partition totality", f"E{n} has negative class identifiers"))
            continue
        canon, _ = canonical_labels(m, n, rel)
        if not np.array_equal(canon, rel):
            bad.append(("class labeling", f"E{n} identifiers are not canonical"))
    for n, order in sorted(S.class_orders.items()):
        if n not in spec.ordered_arities:
            bad.append(("order at unordered arity", n))
            continue
        if n not in S.relations:
            bad.append(("order without classes", n))
            continue
        k = S.num_classes(n)
        seen = set()
        for c in order:
            if c in seen:
                bad.append(("order irreflexivity", (n, c)))
            seen.add(c)
        extra = sorted(c for c in seen if not 0 <= c < k)
        if extra:
            bad.append(("order domain", (n, extra)))
        missing = sorted(set(range(k)) - seen)
        if missing:
            bad.append(("order totality", (n, missing)))
    for n in spec.ordered_arities:
        if n in spec.tracked(m) and n in S.relations and n not in S.class_orders:
            bad.append(("order missing", n))
    if S.point_order is not None:
        if not spec.allow_point_order:
            bad.append(("point order disallowed", None))
        if sorted(S.point_order) != list(range(m)):
            bad.append(("point order not a linear order", S.point_order))
    elif spec.allow_point_order:
        bad.append(("point order missing", None))
    return ValidationReport(tuple(bad))


# -- substructures -----------------------------------------------------------


def induced(S: FinStructure, subset: Sequence[int]) -> FinStructure:
    """Substructure on ``subset``; new point i is ``subset[i]``."""
    pts = [int(p) for p in subset]
    if len(set(pts)) != len(pts):
        raise StructureError("repeated point in subset")
    for p in pts:
        if not 0 <= p < S.universe:
            raise StructureError(f"point {p} outside universe of size {S.universe}")
    k = len(pts)
    table = np.array(pts, dtype=np.int64)
    rels, orders = {}, {}
    for n in S.spec.tracked(k):
        if n not in S.relations:
            continue
        rows = np.sort(table[_comb.combos(k, n)], axis=1)
        labels = S.relations[n][_comb.ranks(rows)]
        rels[n] = labels
        if n in S.class_orders:
            present = set(np.unique(labels).tolist())
            orders[n] = [c for c in S.class_orders[n] if c in present]
    point_order = None
    if S.point_order is not None:
        rank = S.point_rank()
        point_order = sorted(range(k), key=lambda i: rank[pts[i]])
    return FinStructure.from_labels(S.spec, k, rels, orders, point_order)


def relabel(S: FinStructure, perm: Sequence[int]) -> FinStructure:
    """Image of S under the point bijection ``i -> perm[i]``."""
    inv = [0] * S.universe
    for i, p in enumerate(perm):
        inv[p] = i
    return induced(S, inv)


def class_sort(S: FinStructure, n: int) -> tuple:
    """The classes of arity n, in class order when n is ordered."""
    if n < 1 or n > S.universe:
        raise StructureError(f"arity {n} not available in a structure of size {S.universe}")
    if n not in S.relations:
        raise StructureError(f"arity {n} is not tracked")
    if n in S.class_orders:
        return tuple(S.class_orders[n])
    return tuple(range(S.num_classes(n)))


def is_single_class(S: FinStructure, n: int) -> bool:
    return n in S.relations and S.num_classes(n) == 1


# -- serialization -----------------------------------------------------------


def to_document(S: FinStructure) -> dict:
    rels = {}
    for n in S.arities:
        entry: dict = {"classes": [[list(s) for s in members] for members in S.classes(n)]}
        if n in S.class_orders:
            entry["order"] = list(S.class_orders[n])
        rels[str(n)] = entry
    doc = {"universe": S.universe, "spec": S.spec.to_json(), "relations": rels}
    if S.point_order is not None:
        doc["point_order"] = list(S.point_order)
    return doc


def encode(S: FinStructure) -> bytes:
    return json.dumps(to_document(S), sort_keys=True, separators=(",", ":")).encode()


def from_document(doc: Mapping, spec: ClassSpec | None = None) -> FinStructure:
    if not isinstance(doc, Mapping):
        raise DecodeError("document must be a JSON object")
    try:
        m = doc["universe"]
    except KeyError:
        raise DecodeError("missing 'universe'") from None
    if not isinstance(m, int) or isinstance(m, bool) or m < 0:
        raise DecodeError(f"bad universe {m!r}")
    if spec is None:
        if "spec" not in doc:
            raise DecodeError("missing 'spec'")
        spec = ClassSpec.from_json(doc["spec"])
    raw = doc.get("relations", {})
    if not isinstance(raw, Mapping):
        raise DecodeError("'relations' must be an object")
    rels, orders = {}, {}
    for key, entry in raw.items():
        try:
            n = int(key)
        except ValueError:
            raise DecodeError(f"bad arity key {key!r}") from None
        if n > m:
            raise DecodeError(f"arity exceeds universe: E{n} data on {m} points")
        if n < 1 or n > spec.max_arity:
            raise DecodeError(f"arity {n} outside 1..{spec.max_arity}")
        labels = np.full(_comb.n_subsets(m, n), -1, dtype=np.int64)
        classes = entry.get("classes") if isinstance(entry, Mapping) else None
        if not isinstance(classes, list):
            raise DecodeError(f"E{n}: missing 'classes'")
        for ci, members in enumerate(classes):
            if not isinstance(members, list) or not members:
                raise DecodeError(f"E{n}: class {ci} is empty or malformed")
            for s in members:
                if (
                    not isinstance(s, list)
                    or len(s) != n
                    or any(not isinstance(x, int) or isinstance(x, bool) for x in s)
                    or any(b <= a for a, b in zip(s, s[1:]))
                    or not all(0 <= x < m for x in s)
                ):
                    raise DecodeError(f"E{n}: bad subset {s!r}")
                r = _comb.rank(s)
                if labels[r] != -1:
                    raise DecodeError(f"E{n}: subset {s} listed twice (partition not total/disjoint)")
                labels[r] = ci
        if (labels == -1).any():
            miss = _comb.combos(m, n)[int(np.flatnonzero(labels == -1)[0])].tolist()
            raise DecodeError(f"E{n}: partition not total, {miss} unassigned")
        rels[n] = labels
        if "order" in entry:
            if n not in spec.ordered_arities:
                raise DecodeError(f"E{n}: order given but {n} is not an ordered arity")
            order = entry["order"]
            if not isinstance(order, list) or sorted(order) != list(range(len(classes))):
                raise DecodeError(f"E{n}: order is not a linear order on the {len(classes)} classes")
            orders[n] = order
        elif n in spec.ordered_arities:
            raise DecodeError(f"E{n}: ordered arity without 'order'")
    for n in spec.tracked(m):
        if n not in rels:
            raise DecodeError(f"E{n}: partition not total, no classes given")
    point_order = doc.get("point_order")
    if point_order is not None:
        if not spec.allow_point_order:
            raise DecodeError("point order present but not allowed by spec")
        if not isinstance(point_order, list) or sorted(point_order) != list(range(m)):
            raise DecodeError("point_order is not a permutation of the universe")
    elif spec.allow_point_order:
        raise DecodeError("spec requires a point order")
    S = FinStructure.from_labels(spec, m, rels, orders, point_order)
    report = validate(S, spec)
    if not report.ok:
        raise DecodeError(report.first())
    return S


def decode(data: bytes | str, spec: ClassSpec | None = None) -> FinStructure:
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise DecodeError(f"not JSON: {exc}") from None
    return from_document(doc, spec)


def from_classes(
    spec: ClassSpec,
    universe: int,
    classes: Mapping[int, Sequence[Sequence[Sequence[int]]]],
    orders: Mapping[int, Sequence[int]] | None = None,
    point_order: Sequence[int] | None = None,
) -> FinStructure:
    """Convenience constructor from explicit class member lists.

    Arities that are tracked but not mentioned get a single class.
    """
    doc_rel = {}
    for n in spec.tracked(universe):
        if n in classes:
            entry = {"classes": [[list(s) for s in c] for c in classes[n]]}
        else:
            entry = {"classes": [[list(s) for s in combinations(range(universe), n)]]}
        if n in spec.ordered_arities:
            entry["order"] = list(orders[n]) if orders and n in orders else list(range(len(entry["classes"])))
        doc_rel[str(n)] = entry
    doc = {"universe": universe, "relations": doc_rel}
    if point_order is not None:
        doc["point_order"] = list(point_order)
    elif spec.allow_point_order:
        doc["point_order"] = list(range(universe))
    return from_document(doc, spec)
