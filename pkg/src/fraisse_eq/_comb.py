"""Subset indexing in colexicographic order.

Every relation of a structure is stored as a flat array indexed by the colex
rank of an n-subset of ``range(m)``.  Colex order has the prefix property: the
n-subsets of ``range(m)`` come first among those of ``range(m + 1)``, so adding
a point only appends entries.
"""

from math import comb

import numpy as np

_MAX_POINT = 4096
_MAX_K = 24
_SATURATE = 1 << 62

# BINOM[x, k] = C(x, k), saturated; the saturation never matters because a
# rank is only computed for subsets that are actually stored.
BINOM = np.array(
    [[min(comb(x, k), _SATURATE) for k in range(_MAX_K + 1)] for x in range(_MAX_POINT)],
    dtype=np.int64,
)
_BINOM_LIST = BINOM.tolist()

_cache: dict[int, np.ndarray] = {}


def n_subsets(m: int, n: int) -> int:
    return comb(m, n) if 0 <= n <= m else 0


def combos(m: int, n: int) -> np.ndarray:
    """All n-subsets of range(m) as rows of a read-only array, colex order."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    count = n_subsets(m, n)
    have = _cache.get(n)
    if have is None or len(have) < count:
        _cache[n] = _build(max(m, 8), n)
        have = _cache[n]
    return have[:count]


def _build(m: int, n: int) -> np.ndarray:
    if n == 1:
        out = np.arange(m, dtype=np.int64)[:, None]
    else:
        prev = combos(m, n - 1)
        blocks = []
        for top in range(n - 1, m):
            head = prev[: n_subsets(top, n - 1)]
            blocks.append(np.column_stack([head, np.full(len(head), top, dtype=np.int64)]))
        out = np.concatenate(blocks) if blocks else np.zeros((0, n), dtype=np.int64)
    out.setflags(write=False)
    return out


def rank(subset) -> int:
    """Colex rank of a sorted tuple of distinct points."""
    r = 0
    for j, s in enumerate(subset):
        r += _BINOM_LIST[s][j + 1]
    return r


def ranks(rows: np.ndarray) -> np.ndarray:
    """Vectorised colex rank of sorted subset rows."""
    if rows.shape[1] == 0:
        return np.zeros(len(rows), dtype=np.int64)
    cols = np.arange(1, rows.shape[1] + 1)
    return BINOM[rows, cols].sum(axis=1)


def lex_ranks(m: int, n: int) -> np.ndarray:
    """Position of each colex-ordered subset in lexicographic order."""
    rows = combos(m, n)
    out = np.empty(len(rows), dtype=np.int64)
    if n == 0:
        out[:] = 0
        return out
    order = np.lexsort(rows.T[::-1])
    out[order] = np.arange(len(rows))
    return out
