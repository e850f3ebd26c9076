"""Random inputs shared by the test modules."""

from fraisse_eq.amalgam import AmalgamProblem
from fraisse_eq.generic import random_extension, random_member
from fraisse_eq.structure import relabel


def random_problem(spec, rng, max_a=2, max_b=4):
    """B1 and B2 extend a common A, with A's image scattered by a random relabeling."""
    A = random_member(spec, rng.randint(0, max_a), rng, max_classes=3)
    sides = []
    for _ in range(2):
        B = random_extension(A, rng.randint(0, max_b - A.universe), rng, max_classes=3)
        perm = list(range(B.universe))
        rng.shuffle(perm)
        sides.append((relabel(B, perm), [perm[a] for a in range(A.universe)]))
    (B1, g1), (B2, g2) = sides
    return AmalgamProblem(A, B1, B2, g1, g2)
