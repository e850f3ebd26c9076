"""Gluing two structures over a common part.

Two one-point extensions of a single point x are glued: on one side the new
point shares x's point class, on the other it does not.  Without orders the
amalgam keeps the three pairs apart; once triples are ordered the pair rule
collapses them, and a level above the pairs the class orders interleave.
"""

from fraisse_eq.amalgam import AmalgamProblem, amalgamate_k0, amalgamate_kp
from fraisse_eq.structure import K0, ClassSpec, FinStructure, from_classes, to_document


def show(title, C):
    print(title)
    for n, rel in sorted(to_document(C)["relations"].items()):
        classes = [[tuple(x) for x in members] for members in rel["classes"]]
        suffix = f"  order {rel['order']}" if "order" in rel else ""
        print(f"  arity {n}: {classes}{suffix}")

for spec, glue in ((K0, amalgamate_k0), (ClassSpec({3}), lambda p: amalgamate_kp(ClassSpec({3}), p))):
    A = FinStructure.uniform(spec, 1)
    joined = from_classes(spec, 2, {1: [[(0,), (1,)]]})
    apart = from_classes(spec, 2, {1: [[(0,)], [(1,)]]})
    C = glue(AmalgamProblem.over_prefix(A, joined, apart))
    show(f"amalgam with ordered arities {sorted(spec.ordered_arities) or 'none'} (x=0, a=1, b=2):", C)

# each side puts one new triple class above the shared one; the first side's class comes first
P3 = ClassSpec({3})
A = FinStructure.uniform(P3, 3)
B = from_classes(P3, 4, {3: [[(0, 1, 2)], [(0, 1, 3), (0, 2, 3), (1, 2, 3)]]}, {3: [0, 1]})
show("two triple classes above a shared one:", amalgamate_kp(P3, AmalgamProblem.over_prefix(A, B, B)))
