"""Six increasing blocks that the order on double blocks forbids.

A sequence of six triples with increasing classes, where a1a2, a2a3 and a3a4
look alike, a1a2a3a4 looks like a3a4a5a6, and a1a2, a5a6 share a class of
six-sets that a3a4 avoids.  Planted with unordered six-sets it is found; once
six-sets are ordered the pattern would need the order to point both ways.
"""

from fraisse_eq.ramsey import forbidden_triple_scan, plant_z4, verify_z4, z4_find
from fraisse_eq.structure import ClassSpec, FinStructure

for spec in (ClassSpec({3}, max_arity=6), ClassSpec({3, 6}, max_arity=6)):
    M, blocks = plant_z4(spec, 3)
    found = z4_find(M, 3)
    print(f"ordered arities {sorted(spec.ordered_arities)}: {len(found)} sequence(s); "
          f"plant verifies: {verify_z4(M, 3, blocks)}")

# the convexity scan on a point-ordered structure
line = ClassSpec(max_arity=1, allow_point_order=True)
C = FinStructure.from_labels(line, 5, {1: [0, 1, 0, 2, 2]}, point_order=range(5))
print(f"point classes 0 1 0 2 2 in order: forbidden triples {forbidden_triple_scan(C)}")
