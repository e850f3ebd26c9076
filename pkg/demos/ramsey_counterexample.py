"""A coloring with no monochromatic copy of the witness.

The witness B has six points with distinct point classes, and pairs 01 and
45 share a pair class.  A copy of the four-point pattern is colored red when
its first pair's class comes before its last pair's class in a fixed listing
of pair classes.  The two copies 0123 and 2345 inside any copy of B always
get opposite colors, so no larger structure contains a monochromatic B.
"""

import random

from fraisse_eq.ramsey import build_witness_B, check_no_mono, enumeration_coloring, enumerations, ramsey_hosts
from fraisse_eq.structure import ClassSpec

W = build_witness_B(ClassSpec(max_arity=3, allow_point_order=True), 1)
rng = random.Random(1)
for i, C in enumerate(ramsey_hosts(W, 8, 12, rng)):
    line = []
    for enum in enumerations(C, 1, 3, rng):
        v = check_no_mono(C, W, enumeration_coloring(C, W.A, 1, enum))
        line.append("ok" if v.ok and v.opposite_ok else "VIOLATION")
    print(f"host {i}: {C.universe:2d} points, {v.copies_of_B} copies of B, enumerations: {' '.join(line)}")
