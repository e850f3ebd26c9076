"""Where partial isomorphisms stop extending.

Without orders, a partial map moving one block of three points onto another
extends to an automorphism of a slightly larger structure.  With the triples
ordered, blocks a < b < c and the map a -> b, b -> c cannot be extended
inside any structure with up to eight extra points: an automorphism would
have to move the order upward forever.
"""

from fraisse_eq.eppa import eppa_failure_instance, orderless_analogue, sample_rigidity, verify_eppa_failure
from fraisse_eq.generic import saturate
from fraisse_eq.structure import ClassSpec, FinStructure

P3 = ClassSpec({3})

cert = orderless_analogue(3)
print(f"without orders: {cert.verdict}, extension on {cert.B.universe} points")

host = saturate(FinStructure.empty(P3), 2, 50).structure
M, witness = eppa_failure_instance(P3, 3, host)
fail = verify_eppa_failure(P3, M, 3, witness, bound=8)
print(f"with ordered triples: blocks {witness}, {fail.candidates_checked} candidate extensions, "
      f"none admits the automorphism: {fail.holds}")

print(f"rigidity violations over 200 random members: {len(sample_rigidity(P3, 200))}")
