"""Finite structures with equivalence relations on n-subsets and optional class orders.

Submodules: ``structure`` (data model and validation), ``iso`` (embeddings,
automorphisms, canonical forms), ``amalgam``, ``generic`` (enumeration and
extension-property saturation), ``eppa`` (automorphism extension searches and
failure certificates), ``ramsey`` (witnesses, colorings, convexity, Z/4Z
sequences) and ``cli``.
"""

from .amalgam import AmalgamationError, AmalgamProblem, amalgamate, amalgamate_k0, amalgamate_kp, joint_embed
from .eppa import ColoredStructure, PartialMap, eppa_search, eppa_search_k0, permorphism_search, verify_eppa_failure
from .generic import check_extension_property, enumerate_members, saturate
from .iso import automorphisms, canonical_form, embeddings, is_embedding, isomorphism
from .ramsey import build_witness_B, check_no_mono, enumeration_coloring, z4_find
from .structure import K0, ClassSpec, DecodeError, FinStructure, StructureError, decode, encode, induced, validate

__all__ = [
    "AmalgamProblem",
    "AmalgamationError",
    "ClassSpec",
    "ColoredStructure",
    "DecodeError",
    "FinStructure",
    "K0",
    "PartialMap",
    "StructureError",
    "amalgamate",
    "amalgamate_k0",
    "amalgamate_kp",
    "automorphisms",
    "build_witness_B",
    "canonical_form",
    "check_extension_property",
    "check_no_mono",
    "decode",
    "embeddings",
    "encode",
    "enumerate_members",
    "enumeration_coloring",
    "eppa_search",
    "eppa_search_k0",
    "induced",
    "is_embedding",
    "isomorphism",
    "joint_embed",
    "permorphism_search",
    "saturate",
    "validate",
    "verify_eppa_failure",
    "z4_find",
]
