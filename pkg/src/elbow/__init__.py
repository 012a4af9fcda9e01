"""Reasoning about betweenness and natural concepts in EL.

Two semantics are supported: feature-enriched interpretations, where
subsumption is decided exactly, and convex regions, where a sound rule
engine, exact hull arithmetic and a dominance reduction are available.
"""

__version__ = "0.1.0"

from .feature_reasoner import Entailed, NotEntailed, classify, decide_subsumption, interpolative_saturate
from .geo_reasoner import entails_geo_sound, saturate_geo
from .normalizer import normalize
from .syntax import TBox, parse_concept, parse_tbox

__all__ = [
    "Entailed",
    "NotEntailed",
    "TBox",
    "classify",
    "decide_subsumption",
    "entails_geo_sound",
    "interpolative_saturate",
    "normalize",
    "parse_concept",
    "parse_tbox",
    "saturate_geo",
]
