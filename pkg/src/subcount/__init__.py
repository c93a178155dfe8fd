"""Exact attributed substructure counting, k-WL refinement, counterexample
constructions and a local relational pooling regressor."""

from .counterexamples import (
    CounterexamplePair,
    doubled_pattern_pair,
    mod_a,
    path_counterexample_pair,
    verify_pair,
)
from .counting import (
    CountMode,
    Pattern,
    builtin_pattern,
    containment_count,
    containment_count_by_subsets,
    count,
    fast_count,
    matching_count,
    path_pattern,
    star_containment_count,
    star_pattern,
    triangle_pattern,
)
from .graph import AttributedGraph, IsoMapping, automorphism_count, induced_subgraph, is_isomorphic, parse, serialize
from .wl import ColorInterner, DistinguishResult, Verdict, wl1_node_refinement, wl_color_histogram, wl_refine_pair

__version__ = "0.1.0"

__all__ = [
    "AttributedGraph",
    "ColorInterner",
    "CountMode",
    "CounterexamplePair",
    "DistinguishResult",
    "IsoMapping",
    "Pattern",
    "Verdict",
    "automorphism_count",
    "builtin_pattern",
    "containment_count",
    "containment_count_by_subsets",
    "count",
    "doubled_pattern_pair",
    "fast_count",
    "induced_subgraph",
    "is_isomorphic",
    "matching_count",
    "mod_a",
    "parse",
    "path_counterexample_pair",
    "path_pattern",
    "serialize",
    "star_containment_count",
    "star_pattern",
    "triangle_pattern",
    "verify_pair",
    "wl1_node_refinement",
    "wl_color_histogram",
    "wl_refine_pair",
]
