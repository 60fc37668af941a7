"""Exact experiments on sumsets, fiber trees, structured subsets and moment inequalities."""

from .chang import (
    PAdicFamily,
    chang_inequality_check,
    cover_decomposition,
    lambda_certificate,
    lambda_union_bound,
    orthogonality_witness,
    smooth_box,
    smooth_example_audit,
    sum_product_report,
)
from .exact import CheckResult, InvariantViolation, ResourceCapExceeded
from .lattice import (
    IntSet,
    LatticeSet,
    PrimeBasis,
    doubling_stats,
    iterated_product,
    iterated_sumset,
    product_set,
    sumset,
    valuation_inverse,
    valuation_map,
)
from .moments import WeightedSet, additive_energy, representation_function, weighted_moment
from .pfr import (
    beta_lower_from_tree,
    beta_upper_search,
    exact_query_complexity,
    extract_structured_subset,
    run_query_protocol,
)
from .trees import (
    FiberTree,
    brute_force_tree_stats,
    build_fiber_tree,
    constructive_decompose,
    max_binary_subtree,
    max_low_subtree,
    tree_stats,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
