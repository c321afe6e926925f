"""Chip-firing divisor theory on tree-of-loops (cactus) metric graphs.

Everything is exact rational arithmetic: graphs, divisors, linear
equivalence via torus class coordinates, v-reduced divisors (computed three
independent ways), exact divisor rank by a finite adversary game, and a
small Brill-Noether laboratory (locus scans, local dimension probes,
Brill-Noether rank bounds) with runnable verifiers for the headline
statements at desk scale.
"""

from .brill_noether import (
    BNRankBounds,
    DimProbe,
    ResourceCapError,
    ScanReport,
    Stratum,
    bn_rank_bounds,
    local_dim_probe,
    rho,
    stratified_scan,
)
from .discrete import discrete_reduce
from .divisors import (
    Divisor,
    DivisorClass,
    PLFunction,
    canonical_divisor,
    class_coordinates,
    divisor_combine,
    divisor_of_function,
    free_chip_offsets,
    parse_divisor,
    point_divisor,
    representative_from_class,
    restrict,
    serialize_divisor,
    tent_function,
)
from .graphs import (
    CactusGraph,
    GraphFormatError,
    GraphStats,
    PointRef,
    canonical_point,
    format_rational,
    graph_stats,
    parse_graph,
    parse_rational,
    retract_point,
    wedge_with_loop,
)
from .ranks import (
    RankWitness,
    candidate_points,
    is_effective_class,
    rank,
    rank_at_least,
    riemann_roch_residual,
)
from .randomgen import (
    random_cactus,
    random_divisor,
    random_effective_divisor,
    random_point,
    random_principal_divisor,
)
from .reduction import (
    BurnPreconditionError,
    BurnReport,
    IterationCapError,
    circle_reduce,
    dhar_burn,
    q_reduce,
    reduce_by_burning,
)
from .verifiers import (
    VerifierReport,
    verify_lemma_w13,
    verify_oracle_check,
    verify_prop_weak,
    verify_rank_sandwich,
    verify_rr_random,
    verify_tree_chain,
    verify_wedge_dim,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
