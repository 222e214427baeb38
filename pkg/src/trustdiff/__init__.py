"""Trust-weighted multi-source diffusion with evacuation, and seed-set optimizers."""

from .diffusion import CoverageEstimate, RunOutcome, estimate_coverage, run, step
from .maxmax import SimplifiedInstance, singleton_coverage, union_coverage
from .model import (
    GeneralInstance,
    RngHandle,
    Seeding,
    SourceSpec,
    TrustGraph,
    validate_instance,
)
from .projection import (
    build_simplified,
    partition_seeds,
    projected_greedy,
    thresholds_homogeneous,
    thresholds_two_level,
)
from .seeders import (
    actual_greedy,
    brute_force,
    greedy_lazy_hybrid,
    greedy_maxmax,
    high_degree_seeding,
    random_seeding,
)

__version__ = "0.1.0"
