"""Simulation and verification of rank-based hiring strategies."""

from .dsl import parse_strategy
from .errors import *  # noqa: F401,F403
from .limit_laws import (
    c_alpha,
    c_alpha_GW,
    clt_normalizer,
    gap_moment,
    moment_W_periodic,
    moment_W_product,
    tnsmall_normalize,
)
from .profile import DerivedProfile, derive_profile, rho
from .rng import RngSeed
from .simulator import (
    HiringTrace,
    accepted_offsets,
    brute_force_distribution,
    conditional_simulate,
    gap_statistics,
    sample_N_fast,
    sample_T_continuous,
    sample_thresholds,
    simulate_direct,
    simulate_permutation,
)
from .strategy import (
    BUILTINS,
    BestOf,
    Custom,
    IrregularOctal,
    LinearPeriodic,
    Median,
    Percentile,
    RankSequence,
    SqrtFloor,
    Table,
    TailClass,
    classify_tail,
    decrement_at,
    insert_one,
    rank_at,
    validate_prefix,
)

__version__ = "0.1.0"
