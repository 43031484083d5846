"""Parseval frames and orthonormal bases generated by row co-isometries."""

from .model import (
    DEFAULT_DEPTH,
    TAU_MAT,
    TAU_NUM,
    TAU_RANK,
    TAU_ZERO,
    FilterSystem,
    IFSSpec,
    MatrixClass,
    check_filter_matrix,
    check_no_overlap,
    eval_mB,
    g_map,
    mu_hat,
    mu_hat_many,
    spectral_transition,
)
from .walkgraph import (
    NotInjectiveError,
    NotNormalizedError,
    NotPeriodicError,
    WalkGraph,
    analyze,
    build_periodic_walk,
    ends_in_cycle_word,
    enumerate_cycle_words,
    enumerate_frame_words,
    enumerate_omega_beta,
    first_passage_mass,
    is_cycle_word,
)
from .invariants import find_minimal_sets_1d, ruelle_check, sample_line_invariance, verify_invariant, walk_from_minimal_set
from .frames import StepFunction, fourier_atoms, l2q_pairing, walsh_atom, walsh_atoms
from .verify import frame_bounds, gram, incompleteness_check, parseval_profile, walsh_parseval_exact
from .serialize import RunConfig, load_fixture, parse_config

__version__ = "0.1.0"
