"""Relative pressure of factor codes between shifts of finite type."""

from .kernels import BACKEND
from .potential import (
    LocallyConstantPotential,
    PairWeight,
    log_s,
    log_s_inf,
    log_s_phi,
    log_s_sup,
    normalize_nonneg,
    pair_weight,
    to_pair_form,
    windowed_weight,
)
from .pressure import (
    FiberSets,
    NoPreimageError,
    PeriodicValues,
    WeightedFiberMatrix,
    corollary_estimator,
    count_preimage_blocks_exact,
    count_preimage_prefixes,
    dn_count,
    dn_count_prefixes,
    dn_count_widened,
    dn_log_weight,
    dn_log_weight_prefixes,
    dn_widened_stabilization,
    estimator_Phi,
    estimator_Psi,
    estimator_Psi_tilde,
    estimator_T,
    estimator_theta_tilde,
    fiber_sets,
    gamma,
    log_S,
    log_S_prefixes,
    periodic_matrix,
    periodic_values,
)
from .spectral import spectral_log_bracket, spectral_log_radius
from .symbolic import (
    DegenerateSystemError,
    EnumerationCapError,
    EventuallyPeriodicPoint,
    FactorCode,
    Sft,
    blocks,
    count_blocks,
    count_preimage_blocks,
    higher_block_recode,
    identity_code,
    is_irreducible,
    make_code,
    make_sft,
    point_window,
    preimage_blocks,
)

__version__ = "0.1.0"
