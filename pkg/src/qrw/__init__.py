"""Coined quantum random walks through CMV matrices.

A walk with coins ``C_k`` on the half-line or the line is unitarily
equivalent (by diagonal phases) to a CMV matrix, so its ``n``-step amplitudes
are Karlin-McGregor integrals ``int z^n X_j dmu X_k^H`` over the spectral
measure of that matrix.  Every such amplitude can be checked against exact
direct evolution.

Typical use::

    >>> from qrw import halfline_walk, amplitude_halfline
    >>> walk = halfline_walk("hadamard")
    >>> round(amplitude_halfline(walk, 0, 0, 4).real, 12)
    -0.25
"""
from .kernels import BACKEND
from .opuc import (
    LaurentPoly,
    ParameterDomainError,
    SzegoPair,
    VerblunskySequence,
    laurent_polynomials,
    rho_pair,
    rotate_laurent,
    rotate_verblunsky,
    szego_next,
    szego_seed,
)
from .cmv import CMVOperator, StateVector, apply, build_cmv, recurrence_residual
from .coins import (
    HADAMARD,
    HMOD,
    IDENTITY,
    Coin,
    CoinValidationError,
    TrivialCoinError,
    WalkModel,
    amplitude_index,
    constant_coin_split,
    free_walk,
    halfline_walk,
    index_state,
    line_walk,
    preset_coin,
    validate_coin,
)
from .closed_forms import (
    ClosedFormMatrixMeasure,
    ClosedFormMeasure,
    appendix_caratheodory,
    appendix_laurent,
    appendix_measure,
    chebyshev_u,
    line_matrix_caratheodory,
    line_matrix_laurent,
    line_matrix_measure,
    moment_coeff,
)
from .kmcg import (
    QuadratureError,
    QuadratureSpec,
    UnsupportedWalkError,
    amplitude_halfline,
    amplitude_line,
    direct_amplitudes,
    evolve,
    kmcg_amplitudes,
    kmcg_matrix,
    moments,
    state_amplitudes,
    walk_measure,
    walk_polynomials,
)
from .spectral import (
    AsymptoticResult,
    CaratheodoryEvaluator,
    MassPoint,
    caratheodory_ratio,
    find_mass_points,
    numeric_measure,
    recover_weight,
    weak_limit,
)
from .recurrence import (
    QuantumState,
    associated_function,
    classify_state,
    return_probability_partial_sum,
    singularities,
    transient_subspace,
)

__version__ = "0.1.0"
