"""Pseudospectral simulator and numerical verification suite for a damped
fifth-order KdV-BBM equation on the one-dimensional torus [0, 2 pi).
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateInputError,
    DivergenceError,
    GridMismatchError,
    TorusStabError,
    UnsupportedOrderError,
    WeightBoundError,
)
from .spectral import (
    Field,
    SobolevIndex,
    TorusGrid,
    derivative,
    energy_h2,
    hs_inner,
    hs_norm_sq,
    l2_inner,
    make_grid,
    multiplier_weight,
    random_field,
)
from .operators import (
    ModelParams,
    a_apply,
    a_symbol,
    b_apply,
    b_star_apply,
    bump_profile,
    default_params,
    fine_values,
    from_fine_values,
    m_power,
    multiply,
)
from .model import (
    FrozenCoefficients,
    closed_loop_rhs,
    cubic_flux,
    frozen_rhs,
    linear_closed_loop_rhs,
    nonlinear_physical,
    quasilinear_coefficients,
    quasilinear_physical,
    scaled_closed_loop_rhs,
    split_elliptic,
    transport_source,
    undamped_rhs,
)
from .timestepper import (
    SimConfig,
    SimulationRecord,
    rk4_step,
    simulate,
    simulate_custom,
    stable_dt,
)
from .carleman import (
    CarlemanWeight,
    SpaceTimeWeight,
    build_psi,
    combined_ratio,
    conjugation_defect,
    conjugation_sides,
    elliptic_ratio,
    find_positivity_threshold,
    h_coeffs,
    phi_eval,
    pp_pn,
    time_average,
    transport_ratio,
)
from .analysis import (
    DecayFit,
    energy_semigroup_check,
    fit_decay,
    linearization_gap,
    observability_quotient,
)
