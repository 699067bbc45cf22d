"""soficlab: a desk-scale numerical laboratory for sofic entropy.

Finite sofic approximations to discrete and grid-discretized groups,
microstate counting into shift systems, and entropy estimates with their
structural cross-checks.
"""

__version__ = "0.1.0"

from .groups import (
    BallProductVerdict,
    GroupElement,
    GroupModel,
    WeightedElementSet,
    ball,
    check_ball_product,
    haar,
    identity,
    inverse,
    multiply,
    weighted_set,
)
from .models import (
    LocalGSpace,
    SoficApproximation,
    check_local_mp,
    circle_space,
    cyclic_quotient,
    good_points,
    is_atomless_flag,
    schreier_space,
    sofic_quality,
    torus_quotient,
)
from .shifts import (
    Alphabet,
    InvariantMeasureSpec,
    MollifiedMetric,
    ObservableMetric,
    Pattern,
    ShiftSystem,
    bernoulli_measure,
    full_shift,
    lattice_offsets,
    markov_measure,
    marginal,
    mollify,
    nearest_neighbor_sft,
    parry_measure,
    pattern_probability,
    relabel_measure,
    relabel_system,
    tv_distance,
)
from .microstates import (
    MapSpaceSpec,
    MeasureConstraint,
    Microstate,
    empirical_counts,
    empirical_measure,
    equivariance_defect,
    is_member,
    perturbation_stability_bound,
    quantize_counts,
    rho_M_distance,
    sft_defect,
    transport_to_target,
)
from .packing import (
    CountResult,
    FiniteMetricFamily,
    SizeLimitError,
    count_microstates,
    cov_exact,
    enumerate_microstates,
    greedy_cov_upper,
    greedy_sep_lower,
    sep_exact,
    span_exact,
    transfer_matrix_count,
)
from .entropy import (
    EntropyCell,
    EntropyReport,
    Schedule,
    bernoulli_family,
    equidistribution_check,
    h_avg_estimate,
    h_meas_estimate,
    h_meas_mp_estimate,
    h_rel_A_estimate,
    h_top_estimate,
    markov_family,
    variational_scan,
)
