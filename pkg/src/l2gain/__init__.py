"""Certified L2-gain estimation for Lipschitz black-box operators from finitely many samples."""

from .adversary import (
    AdversaryReport,
    Recorder,
    build_adversary,
    cover_estimator,
    envelope_estimator,
    indistinguishability_experiment,
    slack_function,
)
from .covering import (
    Cover,
    cover_bound_report,
    cover_index_chain,
    exact_min_cover,
    greedy_cover,
    grid_cover,
    packing_lower_bound,
    verify_cover,
    volume_lower_bound,
)
from .errors import CapExceededError, InconsistentDataError, NondeterminismError
from .gain import (
    GainEstimate,
    SampledData,
    calibrate_eta,
    estimate_gain,
    gain_via_approximant,
    per_cell_gain_bound,
    two_sample_gain_estimate,
)
from .interpolation import Interpolant, approximation_radius, build_interpolant, check_consistency, operator_distance
from .limits import LIMITS, limits
from .operators import Bump, Constant, Linear, Operator, Saturation, Zero, empirical_lipschitz, true_gain_oracle
from .projective import metric_ball_to_norm_ball, proj_dist, separation, separation_to_metric
from .signals import Annulus, Box, InputSet, SignalSpace, norm

__version__ = "0.1.0"
