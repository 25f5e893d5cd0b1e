from .base import (
    dual_ascent, kkt_residual, step_bound, uzawa_step_bound, spectral_step_bound, projection_identity_check,
    LAMBDA_TOL)
from .uzawa import uzawa_inner_minimize, uzawa_solve, uzawa_strategy, local_model
from .penalty import penalty_solve, penalty_strategy
