from contactlib.models import (
    Configuration, DomainSpec, PairGradient, PeriodicDistance, RateModel, DensityGrid, History, PastTrajectory,
    ExternalLoad, ConstraintEval, ActiveSet, SolverResult, KKTResidual, UzawaSettings, PenaltySettings,
    FrictionWeights, SimConfig, Trajectory, DiagnosticsRecord, torus_domain)
from .errors import (
    ContactLibError, ValidationError, ConfigError, SingularGradientError, InfeasibleConfigurationError, SolverError,
    LineSearchError, ConvergenceError, QuadratureError, TruncationError, SchemaError)
from .geometry import (
    signed_distance, distance_gradient, wrap, periodic_signed_distance, periodic_gradient, prox_regularity_eta,
    pairwise_signed_distances, min_signed_distance, is_feasible, all_pairs)
from .broad_phase import candidate_pairs
from .linkage import (
    build_density, boundary_value, closed_form_density, l1_consistency_error, fit_order, ClosedFormDensity,
    DEFAULT_TAIL_TOL)
from .constraints import (
    linearize, evaluate, active_set, penalty_value, multiplier_bound, contact_degree, ACTIVE_TOL, FEASIBILITY_TOL)
from .energy import (
    EnergyContext, energy_value, energy_gradient, delay_operator, dissipation, quadratic_load, custom_load,
    linearized_load)
from .strategies import (
    uzawa_solve, penalty_solve, uzawa_strategy, penalty_strategy, kkt_residual, step_bound, uzawa_step_bound,
    spectral_step_bound, projection_identity_check, uzawa_inner_minimize, LAMBDA_TOL)
from .simulation import (
    SimulationBase, DelayedSimulation, SimState, init, step, run, interpolate, msd, activation, ledger_check,
    compactness_proxy, spawn_generators)
from .reference import (
    FrictionStep, FrictionLimitSimulation, friction_limit_run, ou_msd, ou_msd_exact, no_contact_decay,
    sup_norm_distance)
from .cli import ExperimentSpec, StudySpec, parse_config, serialize_config, run_experiment
from .__version__ import __version__
