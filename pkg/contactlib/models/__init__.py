from .configuration import Configuration, as_flat
from .domain import DomainSpec, PLANE, TORUS
from .pair_gradient import PairGradient, PeriodicDistance
from .rate_model import RateModel
from .density_grid import DensityGrid
from .history import History, PastTrajectory
from .external_load import ExternalLoad
from .constraint_eval import ConstraintEval, ActiveSet
from .solver_result import (
    SolverResult, KKTResidual, UzawaSettings, PenaltySettings, default_penalty_schedule, STEP_POLICIES)
from .friction_weights import FrictionWeights
from .sim_config import (
    SimConfig, DomainConfig, LoadConfig, RatesConfig, PastConfig, NoiseConfig, SolverConfig, BroadPhaseConfig,
    OutputConfig, torus_domain)
from .trajectory import Trajectory, DiagnosticsRecord
