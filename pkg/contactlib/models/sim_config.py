import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Union
import numpy as np
from .configuration import Configuration
from .domain import DomainSpec, PLANE, TORUS
from .external_load import ExternalLoad
from .rate_model import RateModel
from .solver_result import UzawaSettings, PenaltySettings, STEP_POLICIES
from ..errors import ValidationError

SOLVER_KINDS = ('uzawa', 'penalty')
FAILURE_POLICIES = ('abort', 'continue')
PAST_KINDS = ('constant', 'linear')

# guards floor(T / delta_t) against representation error, e.g. 0.3 / 0.1 = 2.9999999999999996
STEP_COUNT_SLACK = 1e-9


@dataclass
class DomainConfig:
    kind: str = PLANE
    L: Optional[float] = None
    H: Optional[float] = None

    def build(self) -> DomainSpec:
        return DomainSpec(self.kind, self.L, self.H)


@dataclass
class LoadConfig:
    nu: float = 1.0


@dataclass
class RatesConfig:
    beta: Union[float, List[float]] = 1.0
    zeta: Union[float, List[float]] = 1.0
    ages: Optional[List[float]] = None

    def build(self, n_particles: int) -> RateModel:
        if self.ages is None:
            return RateModel.constant(self.beta, self.zeta, n_particles)
        return RateModel.tabulated(self.beta, self.ages, self.zeta, n_particles)


@dataclass
class PastConfig:
    kind: str = 'constant'
    velocity: Optional[List[List[float]]] = None


@dataclass
class NoiseConfig:
    sigma: float = 0.0


@dataclass
class SolverConfig:
    kind: str = 'uzawa'
    eta_policy: str = 'auto'
    eta: Optional[float] = None
    safety: float = 0.9
    max_iter: int = 10_000
    on_failure: str = 'abort'

    def uzawa_settings(self, curvature: bool = False) -> UzawaSettings:
        return UzawaSettings(step_policy=self.eta_policy, eta=self.eta, safety=self.safety, max_iter=self.max_iter,
                             curvature=curvature)

    def penalty_settings(self) -> PenaltySettings:
        return PenaltySettings()


@dataclass
class BroadPhaseConfig:
    enabled: bool = False
    cutoff: Optional[float] = None


@dataclass
class OutputConfig:
    dir: Optional[str] = None
    stride: int = 1


@dataclass
class SimConfig:
    """
    Everything needed to run one simulation. Positions and radii are kept as plain lists so the config round-trips
    through YAML; use configuration() for the validated Configuration.
    """
    positions: List[List[float]]
    radii: List[float]
    epsilon: float
    delta_a: float
    T: float
    domain: DomainConfig = field(default_factory=DomainConfig)
    load: LoadConfig = field(default_factory=LoadConfig)
    rates: RatesConfig = field(default_factory=RatesConfig)
    past: PastConfig = field(default_factory=PastConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)
    broad_phase: BroadPhaseConfig = field(default_factory=BroadPhaseConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    contacts: bool = True
    msd_reference: Optional[List[List[float]]] = None
    max_neighbours: int = 6
    custom_load: Optional[ExternalLoad] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        self.validate()

    def validate(self):
        for key in ('epsilon', 'delta_a'):
            value = getattr(self, key)
            if not (isinstance(value, (int, float)) and value > 0 and math.isfinite(value)):
                raise ValidationError(f'{key} must be a positive number, got {value!r}', key)
        if not (isinstance(self.T, (int, float)) and self.T >= 0 and math.isfinite(self.T)):
            raise ValidationError(f'T must be a nonnegative number, got {self.T!r}', 'T')
        self.configuration()
        self.domain.build()
        if self.custom_load is None and not self.load.nu > 0:
            raise ValidationError('Load scale nu must be positive', 'load.nu')
        if self.noise.sigma < 0:
            raise ValidationError('Noise amplitude sigma must be nonnegative', 'noise.sigma')
        if self.past.kind not in PAST_KINDS:
            raise ValidationError(f'Past kind must be one of {PAST_KINDS}', 'past.kind')
        if self.past.kind == 'linear' and self.past.velocity is None:
            raise ValidationError('A linear past needs a velocity', 'past.velocity')
        if self.solver.kind not in SOLVER_KINDS:
            raise ValidationError(f'Solver kind must be one of {SOLVER_KINDS}', 'solver.kind')
        if self.solver.eta_policy not in STEP_POLICIES:
            raise ValidationError(f'Step policy must be one of {STEP_POLICIES}', 'solver.eta_policy')
        if self.solver.eta_policy == 'fixed' and not (self.solver.eta and self.solver.eta > 0):
            raise ValidationError('A fixed step policy needs a positive eta', 'solver.eta')
        if self.solver.on_failure not in FAILURE_POLICIES:
            raise ValidationError(f'Failure policy must be one of {FAILURE_POLICIES}', 'solver.on_failure')
        if self.output.stride < 1:
            raise ValidationError('Output stride must be at least 1', 'output.stride')
        if self.max_neighbours < 1:
            raise ValidationError('max_neighbours must be at least 1', 'max_neighbours')

    @property
    def n_particles(self) -> int:
        return len(self.radii)

    @property
    def delta_t(self) -> float:
        return self.epsilon * self.delta_a

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.T / self.delta_t + STEP_COUNT_SLACK))

    def configuration(self) -> Configuration:
        return Configuration(self.positions, self.radii)

    def domain_spec(self) -> DomainSpec:
        return self.domain.build()

    def rate_model(self) -> RateModel:
        return self.rates.build(self.n_particles)

    def reference_positions(self) -> np.ndarray:
        if self.msd_reference is None:
            return np.zeros((self.n_particles, 2))
        return np.asarray(self.msd_reference, dtype=float).reshape(-1, 2)

    def with_changes(self, **changes) -> 'SimConfig':
        return replace(self, **changes)


def torus_domain(L: float, H: float) -> DomainConfig:
    return DomainConfig(TORUS, L, H)
