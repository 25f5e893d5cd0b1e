"""
Reference models: the eps -> 0 friction limit mu_1 dz/dt + F'(z) in -N(K(z), z), integrated by implicit minimizing
movements, and closed-form Ornstein-Uhlenbeck and no-contact solutions.
"""

import logging
import math
from typing import Optional, Union
import numpy as np
from .errors import ValidationError
from .models import FrictionWeights, History, SimConfig, Trajectory
from .simulation import SimulationBase, Strategy, interpolate

logger = logging.getLogger(__name__)


class FrictionStep:
    """
    Step context of the friction limit: the delay term is replaced by the friction dissipation
    sum_i (mu_{1,i} / 2 dt) |q_i - Z_i^{n-1}|^2.
    """

    def __init__(self, weights: FrictionWeights, history: History, delta_t: float):
        if len(weights) != history.n_particles:
            raise ValidationError(f'Expected {history.n_particles} friction weights, got {len(weights)}', 'mu1')
        if not delta_t > 0:
            raise ValidationError('Time step must be positive', 'delta_t')
        self.weights = weights
        self.history = history
        self.delta_t = float(delta_t)
        self.stiffness = np.repeat(weights.mu1 / self.delta_t, 2)
        self.k0 = 0.0
        self.refresh()

    def __repr__(self):
        return f'FrictionStep(n={self.history.n}, dt={self.delta_t})'

    def refresh(self):
        self._latest = self.history.latest.reshape(-1)

    @property
    def previous(self) -> np.ndarray:
        return self._latest.copy()

    @property
    def anchor(self) -> np.ndarray:
        return self._latest.copy()

    def delay_value(self, q) -> float:
        diff = np.asarray(q, dtype=float).reshape(-1) - self._latest
        return 0.5 * float(self.stiffness @ diff ** 2)

    def delay_gradient(self, q) -> np.ndarray:
        return self.stiffness * (np.asarray(q, dtype=float).reshape(-1) - self._latest)

    def lagged_delay_value(self) -> float:
        return 0.0

    def dissipation(self) -> float:
        return 0.0


class FrictionLimitSimulation(SimulationBase):
    """
    Implicit time stepping Z^n = argmin over K(Z^{n-1}) of sum_i (mu_{1,i} / 2 dt) |q_i - Z_i^{n-1}|^2 + F(q). The load
    keeps its curvature inside Uzawa, so the quadratic load is treated fully implicitly.
    """

    def __init__(self, cfg: SimConfig, weights: FrictionWeights, delta_t: Optional[float] = None,
                 solve: Optional[Strategy] = None):
        super().__init__(cfg, delta_t or cfg.delta_t, solve, curvature=True)
        if len(weights) != cfg.n_particles:
            raise ValidationError(f'Expected {cfg.n_particles} friction weights, got {len(weights)}', 'mu1')
        self.weights = weights

    def build_context(self, history: History) -> FrictionStep:
        return FrictionStep(self.weights, history, self.delta_t)


def friction_limit_run(cfg: SimConfig, weights: FrictionWeights, delta_t: Optional[float] = None,
                       progress: bool = False) -> Trajectory:
    """
    Runs the friction-limit model on the particles, load, noise and horizon of cfg (its eps and delta_a are unused
    except for the default time step eps * delta_a).
    """
    return FrictionLimitSimulation(cfg, weights, delta_t).run(progress)


def ou_msd(t: Union[float, np.ndarray], z0_sq: float, rate: float = 1.0, sigma: float = 1.0, dim: int = 1):
    """
    E|z_t|^2 for dz = -rate z dt + sigma dW in dim dimensions started at |z_0|^2 = z0_sq:

        z0_sq exp(-2 rate t) + dim sigma^2 / (2 rate) (1 - exp(-2 rate t))
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValidationError('Time must be nonnegative', 't')
    if not rate > 0:
        raise ValidationError('OU rate must be positive', 'rate')
    decay = np.exp(-2.0 * rate * t)
    value = z0_sq * decay + dim * sigma ** 2 / (2.0 * rate) * (1.0 - decay)
    return float(value) if value.ndim == 0 else value


def ou_msd_exact(t: Union[float, np.ndarray], z0_sq: float):
    """z0_sq e^{-2t} + (1 - e^{-2t}) / 2, the unit-rate unit-noise case, which tends to 1/2."""
    return ou_msd(t, z0_sq, 1.0, 1.0, 1)


def no_contact_decay(t: float, z0, nu: float) -> np.ndarray:
    """Solution z0 e^{-nu t} of dz/dt = -nu z."""
    if t < 0:
        raise ValidationError('Time must be nonnegative', 't')
    return np.asarray(z0, dtype=float) * math.exp(-nu * t)


def sup_norm_distance(traj: Trajectory, reference: Trajectory) -> float:
    """
    max over the frames of traj (within the time range of reference) and particles of |z_i(t) - z_ref,i(t)|, with the
    reference linearly interpolated.
    """
    horizon = reference.times[-1]
    worst = 0.0
    for t, positions in zip(traj.times, traj.positions):
        if t > horizon + 1e-12 * (1.0 + horizon):
            break
        other = interpolate(reference, min(t, horizon), 'linear')
        worst = max(worst, float(np.max(np.linalg.norm(positions - other, axis=1))))
    return worst
