"""
Per-step delayed energy

    E_n(q) = (delta_a / 2 eps) sum_i sum_{l=1..L} |q_i - Z_i^{n-l}|^2 R_{l,i} + F(q)

its gradient, the discrete delay operator, the dissipation of the energy estimate and the external-load library.
"""

import logging
from typing import Callable, Optional
import numpy as np
from .errors import ValidationError
from .models import DensityGrid, ExternalLoad, History

logger = logging.getLogger(__name__)

# relative tolerance for the coupling delta_t = eps * delta_a
CFL_TOL = 1e-12


class EnergyContext:
    """
    Delay data of the step being solved: the density grid, the history whose latest entry is Z^{n-1}, and the
    per-particle delay targets T_i = delta_a sum_{l>=1} R_{l,i} Z_i^{n-l}. Call refresh() after the history advances.

    The delay term is the quadratic (stiffness / 2) |q - anchor|^2 up to a constant, with stiffness theta_i / eps per
    coordinate and anchor T_i / theta_i.
    """

    def __init__(self, grid: DensityGrid, history: History, epsilon: float):
        if not epsilon > 0:
            raise ValidationError('epsilon must be positive', 'epsilon')
        if abs(history.delta_t - epsilon * grid.delta_a) > CFL_TOL * history.delta_t:
            raise ValidationError(f'Time step {history.delta_t} does not equal epsilon * delta_a = '
                                  f'{epsilon * grid.delta_a}', 'delta_t')
        if history.depth < grid.l_max:
            raise ValidationError(f'History depth {history.depth} is below l_max = {grid.l_max}', 'depth')
        if history.n_particles != grid.n_particles:
            raise ValidationError('History and density grid disagree on the number of particles', 'positions')
        self.grid = grid
        self.history = history
        self.epsilon = float(epsilon)
        self._weights = grid.density[1:grid.l_max + 1]
        self.refresh()

    def __repr__(self):
        return f'EnergyContext(n={self.history.n}, eps={self.epsilon}, l_max={self.grid.l_max})'

    def refresh(self):
        self._window = self.history.window(self.grid.l_max)
        self.targets = self.grid.delta_a * np.einsum('ln,lnd->nd', self._weights, self._window)

    @property
    def delta_t(self) -> float:
        return self.history.delta_t

    @property
    def n_particles(self) -> int:
        return self.grid.n_particles

    @property
    def theta(self) -> np.ndarray:
        return self.grid.theta

    @property
    def stiffness(self) -> np.ndarray:
        return np.repeat(self.grid.theta / self.epsilon, 2)

    @property
    def anchor(self) -> np.ndarray:
        theta = self.grid.theta
        if np.any(theta <= 0):
            raise ValidationError('Delay stiffness theta vanishes for some particle (empty linkage density)',
                                  'theta')
        return (self.targets / theta[:, None]).reshape(-1)

    @property
    def previous(self) -> np.ndarray:
        return self._window[0].reshape(-1).copy()

    @property
    def k0(self) -> float:
        """Initial-energy constant K_0 = (eps / 2) sum_i C_zp,i^2 mu_{2,i} of the energy estimate."""
        lipschitz = self.history.past.lipschitz
        return 0.5 * self.epsilon * float(lipschitz ** 2 @ self.grid.mu2)

    def delay_value(self, q) -> float:
        diff = np.asarray(q, dtype=float).reshape(1, -1, 2) - self._window
        squares = np.einsum('lnd,lnd->ln', diff, diff)
        return self.grid.delta_a / (2.0 * self.epsilon) * float(np.sum(self._weights * squares))

    def lagged_delay_value(self) -> float:
        """
        Delay term of the latest history entry against the entries before it, sum_{l=1..L-1} (the window holds one
        lag fewer than a full step). Used for the diagnostics of the initial configuration.
        """
        diff = self._window[0][None] - self._window[1:]
        squares = np.einsum('lnd,lnd->ln', diff, diff)
        return self.grid.delta_a / (2.0 * self.epsilon) * float(np.sum(self._weights[:-1] * squares))

    def delay_gradient(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float).reshape(-1, 2)
        return ((self.grid.theta[:, None] * q - self.targets) / self.epsilon).reshape(-1)

    def dissipation(self) -> float:
        """
        D = (delta_a / 2) sum_i sum_{l>=1} |(Z_i^{n-1} - Z_i^{n-1-l}) / eps|^2 R_{l+1,i} zeta_{l+1,i}, evaluated on the
        history before the step is taken.
        """
        l_max = self.grid.l_max
        if l_max < 2:
            return 0.0
        rates = (self.grid.density * self.grid.zeta)[2:l_max + 1]
        elongation = (self._window[0][None] - self._window[1:l_max]) / self.epsilon
        squares = np.einsum('lnd,lnd->ln', elongation, elongation)
        return 0.5 * self.grid.delta_a * float(np.sum(rates * squares))


def energy_value(ctx: EnergyContext, load: ExternalLoad, q) -> float:
    return ctx.delay_value(q) + load.value(np.asarray(q, dtype=float).reshape(-1))


def energy_gradient(ctx: EnergyContext, load: ExternalLoad, q) -> np.ndarray:
    """(theta_i / eps) q_i - T_i / eps + F'_i(q) per particle, flattened."""
    return ctx.delay_gradient(q) + load.gradient(np.asarray(q, dtype=float).reshape(-1))


def delay_operator(ctx: EnergyContext, q) -> np.ndarray:
    """Discrete delay operator (delta_a / eps) sum_l (q_i - Z_i^{n-l}) R_{l,i} = (theta_i q_i - T_i) / eps."""
    return ctx.delay_gradient(q)


def dissipation(ctx: EnergyContext) -> float:
    return ctx.dissipation()


def quadratic_load(nu: float = 1.0) -> ExternalLoad:
    """F(q) = (nu / 2) |q|^2, pulling every disk toward the origin."""
    if not nu > 0:
        raise ValidationError('Load scale nu must be positive', 'load.nu')
    nu = float(nu)
    return ExternalLoad(lambda q: 0.5 * nu * float(q @ q), lambda q: nu * q, modulus=nu,
                        hessian_diag=lambda q: np.full(q.shape, nu), name=f'quadratic(nu={nu:g})')


def custom_load(value: Callable[[np.ndarray], float], gradient: Callable[[np.ndarray], np.ndarray],
                check_point: np.ndarray, modulus: Optional[float] = None,
                hessian_diag: Optional[Callable[[np.ndarray], np.ndarray]] = None, name: str = 'custom') -> ExternalLoad:
    """
    Wraps a user-supplied load. The declared gradient is checked against finite differences at check_point.
    :param value: F(q) on flattened configurations
    :param gradient: F'(q)
    :param check_point: Flattened configuration at which the gradient is checked
    :param modulus: Convexity modulus, if known
    :param hessian_diag: Diagonal of the Hessian, if known
    :raises ValidationError: If the gradient disagrees with the value
    """
    load = ExternalLoad(value, gradient, modulus, hessian_diag, name=name)
    load.check_gradient(np.asarray(check_point, dtype=float).reshape(-1))
    logger.debug('Custom load %s passed the gradient check', name)
    return load


def linearized_load(load: ExternalLoad, z_prev) -> ExternalLoad:
    """First-order expansion F(Z) + F'(Z).(q - Z) of the load at Z = z_prev."""
    z_prev = np.asarray(z_prev, dtype=float).reshape(-1)
    f0 = load.value(z_prev)
    g = load.gradient(z_prev)
    return ExternalLoad(lambda q: f0 + g @ (q - z_prev), lambda q: g.copy(), modulus=0.0, strictly_convex=False,
                        name=f'linearized({load.name})')
