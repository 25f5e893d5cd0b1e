"""
Age-structured linkage density. The discrete density solves the implicit Euler recursion

    R_{l,i} = R_{l-1,i} / (1 + delta_a zeta_{l,i}),   l >= 1

with the saturating boundary condition solved explicitly for R_{0,i}:

    R_{0,i} = beta_i / (1 + delta_a (beta_i + zeta_{0,i} + beta_i S_i)),   S_i = sum_{l>=1} prod_{r=1..l} 1/(1 + delta_a zeta_{r,i})

The infinite sum is truncated once a geometric bound based on the smallest off-rate certifies the tail mass.
"""

import logging
import math
import warnings
from typing import Optional
import numpy as np
from scipy import integrate
from .errors import ValidationError, QuadratureError, TruncationError
from .models import DensityGrid, RateModel

logger = logging.getLogger(__name__)

DEFAULT_TAIL_TOL = 1e-12
MAX_AGE_CELLS = 2 ** 22
CHUNK = 1024


def build_density(rates: RateModel, delta_a: float, tail_tol: float = DEFAULT_TAIL_TOL) -> DensityGrid:
    """
    Builds the discrete linkage density on the age grid a_l = l * delta_a.

    The grid is truncated at the smallest l_max for which, for every particle, the products P_l satisfy
    P_{l_max} < tail_tol * delta_a * zeta_min * (1 + S_{l_max}); since P_l decays at least like
    (1 + delta_a zeta_min)^-l, this bounds the mass beyond l_max by tail_tol times mu_0.

    :param rates: Rate model
    :param delta_a: Age step
    :param tail_tol: Relative tail mass allowed beyond the truncation index
    :return: DensityGrid with moments, theta and off-rate samples
    """
    if not delta_a > 0:
        raise ValidationError('Age step delta_a must be positive', 'delta_a')
    if not 0 < tail_tol < 1:
        raise ValidationError('tail_tol must lie in (0, 1)', 'tail_tol')
    n = rates.n_particles
    zeta_min = rates.zeta_min
    products = [np.ones((1, n))]
    zetas = [rates.off_rate_samples(np.zeros(1))]
    partial = np.zeros(n)
    last = np.ones(n)
    start = 1
    while True:
        if start > MAX_AGE_CELLS:
            raise TruncationError(f'Density tail not certified within {MAX_AGE_CELLS} age cells '
                                  f'(smallest off-rate {zeta_min.min():.3e})')
        ages = delta_a * np.arange(start, start + CHUNK)
        zeta = rates.off_rate_samples(ages)
        chunk = last * np.cumprod(1.0 / (1.0 + delta_a * zeta), axis=0)
        sums = partial + np.cumsum(chunk, axis=0)
        certified = chunk < tail_tol * delta_a * zeta_min * (1.0 + sums)
        done = certified.any(axis=0)
        if done.all():
            stop = int(max(np.argmax(certified[:, i]) for i in range(n))) + 1
            products.append(chunk[:stop])
            zetas.append(zeta[:stop])
            break
        products.append(chunk)
        zetas.append(zeta)
        partial, last, start = sums[-1], chunk[-1], start + CHUNK
    products = np.concatenate(products)
    zeta = np.concatenate(zetas)
    tail_sum = products[1:].sum(axis=0)
    beta = rates.beta
    r0 = beta / (1.0 + delta_a * (beta + zeta[0] + beta * tail_sum))
    density = r0[None, :] * products
    boundary = (1.0 + delta_a * zeta[0]) * r0
    logger.debug('Built density grid with l_max=%d for %d particles', len(density) - 1, n)
    return DensityGrid(delta_a, density, boundary, zeta)


def boundary_value(beta: float, mu0: float) -> float:
    """Saturating birth term R_b = beta (1 - mu_0); negative exactly when mu_0 > 1."""
    return beta * (1.0 - mu0)


class ClosedFormDensity:
    """
    Continuous linkage density

        rho_i(a) = beta_i exp(-int_0^a zeta_i) / (1 + beta_i int_0^inf exp(-int_0^s zeta_i) ds)

    with the normalizer cached per particle. Constant off-rates use the analytic form; tabulated ones use adaptive
    quadrature.
    """

    def __init__(self, rates: RateModel):
        self.rates = rates
        self._normalizers = {}

    def survival_integral(self, i: int) -> float:
        """int_0^inf exp(-int_0^s zeta_i) ds."""
        if self.rates.is_constant:
            return 1.0 / float(self.rates.zeta[i])
        return _quad(lambda s: math.exp(-self.rates.cumulative_off_rate(i, s)))

    def normalizer(self, i: int) -> float:
        if i not in self._normalizers:
            self._normalizers[i] = 1.0 + float(self.rates.beta[i]) * self.survival_integral(i)
        return self._normalizers[i]

    def density(self, i: int, a):
        a = np.asarray(a, dtype=float)
        if np.any(a < 0):
            raise ValidationError('Ages must be nonnegative', 'a')
        beta = float(self.rates.beta[i])
        if beta == 0.0:
            return np.zeros_like(a) if a.ndim else 0.0
        value = beta * np.exp(-self.rates.cumulative_off_rate(i, a)) / self.normalizer(i)
        return value if a.ndim else float(value)

    def moment(self, i: int, k: int) -> float:
        """mu_{k,i} = int_0^inf a^k rho_i(a) da."""
        beta = float(self.rates.beta[i])
        if beta == 0.0:
            return 0.0
        if self.rates.is_constant:
            zeta = float(self.rates.zeta[i])
            return beta / self.normalizer(i) * math.factorial(k) / zeta ** (k + 1)
        return _quad(lambda a: a ** k * math.exp(-self.rates.cumulative_off_rate(i, a))) * beta / self.normalizer(i)


def closed_form_density(rates: RateModel, i: int, a):
    """Evaluates the continuous linkage density of particle i at age(s) a."""
    return ClosedFormDensity(rates).density(i, a)


def l1_consistency_error(grid: DensityGrid, rates: RateModel, samples: int = 16,
                         density: Optional[ClosedFormDensity] = None) -> np.ndarray:
    """
    Per-particle L1 distance between the piecewise-constant discrete density and the closed-form density over
    [0, l_max * delta_a], by midpoint sub-sampling of every age cell.
    :param grid: Discrete density built from rates
    :param rates: Rate model
    :param samples: Midpoint samples per age cell
    :param density: Optional closed-form density to reuse its cached normalizers
    :return: Array of shape (N_p,)
    """
    density = density or ClosedFormDensity(rates)
    h = grid.delta_a / samples
    cells = np.arange(grid.l_max)
    offsets = (np.arange(samples) + 0.5) * h
    ages = (cells[:, None] * grid.delta_a + offsets[None, :]).reshape(-1)
    errors = np.empty(grid.n_particles)
    for i in range(grid.n_particles):
        discrete = np.repeat(grid.density[:grid.l_max, i], samples)
        errors[i] = h * np.abs(discrete - density.density(i, ages)).sum()
    return errors


def _quad(func) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter('error', integrate.IntegrationWarning)
        try:
            value, _ = integrate.quad(func, 0.0, np.inf, limit=200)
        except integrate.IntegrationWarning as e:
            raise QuadratureError(f'Adaptive quadrature did not converge: {e}') from e
    return float(value)


def fit_order(steps, errors) -> float:
    """Least-squares slope of log(error) against log(step), the observed order of convergence."""
    steps = np.asarray(steps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if len(steps) < 2 or len(steps) != len(errors):
        raise ValidationError('fit_order needs at least two (step, error) pairs', 'delta_a_list')
    if np.any(steps <= 0) or np.any(errors <= 0):
        raise ValidationError('fit_order needs positive steps and errors', 'delta_a_list')
    slope, _ = np.polyfit(np.log(steps), np.log(errors), 1)
    return float(slope)
