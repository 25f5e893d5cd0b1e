from typing import Optional, Sequence, Union
import numpy as np
from ..errors import ValidationError

Rate = Union[float, Sequence[float], np.ndarray]


class RateModel:
    """
    Per-particle linkage rates: a constant on-rate beta_i and an age-dependent off-rate zeta_i(a). The off-rate is
    either constant per particle or tabulated at ages a_0 = 0 < a_1 < ... and linearly interpolated, with constant
    extrapolation past the last tabulated age.
    """

    def __init__(self, beta: np.ndarray, zeta: np.ndarray, ages: Optional[np.ndarray] = None):
        """
        Use the constant() and tabulated() factories rather than calling this directly.
        :param beta: On-rates, shape (N_p,)
        :param zeta: Off-rates, shape (N_p,) for constant rates or (N_p, K) for a table
        :param ages: Tabulation ages, shape (K,), or None for constant rates
        """
        self.beta = beta
        self.zeta = zeta
        self.ages = ages
        if np.any(beta < 0) or not np.all(np.isfinite(beta)):
            raise ValidationError('On-rates beta must be finite and nonnegative', 'rates.beta')
        if not np.all(np.isfinite(zeta)) or np.any(zeta <= 0):
            raise ValidationError('Off-rates zeta must be finite and strictly positive', 'rates.zeta')

    def __repr__(self):
        kind = 'constant' if self.is_constant else f'tabulated, {len(self.ages)} ages'
        return f'RateModel({self.n_particles} particles, {kind})'

    @classmethod
    def constant(cls, beta: Rate, zeta: Rate, n_particles: Optional[int] = None) -> 'RateModel':
        beta_arr = np.atleast_1d(np.asarray(beta, dtype=float))
        zeta_arr = np.atleast_1d(np.asarray(zeta, dtype=float))
        n = n_particles or max(len(beta_arr), len(zeta_arr))
        return cls(_broadcast(beta_arr, n, 'rates.beta'), _broadcast(zeta_arr, n, 'rates.zeta'))

    @classmethod
    def tabulated(cls, beta: Rate, ages: Sequence[float], zeta: Union[Sequence[float], np.ndarray],
                  n_particles: Optional[int] = None) -> 'RateModel':
        """
        Creates a rate model whose off-rate is tabulated at the given ages.
        :param beta: On-rate (scalar or one per particle)
        :param ages: Strictly increasing ages starting at 0
        :param zeta: Off-rate samples, either shape (K,) shared by all particles or shape (N_p, K)
        :param n_particles: Number of particles (inferred when omitted)
        """
        ages_arr = np.asarray(ages, dtype=float)
        if ages_arr.ndim != 1 or len(ages_arr) < 2 or ages_arr[0] != 0 or np.any(np.diff(ages_arr) <= 0):
            raise ValidationError('Tabulation ages must be strictly increasing and start at 0', 'rates.ages')
        zeta_arr = np.atleast_2d(np.asarray(zeta, dtype=float))
        if zeta_arr.shape[1] != len(ages_arr):
            raise ValidationError(f'Expected {len(ages_arr)} off-rate samples per particle', 'rates.zeta')
        beta_arr = np.atleast_1d(np.asarray(beta, dtype=float))
        n = n_particles or max(len(beta_arr), len(zeta_arr))
        if len(zeta_arr) == 1:
            zeta_arr = np.repeat(zeta_arr, n, axis=0)
        elif len(zeta_arr) != n:
            raise ValidationError(f'Expected off-rate tables for {n} particles', 'rates.zeta')
        return cls(_broadcast(beta_arr, n, 'rates.beta'), zeta_arr, ages_arr)

    @property
    def n_particles(self) -> int:
        return len(self.beta)

    @property
    def is_constant(self) -> bool:
        return self.ages is None

    @property
    def zeta_min(self) -> np.ndarray:
        return self.zeta if self.is_constant else self.zeta.min(axis=1)

    @property
    def zeta_max(self) -> np.ndarray:
        return self.zeta if self.is_constant else self.zeta.max(axis=1)

    @property
    def lipschitz(self) -> np.ndarray:
        if self.is_constant:
            return np.zeros(self.n_particles)
        slopes = np.diff(self.zeta, axis=1) / np.diff(self.ages)
        return np.abs(slopes).max(axis=1)

    def off_rate(self, i: int, a: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        if self.is_constant:
            return self.zeta[i] * np.ones_like(a, dtype=float) if np.ndim(a) else float(self.zeta[i])
        return np.interp(a, self.ages, self.zeta[i])

    def off_rate_samples(self, ages: np.ndarray) -> np.ndarray:
        """Returns zeta_i(a) for every age and particle, shape (len(ages), N_p)."""
        ages = np.asarray(ages, dtype=float)
        if self.is_constant:
            return np.broadcast_to(self.zeta, (len(ages), self.n_particles)).copy()
        return np.stack([np.interp(ages, self.ages, row) for row in self.zeta], axis=1)

    def cumulative_off_rate(self, i: int, a: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """
        Returns the integral of zeta_i from 0 to a. The integral is exact for both constant and tabulated rates.
        :param i: Particle index
        :param a: Age or array of ages (nonnegative)
        """
        a_arr = np.asarray(a, dtype=float)
        if self.is_constant:
            result = self.zeta[i] * a_arr
        else:
            knots, values = self.ages, self.zeta[i]
            slopes = np.diff(values) / np.diff(knots)
            at_knots = np.concatenate([[0.0], np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(knots))])
            k = np.clip(np.searchsorted(knots, a_arr, side='right') - 1, 0, len(knots) - 1)
            offset = a_arr - knots[k]
            slope = np.where(k < len(slopes), slopes[np.minimum(k, len(slopes) - 1)], 0.0)
            result = at_knots[k] + values[k] * offset + 0.5 * slope * offset ** 2
        return float(result) if np.ndim(result) == 0 else result


def _broadcast(values: np.ndarray, n: int, key: str) -> np.ndarray:
    if len(values) == 1:
        return np.repeat(values, n).astype(float)
    if len(values) != n:
        raise ValidationError(f'Expected 1 or {n} values, got {len(values)}', key)
    return values.astype(float)
