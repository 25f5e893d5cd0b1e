from typing import Callable, Optional
import numpy as np
from ..errors import ValidationError

# 4-point Gauss-Legendre rule on [-1, 1]; exact for polynomials of degree 7
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(4)


class PastTrajectory:
    """
    Prescribed trajectory z_p(t) of every particle for t <= 0, with per-particle Lipschitz constants C_zp.
    """

    def __init__(self, func: Callable[[float], np.ndarray], lipschitz: np.ndarray):
        self._func = func
        self._origin = None
        self._velocity = None
        self.lipschitz = np.asarray(lipschitz, dtype=float)

    def __call__(self, t: float) -> np.ndarray:
        return self.sample(np.array([t]))[0]

    @classmethod
    def constant(cls, positions: np.ndarray) -> 'PastTrajectory':
        positions = np.asarray(positions, dtype=float).reshape(-1, 2)
        return cls.linear(positions, np.zeros_like(positions))

    @classmethod
    def linear(cls, positions: np.ndarray, velocity: np.ndarray) -> 'PastTrajectory':
        """z_p(t) = z_p(0) + t * v, with C_zp,i = |v_i|."""
        positions = np.asarray(positions, dtype=float).reshape(-1, 2)
        velocity = np.broadcast_to(np.asarray(velocity, dtype=float), positions.shape).copy()
        past = cls(lambda t: positions + t * velocity, np.linalg.norm(velocity, axis=1))
        past._origin = positions
        past._velocity = velocity
        return past

    def sample(self, times: np.ndarray) -> np.ndarray:
        """Returns z_p at each time, shape (len(times), N_p, 2)."""
        times = np.asarray(times, dtype=float)
        if self._velocity is not None:
            return self._origin[None] + times[:, None, None] * self._velocity[None]
        return np.stack([np.asarray(self._func(t), dtype=float).reshape(-1, 2) for t in times])

    def averages(self, steps: np.ndarray, delta_t: float) -> np.ndarray:
        """
        Interval averages Z_p^m = (1/delta_t) * integral of z_p over [m delta_t, (m+1) delta_t] for each step index m,
        by 4-point Gauss-Legendre quadrature per interval.
        :return: Array of shape (len(steps), N_p, 2)
        """
        steps = np.asarray(steps, dtype=float)
        mid = (steps + 0.5) * delta_t
        times = mid[:, None] + 0.5 * delta_t * _GL_NODES[None, :]
        values = self.sample(times.reshape(-1)).reshape(len(steps), len(_GL_NODES), -1, 2)
        return 0.5 * np.einsum('k,mknd->mnd', _GL_WEIGHTS, values)


class History:
    """
    Ring buffer of the most recent configurations Z^n, Z^{n-1}, ..., seeded with Z^0 and the past averages
    Z_p^{-1}, Z_p^{-2}, ... of the prescribed past trajectory. Lag 0 is always the latest configuration.
    """

    def __init__(self, initial: np.ndarray, delta_t: float, depth: int, past: Optional[PastTrajectory] = None):
        """
        :param initial: Z^0, shape (N_p, 2)
        :param delta_t: Time step
        :param depth: Number of configurations kept (the density grid's l_max)
        :param past: Past trajectory for t <= 0; defaults to the constant trajectory at Z^0
        """
        if not delta_t > 0:
            raise ValidationError('Time step must be positive', 'delta_t')
        if depth < 1:
            raise ValidationError('History depth must be at least 1', 'depth')
        initial = np.asarray(initial, dtype=float).reshape(-1, 2)
        self.delta_t = float(delta_t)
        self.depth = int(depth)
        self.past = past if past is not None else PastTrajectory.constant(initial)
        self.n = 0
        self._buffer = np.empty((self.depth, len(initial), 2))
        self._buffer[0] = initial
        if self.depth > 1:
            # slot depth - k holds Z_p^{-k}
            self._buffer[1:] = self.past.averages(-np.arange(1, self.depth), self.delta_t)[::-1]
        self._head = 0

    def __repr__(self):
        return f'History(n={self.n}, depth={self.depth}, {self.n_particles} particles)'

    @property
    def n_particles(self) -> int:
        return self._buffer.shape[1]

    @property
    def latest(self) -> np.ndarray:
        return self._buffer[self._head].copy()

    def lag(self, k: int) -> np.ndarray:
        """Returns Z^{n-k}."""
        if not 0 <= k < self.depth:
            raise IndexError(f'Lag {k} is outside the history depth {self.depth}')
        return self._buffer[(self._head - k) % self.depth].copy()

    def window(self, count: Optional[int] = None) -> np.ndarray:
        """Returns Z^{n}, Z^{n-1}, ..., Z^{n-count+1} stacked along the first axis."""
        count = self.depth if count is None else count
        if not 0 < count <= self.depth:
            raise IndexError(f'Window of {count} exceeds the history depth {self.depth}')
        indices = (self._head - np.arange(count)) % self.depth
        return self._buffer[indices]

    def push(self, positions: np.ndarray):
        """Appends Z^{n+1}, dropping the oldest entry."""
        self._head = (self._head + 1) % self.depth
        self._buffer[self._head] = np.asarray(positions, dtype=float).reshape(-1, 2)
        self.n += 1
