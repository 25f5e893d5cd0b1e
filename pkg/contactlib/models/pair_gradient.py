from typing import NamedTuple, Tuple
import numpy as np


class PairGradient:
    """
    Gradient of the signed distance D_ij with respect to the flattened configuration. The direction e_ij is the unit
    vector from disk i toward (the nearest image of) disk j; the embedded vector carries -e_ij at slot i and +e_ij at
    slot j.
    """

    def __init__(self, pair: Tuple[int, int], direction: np.ndarray, n_particles: int,
                 offsets: Tuple[int, int] = (0, 0)):
        self.pair = pair
        self.direction = np.asarray(direction, dtype=float)
        self.n_particles = n_particles
        self.offsets = offsets

    def __repr__(self):
        return f'PairGradient({self.pair}, e=({self.direction[0]:.6g}, {self.direction[1]:.6g}))'

    @property
    def embedded(self) -> np.ndarray:
        i, j = self.pair
        g = np.zeros(2 * self.n_particles)
        g[2 * i:2 * i + 2] = -self.direction
        g[2 * j:2 * j + 2] = self.direction
        return g


class PeriodicDistance(NamedTuple):
    distance: float
    offsets: Tuple[int, int]
    degenerate: bool
    separation: np.ndarray
