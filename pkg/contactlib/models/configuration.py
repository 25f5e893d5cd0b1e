from typing import Sequence, Union
import numpy as np
from ..errors import ValidationError

ArrayLike = Union[np.ndarray, Sequence]


class Configuration:
    """
    Positions of N_p disks in the plane together with their fixed radii. Positions are stored as an (N_p, 2) array;
    the flattened view (x_0, y_0, x_1, y_1, ...) is the primal variable used by the solvers.
    """

    def __init__(self, positions: ArrayLike, radii: ArrayLike):
        positions = np.array(positions, dtype=float)
        radii = np.array(radii, dtype=float).reshape(-1)
        if positions.size == 0 or positions.size % 2 != 0:
            raise ValidationError(f'Positions must be a non-empty list of 2-D points, got shape {positions.shape}',
                                  'positions')
        positions = positions.reshape(-1, 2)
        if len(radii) != len(positions):
            raise ValidationError(f'Expected {len(positions)} radii, got {len(radii)}', 'radii')
        if not np.all(np.isfinite(positions)):
            raise ValidationError('All coordinates must be finite', 'positions')
        if not np.all(np.isfinite(radii)) or np.any(radii <= 0):
            raise ValidationError('All radii must be strictly positive', 'radii')
        self.positions = positions
        self.radii = radii

    def __eq__(self, other):
        if isinstance(other, Configuration):
            return np.array_equal(self.positions, other.positions) and np.array_equal(self.radii, other.radii)
        return False

    def __repr__(self):
        return f'Configuration({self.n_particles} particles)'

    def __len__(self):
        return self.n_particles

    @property
    def n_particles(self) -> int:
        return len(self.positions)

    @property
    def flat(self) -> np.ndarray:
        return self.positions.reshape(-1).copy()

    def with_positions(self, positions: ArrayLike) -> 'Configuration':
        return Configuration(np.asarray(positions, dtype=float).reshape(-1, 2), self.radii)

    @classmethod
    def from_flat(cls, q: ArrayLike, radii: ArrayLike) -> 'Configuration':
        return cls(np.asarray(q, dtype=float).reshape(-1, 2), radii)


def as_flat(q: Union[Configuration, ArrayLike]) -> np.ndarray:
    """Returns the flattened position vector of a Configuration or of an array of positions."""
    if isinstance(q, Configuration):
        return q.positions.reshape(-1)
    return np.asarray(q, dtype=float).reshape(-1)
