import numpy as np
from ..errors import ValidationError


class FrictionWeights:
    """Per-particle friction coefficients mu_{1,i}, the first age moment of the linkage density."""

    def __init__(self, mu1):
        mu1 = np.atleast_1d(np.asarray(mu1, dtype=float))
        if np.any(mu1 <= 0) or not np.all(np.isfinite(mu1)):
            raise ValidationError('Friction weights must be finite and strictly positive', 'mu1')
        self.mu1 = mu1

    def __repr__(self):
        return f'FrictionWeights({self.mu1})'

    def __len__(self):
        return len(self.mu1)

    @classmethod
    def constant(cls, value: float, n_particles: int) -> 'FrictionWeights':
        return cls(np.full(n_particles, float(value)))

    @classmethod
    def from_grid(cls, grid) -> 'FrictionWeights':
        """Discrete weights mu_{1,Delta,i} of a DensityGrid."""
        return cls(grid.mu1)

    @classmethod
    def from_rates(cls, rates) -> 'FrictionWeights':
        """Weights of the continuous density, by quadrature when the off-rate is not constant."""
        from ..linkage import ClosedFormDensity
        density = ClosedFormDensity(rates)
        return cls(np.array([density.moment(i, 1) for i in range(rates.n_particles)]))
