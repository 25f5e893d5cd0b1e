from typing import Optional
import numpy as np
from ..errors import ValidationError


class DensityGrid:
    """
    Discrete linkage density R_{l,i} on the age grid a_l = l * delta_a, l = 0..l_max, for every particle, together
    with the derived quantities the time scheme needs: discrete moments mu_{k,i} = delta_a * sum_l (l delta_a)^k R_{l,i},
    the effective stiffness theta_i = mu_{0,i} - delta_a * R_{0,i} (the mass carried by cells l >= 1), the boundary
    value R_{b,i} and the off-rate samples zeta_{l,i} used by the dissipation.
    """

    def __init__(self, delta_a: float, density: np.ndarray, boundary: Optional[np.ndarray] = None,
                 zeta: Optional[np.ndarray] = None):
        """
        :param delta_a: Age step
        :param density: Array of shape (l_max + 1, N_p) holding R_{l,i}
        :param boundary: Boundary values R_{b,i}; defaults to R_{0,i}
        :param zeta: Off-rate samples of shape (l_max + 1, N_p); defaults to zero (no dissipation)
        """
        if not delta_a > 0:
            raise ValidationError('Age step delta_a must be positive', 'delta_a')
        density = np.asarray(density, dtype=float)
        if density.ndim != 2 or len(density) < 2:
            raise ValidationError('Density must have shape (l_max + 1, N_p) with l_max >= 1', 'density')
        if np.any(density < 0):
            raise ValidationError('Linkage density must be nonnegative', 'density')
        self.delta_a = float(delta_a)
        self.density = density
        self.boundary = np.asarray(boundary, dtype=float) if boundary is not None else density[0].copy()
        self.zeta = np.asarray(zeta, dtype=float) if zeta is not None else np.zeros_like(density)
        self.mu0 = self.moment(0)
        self.mu1 = self.moment(1)
        self.mu2 = self.moment(2)
        self.theta = self.mu0 - self.delta_a * density[0]

    def __repr__(self):
        return f'DensityGrid(delta_a={self.delta_a}, l_max={self.l_max}, {self.n_particles} particles)'

    @property
    def l_max(self) -> int:
        return len(self.density) - 1

    @property
    def n_particles(self) -> int:
        return self.density.shape[1]

    @property
    def ages(self) -> np.ndarray:
        return self.delta_a * np.arange(self.l_max + 1)

    def moment(self, k: int) -> np.ndarray:
        weights = self.ages ** k
        return self.delta_a * weights @ self.density

    def piecewise(self, i: int, a: np.ndarray) -> np.ndarray:
        """Evaluates the piecewise-constant density rho_Delta(a) = R_{l,i} for a in [l delta_a, (l+1) delta_a)."""
        a = np.asarray(a, dtype=float)
        cells = np.floor(a / self.delta_a + 1e-12).astype(int)
        inside = (cells >= 0) & (cells <= self.l_max)
        return np.where(inside, self.density[np.clip(cells, 0, self.l_max), i], 0.0)
