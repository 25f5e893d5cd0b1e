from typing import Callable, Optional
import numpy as np
from ..errors import ValidationError

Vector = np.ndarray


class ExternalLoad:
    """
    External potential F acting on the flattened configuration, with its gradient. Optionally carries a diagonal
    Hessian (used by the penalty solver's Newton direction and by implicit Uzawa steps) and a convexity modulus.
    """

    def __init__(self, value: Callable[[Vector], float], gradient: Callable[[Vector], Vector],
                 modulus: Optional[float] = None, hessian_diag: Optional[Callable[[Vector], Vector]] = None,
                 strictly_convex: bool = True, name: str = 'custom'):
        self._value = value
        self._gradient = gradient
        self._hessian_diag = hessian_diag
        self.modulus = modulus
        self.strictly_convex = strictly_convex
        self.name = name

    def __repr__(self):
        return f'ExternalLoad({self.name})'

    def value(self, q: Vector) -> float:
        return float(self._value(np.asarray(q, dtype=float)))

    def gradient(self, q: Vector) -> Vector:
        return np.asarray(self._gradient(np.asarray(q, dtype=float)), dtype=float)

    @property
    def has_curvature(self) -> bool:
        return self._hessian_diag is not None

    def curvature(self, q: Vector) -> Vector:
        """Diagonal of the Hessian at q, falling back to the convexity modulus (or zero) when none was declared."""
        q = np.asarray(q, dtype=float)
        if self._hessian_diag is not None:
            return np.broadcast_to(np.asarray(self._hessian_diag(q), dtype=float), q.shape).copy()
        return np.full(q.shape, self.modulus or 0.0)

    def shifted(self, b: Vector) -> 'ExternalLoad':
        """Returns F(q) + b.q, used to inject a stochastic forcing into the load gradient."""
        b = np.asarray(b, dtype=float)
        return ExternalLoad(lambda q: self._value(q) + b @ q,
                            lambda q: self._gradient(q) + b,
                            self.modulus, self._hessian_diag, self.strictly_convex, f'{self.name}+forcing')

    def check_gradient(self, q: Vector, rel_tol: float = 1e-6):
        """
        Compares the declared gradient to central finite differences of the value at q.
        :raises ValidationError: If any component disagrees beyond rel_tol
        """
        q = np.asarray(q, dtype=float)
        g = self.gradient(q)
        if g.shape != q.shape:
            raise ValidationError(f'Load gradient has shape {g.shape}, expected {q.shape}', 'load')
        for k in range(len(q)):
            h = 1e-6 * (1.0 + abs(q[k]))
            qp, qm = q.copy(), q.copy()
            qp[k] += h
            qm[k] -= h
            fd = (self.value(qp) - self.value(qm)) / (2 * h)
            if abs(fd - g[k]) > rel_tol * (1.0 + abs(g[k])) + 1e-6 * (1.0 + abs(self.value(q))):
                raise ValidationError(
                    f'Load gradient component {k} is {g[k]:.6g} but finite differences give {fd:.6g}', 'load')
