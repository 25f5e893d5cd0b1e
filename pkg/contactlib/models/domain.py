from typing import Optional
import numpy as np
from ..errors import ValidationError

PLANE = 'plane'
TORUS = 'torus'


class DomainSpec:
    """Either the unbounded plane or the flat torus [0, L) x [0, H) with periodic identification."""

    def __init__(self, kind: str = PLANE, L: Optional[float] = None, H: Optional[float] = None):
        if kind not in (PLANE, TORUS):
            raise ValidationError(f"Domain kind must be '{PLANE}' or '{TORUS}', got '{kind}'", 'domain.kind')
        if kind == TORUS:
            if L is None or not L > 0:
                raise ValidationError('Torus period L must be a positive length', 'domain.L')
            if H is None or not H > 0:
                raise ValidationError('Torus period H must be a positive length', 'domain.H')
        self.kind = kind
        self.L = float(L) if L is not None else None
        self.H = float(H) if H is not None else None

    def __eq__(self, other):
        if isinstance(other, DomainSpec):
            return self.kind == other.kind and self.L == other.L and self.H == other.H
        return False

    def __repr__(self):
        if self.is_torus:
            return f'DomainSpec(torus, L={self.L}, H={self.H})'
        return 'DomainSpec(plane)'

    @property
    def is_torus(self) -> bool:
        return self.kind == TORUS

    @property
    def periods(self) -> np.ndarray:
        return np.array([self.L, self.H])

    @classmethod
    def plane(cls) -> 'DomainSpec':
        return cls(PLANE)

    @classmethod
    def torus(cls, L: float, H: float) -> 'DomainSpec':
        return cls(TORUS, L, H)
