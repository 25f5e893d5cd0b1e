from typing import Iterable, Iterator, List, Tuple
import numpy as np
from .domain import DomainSpec
from ..errors import ValidationError

Pair = Tuple[int, int]


class ConstraintEval:
    """
    Affine non-penetration constraints linearized at a reference configuration Z:

        phi_c(q) = -D_c(Z) - G_c(Z).(q - Z),   c = (i, j), i < j

    so that phi_c <= 0 describes the interior convex approximation K(Z). Pairs are kept in lexicographic order. The
    gradient of phi_c is +e_c at slot i and -e_c at slot j.
    """

    def __init__(self, reference: np.ndarray, pairs: np.ndarray, distances: np.ndarray, directions: np.ndarray,
                 domain: DomainSpec):
        """
        :param reference: Flattened reference configuration Z, shape (2 N_p,)
        :param pairs: Constraint pairs, shape (N_c, 2), sorted lexicographically
        :param distances: Signed distances D_c(Z) (after any clamping), shape (N_c,)
        :param directions: Unit directions e_c, shape (N_c, 2)
        :param domain: Domain the distances were evaluated in
        """
        self.reference = np.asarray(reference, dtype=float).reshape(-1)
        self.pairs = np.asarray(pairs, dtype=int).reshape(-1, 2)
        self.distances = np.asarray(distances, dtype=float).reshape(-1)
        self.directions = np.asarray(directions, dtype=float).reshape(-1, 2)
        self.domain = domain

    def __repr__(self):
        return f'ConstraintEval({self.n_constraints} constraints, {self.n_particles} particles)'

    @property
    def n_particles(self) -> int:
        return len(self.reference) // 2

    @property
    def n_constraints(self) -> int:
        return len(self.pairs)

    def pair_list(self) -> List[Pair]:
        return [(int(i), int(j)) for i, j in self.pairs]

    def values(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float).reshape(-1)
        if q.shape != self.reference.shape:
            raise ValidationError(f'Configuration has {len(q)} coordinates, expected {len(self.reference)}', 'q')
        if self.n_constraints == 0:
            return np.zeros(0)
        dq = (q - self.reference).reshape(-1, 2)
        relative = dq[self.pairs[:, 1]] - dq[self.pairs[:, 0]]
        return -self.distances - np.einsum('cd,cd->c', self.directions, relative)

    def apply_transpose(self, lam: np.ndarray) -> np.ndarray:
        """Returns sum_c lam_c * grad(phi_c) as a flattened configuration-sized vector."""
        out = np.zeros((self.n_particles, 2))
        if self.n_constraints:
            weighted = np.asarray(lam, dtype=float)[:, None] * self.directions
            np.add.at(out, self.pairs[:, 0], weighted)
            np.add.at(out, self.pairs[:, 1], -weighted)
        return out.reshape(-1)

    def jacobian(self) -> np.ndarray:
        """Dense matrix of constraint gradients, shape (N_c, 2 N_p)."""
        jac = np.zeros((self.n_constraints, self.n_particles, 2))
        rows = np.arange(self.n_constraints)
        jac[rows, self.pairs[:, 0]] = self.directions
        jac[rows, self.pairs[:, 1]] = -self.directions
        return jac.reshape(self.n_constraints, -1)


class ActiveSet:
    """Set of constraint pairs with |phi_c(q)| within a tolerance of zero, in lexicographic order."""

    def __init__(self, pairs: Iterable[Pair]):
        self.pairs: List[Pair] = sorted((int(i), int(j)) for i, j in pairs)

    def __repr__(self):
        return f'ActiveSet({self.pairs})'

    def __len__(self):
        return len(self.pairs)

    def __iter__(self) -> Iterator[Pair]:
        return iter(self.pairs)

    def __contains__(self, pair):
        return tuple(pair) in self.pairs

    def __eq__(self, other):
        if isinstance(other, ActiveSet):
            return self.pairs == other.pairs
        return False
