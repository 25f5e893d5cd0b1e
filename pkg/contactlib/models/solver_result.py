from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Tuple
import numpy as np

STEP_POLICIES = ('fixed', 'auto', 'spectral')


def default_penalty_schedule() -> Tuple[float, ...]:
    """delta_k = 1e-2 * 4^-k for k = 0..10."""
    return tuple(1e-2 * 4.0 ** -k for k in range(11))


class KKTResidual(NamedTuple):
    stationarity: float
    feasibility: float
    complementarity: float


@dataclass
class UzawaSettings:
    """
    Settings for the Uzawa dual ascent. With step_policy 'auto' the step is safety times the certified bound
    2 alpha / C^2 (alpha the smallest stiffness, C^2 = 2 N_c); 'spectral' replaces C^2 by the squared spectral norm
    of the constraint Jacobian; 'fixed' uses eta as given.
    """
    step_policy: str = 'auto'
    eta: Optional[float] = None
    safety: float = 0.9
    max_iter: int = 10_000
    stationarity_tol: float = 1e-8
    feasibility_tol: float = 1e-9
    complementarity_tol: float = 1e-8
    divergence_factor: float = 1e6
    # include the load's diagonal Hessian in the inner minimization (implicit in the load)
    curvature: bool = False


@dataclass
class PenaltySettings:
    schedule: Tuple[float, ...] = field(default_factory=default_penalty_schedule)
    inner_tol: float = 1e-10
    max_inner_iter: int = 200
    # largest violation the continuation may leave before the final polish
    continuation_tol: float = 1e-6
    stationarity_tol: float = 1e-8
    feasibility_tol: float = 1e-9
    complementarity_tol: float = 1e-8
    armijo: float = 1e-4
    max_polish_iter: int = 50


class SolverResult:
    """
    Outcome of one constrained solve: the primal minimizer (flattened), the multipliers (one per constraint pair, in
    the ConstraintEval's order), the iteration count, the KKT residuals and whether all tolerances were met.
    """

    def __init__(self, primal: np.ndarray, multipliers: np.ndarray, iterations: int, kkt: KKTResidual,
                 converged: bool, pairs: Optional[np.ndarray] = None, eta: Optional[float] = None,
                 objective_trace: Optional[List[float]] = None):
        self.primal = primal
        self.multipliers = multipliers
        self.iterations = iterations
        self.kkt = kkt
        self.converged = converged
        self.pairs = pairs if pairs is not None else np.zeros((0, 2), dtype=int)
        self.eta = eta
        self.objective_trace = objective_trace or []

    def __repr__(self):
        status = 'converged' if self.converged else 'not converged'
        return f'SolverResult({status}, {self.iterations} iterations)'

    @property
    def positions(self) -> np.ndarray:
        return self.primal.reshape(-1, 2)
