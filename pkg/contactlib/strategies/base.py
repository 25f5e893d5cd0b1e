"""
This module defines helpers that are shared by both per-step solvers: the truncated dual ascent loop, step-size
bounds, KKT certification and the projection-form check.

Both solvers work on a step context, which exposes the quadratic delay term of the step being solved:

* ``stiffness`` and ``anchor``: the delay term equals (stiffness / 2) |q - anchor|^2 up to a constant
* ``previous``: the reference configuration Z^{n-1} (flattened)
* ``delta_t``, ``delay_value(q)`` and ``delay_gradient(q)``

EnergyContext (delayed model) and FrictionStep (friction limit) both provide it.
"""

import logging
from typing import Callable, NamedTuple, Optional, Union
import numpy as np
from ..errors import ValidationError, ConvergenceError
from ..models import (
    ConstraintEval, DensityGrid, ExternalLoad, KKTResidual, PenaltySettings, SolverResult, UzawaSettings)

logger = logging.getLogger(__name__)

LAMBDA_TOL = 1e-12
PROJECTION_TOL = 1e-12
PROJECTION_MAX_ITER = 100_000


class DualAscentResult(NamedTuple):
    primal: np.ndarray
    multipliers: np.ndarray
    iterations: int
    converged: bool


def dual_ascent(inner: Callable[[np.ndarray], np.ndarray], ce: ConstraintEval, eta: float, lam0: np.ndarray,
                max_iter: int, feasibility_tol: float, complementarity_tol: float,
                divergence_factor: float = 1e6) -> DualAscentResult:
    """
    Truncated gradient ascent on the dual: q^r = inner(lambda^r), lambda^{r+1} = max(lambda^r + eta phi(q^r), 0).
    Stops as soon as (q^r, lambda^r) is feasible and complementary within tolerance; stationarity holds exactly since
    inner() minimizes the Lagrangian.

    :param inner: Minimizer of the Lagrangian for fixed multipliers
    :param ce: Affine constraints
    :param eta: Dual step
    :param lam0: Initial multipliers (nonnegative)
    :param max_iter: Maximal number of primal minimizations
    :param feasibility_tol: Tolerance on max(phi, 0)
    :param complementarity_tol: Tolerance on sum |lambda phi|
    :param divergence_factor: Growth of |lambda| over its initial scale that counts as divergence
    :return: DualAscentResult holding the last primal/dual pair
    """
    lam = np.maximum(np.asarray(lam0, dtype=float), 0.0)
    scale = float(np.linalg.norm(lam))
    q = inner(lam)
    for r in range(1, max_iter + 1):
        phi = ce.values(q)
        feasibility = float(np.max(phi, initial=0.0))
        complementarity = float(np.sum(np.abs(lam * phi)))
        if feasibility <= feasibility_tol and complementarity <= complementarity_tol:
            return DualAscentResult(q, lam, r, True)
        lam = np.maximum(lam + eta * phi, 0.0)
        norm = float(np.linalg.norm(lam))
        if r == 1:
            scale = max(scale, norm)
        elif norm > divergence_factor * max(scale, LAMBDA_TOL):
            logger.debug('Dual iterates diverged after %d iterations (|lambda| = %.3e)', r, norm)
            return DualAscentResult(inner(lam), lam, r, False)
        q = inner(lam)
        if r % 1000 == 0:
            logger.debug('Dual ascent iteration %d: feasibility %.3e, complementarity %.3e', r, feasibility,
                         complementarity)
    return DualAscentResult(q, lam, max_iter, False)


def step_bound(stiffness: np.ndarray, n_constraints: int) -> float:
    """Largest certified dual step 2 alpha / C^2, with alpha the smallest stiffness and C^2 = 2 N_c."""
    if n_constraints < 1:
        raise ValidationError('A step bound needs at least one constraint', 'n_constraints')
    return 2.0 * float(np.min(stiffness)) / (2.0 * n_constraints)


def uzawa_step_bound(grid: DensityGrid, epsilon: float, n_constraints: int) -> float:
    """2 min_i theta_i / (eps * 2 N_c)."""
    if not epsilon > 0:
        raise ValidationError('epsilon must be positive', 'epsilon')
    return step_bound(grid.theta / epsilon, n_constraints)


def spectral_step_bound(stiffness: np.ndarray, ce: ConstraintEval) -> float:
    """2 alpha / |J|_2^2, using the spectral norm of the constraint Jacobian instead of its bound sqrt(2 N_c)."""
    if ce.n_constraints < 1:
        raise ValidationError('A step bound needs at least one constraint', 'n_constraints')
    norm = np.linalg.norm(ce.jacobian(), 2)
    return 2.0 * float(np.min(stiffness)) / norm ** 2


def choose_step(settings: UzawaSettings, stiffness: np.ndarray, ce: ConstraintEval) -> float:
    if settings.step_policy == 'fixed':
        if not (settings.eta and settings.eta > 0):
            raise ValidationError('A fixed step policy needs a positive eta', 'solver.eta')
        return float(settings.eta)
    if settings.step_policy == 'spectral':
        return settings.safety * spectral_step_bound(stiffness, ce)
    if settings.step_policy == 'auto':
        return settings.safety * step_bound(stiffness, ce.n_constraints)
    raise ValidationError(f'Unknown step policy {settings.step_policy}', 'solver.eta_policy')


def objective_gradient(ctx, load: ExternalLoad, q: np.ndarray) -> np.ndarray:
    return ctx.delay_gradient(q) + load.gradient(q)


def kkt_residual(ctx, load: ExternalLoad, ce: ConstraintEval, result: SolverResult) -> KKTResidual:
    """
    Residuals of the KKT system at (result.primal, result.multipliers):
    stationarity |grad E + sum lambda grad(phi)|, feasibility max(phi, 0) and complementarity sum |lambda phi|.
    """
    q = np.asarray(result.primal, dtype=float).reshape(-1)
    lam = np.asarray(result.multipliers, dtype=float)
    phi = ce.values(q)
    stationarity = float(np.linalg.norm(objective_gradient(ctx, load, q) + ce.apply_transpose(lam)))
    feasibility = float(np.max(phi, initial=0.0))
    complementarity = float(np.sum(np.abs(lam * phi)))
    return KKTResidual(stationarity, feasibility, complementarity)


def projection_identity_check(ctx, load: ExternalLoad, ce: ConstraintEval, result: SolverResult) -> float:
    """
    Distance between Z^n and P_K(Z^n - delta_t (L^n + F'(Z^n))), where K is the polytope of ce and L^n the delay
    operator. A KKT point makes this zero; the projection is computed by dual ascent on 1/2 |q - y|^2.
    :raises ConvergenceError: If the projection does not converge
    """
    z = np.asarray(result.primal, dtype=float).reshape(-1)
    y = z - ctx.delta_t * objective_gradient(ctx, load, z)
    if ce.n_constraints == 0:
        return float(np.linalg.norm(y - z))
    unit = np.ones_like(z)
    eta = 0.9 * spectral_step_bound(unit, ce)
    projection = dual_ascent(lambda lam: y - ce.apply_transpose(lam), ce, eta, np.zeros(ce.n_constraints),
                             PROJECTION_MAX_ITER, PROJECTION_TOL, PROJECTION_TOL)
    if not projection.converged:
        raise ConvergenceError(f'Projection onto the constraint polytope did not converge in '
                               f'{projection.iterations} iterations')
    return float(np.linalg.norm(projection.primal - z))


def stationarity_tolerance(settings: Union[UzawaSettings, PenaltySettings], load_gradient: np.ndarray) -> float:
    return settings.stationarity_tol * (1.0 + float(np.linalg.norm(load_gradient)))


def warm_start(pairs: np.ndarray, previous: Optional[dict]) -> np.ndarray:
    """Initial multipliers taken from a {(i, j): lambda} map of the previous step, zero for new pairs."""
    if not previous:
        return np.zeros(len(pairs))
    return np.array([previous.get((int(i), int(j)), 0.0) for i, j in pairs])
