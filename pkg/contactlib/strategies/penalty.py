"""
Exterior quadratic penalty with continuation in delta:

    E_delta(q) = E_n(q) + (1 / 2 delta) sum_c max(phi_c(q), 0)^2

Each E_delta is smooth and strictly convex; it is minimized by damped generalized Newton steps (diagonal energy
Hessian plus (1 / delta) J_a^T J_a on the violated constraints) with Armijo backtracking, warm-started from the
minimizer of the previous delta. Works with the full nonlinear load. A few active-set Newton steps on the
linearized KKT system finish the solve once the continuation has located the contacts.
"""

import logging
from typing import Optional, Tuple
import numpy as np
from ..errors import LineSearchError, ConvergenceError
from ..models import ConstraintEval, ExternalLoad, KKTResidual, PenaltySettings, SolverResult
from .base import LAMBDA_TOL, kkt_residual, objective_gradient, stationarity_tolerance

logger = logging.getLogger(__name__)

MIN_STEP = 1e-20
# Armijo comparisons allow this many ulps of the objective for round-off
ROUNDOFF_ULPS = 4.0


def _penalized(ctx, load: ExternalLoad, ce: ConstraintEval, q: np.ndarray, delta: float):
    violations = np.maximum(ce.values(q), 0.0)
    value = ctx.delay_value(q) + load.value(q) + 0.5 / delta * float(violations @ violations)
    gradient = ctx.delay_gradient(q) + load.gradient(q) + ce.apply_transpose(violations) / delta
    return value, gradient, violations


def _newton_direction(ctx, load: ExternalLoad, ce: ConstraintEval, q: np.ndarray, gradient: np.ndarray,
                      violations: np.ndarray, delta: float) -> np.ndarray:
    hessian = np.diag(ctx.stiffness + load.curvature(q))
    violated = violations > 0
    if np.any(violated):
        jac = ce.jacobian()[violated]
        hessian = hessian + jac.T @ jac / delta
    try:
        direction = np.linalg.solve(hessian, -gradient)
    except np.linalg.LinAlgError:
        return -gradient
    if not np.all(np.isfinite(direction)) or gradient @ direction >= 0:
        return -gradient
    return direction


def _minimize(ctx, load: ExternalLoad, ce: ConstraintEval, q: np.ndarray, delta: float,
              settings: PenaltySettings) -> Tuple[np.ndarray, int, bool]:
    """Damped Newton on E_delta; the flag is False when max_inner_iter runs out before inner_tol is reached."""
    eps = np.finfo(float).eps
    iterations = 0
    for iterations in range(1, settings.max_inner_iter + 1):
        value, gradient, violations = _penalized(ctx, load, ce, q, delta)
        if np.max(np.abs(gradient), initial=0.0) <= settings.inner_tol:
            return q, iterations, True
        direction = _newton_direction(ctx, load, ce, q, gradient, violations, delta)
        slope = float(gradient @ direction)
        slack = ROUNDOFF_ULPS * eps * (1.0 + abs(value))
        step = 1.0
        while True:
            candidate = q + step * direction
            trial, _, _ = _penalized(ctx, load, ce, candidate, delta)
            if trial <= value + settings.armijo * step * slope + slack:
                break
            step *= 0.5
            if step < MIN_STEP:
                raise LineSearchError(f'Armijo backtracking failed at delta={delta:.3e} '
                                      f'(|gradient| = {np.linalg.norm(gradient):.3e})')
        q = candidate
        # stalled at round-off
        if step * np.max(np.abs(direction), initial=0.0) <= eps * (1.0 + np.max(np.abs(q), initial=0.0)):
            return q, iterations, True
    return q, iterations, False


def _polish(ctx, load: ExternalLoad, ce: ConstraintEval, q: np.ndarray,
            settings: PenaltySettings) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    Primal-dual active-set Newton steps from the continuation's last iterate, starting from the violated
    constraints. Each step solves the equality-constrained Newton system on the active set A through its Schur
    complement:

        (J_A H^-1 J_A^T) lambda_A = phi_A - J_A H^-1 g,    dq = -H^-1 (g + J_A^T lambda_A)

    with H the diagonal energy Hessian. A negative multiplier leaves A; a constraint violated by the step joins it.
    """
    eps = np.finfo(float).eps
    jac = ce.jacobian()
    active = ce.values(q) > 0
    lam = np.zeros(ce.n_constraints)
    steps = 0
    for steps in range(1, settings.max_polish_iter + 1):
        gradient = objective_gradient(ctx, load, q)
        hessian = ctx.stiffness + load.curvature(q)
        if np.any(hessian <= 0):
            break
        phi = ce.values(q)
        idx = np.flatnonzero(active)
        lam = np.zeros(ce.n_constraints)
        if len(idx):
            ja = jac[idx]
            schur = (ja / hessian) @ ja.T
            lam[idx] = np.linalg.lstsq(schur, phi[idx] - ja @ (gradient / hessian), rcond=None)[0]
            worst = int(np.argmin(lam[idx]))
            if lam[idx[worst]] < -LAMBDA_TOL:
                active[idx[worst]] = False
                continue
        dq = -(gradient + jac.T @ lam) / hessian
        candidate = q + dq
        outside = np.where(active, -np.inf, ce.values(candidate))
        entering = int(np.argmax(outside))
        if outside[entering] > settings.feasibility_tol:
            active[entering] = True
            continue
        q = candidate
        if np.max(np.abs(dq), initial=0.0) <= ROUNDOFF_ULPS * eps * (1.0 + np.max(np.abs(q), initial=0.0)):
            break
    return q, np.maximum(lam, 0.0), steps


def _merit(kkt: KKTResidual, settings: PenaltySettings, tolerance: float) -> float:
    return max(kkt.stationarity / tolerance, kkt.feasibility / settings.feasibility_tol,
               kkt.complementarity / settings.complementarity_tol)


def penalty_solve(ctx, load: ExternalLoad, ce: ConstraintEval, settings: Optional[PenaltySettings] = None,
                  q0: Optional[np.ndarray] = None) -> SolverResult:
    """
    Runs the delta schedule, recovering multipliers lambda_c = max(phi_c, 0) / delta at the last delta, then polishes
    the pair with active-set Newton steps and keeps the polished pair when it lowers the KKT residuals. The
    objective_trace holds the unpenalized energy E_n of each delta's minimizer.

    :param ctx: Step context
    :param load: External load
    :param ce: Affine constraints
    :param settings: PenaltySettings (defaults when omitted)
    :param q0: Starting point (ctx.previous by default)
    :return: SolverResult; converged is False when some level runs out of inner iterations or the KKT residuals
        miss the stationarity, feasibility or complementarity tolerance
    :raises LineSearchError: If backtracking cannot decrease the objective
    :raises ConvergenceError: If the continuation leaves a violation beyond settings.continuation_tol
    """
    settings = settings or PenaltySettings()
    schedule = tuple(settings.schedule)
    if not schedule or any(d <= 0 for d in schedule) or any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise ConvergenceError('Penalty schedule must be positive and strictly decreasing')
    q = ctx.previous if q0 is None else np.asarray(q0, dtype=float).reshape(-1).copy()
    total = 0
    trace = []
    inner_converged = True
    for delta in schedule:
        q, iterations, reached = _minimize(ctx, load, ce, q, delta, settings)
        total += iterations
        inner_converged = inner_converged and reached
        trace.append(ctx.delay_value(q) + load.value(q))
        logger.debug('Penalty level delta=%.3e: %d Newton iterations, energy %.12g', delta, iterations, trace[-1])
        if not reached:
            logger.debug('Penalty level delta=%.3e stopped at max_inner_iter=%d', delta, settings.max_inner_iter)
    delta = schedule[-1]
    violations = np.maximum(ce.values(q), 0.0)
    feasibility = float(np.max(violations, initial=0.0))
    if feasibility > settings.continuation_tol:
        raise ConvergenceError(f'Penalty schedule exhausted with constraint violation {feasibility:.3e}')
    result = SolverResult(q, violations / delta, total, None, False, ce.pairs, objective_trace=trace)
    result.kkt = kkt_residual(ctx, load, ce, result)
    tolerance = stationarity_tolerance(settings, load.gradient(ctx.previous))
    if ce.n_constraints:
        primal, multipliers, steps = _polish(ctx, load, ce, q, settings)
        polished = SolverResult(primal, multipliers, total + steps, None, False, ce.pairs, objective_trace=trace)
        polished.kkt = kkt_residual(ctx, load, ce, polished)
        if _merit(polished.kkt, settings, tolerance) <= _merit(result.kkt, settings, tolerance):
            result = polished
        else:
            logger.debug('Rejected active-set polish (KKT %s against %s)', tuple(polished.kkt), tuple(result.kkt))
    kkt = result.kkt
    result.converged = (inner_converged and kkt.stationarity <= tolerance
                        and kkt.feasibility <= settings.feasibility_tol
                        and kkt.complementarity <= settings.complementarity_tol)
    return result


def penalty_strategy(sim, ctx, load: ExternalLoad, ce: ConstraintEval) -> SolverResult:
    """Per-step solve strategy for SimulationBase using the full (nonlinear) load."""
    return penalty_solve(ctx, load, ce, sim.penalty_settings)
