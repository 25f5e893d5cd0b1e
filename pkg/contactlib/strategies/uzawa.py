"""
Uzawa dual ascent for the per-step problem min_{q in K(Z^{n-1})} E_n(q).

The external load is replaced by its expansion at Z^{n-1}: first order by default, which makes the Lagrangian a
separable quadratic with a closed-form minimizer, or second order with the load's diagonal Hessian when
settings.curvature is set (exact for the quadratic load, giving an implicit load step).
"""

import logging
from typing import Optional
import numpy as np
from ..energy import linearized_load
from ..errors import ValidationError
from ..models import ConstraintEval, ExternalLoad, SolverResult, UzawaSettings
from .base import choose_step, dual_ascent, kkt_residual, stationarity_tolerance, warm_start

logger = logging.getLogger(__name__)


def uzawa_inner_minimize(ctx, load_gradient: np.ndarray, ce: ConstraintEval, lam: np.ndarray,
                         curvature: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Minimizer of the Lagrangian (stiffness / 2) |q - anchor|^2 + g.(q - Z) + (h / 2) |q - Z|^2 + lambda.phi(q) for
    fixed multipliers, coordinate by coordinate:

        q = (stiffness anchor + h Z - g - sum_c lambda_c grad(phi_c)) / (stiffness + h)

    :param ctx: Step context
    :param load_gradient: Load gradient g at Z = ctx.previous
    :param ce: Affine constraints
    :param lam: Multipliers, one per constraint
    :param curvature: Diagonal load curvature h at Z (zero by default)
    :return: Flattened configuration
    :raises ValidationError: If some coordinate has zero stiffness
    """
    stiffness = ctx.stiffness
    h = np.zeros_like(stiffness) if curvature is None else np.asarray(curvature, dtype=float)
    total = stiffness + h
    if np.any(total <= 0):
        raise ValidationError('Inner minimization needs a positive stiffness for every particle', 'theta')
    numerator = stiffness * ctx.anchor + h * ctx.previous - np.asarray(load_gradient, dtype=float)
    return (numerator - ce.apply_transpose(lam)) / total


def local_model(load: ExternalLoad, z_prev: np.ndarray, curvature: bool) -> ExternalLoad:
    """The load model Uzawa actually minimizes: first-order expansion, or second order with diagonal curvature."""
    if not curvature:
        return linearized_load(load, z_prev)
    z_prev = np.asarray(z_prev, dtype=float).reshape(-1)
    f0, g, h = load.value(z_prev), load.gradient(z_prev), load.curvature(z_prev)
    return ExternalLoad(lambda q: f0 + g @ (q - z_prev) + 0.5 * (h * (q - z_prev)) @ (q - z_prev),
                        lambda q: g + h * (q - z_prev), modulus=float(np.min(h)), hessian_diag=lambda q: h.copy(),
                        name=f'quadratic_model({load.name})')


def uzawa_solve(ctx, load: ExternalLoad, ce: ConstraintEval, settings: Optional[UzawaSettings] = None,
                lam0: Optional[np.ndarray] = None) -> SolverResult:
    """
    Alternates the closed-form inner minimization with the truncated dual update
    lambda <- max(lambda + eta phi(q), 0) until the KKT tolerances are met or max_iter is reached.

    :param ctx: Step context
    :param load: External load (expanded at ctx.previous)
    :param ce: Affine constraints at ctx.previous
    :param settings: UzawaSettings (defaults when omitted)
    :param lam0: Initial multipliers; zero when omitted
    :return: SolverResult; converged is False on divergence or when max_iter is exhausted
    """
    settings = settings or UzawaSettings()
    z_prev = ctx.previous
    g = load.gradient(z_prev)
    h = load.curvature(z_prev) if settings.curvature else np.zeros_like(z_prev)
    model = local_model(load, z_prev, settings.curvature)

    def inner(lam):
        return uzawa_inner_minimize(ctx, g, ce, lam, h)

    if ce.n_constraints == 0:
        primal, lam, iterations, converged, eta = inner(np.zeros(0)), np.zeros(0), 1, True, None
    else:
        eta = choose_step(settings, ctx.stiffness + h, ce)
        lam0 = np.zeros(ce.n_constraints) if lam0 is None else np.asarray(lam0, dtype=float)
        primal, lam, iterations, converged = dual_ascent(
            inner, ce, eta, lam0, settings.max_iter, settings.feasibility_tol, settings.complementarity_tol,
            settings.divergence_factor)
    result = SolverResult(primal, lam, iterations, None, converged, ce.pairs, eta)
    result.kkt = kkt_residual(ctx, model, ce, result)
    result.converged = converged and result.kkt.stationarity <= stationarity_tolerance(settings, g)
    logger.debug('Uzawa finished after %d iterations (eta=%s, converged=%s)', iterations, eta, result.converged)
    return result


def uzawa_strategy(sim, ctx, load: ExternalLoad, ce: ConstraintEval) -> SolverResult:
    """Per-step solve strategy for SimulationBase, warm-started from the multipliers of the previous step."""
    return uzawa_solve(ctx, load, ce, sim.uzawa_settings, warm_start(ce.pairs, sim.previous_multipliers))
