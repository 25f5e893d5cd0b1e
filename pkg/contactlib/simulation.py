"""
Time loop of the delayed contact model. At each step n the non-overlap constraints are linearized at Z^{n-1}, the
per-step energy is minimized over K(Z^{n-1}) by the configured solve strategy, and the diagnostics ledger (energy
estimate, dissipation, squared steps, MSD, activation, KKT residuals) is updated before the history advances.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple
import numpy as np
from tqdm import tqdm
from .constraints import contact_degree, linearize, multiplier_bound
from .energy import EnergyContext, quadratic_load
from .errors import ValidationError, ConvergenceError, InfeasibleConfigurationError, SolverError
from .geometry import all_pairs, pair_index, pairwise_signed_distances
from .linkage import build_density
from .models import (
    Configuration, ConstraintEval, DensityGrid, DiagnosticsRecord, ExternalLoad, History, PastTrajectory, SimConfig,
    SolverResult, Trajectory, KKTResidual)
from .models.sim_config import STEP_COUNT_SLACK
from .strategies import uzawa_strategy, penalty_strategy, LAMBDA_TOL

logger = logging.getLogger(__name__)

# a new configuration may overlap by this multiple of the solver's feasibility tolerance
FEASIBILITY_SLACK = 10.0
# the multiplier bound takes N = N_p, which must be at least 3
MIN_BOUND_PARTICLES = 3

Strategy = Callable[['SimulationBase', object, ExternalLoad, ConstraintEval], SolverResult]


@dataclass
class SimState:
    """Mutable state of a running simulation. Advance it with step()."""
    simulation: 'SimulationBase'
    history: History
    ctx: object
    trajectory: Trajectory
    rng: np.random.Generator
    n: int = 0
    cumulative_dissipation: float = 0.0
    squared_steps: float = 0.0
    previous_multipliers: Dict[Tuple[int, int], float] = field(default_factory=dict)

    @property
    def t(self) -> float:
        return self.n * self.history.delta_t

    @property
    def positions(self) -> np.ndarray:
        return self.history.latest


class SimulationBase:
    """
    Base simulation containing the time loop shared by the delayed model and its friction limit. The per-step solve
    is a strategy callable (strategy(simulation, ctx, load, ce) -> SolverResult), and subclasses supply the step
    context through build_context().
    """

    def __init__(self, cfg: SimConfig, delta_t: float, solve: Optional[Strategy] = None, curvature: bool = False):
        """
        :param cfg: Simulation config
        :param delta_t: Time step
        :param solve: Per-step solve strategy; chosen from cfg.solver.kind when omitted
        :param curvature: Let Uzawa keep the load's diagonal curvature (implicit load step)
        """
        self.cfg = cfg
        self.delta_t = float(delta_t)
        self.n_steps = int(math.floor(cfg.T / self.delta_t + STEP_COUNT_SLACK))
        self.solve_strategy = solve or (penalty_strategy if cfg.solver.kind == 'penalty' else uzawa_strategy)
        self.uzawa_settings = cfg.solver.uzawa_settings(curvature)
        self.penalty_settings = cfg.solver.penalty_settings()
        self.feasibility_tol = (self.penalty_settings.feasibility_tol if self.solve_strategy is penalty_strategy
                                else self.uzawa_settings.feasibility_tol)
        self.domain = cfg.domain_spec()
        self.radii = np.asarray(cfg.radii, dtype=float)
        self.load = cfg.custom_load or quadratic_load(cfg.load.nu)
        self.reference = cfg.reference_positions()
        self.pairs = all_pairs(cfg.n_particles) if cfg.contacts else np.zeros((0, 2), dtype=int)
        # set per step so strategies can warm start
        self.previous_multipliers: Dict[Tuple[int, int], float] = {}

    def __repr__(self):
        return f'{type(self).__name__}({self.cfg.n_particles} particles, dt={self.delta_t}, N={self.n_steps})'

    @property
    def history_depth(self) -> int:
        return 1

    def make_past(self) -> PastTrajectory:
        positions = np.asarray(self.cfg.positions, dtype=float).reshape(-1, 2)
        if self.cfg.past.kind == 'linear':
            return PastTrajectory.linear(positions, np.asarray(self.cfg.past.velocity, dtype=float))
        return PastTrajectory.constant(positions)

    def build_context(self, history: History):
        raise NotImplementedError

    def init_state(self, rng: Optional[np.random.Generator] = None) -> SimState:
        """
        Checks the initial configuration, seeds the history with the past averages and records the n = 0 frame.
        :raises InfeasibleConfigurationError: If the initial disks overlap
        """
        q0 = self.cfg.configuration()
        if self.cfg.contacts:
            self._assert_feasible(q0.positions, self.feasibility_tol, step=0)
        history = History(q0.positions, self.delta_t, self.history_depth, self.make_past())
        ctx = self.build_context(history)
        f0 = self.load.value(q0.flat)
        noisy = self.cfg.noise.sigma > 0
        trajectory = Trajectory(self.delta_t, self.cfg.n_particles, self.cfg.output.stride, self.pairs,
                                ctx.k0 + f0, noisy)
        rng = rng or np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.cfg.seed)))
        state = SimState(self, history, ctx, trajectory, rng)
        delay_term = ctx.lagged_delay_value()
        trajectory.diagnostics.append(DiagnosticsRecord(
            step=0, t=0.0, delay_term=delay_term, cumulative_dissipation=0.0, load_value=f0,
            ledger_slack=trajectory.ledger_bound - delay_term - f0, squared_steps=0.0,
            msd=self._msd(q0.positions), activation=0.0, kkt_stationarity=0.0, kkt_feasibility=0.0,
            kkt_complementarity=0.0, min_distance=self._min_distance(q0.positions), iterations=0, converged=True))
        trajectory.append(0, 0.0, q0.positions, np.zeros(len(self.pairs)))
        logger.info('Initialized %r (history depth %d)', self, self.history_depth)
        return state

    def step(self, state: SimState) -> SimState:
        """
        Advances the state by one time step.
        :raises ConvergenceError: If the solver fails and the failure policy is 'abort'
        :raises InfeasibleConfigurationError: If the new configuration overlaps beyond tolerance
        """
        n = state.n + 1
        ctx = state.ctx
        z_prev = ctx.previous
        dissipation = ctx.dissipation()
        ce = self._constraints(z_prev)
        load = self.load
        if self.cfg.noise.sigma > 0:
            xi = state.rng.standard_normal(len(z_prev))
            load = load.shifted(-self.cfg.noise.sigma * xi / math.sqrt(self.delta_t))
        self.previous_multipliers = state.previous_multipliers
        try:
            result = self.solve_strategy(self, ctx, load, ce)
        except SolverError as e:
            raise ConvergenceError(f'{type(e).__name__}: {e}', step=n) from e
        if not result.converged:
            if self.cfg.solver.on_failure == 'abort':
                raise ConvergenceError(f'Solver did not converge after {result.iterations} iterations', step=n)
            logger.warning('Solver did not converge at step %d (KKT %s); continuing', n, tuple(result.kkt))
        z_new = result.positions
        if self.cfg.contacts:
            self._assert_feasible(z_new, FEASIBILITY_SLACK * self.feasibility_tol, step=n)

        delay_term = ctx.delay_value(result.primal)
        state.cumulative_dissipation += self.delta_t * dissipation
        load_value = self.load.value(result.primal)
        state.squared_steps += float(np.sum((result.primal - z_prev) ** 2)) / self.delta_t
        multipliers = self._dense_multipliers(result)
        state.previous_multipliers = {(int(i), int(j)): float(lam)
                                      for (i, j), lam in zip(result.pairs, result.multipliers)}
        max_multiplier, bound = self._check_multiplier_bound(ctx, result, n)
        kkt = result.kkt or KKTResidual(0.0, 0.0, 0.0)
        traj = state.trajectory
        t = n * self.delta_t
        traj.diagnostics.append(DiagnosticsRecord(
            step=n, t=t, delay_term=delay_term, cumulative_dissipation=state.cumulative_dissipation,
            load_value=load_value,
            ledger_slack=traj.ledger_bound - (delay_term + state.cumulative_dissipation + load_value),
            squared_steps=state.squared_steps, msd=self._msd(z_new), activation=_activation_row(multipliers),
            kkt_stationarity=kkt.stationarity, kkt_feasibility=kkt.feasibility,
            kkt_complementarity=kkt.complementarity, min_distance=self._min_distance(z_new),
            iterations=result.iterations, converged=result.converged, max_multiplier=max_multiplier,
            multiplier_bound=bound))

        state.history.push(z_new)
        ctx.refresh()
        state.n = n
        if n % traj.stride == 0 or n == self.n_steps:
            traj.append(n, t, z_new, multipliers)
        return state

    def run(self, progress: bool = False, rng: Optional[np.random.Generator] = None) -> Trajectory:
        """
        Runs all N = floor(T / delta_t) steps.
        :param progress: Show a progress bar
        :param rng: Generator for the noise (seeded from cfg.seed by default)
        """
        state = self.init_state(rng)
        for _ in tqdm(range(self.n_steps), desc='steps', disable=not progress, leave=False):
            self.step(state)
        traj = state.trajectory
        logger.info('Finished %d steps; final MSD %.6g', self.n_steps, traj.diagnostics[-1].msd)
        return traj

    def _constraints(self, z_prev: np.ndarray) -> ConstraintEval:
        if not self.cfg.contacts:
            return ConstraintEval(z_prev, np.zeros((0, 2), dtype=int), np.zeros(0), np.zeros((0, 2)), self.domain)
        q = Configuration(z_prev.reshape(-1, 2), self.radii)
        bp = self.cfg.broad_phase
        return linearize(q, self.domain, tol=FEASIBILITY_SLACK * self.feasibility_tol, broad_phase=bp.enabled,
                         cutoff=bp.cutoff, clamp=False)

    def _assert_feasible(self, positions: np.ndarray, tol: float, step: int):
        if len(self.pairs) == 0:
            return
        distances, _ = pairwise_signed_distances(Configuration(positions, self.radii), self.domain, self.pairs)
        worst = int(np.argmin(distances))
        if distances[worst] < -tol:
            i, j = self.pairs[worst]
            raise InfeasibleConfigurationError((int(i), int(j)), float(distances[worst]), step)

    def _min_distance(self, positions: np.ndarray) -> float:
        if len(self.pairs) == 0:
            return math.inf
        distances, _ = pairwise_signed_distances(Configuration(positions, self.radii), self.domain, self.pairs)
        return float(distances.min())

    def _msd(self, positions: np.ndarray) -> float:
        return float(np.mean(np.sum((positions - self.reference) ** 2, axis=1)))

    def _dense_multipliers(self, result: SolverResult) -> np.ndarray:
        dense = np.zeros(len(self.pairs))
        n = self.cfg.n_particles
        for (i, j), lam in zip(result.pairs, result.multipliers):
            dense[pair_index(int(i), int(j), n)] = lam
        return dense

    def _check_multiplier_bound(self, ctx, result: SolverResult, n: int) -> Tuple[float, float]:
        """
        Largest multiplier of the step and its bound |U| b^N_p, with U the force on Z^n and n_v the largest number
        of active contacts of one disk. The bound is inf when it does not apply.
        """
        largest = float(np.max(result.multipliers, initial=0.0))
        n_particles = self.cfg.n_particles
        n_v = contact_degree(result.pairs, result.multipliers, LAMBDA_TOL)
        if n_particles < MIN_BOUND_PARTICLES or n_v == 0:
            return largest, math.inf
        if n_v > self.cfg.max_neighbours:
            logger.warning('A disk has %d active contacts at step %d, more than max_neighbours=%d', n_v, n,
                           self.cfg.max_neighbours)
        force = ctx.delay_gradient(result.primal) + self.load.gradient(result.primal)
        bound = multiplier_bound(float(np.linalg.norm(force)), n_v, n_particles, n_particles)
        if largest > bound:
            logger.warning('Multiplier %.6g exceeds the bound %.6g at step %d', largest, bound, n)
        return largest, bound


class DelayedSimulation(SimulationBase):
    """
    The delayed adhesion model with time step delta_t = eps * delta_a. The linkage density grid is built once; the
    load is linearized at Z^{n-1} inside Uzawa.
    """

    def __init__(self, cfg: SimConfig, solve: Optional[Strategy] = None, grid: Optional[DensityGrid] = None):
        super().__init__(cfg, cfg.delta_t, solve)
        self.grid = grid or build_density(cfg.rate_model(), cfg.delta_a)

    @property
    def history_depth(self) -> int:
        return self.grid.l_max

    def build_context(self, history: History) -> EnergyContext:
        return EnergyContext(self.grid, history, self.cfg.epsilon)


def init(cfg: SimConfig) -> SimState:
    return DelayedSimulation(cfg).init_state()


def step(state: SimState) -> SimState:
    return state.simulation.step(state)


def run(cfg: SimConfig, progress: bool = False) -> Trajectory:
    return DelayedSimulation(cfg).run(progress)


def spawn_generators(master_seed: int, count: int) -> List[np.random.Generator]:
    """Independent PCG64 streams split from the master seed; stream k depends only on (master_seed, k)."""
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(master_seed).spawn(count)]


def interpolate(traj: Trajectory, t: float, mode: str = 'constant') -> np.ndarray:
    """
    Evaluates the stored trajectory at time t: 'constant' returns Z^n for t in (t^{n-1}, t^n], 'linear' interpolates
    between the two enclosing frames.
    :raises ValidationError: If t lies outside [0, t^N] or mode is unknown
    """
    if mode not in ('constant', 'linear'):
        raise ValidationError(f"Interpolation mode must be 'constant' or 'linear', got '{mode}'", 'mode')
    times = traj.times_array
    if len(times) == 0:
        raise ValidationError('Trajectory has no frames', 't')
    tiny = 1e-12 * (1.0 + abs(t))
    if t < -tiny or t > times[-1] + tiny:
        raise ValidationError(f'Time {t} is outside [0, {times[-1]}]', 't')
    k = min(int(np.searchsorted(times, t - tiny, side='left')), len(times) - 1)
    if mode == 'constant' or k == 0:
        return traj.positions[k].copy()
    w = min(max((t - times[k - 1]) / (times[k] - times[k - 1]), 0.0), 1.0)
    return (1.0 - w) * traj.positions[k - 1] + w * traj.positions[k]


def msd(traj: Trajectory, z_ref: Optional[np.ndarray] = None) -> np.ndarray:
    """Mean over particles of |Z_i - z_ref,i|^2 for every stored frame (reference: the origin)."""
    frames = traj.positions_array
    ref = np.zeros(frames.shape[1:]) if z_ref is None else np.asarray(z_ref, dtype=float).reshape(-1, 2)
    if frames.size and ref.shape != frames.shape[1:]:
        raise ValidationError(f'Reference has shape {ref.shape}, expected {frames.shape[1:]}', 'z_ref')
    return np.mean(np.sum((frames - ref) ** 2, axis=2), axis=1)


def activation(lambda_series, tol: float = LAMBDA_TOL) -> np.ndarray:
    """
    Fraction of particle pairs with a nonzero multiplier, per time. Rows are dense multiplier vectors over all
    N_p (N_p - 1) / 2 pairs, so the fraction is 2 / (N_p (N_p - 1)) times the number of active pairs.
    """
    series = np.atleast_2d(np.asarray(lambda_series, dtype=float))
    if series.shape[1] == 0:
        return np.zeros(len(series))
    return np.count_nonzero(np.abs(series) > tol, axis=1) / series.shape[1]


def _activation_row(multipliers: np.ndarray) -> float:
    return float(activation(multipliers)[0])


def ledger_check(traj: Trajectory) -> Optional[float]:
    """
    Largest violation of I_n + dt sum D + F(Z^n) <= K_0 + F(Z^0) over the recorded steps; None for noisy runs, where
    the estimate does not apply.
    """
    if traj.noisy or not traj.diagnostics:
        return None
    return max(-record.ledger_slack for record in traj.diagnostics)


def compactness_proxy(traj: Trajectory) -> float:
    """Discrete H1 seminorm sum_n |Z^n - Z^{n-1}|^2 / dt, from the frames when every step was stored."""
    if traj.stride == 1 and len(traj.positions) >= 2:
        increments = np.diff(traj.positions_array, axis=0)
        return float(np.sum(increments ** 2)) / traj.delta_t
    if traj.diagnostics:
        return traj.diagnostics[-1].squared_steps
    return 0.0
