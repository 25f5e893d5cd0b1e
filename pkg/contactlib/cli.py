"""
Experiment configuration and orchestration: YAML experiment files, single runs, density refinement studies,
friction-limit comparisons, Monte Carlo MSD validation and (epsilon, delta_a) sweeps, with CSV / JSON output.
"""

import argparse
import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence
import numpy as np
import yaml
from tqdm import tqdm
from .errors import (
    ContactLibError, ValidationError, ConfigError, SolverError, ConvergenceError, InfeasibleConfigurationError,
    SingularGradientError, QuadratureError, TruncationError, SchemaError)
from .linkage import build_density, l1_consistency_error, fit_order, ClosedFormDensity
from .models import (
    SimConfig, DomainConfig, LoadConfig, RatesConfig, PastConfig, NoiseConfig, SolverConfig, BroadPhaseConfig,
    OutputConfig, FrictionWeights, Trajectory, DensityGrid)
from .reference import FrictionLimitSimulation, ou_msd, sup_norm_distance
from .simulation import DelayedSimulation, SimulationBase, ledger_check, compactness_proxy

logger = logging.getLogger(__name__)

MODES = ('simulate', 'density-study', 'limit-compare', 'msd-validate', 'sweep')
STUDY_MODELS = ('friction', 'delayed')
DEFAULT_OUTPUT_DIR = 'output'
FLOAT_FORMAT = '.17g'

TRAJECTORY_COLUMNS = ('t', 'particle', 'x', 'y')
DIAGNOSTICS_COLUMNS = ('t', 'I_n', 'cumulative_dissipation', 'F', 'ledger_slack', 'msd', 'activation',
                       'kkt_stationarity', 'kkt_feasibility', 'min_distance')
MULTIPLIER_COLUMNS = ('t', 'i', 'j', 'lambda')
DENSITY_STUDY_COLUMNS = ('delta_a', 'particle', 'l_max', 'l1_error', 'mu0', 'mu1', 'mu2')
LIMIT_COLUMNS = ('epsilon', 'delta_t', 'sup_distance', 'final_distance')
MSD_COLUMNS = ('t', 'empirical_msd', 'standard_error', 'expected_msd', 'z_score')
SWEEP_COLUMNS = ('epsilon', 'delta_a', 'delta_t', 'steps', 'final_msd', 'max_ledger_violation', 'compactness_proxy')

# None marks a leaf key
SCHEMA: Dict[str, Any] = {
    'mode': None,
    'particles': {'positions': None, 'radii': None},
    'domain': {'kind': None, 'L': None, 'H': None},
    'epsilon': None,
    'delta_a': None,
    'T': None,
    'load': {'nu': None},
    'rates': {'beta': None, 'zeta': None, 'ages': None},
    'past': {'kind': None, 'velocity': None},
    'noise': {'sigma': None},
    'seed': None,
    'solver': {'kind': None, 'eta_policy': None, 'eta': None, 'safety': None, 'max_iter': None, 'on_failure': None},
    'broad_phase': {'enabled': None, 'cutoff': None},
    'contacts': None,
    'msd_reference': None,
    'max_neighbours': None,
    'output': {'dir': None, 'stride': None},
    'study': {'delta_a_list': None, 'eps_list': None, 'replicas': None, 'times': None, 'model': None, 'workers': None},
}
REQUIRED_KEYS = ('particles.positions', 'particles.radii', 'epsilon', 'delta_a', 'T')


@dataclass
class StudySpec:
    """Parameters of the study modes. Every list must be nonempty."""
    delta_a_list: List[float] = field(default_factory=lambda: [0.1, 0.05, 0.025])
    eps_list: List[float] = field(default_factory=lambda: [0.2, 0.1, 0.05])
    replicas: int = 10_000
    times: List[float] = field(default_factory=lambda: [0.5, 1.0, 2.0, 5.0])
    model: str = 'friction'
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        for key in ('delta_a_list', 'eps_list'):
            values = getattr(self, key)
            if not values or any(not v > 0 for v in values):
                raise ValidationError(f'study.{key} must be a nonempty list of positive numbers', f'study.{key}')
        if not self.times or any(t < 0 for t in self.times):
            raise ValidationError('study.times must be a nonempty list of nonnegative times', 'study.times')
        if self.replicas < 1:
            raise ValidationError('study.replicas must be at least 1', 'study.replicas')
        if self.workers < 1:
            raise ValidationError('study.workers must be at least 1', 'study.workers')
        if self.model not in STUDY_MODELS:
            raise ValidationError(f'study.model must be one of {STUDY_MODELS}', 'study.model')


@dataclass
class ExperimentSpec:
    """A validated experiment: its mode, the simulation config (which carries the master seed) and study parameters."""
    sim: SimConfig
    mode: str = 'simulate'
    study: StudySpec = field(default_factory=StudySpec)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"Unknown mode '{self.mode}', expected one of {MODES}", 'mode')

    @property
    def output_dir(self) -> Path:
        return Path(self.sim.output.dir or DEFAULT_OUTPUT_DIR)

    @property
    def seed(self) -> int:
        return self.sim.seed

    @classmethod
    def from_yaml(cls, path) -> 'ExperimentSpec':
        with open(path) as f:
            try:
                data = yaml.safe_load(f)
            except yaml.YAMLError as e:
                mark = getattr(e, 'problem_mark', None)
                line = mark.line + 1 if mark is not None else None
                raise ConfigError(f'Cannot parse {path}: {getattr(e, "problem", None) or e}', line=line) from e
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data) -> 'ExperimentSpec':
        if not isinstance(data, dict):
            raise ConfigError('Configuration must be a mapping of keys to values')
        _check_keys(data, SCHEMA, '')
        for key in REQUIRED_KEYS:
            if _lookup(data, key) is None:
                raise ConfigError(f'Missing required key {key}', key)
        try:
            sim = _sim_config(data)
            sim.rate_model()
            study = _study(_section(data, 'study'))
            return cls(sim, data.get('mode') or 'simulate', study)
        except ConfigError:
            raise
        except ValidationError as e:
            raise ConfigError(str(e), e.key) from e

    def to_dict(self) -> dict:
        sim = self.sim
        return {
            'mode': self.mode,
            'particles': {'positions': sim.positions, 'radii': sim.radii},
            'domain': asdict(sim.domain),
            'epsilon': sim.epsilon,
            'delta_a': sim.delta_a,
            'T': sim.T,
            'load': asdict(sim.load),
            'rates': asdict(sim.rates),
            'past': asdict(sim.past),
            'noise': asdict(sim.noise),
            'seed': sim.seed,
            'solver': asdict(sim.solver),
            'broad_phase': asdict(sim.broad_phase),
            'contacts': sim.contacts,
            'msd_reference': sim.msd_reference,
            'max_neighbours': sim.max_neighbours,
            'output': asdict(sim.output),
            'study': asdict(self.study),
        }

    def save_yaml(self, path):
        with open(path, 'w') as f:
            yaml.safe_dump(self.to_dict(), f, default_flow_style=False, sort_keys=False)


def parse_config(path) -> ExperimentSpec:
    """
    Reads and validates a YAML experiment file, filling in documented defaults.
    :raises ConfigError: On YAML syntax errors (with the line number), unknown keys and invalid values (naming the key)
    :raises OSError: If the file cannot be read
    """
    return ExperimentSpec.from_yaml(path)


def serialize_config(spec: ExperimentSpec, path):
    """Writes spec as YAML; parse_config(path) gives back an equal spec."""
    spec.save_yaml(path)


def _check_keys(data: dict, schema: dict, prefix: str):
    for key, value in data.items():
        name = f'{prefix}{key}'
        if key not in schema:
            raise ConfigError(f'Unknown configuration key {name}', name)
        if schema[key] is not None and value is not None:
            if not isinstance(value, dict):
                raise ConfigError(f'Configuration key {name} must be a mapping', name)
            _check_keys(value, schema[key], f'{name}.')


def _lookup(data: dict, dotted: str):
    for part in dotted.split('.'):
        if not isinstance(data, dict):
            return None
        data = data.get(part)
    return data


def _section(data: dict, key: str) -> dict:
    return data.get(key) or {}


def _number(value, key: str, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f'{key} must be a number, got {value!r}', key)
    if integer:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f'{key} must be an integer, got {value!r}', key)
        return int(value)
    return float(value)


def _optional_number(value, key: str):
    return None if value is None else _number(value, key)


def _numbers(value, key: str):
    """Scalars, lists and nested lists of numbers, converted to floats."""
    if isinstance(value, list):
        return [_numbers(v, key) for v in value]
    return _number(value, key)


def _optional_numbers(value, key: str):
    return None if value is None else _numbers(value, key)


def _flag(value, key: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f'{key} must be true or false, got {value!r}', key)
    return value


def _sim_config(data: dict) -> SimConfig:
    particles = data['particles']
    domain = _section(data, 'domain')
    rates = _section(data, 'rates')
    past = _section(data, 'past')
    solver = _section(data, 'solver')
    broad_phase = _section(data, 'broad_phase')
    output = _section(data, 'output')
    defaults = SolverConfig()
    return SimConfig(
        positions=_numbers(particles['positions'], 'positions'),
        radii=_numbers(particles['radii'], 'radii'),
        epsilon=_number(data['epsilon'], 'epsilon'),
        delta_a=_number(data['delta_a'], 'delta_a'),
        T=_number(data['T'], 'T'),
        domain=DomainConfig(domain.get('kind', 'plane'), _optional_number(domain.get('L'), 'domain.L'),
                            _optional_number(domain.get('H'), 'domain.H')),
        load=LoadConfig(_number(_section(data, 'load').get('nu', 1.0), 'load.nu')),
        rates=RatesConfig(_numbers(rates.get('beta', 1.0), 'rates.beta'),
                          _numbers(rates.get('zeta', 1.0), 'rates.zeta'),
                          _optional_numbers(rates.get('ages'), 'rates.ages')),
        past=PastConfig(past.get('kind', 'constant'), _optional_numbers(past.get('velocity'), 'past.velocity')),
        noise=NoiseConfig(_number(_section(data, 'noise').get('sigma', 0.0), 'noise.sigma')),
        seed=_seed(data.get('seed', 0)),
        solver=SolverConfig(
            kind=solver.get('kind', defaults.kind),
            eta_policy=solver.get('eta_policy', defaults.eta_policy),
            eta=_optional_number(solver.get('eta'), 'solver.eta'),
            safety=_number(solver.get('safety', defaults.safety), 'solver.safety'),
            max_iter=_number(solver.get('max_iter', defaults.max_iter), 'solver.max_iter', integer=True),
            on_failure=solver.get('on_failure', defaults.on_failure)),
        broad_phase=BroadPhaseConfig(_flag(broad_phase.get('enabled', False), 'broad_phase.enabled'),
                                     _optional_number(broad_phase.get('cutoff'), 'broad_phase.cutoff')),
        output=OutputConfig(output.get('dir'), _number(output.get('stride', 1), 'output.stride', integer=True)),
        contacts=_flag(data.get('contacts', True), 'contacts'),
        msd_reference=_optional_numbers(data.get('msd_reference'), 'msd_reference'),
        max_neighbours=_number(data.get('max_neighbours', 6), 'max_neighbours', integer=True))


def _seed(value) -> int:
    seed = _number(value, 'seed', integer=True)
    if not 0 <= seed < 2 ** 64:
        raise ConfigError('seed must be an unsigned 64-bit integer', 'seed')
    return seed


def _study(section: dict) -> StudySpec:
    defaults = StudySpec()
    return StudySpec(
        delta_a_list=_numbers(section.get('delta_a_list', defaults.delta_a_list), 'study.delta_a_list'),
        eps_list=_numbers(section.get('eps_list', defaults.eps_list), 'study.eps_list'),
        replicas=_number(section.get('replicas', defaults.replicas), 'study.replicas', integer=True),
        times=_numbers(section.get('times', defaults.times), 'study.times'),
        model=section.get('model', defaults.model),
        workers=_number(section.get('workers', defaults.workers), 'study.workers', integer=True))


def run_experiment(spec: ExperimentSpec, progress: bool = False) -> int:
    """
    Runs the experiment described by spec and writes its CSV tables and summary.json under spec.output_dir.
    :return: Exit status 0; failures are raised
    """
    out = spec.output_dir
    out.mkdir(parents=True, exist_ok=True)
    logger.info('Running %s into %s (seed %d)', spec.mode, out, spec.seed)
    start = time.perf_counter()
    summary = _RUNNERS[spec.mode](spec, out, progress)
    summary['mode'] = spec.mode
    summary['seed'] = spec.seed
    summary['runtime_seconds'] = time.perf_counter() - start
    write_summary(summary, out / 'summary.json')
    logger.info('Finished %s in %.2f s', spec.mode, summary['runtime_seconds'])
    return 0


def _simulate(spec: ExperimentSpec, out: Path, progress: bool) -> dict:
    traj = DelayedSimulation(spec.sim).run(progress)
    write_run(traj, out)
    return run_summary(traj)


def _density_study(spec: ExperimentSpec, out: Path, progress: bool) -> dict:
    rates = spec.sim.rate_model()
    closed_form = ClosedFormDensity(rates)
    steps = spec.study.delta_a_list
    rows = []
    errors = []
    for delta_a in tqdm(steps, desc='delta_a', disable=not progress):
        grid = build_density(rates, delta_a)
        particle_errors = l1_consistency_error(grid, rates, density=closed_form)
        errors.append(float(np.max(particle_errors)))
        logger.info('delta_a=%g: l_max=%d, L1 error %.6g', delta_a, grid.l_max, errors[-1])
        for i, error in enumerate(particle_errors):
            rows.append([delta_a, i, grid.l_max, error, grid.mu0[i], grid.mu1[i], grid.mu2[i]])
        point = out / f'delta_a_{delta_a:g}'
        point.mkdir(parents=True, exist_ok=True)
        write_density(grid, point / 'density.csv')
    write_table(out / 'density_study.csv', DENSITY_STUDY_COLUMNS, rows)
    order = fit_order(steps, errors) if len(steps) >= 2 else None
    return {'delta_a_list': list(steps), 'l1_errors': errors, 'fitted_order': order}


def _limit_compare(spec: ExperimentSpec, out: Path, progress: bool) -> dict:
    cfg = spec.sim
    weights = FrictionWeights.from_rates(cfg.rate_model())
    rows = []
    distances = []
    for epsilon in tqdm(spec.study.eps_list, desc='epsilon', disable=not progress):
        run_cfg = cfg.with_changes(epsilon=epsilon)
        delayed = DelayedSimulation(run_cfg).run()
        limit = FrictionLimitSimulation(run_cfg, weights).run()
        distance = sup_norm_distance(delayed, limit)
        final = float(np.max(np.linalg.norm(delayed.final_positions - limit.final_positions, axis=1)))
        logger.info('epsilon=%g: sup-norm distance to the friction limit %.6g', epsilon, distance)
        distances.append(distance)
        rows.append([epsilon, run_cfg.delta_t, distance, final])
        point = out / f'eps_{epsilon:g}'
        write_run(delayed, point)
        write_trajectory(limit, point / 'limit_trajectory.csv')
    write_table(out / 'limit_compare.csv', LIMIT_COLUMNS, rows)
    return {'eps_list': list(spec.study.eps_list), 'sup_distances': distances,
            'decreasing': all(b < a for a, b in zip(distances, distances[1:]))}


def _msd_validate(spec: ExperimentSpec, out: Path, progress: bool) -> dict:
    """
    Stacks study.replicas copies of the configured particles into one contact-free run (each copy draws its own
    noise) and compares the ensemble MSD at study.times with the Ornstein-Uhlenbeck prediction for the friction limit.
    """
    cfg = spec.sim
    study = spec.study
    replicas = study.replicas
    delta_t = cfg.delta_t
    targets = {int(round(t / delta_t)): t for t in study.times}
    if max(targets) > cfg.n_steps:
        raise ConfigError(f'study.times must not exceed T = {cfg.T}', 'study.times')
    if cfg.contacts and cfg.n_particles > 1:
        logger.info('Contacts are switched off for the Monte Carlo replicas')
    base_weights = FrictionWeights.from_rates(cfg.rate_model())
    stacked = _stack_replicas(cfg, replicas, max(targets))
    if study.model == 'friction':
        simulation: SimulationBase = FrictionLimitSimulation(stacked, FrictionWeights(np.tile(base_weights.mu1,
                                                                                               replicas)))
    else:
        simulation = DelayedSimulation(stacked)

    state = simulation.init_state()
    samples = {0: state.positions.copy()} if 0 in targets else {}
    for n in tqdm(range(1, max(targets) + 1), desc='steps', disable=not progress):
        simulation.step(state)
        if n in targets:
            samples[n] = state.positions.copy()

    z0 = np.asarray(cfg.positions, dtype=float).reshape(-1, 2)
    reference = cfg.reference_positions()
    rate = cfg.load.nu / base_weights.mu1
    sigma = cfg.noise.sigma / base_weights.mu1
    rows = []
    within = True
    for n in sorted(targets):
        t = n * delta_t
        squares = np.sum((samples[n] - np.tile(reference, (replicas, 1))) ** 2, axis=1)
        per_replica = squares.reshape(replicas, cfg.n_particles).mean(axis=1)
        empirical = float(per_replica.mean())
        stderr = float(per_replica.std(ddof=1) / np.sqrt(replicas)) if replicas > 1 else 0.0
        expected = _ou_expected(t, z0, reference, rate, sigma)
        z_score = (empirical - expected) / stderr if stderr > 0 else 0.0
        within = within and abs(z_score) <= 3.0
        logger.info('t=%g: MSD %.6g +/- %.2g (expected %.6g)', t, empirical, stderr, expected)
        rows.append([t, empirical, stderr, expected, z_score])
    write_table(out / 'msd_validate.csv', MSD_COLUMNS, rows)
    return {'replicas': replicas, 'model': study.model, 'within_three_standard_errors': within}


def _ou_expected(t: float, z0: np.ndarray, reference: np.ndarray, rate: np.ndarray, sigma: np.ndarray) -> float:
    """Mean over particles of E|z_i(t) - ref_i|^2 for independent OU particles started at z0."""
    values = [ou_msd(t, 0.0, r, s, 2) + float(np.sum((z * np.exp(-r * t) - ref) ** 2))
              for z, ref, r, s in zip(z0, reference, rate, sigma)]
    return float(np.mean(values))


def _stack_replicas(cfg: SimConfig, replicas: int, last_step: int) -> SimConfig:
    def tile(values):
        return None if values is None else [list(v) for v in values] * replicas

    def tile_rates(values):
        return values * replicas if isinstance(values, list) else values

    rates = RatesConfig(tile_rates(cfg.rates.beta), tile_rates(cfg.rates.zeta), cfg.rates.ages)
    return cfg.with_changes(
        positions=tile(cfg.positions), radii=list(cfg.radii) * replicas, contacts=False, rates=rates,
        past=PastConfig(cfg.past.kind, tile(cfg.past.velocity)), msd_reference=tile(cfg.msd_reference),
        output=OutputConfig(cfg.output.dir, max(last_step, 1)))


def _sweep(spec: ExperimentSpec, out: Path, progress: bool) -> dict:
    points = [(epsilon, delta_a) for epsilon in spec.study.eps_list for delta_a in spec.study.delta_a_list]
    jobs = [(spec.sim.with_changes(epsilon=epsilon, delta_a=delta_a), out / f'eps_{epsilon:g}_delta_a_{delta_a:g}')
            for epsilon, delta_a in points]
    workers = spec.study.workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_sweep_point, cfg, point_dir) for cfg, point_dir in jobs]
            summaries = [future.result() for future in tqdm(futures, desc='sweep', disable=not progress)]
    else:
        summaries = [_sweep_point(cfg, point_dir) for cfg, point_dir in tqdm(jobs, desc='sweep',
                                                                              disable=not progress)]
    rows = [[epsilon, delta_a, epsilon * delta_a, s['steps'], s['final_msd'], s['max_ledger_violation'],
             s['compactness_proxy']] for (epsilon, delta_a), s in zip(points, summaries)]
    write_table(out / 'sweep.csv', SWEEP_COLUMNS, rows)
    return {'points': len(points), 'workers': workers}


def _sweep_point(cfg: SimConfig, point_dir: Path) -> dict:
    """Runs one sweep point; errors are re-raised with the point named (and picklable across processes)."""
    where = f'epsilon={cfg.epsilon:g}, delta_a={cfg.delta_a:g}'
    try:
        traj = DelayedSimulation(cfg).run()
    except (SolverError, InfeasibleConfigurationError, SingularGradientError, QuadratureError,
            TruncationError) as e:
        raise ConvergenceError(f'Sweep point {where} failed: {e}') from None
    except ValidationError as e:
        raise ValidationError(f'Sweep point {where} is invalid: {e}', e.key) from None
    logger.info('Sweep point %s done (%d steps)', where, traj.diagnostics[-1].step)
    write_run(traj, point_dir)
    return run_summary(traj)


_RUNNERS = {
    'simulate': _simulate,
    'density-study': _density_study,
    'limit-compare': _limit_compare,
    'msd-validate': _msd_validate,
    'sweep': _sweep,
}


def run_summary(traj: Trajectory) -> dict:
    last = traj.diagnostics[-1]
    return {'steps': last.step, 'final_msd': last.msd, 'max_ledger_violation': ledger_check(traj),
            'compactness_proxy': compactness_proxy(traj)}


def _format(value) -> str:
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), FLOAT_FORMAT)


def write_table(path: Path, columns: Sequence[str], rows):
    """Writes a CSV table; floats keep 17 significant digits."""
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format(value) for value in row])


def write_trajectory(traj: Trajectory, path: Path):
    write_table(path, TRAJECTORY_COLUMNS, ([t, i, x, y] for t, positions in zip(traj.times, traj.positions)
                                           for i, (x, y) in enumerate(positions)))


def write_diagnostics(traj: Trajectory, path: Path):
    write_table(path, DIAGNOSTICS_COLUMNS, (
        [r.t, r.delay_term, r.cumulative_dissipation, r.load_value, r.ledger_slack, r.msd, r.activation,
         r.kkt_stationarity, r.kkt_feasibility, r.min_distance] for r in traj.diagnostics))


def write_multipliers(traj: Trajectory, path: Path):
    """One row per stored frame and pair with a nonzero multiplier."""
    def rows():
        for t, multipliers in zip(traj.times, traj.multipliers):
            for (i, j), lam in zip(traj.pairs, multipliers):
                if lam != 0.0:
                    yield [t, i, j, lam]
    write_table(path, MULTIPLIER_COLUMNS, rows())


def write_density(grid: DensityGrid, path: Path):
    columns = ('l', 'a_l') + tuple(f'R_{i}' for i in range(grid.n_particles))
    write_table(path, columns, ([l, a] + list(row) for l, (a, row) in enumerate(zip(grid.ages, grid.density))))


def write_run(traj: Trajectory, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    write_trajectory(traj, out / 'trajectory.csv')
    write_diagnostics(traj, out / 'diagnostics.csv')
    write_multipliers(traj, out / 'multipliers.csv')


def write_summary(summary: dict, path: Path):
    with open(path, 'w') as f:
        json.dump(summary, f, indent=2, sort_keys=True)


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _apply_overrides(spec: ExperimentSpec, args: argparse.Namespace) -> ExperimentSpec:
    sim = spec.sim
    if getattr(args, 'out', None) is not None:
        sim = sim.with_changes(output=replace(sim.output, dir=str(args.out)))
    if getattr(args, 'seed', None) is not None:
        sim = sim.with_changes(seed=_seed(args.seed))
    study_changes = {key: getattr(args, key) for key in ('eps_list', 'delta_a_list', 'replicas', 'workers')
                     if getattr(args, key, None) is not None}
    study = replace(spec.study, **study_changes)
    if spec.mode != args.command:
        logger.debug("Running '%s' although the config names mode '%s'", args.command, spec.mode)
    return ExperimentSpec(sim, args.command, study)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='contactlib', description='Delayed adhesion contact simulations of disks.')
    parser.add_argument('-v', '--verbose', action='store_true', help='Log solver traces (DEBUG level)')
    commands = parser.add_subparsers(dest='command', required=True)
    for mode in MODES:
        sub = commands.add_parser(mode)
        sub.add_argument('--config', type=Path, required=True, help='YAML experiment file')
        sub.add_argument('--out', type=Path, help='Output directory (overrides output.dir)')
        sub.add_argument('--progress', action='store_true', help='Show progress bars')
        if mode in ('simulate', 'msd-validate', 'sweep'):
            sub.add_argument('--seed', type=int, help='Master seed (overrides seed)')
        if mode in ('limit-compare', 'sweep'):
            sub.add_argument('--eps-list', type=_float_list, help='Comma-separated epsilon values')
        if mode in ('density-study', 'sweep'):
            sub.add_argument('--delta-a-list', type=_float_list, help='Comma-separated age steps')
        if mode == 'msd-validate':
            sub.add_argument('--replicas', type=int, help='Number of Monte Carlo replicas')
        if mode == 'sweep':
            sub.add_argument('--workers', type=int, help='Worker processes')
    plot_parser = commands.add_parser('plot')
    plot_parser.add_argument('--kind', required=True, choices=('msd', 'activation', 'trajectory', 'density'))
    plot_parser.add_argument('--in', dest='in_path', type=Path, required=True, help='Input CSV')
    plot_parser.add_argument('--out', type=Path, required=True, help='Output SVG')
    return parser


def _configure_logging(level: int):
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Command-line entry point. Exit codes: 0 success, 1 invalid input, 2 solver failure or infeasible configuration,
    3 I/O (including plot schema errors and a missing plotting dependency).
    """
    args = _build_parser().parse_args(argv)
    _configure_logging(logging.DEBUG if args.verbose else logging.INFO)
    try:
        if args.command == 'plot':
            from .plot import plot
            plot(args.in_path, args.kind, args.out)
            return 0
        spec = _apply_overrides(parse_config(args.config), args)
        return run_experiment(spec, progress=args.progress)
    except ValidationError as e:
        logger.error('Invalid input: %s', e)
        return 1
    except (SolverError, InfeasibleConfigurationError, SingularGradientError, QuadratureError, TruncationError) as e:
        logger.error('%s: %s', type(e).__name__, e)
        return 2
    except (OSError, SchemaError, RuntimeError) as e:
        logger.error('%s: %s', type(e).__name__, e)
        return 3
    except ContactLibError as e:
        logger.error('%s: %s', type(e).__name__, e)
        return 2
