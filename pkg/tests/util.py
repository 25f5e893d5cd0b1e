"""
Scenario builders shared across multiple tests.
"""

import math
from typing import Tuple
import numpy as np
from contactlib import (
    Configuration, ConstraintEval, DensityGrid, EnergyContext, ExternalLoad, FrictionWeights, History, SimConfig,
    linearize, quadratic_load)
from contactlib.models import SolverConfig
from contactlib.reference import FrictionStep


def ring_positions(n: int = 10, radius: float = 4.0):
    """n points evenly spaced on a circle around the origin, so every particle starts at squared distance radius^2."""
    return [[radius * math.cos(2 * math.pi * k / n), radius * math.sin(2 * math.pi * k / n)] for k in range(n)]


def ring_config(n: int = 10, radius: float = 4.0, disk_radius: float = 0.5, **changes) -> SimConfig:
    """
    Ten disks of radius 0.5 on a circle of radius 4, pulled toward the origin by the quadratic load. The ring jams
    once adjacent disks touch (ring radius 0.5 / sin(pi / 10) ~ 1.618), leaving an MSD plateau of about 2.618.
    """
    params = dict(positions=ring_positions(n, radius), radii=[disk_radius] * n, epsilon=0.1, delta_a=0.1, T=2.0,
                  solver=SolverConfig(eta_policy='spectral'))
    params.update(changes)
    return SimConfig(**params)


def two_disk_config(**changes) -> SimConfig:
    """Two unit disks at (-3, 0) and (3, 0) that approach head-on and end tangent at (-1, 0) and (1, 0)."""
    params = dict(positions=[[-3.0, 0.0], [3.0, 0.0]], radii=[1.0, 1.0], epsilon=0.05, delta_a=0.1, T=10.0)
    params.update(changes)
    return SimConfig(**params)


def single_particle_config(**changes) -> SimConfig:
    params = dict(positions=[[0.25, 0.0]], radii=[1.0], epsilon=0.1, delta_a=0.1, T=2.0)
    params.update(changes)
    return SimConfig(**params)


def canonical_contact() -> Tuple[FrictionStep, ExternalLoad, ConstraintEval]:
    """
    Two unit disks at (-1.5, 0) and (1.5, 0) with unit friction weights, unit time step and the load |q|^2 / 2,
    constraints linearized at the current positions (one pair, gap 1).

    With the load linearized at the reference the optimum is q = (-1, 0, 1, 0) with multiplier 1; with the exact
    quadratic load it is the same q with multiplier 1/2.
    """
    history = History(np.array([[-1.5, 0.0], [1.5, 0.0]]), 1.0, 1)
    ctx = FrictionStep(FrictionWeights.constant(1.0, 2), history, 1.0)
    ce = linearize(Configuration(history.latest, [1.0, 1.0]))
    return ctx, quadratic_load(1.0), ce


def single_cell_grid(theta: float = 0.5, delta_a: float = 1.0) -> DensityGrid:
    """Density with R_0 = 0 and a single occupied cell R_1 = theta / delta_a, so the delay stiffness is theta."""
    return DensityGrid(delta_a, np.array([[0.0], [theta / delta_a]]))


def constant_history_context(z, epsilon: float = 0.1, theta: float = 0.5) -> EnergyContext:
    """EnergyContext for one particle whose whole history sits at z."""
    grid = single_cell_grid(theta)
    history = History(np.asarray(z, dtype=float).reshape(-1, 2), epsilon * grid.delta_a, grid.l_max)
    return EnergyContext(grid, history, epsilon)


def zero_load() -> ExternalLoad:
    return ExternalLoad(lambda q: 0.0, lambda q: np.zeros_like(q), modulus=0.0, strictly_convex=False, name='zero')


def random_feasible_positions(rng: np.random.Generator, n: int, radius: float, box: float,
                              min_gap: float = 0.05) -> np.ndarray:
    """Rejection-samples n disk centers in [-box, box]^2 with every pairwise gap at least min_gap."""
    while True:
        positions = rng.uniform(-box, box, size=(n, 2))
        gaps = [np.linalg.norm(positions[i] - positions[j]) - 2 * radius for i in range(n) for j in range(i + 1, n)]
        if not gaps or min(gaps) >= min_gap:
            return positions
