import unittest
import numpy as np
from contactlib import (
    Configuration, FrictionWeights, History, UzawaSettings, linearize, quadratic_load, uzawa_solve, penalty_solve,
    kkt_residual, multiplier_bound)
from contactlib.reference import FrictionStep
from tests.util import canonical_contact, random_feasible_positions


def random_instance(rng: np.random.Generator, n_particles: int):
    """Disks of radius 0.4 pulled halfway to the origin in one implicit step, which packs them into contact."""
    positions = random_feasible_positions(rng, n_particles, 0.4, 2.5)
    history = History(positions, 1.0, 1)
    ctx = FrictionStep(FrictionWeights.constant(1.0, n_particles), history, 1.0)
    ce = linearize(Configuration(positions, [0.4] * n_particles))
    return ctx, quadratic_load(1.0), ce


class TestSolversCommon(unittest.TestCase):
    """Tests that hold for both per-step solvers"""

    def test_cross_validation_on_random_instances(self):
        """Ensure Uzawa and the penalty solver agree within 1e-6 on 50 random instances with at most five disks"""
        rng = np.random.default_rng(42)
        settings = UzawaSettings(step_policy='spectral', curvature=True, max_iter=200_000)
        for _ in range(50):
            # Arrange
            ctx, load, ce = random_instance(rng, int(rng.integers(2, 6)))
            # Act
            uzawa = uzawa_solve(ctx, load, ce, settings)
            penalty = penalty_solve(ctx, load, ce)
            # Assert
            self.assertTrue(uzawa.converged)
            self.assertTrue(penalty.converged)
            self.assertLess(np.linalg.norm(uzawa.primal - penalty.primal), 1e-6)
            for result in (uzawa, penalty):
                kkt = kkt_residual(ctx, load, ce, result)
                self.assertLessEqual(kkt.stationarity, 1e-8)
                self.assertLessEqual(kkt.feasibility, 1e-8)
                self.assertLessEqual(kkt.complementarity, 1e-8)

    def test_multipliers_nonnegative_and_complementary(self):
        """Ensure both solvers return nonnegative multipliers that vanish on inactive constraints"""
        rng = np.random.default_rng(43)
        for _ in range(10):
            # Arrange
            ctx, load, ce = random_instance(rng, 3)
            # Act
            for result in (uzawa_solve(ctx, load, ce, UzawaSettings(step_policy='spectral', curvature=True,
                                                                     max_iter=200_000)),
                           penalty_solve(ctx, load, ce)):
                kkt = kkt_residual(ctx, load, ce, result)
                # Assert
                self.assertTrue(np.all(result.multipliers >= 0))
                self.assertLess(kkt.complementarity, 1e-6)
                self.assertLess(kkt.feasibility, 1e-6)

    def test_multipliers_within_bound(self):
        """Ensure the two-disk multiplier lies below |U| b^N_p with U the force on the solution"""
        # Arrange
        ctx, load, ce = canonical_contact()
        # Act
        result = uzawa_solve(ctx, load, ce)
        force = ctx.delay_gradient(result.primal) + load.gradient(ctx.previous)
        # Assert
        self.assertLessEqual(result.multipliers[0], multiplier_bound(float(np.linalg.norm(force)), 1, 3, 2))
