import math
import unittest
import numpy as np
from contactlib import (
    FrictionWeights, FrictionLimitSimulation, RateModel, ValidationError, friction_limit_run, ou_msd, ou_msd_exact,
    no_contact_decay, sup_norm_distance, run, quadratic_load)
from tests.util import two_disk_config, single_particle_config


class TestReference(unittest.TestCase):
    """Tests for the friction limit and the closed-form reference solutions"""

    def test_ou_msd_exact(self):
        """Ensure the unit OU mean squared displacement at t = 0, t = 1 and for large t"""
        self.assertAlmostEqual(16.0, ou_msd_exact(0.0, 16.0))
        self.assertAlmostEqual(2.59769, ou_msd_exact(1.0, 16.0), places=5)
        self.assertAlmostEqual(0.5, ou_msd_exact(50.0, 16.0))
        np.testing.assert_allclose(ou_msd_exact(np.array([0.0, 50.0]), 0.0), [0.0, 0.5])

    def test_ou_msd_general(self):
        """Ensure the stationary value dim sigma^2 / (2 rate) of a general OU process"""
        self.assertAlmostEqual(0.5, ou_msd(1e3, 4.0, rate=2.0, sigma=1.0, dim=2))
        self.assertAlmostEqual(4.0 * math.exp(-4.0), ou_msd(1.0, 4.0, rate=2.0, sigma=0.0))

    def test_ou_msd_validation(self):
        """Ensure negative times and nonpositive rates are rejected"""
        with self.assertRaises(ValidationError):
            ou_msd(-1.0, 1.0)
        with self.assertRaises(ValidationError):
            ou_msd(1.0, 1.0, rate=0.0)

    def test_no_contact_decay(self):
        """Ensure z0 e^{-nu t} with an MSD of |z0|^2 e^{-2 nu t}"""
        # Act
        z = no_contact_decay(0.5, [[4.0, 0.0]], 1.0)
        # Assert
        np.testing.assert_allclose(z, [[4.0 * math.exp(-0.5), 0.0]])
        self.assertAlmostEqual(16.0 * math.exp(-1.0), float(np.sum(z ** 2)))
        np.testing.assert_allclose(no_contact_decay(0.0, [1.0, 2.0], 3.0), [1.0, 2.0])
        with self.assertRaises(ValidationError):
            no_contact_decay(-1.0, [1.0, 2.0], 1.0)

    def test_friction_limit_is_implicit_euler(self):
        """Ensure the contact-free friction limit contracts by mu_1 / (mu_1 + nu dt) per step"""
        # Arrange
        cfg = single_particle_config(T=1.0)
        weights = FrictionWeights.constant(0.5, 1)
        # Act
        traj = friction_limit_run(cfg, weights)
        # Assert
        factor = 1.0 / (1.0 + cfg.delta_t / 0.5)
        for n, positions in zip(traj.steps, traj.positions):
            np.testing.assert_allclose(positions, [[0.25 * factor ** n, 0.0]], atol=1e-12)

    def test_friction_limit_approaches_exponential_decay(self):
        """Ensure the friction limit with mu_1 = 1/2 and nu = 1 follows z0 e^{-2 t} to first order in dt"""
        # Arrange
        cfg = single_particle_config(T=1.0)
        # Act
        traj = friction_limit_run(cfg, FrictionWeights.constant(0.5, 1))
        # Assert
        for t, positions in zip(traj.times, traj.positions):
            self.assertLess(abs(positions[0, 0] - 0.25 * math.exp(-2.0 * t)), 5 * cfg.delta_t * 0.25)

    def test_friction_limit_two_disks(self):
        """Ensure two disks in the friction limit end tangent and the implicit energy decreases every step"""
        # Arrange
        cfg = two_disk_config()
        weights = FrictionWeights.from_rates(cfg.rate_model())
        load = quadratic_load(1.0)
        # Act
        traj = friction_limit_run(cfg, weights)
        # Assert
        np.testing.assert_allclose(traj.final_positions, [[-1.0, 0.0], [1.0, 0.0]], atol=1e-6)
        frames = traj.positions_array
        for before, after in zip(frames[:-1], frames[1:]):
            friction = float(np.sum(weights.mu1[:, None] * (after - before) ** 2)) / (2 * cfg.delta_t)
            self.assertLessEqual(load.value(after.reshape(-1)) + friction, load.value(before.reshape(-1)) + 1e-8)
        self.assertGreaterEqual(min(record.min_distance for record in traj.diagnostics), -1e-8)

    def test_delayed_model_matches_friction_limit_at_rest(self):
        """Ensure the delayed two-disk run and its friction limit reach the same resting state"""
        # Arrange
        cfg = two_disk_config()
        # Act
        delayed = run(cfg)
        limit = friction_limit_run(cfg, FrictionWeights.from_rates(cfg.rate_model()))
        # Assert
        np.testing.assert_allclose(delayed.final_positions, limit.final_positions, atol=1e-6)

    def test_delayed_model_converges_to_friction_limit(self):
        """Ensure the distance to the friction limit shrinks as eps decreases"""
        # Arrange
        weights = FrictionWeights.from_rates(RateModel.constant(1.0, 1.0, 1))
        distances = []
        for epsilon in (0.2, 0.1, 0.05):
            cfg = single_particle_config(epsilon=epsilon, T=2.0)
            # Act
            distances.append(sup_norm_distance(run(cfg), friction_limit_run(cfg, weights)))
        # Assert
        self.assertTrue(distances[0] > distances[1] > distances[2])
        self.assertLess(distances[2], 0.5 * distances[0])
        self.assertLess(distances[2], 0.05)

    def test_two_disks_converge_to_friction_limit(self):
        """Ensure the two-disk distance to the friction limit shrinks as eps goes 0.2, 0.1, 0.05"""
        # Arrange
        distances = []
        for epsilon in (0.2, 0.1, 0.05):
            cfg = two_disk_config(epsilon=epsilon, T=3.0)
            weights = FrictionWeights.from_rates(cfg.rate_model())
            # Act
            distances.append(sup_norm_distance(run(cfg), friction_limit_run(cfg, weights)))
        # Assert
        self.assertTrue(distances[0] > distances[1] > distances[2])

    def test_sup_norm_distance_of_identical_runs(self):
        """Ensure a trajectory is at distance zero from itself"""
        traj = run(single_particle_config(T=0.2))
        self.assertEqual(0.0, sup_norm_distance(traj, traj))

    def test_weights_must_match_particles(self):
        """Ensure one friction weight per particle is required"""
        with self.assertRaises(ValidationError):
            FrictionLimitSimulation(two_disk_config(), FrictionWeights.constant(0.5, 3))
