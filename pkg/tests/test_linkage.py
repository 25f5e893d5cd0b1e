import unittest
import numpy as np
from contactlib import (
    RateModel, ValidationError, TruncationError, build_density, boundary_value, closed_form_density,
    l1_consistency_error, fit_order, ClosedFormDensity)


class TestLinkage(unittest.TestCase):
    """Tests for the discrete and closed-form linkage densities"""

    def test_boundary_cell_constant_rates(self):
        """Ensure beta = zeta = 1 gives R_0 = 1 / (2 + 2 delta_a)"""
        for delta_a in (0.1, 0.05, 0.01):
            # Act
            grid = build_density(RateModel.constant(1.0, 1.0, 1), delta_a)
            # Assert
            self.assertAlmostEqual(1.0 / (2.0 + 2.0 * delta_a), grid.density[0, 0], places=9)

    def test_discrete_moments_constant_rates(self):
        """Ensure the discrete moments for beta = zeta = 1: mu_0 = mu_1 = 1/2 and mu_2 = 1 + delta_a / 2"""
        for delta_a in (0.1, 0.05):
            # Act
            grid = build_density(RateModel.constant(1.0, 1.0, 1), delta_a)
            # Assert
            self.assertAlmostEqual(0.5, grid.mu0[0], places=9)
            self.assertAlmostEqual(0.5, grid.mu1[0], places=8)
            self.assertAlmostEqual(1.0 + delta_a / 2, grid.mu2[0], places=6)
            self.assertAlmostEqual(0.5 - delta_a * grid.density[0, 0], grid.theta[0], places=9)

    def test_density_positive_decaying_and_bounded_mass(self):
        """Ensure random rate models give a positive, nonincreasing density with mu_0 <= 1"""
        rng = np.random.default_rng(1)
        for _ in range(200):
            # Arrange
            if rng.random() < 0.5:
                rates = RateModel.constant(rng.uniform(0.01, 5.0, 3), rng.uniform(0.2, 5.0, 3))
            else:
                ages = [0.0, 0.5, 1.0, 3.0]
                rates = RateModel.tabulated(rng.uniform(0.01, 5.0, 3), ages, rng.uniform(0.2, 5.0, (3, 4)))
            delta_a = rng.uniform(0.02, 0.5)
            # Act
            grid = build_density(rates, delta_a)
            # Assert
            self.assertTrue(np.all(grid.density > 0))
            self.assertTrue(np.all(grid.mu0 <= 1.0 + 1e-12))
            if rates.is_constant:
                self.assertTrue(np.all(np.diff(grid.density, axis=0) <= 0))

    def test_boundary_matches_saturating_birth_term(self):
        """Ensure the stored boundary value equals beta (1 - mu_0)"""
        # Arrange
        rates = RateModel.constant([0.5, 2.0], [1.0, 3.0])
        # Act
        grid = build_density(rates, 0.05)
        # Assert
        for i, beta in enumerate(rates.beta):
            self.assertAlmostEqual(boundary_value(beta, grid.mu0[i]), grid.boundary[i], places=10)

    def test_boundary_value_negative_when_overfull(self):
        """Ensure a total mass above one would make the birth term negative"""
        self.assertLess(boundary_value(1.0, 1.2), 0.0)
        self.assertEqual(0.0, boundary_value(2.0, 1.0))

    def test_zero_on_rate_gives_zero_density(self):
        """Ensure beta = 0 gives an identically zero density and zero moments"""
        # Act
        grid = build_density(RateModel.constant(0.0, 1.0, 2), 0.1)
        # Assert
        self.assertTrue(np.all(grid.density == 0))
        np.testing.assert_array_equal([0.0, 0.0], grid.mu0)
        np.testing.assert_array_equal([0.0, 0.0], l1_consistency_error(grid, RateModel.constant(0.0, 1.0, 2)))

    def test_tail_is_truncated(self):
        """Ensure the truncation leaves the last cell negligible compared to the mass"""
        # Act
        grid = build_density(RateModel.constant(1.0, 1.0, 1), 0.1)
        # Assert
        self.assertLess(grid.density[-1, 0], 1e-11)
        self.assertGreater(grid.l_max, 100)

    def test_untruncatable_tail_raises(self):
        """Ensure a vanishing off-rate that cannot be truncated raises TruncationError"""
        with self.assertRaises(TruncationError):
            build_density(RateModel.constant(1.0, 1e-9, 1), 1e-3)

    def test_build_density_validation(self):
        """Ensure invalid age steps and tail tolerances are rejected"""
        rates = RateModel.constant(1.0, 1.0, 1)
        with self.assertRaises(ValidationError):
            build_density(rates, 0.0)
        with self.assertRaises(ValidationError):
            build_density(rates, 0.1, tail_tol=0.0)

    def test_closed_form_constant_rates(self):
        """Ensure the closed form for beta = zeta = 1: rho(0) = 1/2 and moments 1/2, 1/2, 1"""
        # Arrange
        rates = RateModel.constant(1.0, 1.0, 1)
        density = ClosedFormDensity(rates)
        # Assert
        self.assertAlmostEqual(0.5, closed_form_density(rates, 0, 0.0))
        self.assertAlmostEqual(0.5 * np.exp(-2.0), closed_form_density(rates, 0, 2.0))
        self.assertAlmostEqual(0.5, density.moment(0, 0))
        self.assertAlmostEqual(0.5, density.moment(0, 1))
        self.assertAlmostEqual(1.0, density.moment(0, 2))

    def test_closed_form_rejects_negative_ages(self):
        """Ensure negative ages are rejected"""
        with self.assertRaises(ValidationError):
            closed_form_density(RateModel.constant(1.0, 1.0, 1), 0, -1.0)

    def test_closed_form_tabulated_matches_constant(self):
        """Ensure a flat off-rate table gives the same density as the constant rate"""
        # Arrange
        constant = ClosedFormDensity(RateModel.constant(1.5, 2.0, 1))
        tabulated = ClosedFormDensity(RateModel.tabulated(1.5, [0.0, 1.0], [2.0, 2.0], 1))
        ages = np.linspace(0.0, 5.0, 11)
        # Assert
        np.testing.assert_allclose(constant.density(0, ages), tabulated.density(0, ages), rtol=1e-7)
        self.assertAlmostEqual(constant.moment(0, 1), tabulated.moment(0, 1), places=7)

    def test_consistency_first_order(self):
        """Ensure the L1 error decreases with delta_a at first order"""
        # Arrange
        rates = RateModel.constant(1.0, 1.0, 1)
        steps = [0.1, 0.05, 0.025]
        # Act
        errors = [float(l1_consistency_error(build_density(rates, h), rates)[0]) for h in steps]
        order = fit_order(steps, errors)
        # Assert
        self.assertTrue(errors[0] > errors[1] > errors[2])
        self.assertGreaterEqual(order, 0.9)
        self.assertLessEqual(order, 1.3)

    def test_fit_order(self):
        """Ensure the fitted slope of an exact power law and the validation of its inputs"""
        self.assertAlmostEqual(2.0, fit_order([0.1, 0.05, 0.025], [0.01, 0.0025, 0.000625]))
        with self.assertRaises(ValidationError):
            fit_order([0.1], [0.01])
        with self.assertRaises(ValidationError):
            fit_order([0.1, 0.05], [0.0, 0.01])
