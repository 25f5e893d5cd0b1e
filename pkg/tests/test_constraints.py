import math
import unittest
import numpy as np
from contactlib import (
    Configuration, ConstraintEval, DomainSpec, ActiveSet, ValidationError, InfeasibleConfigurationError,
    SingularGradientError, linearize, evaluate, active_set, penalty_value, multiplier_bound, signed_distance,
    contact_degree)


class TestConstraints(unittest.TestCase):
    """Tests for the linearized non-overlap constraints"""

    def test_linearize_at_reference(self):
        """Ensure phi(Z) = -D(Z) at the reference configuration"""
        # Arrange
        q = Configuration([[0.0, 0.0], [3.0, 0.0]], [1.0, 1.0])
        # Act
        ce = linearize(q)
        # Assert
        self.assertEqual([(0, 1)], ce.pair_list())
        np.testing.assert_allclose(evaluate(ce, q), [-1.0])

    def test_constraint_is_affine(self):
        """Ensure phi(t q1 + (1 - t) q2) = t phi(q1) + (1 - t) phi(q2)"""
        # Arrange
        rng = np.random.default_rng(4)
        ce = linearize(Configuration([[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]], [1.0, 1.0, 1.0]))
        q1, q2 = rng.normal(size=6), rng.normal(size=6)
        # Act
        mixed = evaluate(ce, 0.3 * q1 + 0.7 * q2)
        # Assert
        np.testing.assert_allclose(mixed, 0.3 * evaluate(ce, q1) + 0.7 * evaluate(ce, q2), atol=1e-12)

    def test_constraint_values_match_direct_formula(self):
        """Ensure phi_ij(q) = -D_ij(Z) - e_ij.((q_j - Z_j) - (q_i - Z_i)) for random displacements"""
        # Arrange
        rng = np.random.default_rng(5)
        ref = Configuration([[0.0, 0.0], [2.5, 0.5], [-1.0, 3.0]], [1.0, 0.8, 0.9])
        ce = linearize(ref)
        q = ref.flat + rng.normal(scale=0.2, size=6)
        # Act
        values = evaluate(ce, q)
        # Assert
        for c, (i, j) in enumerate(ce.pair_list()):
            separation = ref.positions[j] - ref.positions[i]
            e = separation / np.linalg.norm(separation)
            dq = (q.reshape(-1, 2) - ref.positions)
            expected = -signed_distance(ref, i, j) - e @ (dq[j] - dq[i])
            self.assertAlmostEqual(expected, values[c], places=12)

    def test_linearize_is_conservative(self):
        """Ensure phi(q) <= 0 implies D(q) >= 0, since the distance is convex in the separation"""
        rng = np.random.default_rng(6)
        ref = Configuration([[0.0, 0.0], [2.2, 0.0]], [1.0, 1.0])
        ce = linearize(ref)
        for _ in range(200):
            # Arrange
            q = ref.flat + rng.normal(scale=0.5, size=4)
            # Act
            inside = evaluate(ce, q)[0] <= 0
            # Assert
            if inside:
                self.assertGreaterEqual(signed_distance(Configuration.from_flat(q, ref.radii), 0, 1), -1e-12)

    def test_tangent_pair_is_active(self):
        """Ensure a tangent pair has phi = 0 at the reference and is reported active"""
        # Arrange
        q = Configuration([[0.0, 0.0], [2.0, 0.0], [10.0, 0.0]], [1.0, 1.0, 1.0])
        # Act
        ce = linearize(q)
        # Assert
        self.assertAlmostEqual(0.0, evaluate(ce, q)[0])
        self.assertEqual(ActiveSet([(0, 1)]), active_set(ce, q))
        self.assertIn((0, 1), active_set(ce, q))

    def test_active_set_empty_and_full(self):
        """Ensure an interior configuration has no active pairs and a tangent triangle has all three"""
        # Arrange
        apart = Configuration([[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]], [1.0, 1.0, 1.0])
        triangle = Configuration([[0.0, 0.0], [2.0, 0.0], [1.0, math.sqrt(3)]], [1.0, 1.0, 1.0])
        # Act
        empty = active_set(linearize(apart), apart)
        full = active_set(linearize(triangle), triangle)
        # Assert
        self.assertEqual(0, len(empty))
        self.assertEqual([(0, 1), (0, 2), (1, 2)], list(full))

    def test_small_overlap_is_clamped(self):
        """Ensure an overlap within the tolerance is clamped to tangency in tolerant mode"""
        # Arrange
        q = Configuration([[0.0, 0.0], [2.0 - 5e-10, 0.0]], [1.0, 1.0])
        # Act
        ce = linearize(q)
        # Assert
        np.testing.assert_array_equal([0.0], ce.distances)
        with self.assertRaises(InfeasibleConfigurationError):
            linearize(q, strict=True)

    def test_unclamped_overlap_keeps_distance(self):
        """Ensure clamp=False linearizes the true negative distance, so the constraint asks for separation"""
        # Arrange
        q = Configuration([[0.0, 0.0], [2.0 - 5e-10, 0.0]], [1.0, 1.0])
        # Act
        ce = linearize(q, clamp=False)
        # Assert
        np.testing.assert_allclose(ce.distances, [-5e-10], rtol=1e-3)
        self.assertGreater(evaluate(ce, q)[0], 0.0)

    def test_overlap_beyond_tolerance_raises(self):
        """Ensure a real overlap names the offending pair"""
        # Arrange
        q = Configuration([[0.0, 0.0], [5.0, 0.0], [1.999, 0.0]], [1.0, 1.0, 1.0])
        # Act
        with self.assertRaises(InfeasibleConfigurationError) as cm:
            linearize(q)
        # Assert
        self.assertEqual((0, 2), cm.exception.pair)

    def test_coincident_centers_raise(self):
        """Ensure coincident centers raise SingularGradientError once the overlap is tolerated"""
        q = Configuration([[1.0, 1.0], [1.0, 1.0]], [1.0, 1.0])
        with self.assertRaises(SingularGradientError):
            linearize(q, tol=10.0)

    def test_single_particle_has_no_constraints(self):
        """Ensure a single disk yields an empty constraint set"""
        # Act
        ce = linearize(Configuration([[0.0, 0.0]], [1.0]))
        # Assert
        self.assertEqual(0, ce.n_constraints)
        self.assertEqual(0, len(evaluate(ce, [1.0, 2.0])))
        np.testing.assert_array_equal([0.0, 0.0], ce.apply_transpose(np.zeros(0)))

    def test_apply_transpose_matches_jacobian(self):
        """Ensure the sparse transpose product equals the dense Jacobian transpose"""
        # Arrange
        rng = np.random.default_rng(9)
        ce = linearize(Configuration([[0.0, 0.0], [3.0, 0.0], [0.0, 4.0], [3.0, 4.0]], [1.0] * 4))
        lam = rng.uniform(size=ce.n_constraints)
        # Assert
        np.testing.assert_allclose(ce.jacobian().T @ lam, ce.apply_transpose(lam))

    def test_torus_linearization_uses_nearest_image(self):
        """Ensure pairs touching across the torus boundary are linearized along the wrapped separation"""
        # Arrange
        dom = DomainSpec.torus(10.0, 10.0)
        q = Configuration([[1.0, 5.0], [9.0, 5.0]], [1.0, 1.0])
        # Act
        ce = linearize(q, dom)
        # Assert
        self.assertAlmostEqual(0.0, ce.distances[0])
        np.testing.assert_allclose(ce.directions[0], [-1.0, 0.0])
        # moving disk 1 to the right pushes it into disk 0 through the boundary
        self.assertGreater(evaluate(ce, q.flat + np.array([0.0, 0.0, 0.1, 0.0]))[0], 0.0)

    def test_broad_phase_restricts_pairs(self):
        """Ensure the broad phase drops distant pairs from the constraint set"""
        # Arrange
        q = Configuration([[0.0, 0.0], [2.5, 0.0], [50.0, 0.0]], [1.0, 1.0, 1.0])
        # Act
        ce = linearize(q, broad_phase=True)
        # Assert
        self.assertEqual([(0, 1)], ce.pair_list())

    def test_penalty_value(self):
        """Ensure psi sums the squared positive parts and vanishes on K(Z)"""
        # Arrange
        ce = ConstraintEval(np.zeros(6), [[0, 1], [0, 2]], [-0.3, 1.0], [[1.0, 0.0], [0.0, 1.0]],
                            DomainSpec.plane())
        # Act
        value, gradient = penalty_value(ce, np.zeros(6))
        feasible_value, feasible_gradient = penalty_value(ce, np.array([0.0, 0.0, 1.0, 0.0, 0.0, 0.0]))
        # Assert
        self.assertAlmostEqual(0.045, value)
        np.testing.assert_allclose(gradient, [0.3, 0.0, -0.3, 0.0, 0.0, 0.0])
        self.assertEqual(0.0, feasible_value)
        np.testing.assert_array_equal(np.zeros(6), feasible_gradient)

    def test_penalty_gradient_matches_finite_differences(self):
        """Ensure the penalty gradient agrees with central differences away from the kinks"""
        # Arrange
        rng = np.random.default_rng(10)
        ce = linearize(Configuration([[0.0, 0.0], [2.2, 0.0], [0.0, 2.3]], [1.0, 1.0, 1.0]))
        q = ce.reference + np.array([0.3, 0.1, -0.4, 0.0, 0.1, -0.5]) + rng.normal(scale=1e-3, size=6)
        h = 1e-6
        # Act
        _, gradient = penalty_value(ce, q)
        numeric = np.array([(penalty_value(ce, q + h * e)[0] - penalty_value(ce, q - h * e)[0]) / (2 * h)
                            for e in np.eye(6)])
        # Assert
        np.testing.assert_allclose(gradient, numeric, atol=1e-7)

    def test_multiplier_bound(self):
        """Ensure the multiplier bound scales with |U| and gives b^N_p for the two-disk example"""
        # Act
        bound = multiplier_bound(1.0, 1, 4, 2)
        # Assert
        b = 2.0 / math.sin(math.pi / 4)
        self.assertAlmostEqual(b ** 2, bound)
        self.assertAlmostEqual(8.0, bound)
        self.assertAlmostEqual(3 * bound, multiplier_bound(3.0, 1, 4, 2))
        self.assertEqual(0.0, multiplier_bound(0.0, 1, 4, 2))
        self.assertGreaterEqual(b, 2.0)

    def test_multiplier_bound_validation(self):
        """Ensure n_v < 1 and N < 3 are rejected"""
        with self.assertRaises(ValidationError):
            multiplier_bound(1.0, 0, 4, 2)
        with self.assertRaises(ValidationError):
            multiplier_bound(1.0, 1, 2, 2)

    def test_contact_degree(self):
        """Ensure the contact degree counts only contacts with a positive multiplier"""
        # Arrange
        pairs = np.array([[0, 1], [0, 2], [1, 2], [2, 3]])
        # Act
        star = contact_degree(pairs, np.array([0.5, 0.2, 0.0, 1.0]))
        chain = contact_degree(pairs, np.array([0.5, 0.0, 0.0, 1.0]))
        # Assert
        self.assertEqual(2, star)
        self.assertEqual(1, chain)
        self.assertEqual(0, contact_degree(pairs, np.zeros(4)))
        self.assertEqual(0, contact_degree(np.zeros((0, 2), dtype=int), np.zeros(0)))
