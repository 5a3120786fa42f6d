import numpy as np
from django.test import SimpleTestCase

from poromechanics.utils.anderson import AndersonState, anderson_update


def contraction(n, factor, seed):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    A = Q @ np.diag(np.linspace(0.0, factor, n)) @ Q.T
    b = rng.standard_normal(n)
    return A, b


def iterate(A, b, depth, tol=1e-12, max_iter=2000):
    aa = AndersonState(depth)
    x = np.zeros(b.size)
    for k in range(1, max_iter + 1):
        g = A @ x + b
        if np.linalg.norm(g - x) < tol:
            return x, k
        x = anderson_update(aa, x, g)
    raise AssertionError(f"No convergence with depth {depth}")


class AndersonUpdateTests(SimpleTestCase):

    def test_secant_on_affine_scalar(self):
        aa = AndersonState(1)
        x1 = anderson_update(aa, np.array([0.0]), np.array([1.0]))
        self.assertEqual(x1[0], 1.0)
        x2 = anderson_update(aa, x1, 0.5 * x1 + 1.0)
        self.assertAlmostEqual(x2[0], 2.0, delta=1e-12)

    def test_depth_zero_is_picard(self):
        aa = AndersonState(0)
        rng = np.random.default_rng(1)
        for _ in range(4):
            x, g = rng.standard_normal(3), rng.standard_normal(3)
            np.testing.assert_array_equal(anderson_update(aa, x, g), g)
            np.testing.assert_array_equal(aa.weights, [1.0])
        self.assertEqual(len(aa), 1)

    def test_affine_map_converges_in_n_plus_one(self):
        A, b = contraction(5, 0.9, seed=7)
        exact = np.linalg.solve(np.eye(5) - A, b)
        x, evaluations = iterate(A, b, depth=5)
        self.assertLessEqual(evaluations - 1, 6)
        np.testing.assert_allclose(x, exact, atol=1e-10)

    def test_acceleration_beats_picard(self):
        A, b = contraction(20, 0.95, seed=3)
        _, plain = iterate(A, b, depth=0, tol=1e-10)
        _, accelerated = iterate(A, b, depth=3, tol=1e-10)
        self.assertLess(accelerated, plain / 2)

    def test_weights_sum_to_one(self):
        rng = np.random.default_rng(12)
        aa = AndersonState(3)
        xs, gs = [], []
        for _ in range(6):
            x, g = rng.standard_normal(8), rng.standard_normal(8)
            xs.append(x)
            gs.append(g)
            update = anderson_update(aa, x, g)
            self.assertAlmostEqual(aa.weights.sum(), 1.0, delta=1e-12)
            combination = np.column_stack(gs[-len(aa):]) @ aa.weights
            np.testing.assert_allclose(update, combination, atol=1e-10)
        self.assertEqual(len(aa), 4)

    def test_translation_equivariance(self):
        rng = np.random.default_rng(21)
        shift = rng.standard_normal(4)
        plain, moved = AndersonState(2), AndersonState(2)
        for _ in range(4):
            x, g = rng.standard_normal(4), rng.standard_normal(4)
            a = anderson_update(plain, x, g)
            b = anderson_update(moved, x + shift, g + shift)
            np.testing.assert_allclose(b, a + shift, atol=1e-10)

    def test_rank_deficient_history(self):
        aa = AndersonState(2)
        x, g = np.array([1.0, 2.0]), np.array([1.5, 1.0])
        anderson_update(aa, x, g)
        update = anderson_update(aa, x, g)
        np.testing.assert_array_equal(update, g)
        self.assertEqual(aa.dropped_columns, 1)
        np.testing.assert_array_equal(aa.weights, [0.0, 1.0])

    def test_shape_mismatch(self):
        with self.assertRaises(ValueError):
            anderson_update(AndersonState(1), np.zeros(3), np.zeros(4))

    def test_negative_depth(self):
        with self.assertRaises(ValueError):
            AndersonState(-1)

    def test_reset(self):
        aa = AndersonState(2)
        anderson_update(aa, np.zeros(2), np.ones(2))
        aa.reset()
        self.assertEqual(len(aa), 0)
        self.assertIsNone(aa.weights)
