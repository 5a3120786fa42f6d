import itertools
from math import factorial

import numpy as np
from django.test import SimpleTestCase

from fem.exceptions import SolverError
from fem.utils.elements import reference_element, reference_nodes, tabulate
from fem.utils.quadrature import quadrature


def simplex_monomial(exponents):
    # Dirichlet integral of x^a y^b (z^c) over the unit simplex
    total = sum(exponents) + len(exponents)
    numerator = 1
    for e in exponents:
        numerator *= factorial(e)
    return numerator / factorial(total)


class QuadratureTests(SimpleTestCase):

    def test_reference_measure(self):
        self.assertAlmostEqual(quadrature(2, 6).weights.sum(), 0.5, places=14)
        self.assertAlmostEqual(quadrature(3, 6).weights.sum(), 1.0 / 6.0, places=14)

    def test_x4y2_on_triangle(self):
        rule = quadrature(2, 6)
        self.assertAlmostEqual(rule.integrate(lambda x, y: x ** 4 * y ** 2), 1.0 / 840.0, places=15)

    def test_triangle_exact_through_degree_six(self):
        rule = quadrature(2, 6)
        for a, b in itertools.product(range(7), repeat=2):
            if a + b > 6:
                continue
            value = rule.integrate(lambda x, y: x ** a * y ** b)
            self.assertAlmostEqual(value, simplex_monomial((a, b)), places=14, msg=f"x^{a} y^{b}")

    def test_tetrahedron_exact_through_degree_six(self):
        rule = quadrature(3, 6)
        for a, b, c in itertools.product(range(7), repeat=3):
            if a + b + c > 6:
                continue
            value = rule.integrate(lambda x, y, z: x ** a * y ** b * z ** c)
            self.assertAlmostEqual(value, simplex_monomial((a, b, c)), places=14, msg=f"x^{a} y^{b} z^{c}")

    def test_positive_weights_inside_cell(self):
        for dim in (2, 3):
            rule = quadrature(dim, 6)
            self.assertTrue(np.all(rule.weights > 0.0))
            self.assertTrue(np.all(rule.points > 0.0))
            self.assertTrue(np.all(rule.points.sum(axis=1) < 1.0))

    def test_lower_degrees(self):
        rule = quadrature(2, 2)
        self.assertAlmostEqual(rule.integrate(lambda x, y: x * y), 1.0 / 24.0, places=15)

    def test_unsupported(self):
        with self.assertRaises(SolverError):
            quadrature(1, 6)
        with self.assertRaises(SolverError):
            quadrature(2, -1)


class ReferenceElementTests(SimpleTestCase):

    def test_partition_of_unity(self):
        for dim, family in itertools.product((2, 3), ('P1', 'P2')):
            element = reference_element(family, dim, quadrature(dim, 6))
            np.testing.assert_allclose(element.values.sum(axis=1), 1.0, atol=1e-14)
            np.testing.assert_allclose(element.gradients.sum(axis=1), 0.0, atol=1e-13)

    def test_nodal_interpolation(self):
        for dim, family in itertools.product((2, 3), ('P1', 'P2')):
            values, _ = tabulate(family, dim, reference_nodes(family, dim))
            np.testing.assert_allclose(values, np.eye(values.shape[0]), atol=1e-14)

    def test_p2_reproduces_quadratics(self):
        rule = quadrature(2, 6)
        nodes = reference_nodes('P2', 2)
        element = reference_element('P2', 2, rule)

        def f(p):
            return 1.0 + 2.0 * p[:, 0] - p[:, 1] + 3.0 * p[:, 0] * p[:, 1] + 0.5 * p[:, 1] ** 2

        def grad_f(p):
            return np.column_stack([2.0 + 3.0 * p[:, 1], -1.0 + 3.0 * p[:, 0] + p[:, 1]])

        coefficients = f(nodes)
        np.testing.assert_allclose(element.values @ coefficients, f(rule.points), atol=1e-12)
        np.testing.assert_allclose(
            np.einsum('qnk,n->qk', element.gradients, coefficients), grad_f(rule.points), atol=1e-12
        )

    def test_sizes(self):
        element = reference_element('P2', 3, quadrature(3, 6), rank='vector')
        self.assertEqual(element.num_nodes, 10)
        self.assertEqual(element.space_dimension, 30)
        self.assertEqual(element.values.shape, (64, 10))
