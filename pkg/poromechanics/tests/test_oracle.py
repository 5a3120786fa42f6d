import numpy as np
from django.test import SimpleTestCase

from fem.exceptions import DivergenceError
from poromechanics.config import MaterialParams
from poromechanics.services.oracle import (
    HomogeneousState,
    _dense_newton,
    initial_state,
    oracle_equilibrium,
    oracle_step,
    oracle_trajectory,
)
from poromechanics.utils.constitutive import pore_pressure


class HomogeneousStateTests(SimpleTestCase):

    def test_vector_conversion(self):
        state = HomogeneousState(stretches=(1.1, 0.9), lam=-3.0, phi=0.2, time=0.5)
        self.assertEqual(HomogeneousState.from_vector(state.as_vector(), 0.5), state)
        self.assertAlmostEqual(state.jacobian, 0.99)
        self.assertAlmostEqual(state.avg_porosity('forward'), 0.2 / 0.99)
        self.assertEqual(state.avg_porosity('refconf'), 0.2)


class OracleTests(SimpleTestCase):

    def setUp(self):
        self.params = MaterialParams()

    def test_without_source_nothing_moves(self):
        params = self.params.without_sources()
        for problem in ('forward', 'refconf'):
            states = oracle_trajectory(params, 0.01, 0.1, 5, problem)
            self.assertEqual(len(states), 6)
            np.testing.assert_allclose(states[-1].as_vector(), states[0].as_vector(), atol=1e-14)

    def test_step_satisfies_constraint(self):
        state = oracle_step(initial_state(self.params, 2), 0.01, 1.0, self.params, 'forward')
        self.assertAlmostEqual(state.jacobian - state.phi - 0.9, 0.0, delta=1e-12)
        state = oracle_step(initial_state(self.params, 2), 0.01, 1.0, self.params, 'refconf')
        self.assertAlmostEqual(state.jacobian * (1.0 - state.phi) - 0.9, 0.0, delta=1e-12)

    def test_source_fills_and_reference_drains(self):
        forward = oracle_trajectory(self.params, 0.01, 0.1, 30, 'forward')
        porosity = [state.avg_porosity('forward') for state in forward]
        self.assertTrue(np.all(np.diff(porosity) > 0.0))
        self.assertGreater(forward[-1].jacobian, 1.0)

        reference = oracle_trajectory(self.params, 0.01, 0.1, 30, 'refconf')
        self.assertTrue(np.all(np.diff([state.phi for state in reference]) < 0.0))

    def test_isotropic_material_deforms_isotropically(self):
        for problem in ('forward', 'refconf'):
            state = oracle_trajectory(self.params, 0.01, 0.1, 20, problem)[-1]
            self.assertAlmostEqual(state.stretches[0], state.stretches[1], delta=1e-10)

    def test_equilibrium_pressure_matches_source(self):
        state = oracle_equilibrium(self.params, 'forward')
        p = pore_pressure(state.phi, 0.1, state.lam, self.params)
        self.assertAlmostEqual(float(p), 1e4, delta=1e-6)
        self.assertEqual(state.time, float('inf'))

    def test_round_trip(self):
        reference = oracle_equilibrium(self.params, 'refconf')
        self.assertLess(reference.phi, 0.1)
        loaded = oracle_equilibrium(self.params, 'forward', phi_init=reference.phi)
        self.assertAlmostEqual(loaded.avg_porosity('forward'), 0.1, delta=1e-8)
        np.testing.assert_allclose(loaded.stretches, 1.0 / np.array(reference.stretches), rtol=1e-8)

    def test_trajectory_approaches_equilibrium(self):
        equilibrium = oracle_equilibrium(self.params, 'forward')
        last = oracle_trajectory(self.params, 0.1, 0.1, 500, 'forward')[-1]
        self.assertAlmostEqual(last.avg_porosity('forward'), equilibrium.avg_porosity('forward'), delta=1e-6)

    def test_three_dimensional(self):
        state = oracle_step(initial_state(self.params, 3), 0.01, 1.0, self.params, 'forward')
        self.assertEqual(len(state.stretches), 3)
        self.assertAlmostEqual(state.stretches[0], state.stretches[2], delta=1e-10)

    def test_invalid_input(self):
        with self.assertRaises(ValueError):
            oracle_step(initial_state(self.params, 2), 0.01, 1.0, self.params, 'inverse')
        with self.assertRaises(ValueError):
            oracle_trajectory(self.params, 0.01, 0.1, 0, 'forward')

    def test_newton_without_root(self):
        with self.assertRaises(DivergenceError):
            _dense_newton(lambda z: z ** 2 + 1.0, np.array([0.7]))
