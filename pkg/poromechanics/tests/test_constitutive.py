import numpy as np
from django.test import SimpleTestCase
from scipy.spatial.transform import Rotation

from poromechanics.config import MaterialParams
from poromechanics.exceptions import ConstitutiveDomainError
from poromechanics.utils.constitutive import (
    Kinematics,
    cauchy,
    inverse_permeability_pullback,
    permeability_pullback,
    piola,
    pore_pressure,
    pore_pressure_dphi,
    psi_m,
    solid_piola,
    source_equilibrium_pressure,
    source_theta,
)


def random_gradient(rng, dim, amplitude=0.2):
    while True:
        F = np.eye(dim) + rng.uniform(-amplitude, amplitude, (dim, dim))
        if np.linalg.det(F) > 0.5:
            return F


def fd_energy_gradient(params, F, step=1e-6):
    dP = np.zeros_like(F)
    for i in range(F.shape[0]):
        for j in range(F.shape[1]):
            E = np.zeros_like(F)
            E[i, j] = step
            plus = psi_m(Kinematics.from_gradient(F + E, params), params)
            minus = psi_m(Kinematics.from_gradient(F - E, params), params)
            dP[i, j] = (plus - minus) / (2.0 * step)
    return dP


class SolidStressTests(SimpleTestCase):

    def setUp(self):
        self.params = MaterialParams()

    def test_unstressed_identity(self):
        for dim in (2, 3):
            kin = Kinematics.from_gradient(np.eye(dim), self.params)
            self.assertEqual(float(psi_m(kin, self.params)), 0.0)
            np.testing.assert_allclose(solid_piola(kin, self.params), np.zeros((dim, dim)), atol=1e-12)

    def test_piola_is_energy_gradient(self):
        rng = np.random.default_rng(11)
        for sample in range(20):
            dim = 2 if sample % 2 else 3
            F = random_gradient(rng, dim)
            P = solid_piola(Kinematics.from_gradient(F, self.params), self.params)
            reference = fd_energy_gradient(self.params, F)
            self.assertLess(np.linalg.norm(P - reference) / np.linalg.norm(reference), 1e-6, msg=f"sample {sample}")

    def test_piola_with_rotated_fibers(self):
        rng = np.random.default_rng(5)
        frame = Rotation.from_euler('xyz', [0.3, -0.5, 1.1]).as_matrix().T
        params = MaterialParams(b_ff=8.0, b_ss=2.0, b_nn=1.5, b_fs=4.0, b_fn=3.0, b_sn=1.0,
                                fiber_frame=tuple(tuple(row) for row in frame))
        F = random_gradient(rng, 3)
        P = solid_piola(Kinematics.from_gradient(F, params), params)
        reference = fd_energy_gradient(params, F)
        self.assertLess(np.linalg.norm(P - reference) / np.linalg.norm(reference), 1e-6)

    def test_uniaxial_fiber_stress(self):
        params = MaterialParams(b_ff=1.0, b_ss=0.0, b_nn=0.0, b_fs=0.0, b_fn=0.0, b_sn=0.0)
        F = np.diag([1.01, 1.0, 1.0])
        P = solid_piola(Kinematics.from_gradient(F, params), params)
        reference = fd_energy_gradient(params, F)
        np.testing.assert_allclose(P, reference, rtol=1e-6, atol=1e-6 * np.abs(reference).max())

    def test_multiplier_term(self):
        F = np.diag([1.1, 0.95])
        kin = Kinematics.from_gradient(F, self.params)
        difference = piola(kin, 3.0, self.params) - solid_piola(kin, self.params)
        np.testing.assert_allclose(difference, 3.0 * np.linalg.det(F) * np.linalg.inv(F).T, rtol=1e-12)

    def test_frame_indifference(self):
        rng = np.random.default_rng(2)
        F = random_gradient(rng, 3)
        Q = Rotation.from_euler('zyx', [0.7, 0.2, -0.4]).as_matrix()
        energy = psi_m(Kinematics.from_gradient(F, self.params), self.params)
        rotated = psi_m(Kinematics.from_gradient(Q @ F, self.params), self.params)
        self.assertAlmostEqual(float(energy), float(rotated), delta=1e-10 * abs(float(energy)))

    def test_cauchy_is_symmetric(self):
        rng = np.random.default_rng(4)
        for dim in (2, 3):
            sigma = cauchy(Kinematics.from_gradient(random_gradient(rng, dim), self.params), 12.0, self.params)
            np.testing.assert_allclose(sigma, sigma.T, atol=1e-10 * np.abs(sigma).max())

    def test_batched_evaluation(self):
        rng = np.random.default_rng(8)
        F = np.stack([random_gradient(rng, 2) for _ in range(4)])
        batched = solid_piola(Kinematics.from_gradient(F, self.params), self.params)
        for n in range(4):
            np.testing.assert_allclose(batched[n], solid_piola(Kinematics.from_gradient(F[n], self.params), self.params))

    def test_inverted_element(self):
        with self.assertRaises(ConstitutiveDomainError):
            Kinematics.from_gradient(np.diag([1.0, -1.0])).validate()

    def test_inverted_element_rejected_by_every_entry_point(self):
        evaluations = {
            'psi_m': lambda kin: psi_m(kin, self.params),
            'piola': lambda kin: piola(kin, 5.0, self.params),
            'solid_piola': lambda kin: solid_piola(kin, self.params),
            'cauchy': lambda kin: cauchy(kin, 5.0, self.params),
            'permeability_pullback': lambda kin: permeability_pullback(kin, self.params),
            'inverse_permeability_pullback': lambda kin: inverse_permeability_pullback(kin, self.params),
        }
        for F in (np.diag([1.0, -1.0]), np.diag([1.2, 0.9, -0.5]), np.zeros((2, 2))):
            kin = Kinematics.from_gradient(F, self.params)
            for name, evaluate in evaluations.items():
                with self.assertRaises(ConstitutiveDomainError, msg=f"{name} J = {np.linalg.det(F)}"):
                    evaluate(kin)

    def test_unchecked_inverted_element_is_not_finite(self):
        kin = Kinematics.from_gradient(np.diag([1.0, -1.0]), self.params)
        with np.errstate(invalid='ignore', divide='ignore'):
            self.assertFalse(np.isfinite(psi_m(kin, self.params, check=False)))
            self.assertFalse(np.all(np.isfinite(piola(kin, 0.0, self.params, check=False))))

    def test_complex_step_passes_the_domain_check(self):
        F = np.diag([1.1, 0.95]).astype(complex)
        F[0, 1] += 1e-30j
        P = piola(Kinematics.from_gradient(F, self.params), 3.0, self.params)
        self.assertTrue(np.all(np.isfinite(P)))

    def test_cauchy_is_pushed_forward_piola(self):
        rng = np.random.default_rng(21)
        for dim in (2, 3):
            F = random_gradient(rng, dim)
            kin = Kinematics.from_gradient(F, self.params)
            P = piola(kin, 40.0, self.params)
            expected = P @ F.T / np.linalg.det(F)
            np.testing.assert_allclose(cauchy(kin, 40.0, self.params), expected, rtol=1e-12, atol=1e-12 * np.abs(expected).max())


class PermeabilityTests(SimpleTestCase):

    def setUp(self):
        self.params = MaterialParams()

    def test_pullback_values(self):
        k = self.params.k
        cases = (
            (np.eye(2), k * np.eye(2)),
            (2.0 * np.eye(2), k * np.eye(2)),
            (np.diag([2.0, 1.0]), k * np.diag([0.5, 2.0])),
        )
        for F, expected in cases:
            K = permeability_pullback(Kinematics.from_gradient(F, self.params), self.params)
            np.testing.assert_allclose(K, expected, rtol=1e-14)

    def test_inverse_pullback(self):
        rng = np.random.default_rng(6)
        for dim in (2, 3):
            kin = Kinematics.from_gradient(random_gradient(rng, dim), self.params)
            K = permeability_pullback(kin, self.params)
            np.testing.assert_allclose(K, K.T, rtol=1e-12)
            self.assertTrue(np.all(np.linalg.eigvalsh(K) > 0.0))
            product = K @ inverse_permeability_pullback(kin, self.params)
            np.testing.assert_allclose(product, np.eye(dim), atol=1e-10)


class PorePressureTests(SimpleTestCase):

    def setUp(self):
        self.params = MaterialParams(p_ref=250.0)

    def test_reference_value(self):
        self.assertAlmostEqual(float(pore_pressure(0.1, 0.1, 0.0, self.params)), 250.0, places=10)
        self.assertAlmostEqual(float(pore_pressure(0.1, 0.1, 40.0, self.params)), 210.0, places=10)

    def test_derivative(self):
        phi = 0.17
        step = 1e-7
        reference = (pore_pressure(phi + step, 0.1, 0.0, self.params)
                     - pore_pressure(phi - step, 0.1, 0.0, self.params)) / (2.0 * step)
        self.assertAlmostEqual(float(pore_pressure_dphi(phi, self.params)), float(reference),
                               delta=1e-6 * abs(float(reference)))

    def test_monotone(self):
        phi = np.linspace(0.01, 0.9, 50)
        self.assertTrue(np.all(np.diff(pore_pressure(phi, 0.1, 0.0, self.params)) > 0.0))
        self.assertTrue(np.all(pore_pressure_dphi(phi, self.params) > 0.0))

    def test_non_positive_porosity(self):
        with self.assertRaises(ConstitutiveDomainError):
            pore_pressure(0.0, 0.1, 0.0, self.params)
        with self.assertRaises(ConstitutiveDomainError):
            pore_pressure(0.1, -0.2, 0.0, self.params)
        self.assertTrue(np.isnan(pore_pressure(-0.1, 0.1, 0.0, self.params, check=False)))


class SourceTests(SimpleTestCase):

    def test_single_source(self):
        params = MaterialParams(sources=((1e-4, 1e4),))
        self.assertEqual(source_equilibrium_pressure(params), 1e4)
        self.assertAlmostEqual(float(source_theta(0.0, 1.0, params)), 1.0)
        self.assertAlmostEqual(float(source_theta(0.0, 0.5, params)), 0.5)
        self.assertEqual(float(source_theta(1e4, 1.0, params)), 0.0)

    def test_sink_and_source(self):
        params = MaterialParams(sources=((1e-4, 1e4), (3e-4, 0.0)))
        self.assertAlmostEqual(source_equilibrium_pressure(params), 2500.0)
        self.assertAlmostEqual(float(source_theta(2500.0, 1.0, params)), 0.0, places=12)

    def test_without_sources(self):
        params = MaterialParams().without_sources()
        self.assertIsNone(source_equilibrium_pressure(params))
        self.assertEqual(float(source_theta(123.0, 1.0, params)), 0.0)
