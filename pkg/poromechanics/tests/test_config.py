import json
import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from poromechanics.config import MaterialParams, TimeStepperConfig, parse_config
from poromechanics.exceptions import ConfigurationError
from poromechanics.serializers.config_serializers import RunConfigSerializer


class ConfigFileMixin:

    def setUp(self):
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.tmp = Path(tmp.name)

    def write_config(self, text):
        path = self.tmp / 'run.cfg'
        path.write_text(text)
        return path


class ParseConfigTests(ConfigFileMixin, SimpleTestCase):

    def test_empty_file_gives_defaults(self):
        config = parse_config(self.write_config(''), overrides={'output_dir': str(self.tmp)})
        self.assertEqual(config.problem, 'roundtrip')
        self.assertEqual(config.formulation, 'primal')
        self.assertEqual(config.aa_depth, (0,))
        self.assertEqual(config.mesh.n, 16)
        self.assertEqual(config.stepper.dt, 0.01)
        self.assertEqual(config.stepper.t_ramp, 0.1)
        self.assertEqual(config.stepper.activation_step, 10)
        self.assertEqual(config.material.sources, ((1e-4, 1e4),))

    def test_values_from_file(self):
        path = self.write_config(
            'problem = refconf\n'
            'formulation = mixed_p\n'
            'aa_depth = [0,1,2,5]\n'
            'dt = 0.02\n'
            'sources = [[1e-4, 2e4], [5e-5, 0]]\n'
        )
        config = parse_config(path, overrides={'output_dir': str(self.tmp)})
        self.assertEqual(config.problem, 'refconf')
        self.assertEqual(config.formulation, 'mixed_p')
        self.assertEqual(config.aa_depth, (0, 1, 2, 5))
        self.assertEqual(config.stepper.dt, 0.02)
        self.assertEqual(config.material.sources, ((1e-4, 2e4), (5e-5, 0.0)))

    def test_overrides_take_precedence(self):
        path = self.write_config('formulation = mixed_p\nmesh_n = 4\n')
        config = parse_config(path, overrides={'formulation': 'mixed_u', 'output_dir': str(self.tmp), 'tol': None})
        self.assertEqual(config.formulation, 'mixed_u')
        self.assertEqual(config.mesh.n, 4)
        self.assertEqual(config.stepper.stationary_tol, 1e-6)

    def test_echo_written(self):
        parse_config(None, overrides={'output_dir': str(self.tmp), 'mesh_n': 3})
        echo = json.loads((self.tmp / 'config.json').read_text())
        self.assertEqual(echo['mesh']['n'], 3)
        self.assertEqual(echo['activation_step'], 10)

    def test_unknown_key(self):
        with self.assertRaises(ConfigurationError) as cm:
            parse_config(self.write_config('bogus = 1\n'), echo=False)
        self.assertIn('bogus', cm.exception.errors)

    def test_negative_time_step(self):
        with self.assertRaises(ConfigurationError) as cm:
            parse_config(self.write_config('dt = -1\n'), echo=False)
        self.assertIn('dt', cm.exception.errors)

    def test_missing_file(self):
        with self.assertRaises(ConfigurationError):
            parse_config(self.tmp / 'missing.cfg', echo=False)

    def test_phi_bar_range(self):
        with self.assertRaises(ConfigurationError) as cm:
            parse_config(self.write_config('phi_bar = 1.5\n'), echo=False)
        self.assertIn('phi_bar', cm.exception.errors)


class RunConfigSerializerTests(SimpleTestCase):

    def test_single_depth_becomes_list(self):
        serializer = RunConfigSerializer(data={'aa_depth': '3'})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data['aa_depth'], [3])

    def test_negative_depth(self):
        serializer = RunConfigSerializer(data={'aa_depth': [0, -1]})
        self.assertFalse(serializer.is_valid())
        self.assertIn('aa_depth', serializer.errors)

    def test_malformed_sources(self):
        serializer = RunConfigSerializer(data={'sources': '[1e-4, 1e4]'})
        self.assertFalse(serializer.is_valid())
        self.assertIn('sources', serializer.errors)

    def test_fiber_frame_rejected_in_2d(self):
        serializer = RunConfigSerializer(data={'fiber_frame': [[1, 0, 0], [0, 1, 0], [0, 0, 1]]})
        self.assertFalse(serializer.is_valid())
        self.assertIn('fiber_frame', serializer.errors)

    def test_dim_from_text(self):
        serializer = RunConfigSerializer(data={'dim': '3'})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data['dim'], 3)


class DataclassValidationTests(SimpleTestCase):

    def test_material_rejects_non_positive_stiffness(self):
        with self.assertRaises(ConfigurationError) as cm:
            MaterialParams(C=0.0)
        self.assertIn('C', cm.exception.errors)

    def test_material_rejects_skew_frame(self):
        with self.assertRaises(ConfigurationError):
            MaterialParams(fiber_frame=((1.0, 0.0, 0.0), (1.0, 1.0, 0.0), (0.0, 0.0, 1.0)))

    def test_activation_step(self):
        self.assertEqual(TimeStepperConfig(dt=0.01, t_ramp=0.1).activation_step, 10)
        self.assertEqual(TimeStepperConfig(dt=0.03, t_ramp=0.1).activation_step, 4)
        self.assertEqual(TimeStepperConfig(dt=0.01, t_ramp=0.0).activation_step, 1)

    def test_tolerance_range(self):
        with self.assertRaises(ConfigurationError):
            TimeStepperConfig(stationary_tol=1.0)
