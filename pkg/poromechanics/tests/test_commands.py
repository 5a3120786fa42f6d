import json
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from poromechanics.exceptions import BoundaryConditionError

QUICK = 'mesh_n = 1\ndt = 0.1\nt_ramp = 0.1\ntol = 1e-3\n'


class CommandTests(SimpleTestCase):

    def setUp(self):
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.tmp = Path(tmp.name)
        self.out = self.tmp / 'out'

    def write_config(self, text):
        path = self.tmp / 'run.cfg'
        path.write_text(text)
        return str(path)

    def call(self, name, config_text=QUICK, **options):
        stdout = StringIO()
        call_command(name, config=self.write_config(config_text), output_dir=str(self.out),
                     stdout=stdout, stderr=StringIO(), **options)
        return stdout.getvalue()

    def test_forward(self):
        output = self.call('forward', formulation='mixed_p')
        self.assertIn('Results written to', output)
        echo = json.loads((self.out / 'config.json').read_text())
        self.assertEqual(echo['problem'], 'forward')
        self.assertEqual(echo['formulation'], 'mixed_p')
        self.assertTrue((self.out / 'forward.csv').exists())

    def test_refconf(self):
        output = self.call('refconf')
        self.assertIn('Reference phiAvg', output)
        self.assertTrue((self.out / 'refconf.csv').exists())

    def test_roundtrip(self):
        output = self.call('roundtrip', tol=1e-4)
        self.assertIn('geometric mismatch', output)
        self.assertIn('recovered_avg_porosity', json.loads((self.out / 'summary.json').read_text()))

    def test_aa_sweep(self):
        output = self.call('aa_sweep', config_text=QUICK + 'problem = forward\n', aa_depth='0,1')
        self.assertIn('AA(1)', output)
        self.assertTrue((self.out / 'aa_sweep.csv').exists())

    def test_oracle(self):
        output = self.call('oracle', steps=3)
        self.assertIn('equilibrium', output)
        self.assertTrue((self.out / 'oracle.csv').exists())

    def test_config_error_exit_code(self):
        with self.assertRaises(CommandError) as cm:
            self.call('forward', config_text='dt = -1\n')
        self.assertEqual(cm.exception.returncode, 1)

    def test_missing_config_file(self):
        with self.assertRaises(CommandError) as cm:
            call_command('forward', config=str(self.tmp / 'missing.cfg'), stdout=StringIO(), stderr=StringIO())
        self.assertEqual(cm.exception.returncode, 1)

    def test_bad_depth_list(self):
        with self.assertRaises(CommandError) as cm:
            self.call('aa_sweep', aa_depth='0,one')
        self.assertEqual(cm.exception.returncode, 1)

    def test_bad_step_count(self):
        with self.assertRaises(CommandError) as cm:
            self.call('oracle', steps=0)
        self.assertEqual(cm.exception.returncode, 1)

    def test_solver_error_exit_code(self):
        with self.assertRaises(CommandError) as cm:
            self.call('forward', config_text='mesh_n = 1\nmax_steps = 5\n')
        self.assertEqual(cm.exception.returncode, 2)

    def test_boundary_error_exit_code(self):
        failure = BoundaryConditionError("Unknown boundary tag WMIN")
        with mock.patch('poromechanics.management.commands.forward.run_forward', side_effect=failure):
            with self.assertRaises(CommandError) as cm:
                self.call('forward')
        self.assertEqual(cm.exception.returncode, 1)
