from django.core.management.base import CommandError

from poromechanics.management.commands._base import CONFIG_EXIT, PoromechanicsCommand
from poromechanics.services.run_service import DEFAULT_ORACLE_STEPS, run_oracle


class Command(PoromechanicsCommand):
    help = 'Homogeneous reference trajectory of the configured problem, without the finite element solver'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--steps', type=int, default=DEFAULT_ORACLE_STEPS, help='Number of time steps')

    def execute_run(self, config, options):
        if options['steps'] < 1:
            raise CommandError(f"--steps must be at least 1, got {options['steps']}", returncode=CONFIG_EXIT)
        return run_oracle(config, n_steps=options['steps'])

    def report(self, config, summary):
        self.stdout.write(
            f"{summary['problem']}: phiAvg = {summary['final']['phiAvg']:.8f} after {summary['steps']} steps, "
            f"equilibrium {summary['equilibrium']['phiAvg']:.8f}"
        )
        super().report(config, summary)
