from poromechanics.management.commands._base import PoromechanicsCommand
from poromechanics.services.run_service import run_forward


class Command(PoromechanicsCommand):
    help = 'Solve the forward problem from the unloaded configuration to a stationary loaded state'
    problem = 'forward'

    def execute_run(self, config, options):
        return run_forward(config)

    def report(self, config, summary):
        self.stdout.write(f"phiAvg = {summary['avg_porosity']:.8f} after {summary['time_steps']} time steps")
        super().report(config, summary)
