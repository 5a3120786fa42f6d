from poromechanics.management.commands._base import PoromechanicsCommand
from poromechanics.services.run_service import run_refconf


class Command(PoromechanicsCommand):
    help = 'Recover the unloaded reference configuration and porosity of the configured loaded mesh'
    problem = 'refconf'

    def execute_run(self, config, options):
        return run_refconf(config)

    def report(self, config, summary):
        self.stdout.write(f"Reference phiAvg = {summary['avg_porosity']:.8f} after {summary['time_steps']} time steps")
        super().report(config, summary)
