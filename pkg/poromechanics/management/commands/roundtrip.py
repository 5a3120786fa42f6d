from poromechanics.management.commands._base import PoromechanicsCommand
from poromechanics.services.run_service import run_roundtrip


class Command(PoromechanicsCommand):
    help = 'Reference configuration followed by the forward problem on it; reports how well the loaded state is recovered'
    problem = 'roundtrip'

    def execute_run(self, config, options):
        return run_roundtrip(config)

    def report(self, config, summary):
        self.stdout.write(
            f"Recovered phiAvg = {summary['recovered_avg_porosity']:.8f} "
            f"(relative error {summary['porosity_relative_error']:.3%}), "
            f"geometric mismatch {summary['geometric_mismatch']:.3e} m"
        )
        super().report(config, summary)
