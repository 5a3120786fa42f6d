from poromechanics.management.commands._base import PoromechanicsCommand
from poromechanics.services.run_service import run_aa_sweep


class Command(PoromechanicsCommand):
    help = 'Solve once per Anderson depth (--aa-depth 0,1,5,...) and tabulate the iteration counts'

    def execute_run(self, config, options):
        return run_aa_sweep(config)

    def report(self, config, summary):
        for row in summary:
            reduction = '' if row['reduction'] is None else f", reduction {row['reduction']:.1%}"
            self.stdout.write(f"AA({row['depth']}): {row['iterations']} iterations{reduction}")
        super().report(config, summary)
