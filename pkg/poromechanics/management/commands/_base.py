import logging

from django.core.management.base import BaseCommand, CommandError

from fem.exceptions import SolverError
from poromechanics.config import FORMULATIONS, RAMP_MODES, RunConfig, parse_config
from poromechanics.exceptions import BoundaryConditionError, ConfigurationError, ConstitutiveDomainError

logger = logging.getLogger(__name__)

CONFIG_EXIT = 1
SOLVER_EXIT = 2


def parse_depths(text):
    """'0,1,5' -> [0, 1, 5]"""
    try:
        depths = [int(part) for part in str(text).split(',') if part.strip()]
    except ValueError:
        raise CommandError(f"--aa-depth expects comma-separated integers, got {text!r}", returncode=CONFIG_EXIT)
    if not depths:
        raise CommandError("--aa-depth is empty", returncode=CONFIG_EXIT)
    return depths


class PoromechanicsCommand(BaseCommand):
    """
    Shared options and error handling of the solver commands.

    Subclasses set ``problem`` (forced into the configuration, or None to
    keep the file's value) and implement ``execute_run``.
    """
    problem = None

    def add_arguments(self, parser):
        parser.add_argument('--config', help='Flat key = value configuration file')
        parser.add_argument('--out', dest='output_dir', help='Output directory')
        parser.add_argument('--formulation', choices=FORMULATIONS)
        parser.add_argument('--aa-depth', dest='aa_depth', help='Anderson depth, or comma-separated depths')
        parser.add_argument('--tol', type=float, help='Relative stationarity tolerance')
        parser.add_argument('--mesh-n', dest='mesh_n', type=int, help='Cells per side of the unit square/cube')
        parser.add_argument('--dim', type=int, choices=[2, 3])
        parser.add_argument('--ramp-mode', dest='ramp_mode', choices=RAMP_MODES)

    def overrides(self, options):
        values = {key: options.get(key) for key in
                  ('output_dir', 'formulation', 'tol', 'mesh_n', 'dim', 'ramp_mode')}
        if options.get('aa_depth') is not None:
            values['aa_depth'] = parse_depths(options['aa_depth'])
        if self.problem is not None:
            values['problem'] = self.problem
        return values

    def load_config(self, options) -> RunConfig:
        try:
            return parse_config(options.get('config'), overrides=self.overrides(options))
        except ConfigurationError as exc:
            for key, message in exc.errors.items():
                self.stderr.write(f"  {key}: {message}")
            raise CommandError(str(exc), returncode=CONFIG_EXIT) from exc

    def handle(self, *args, **options):
        config = self.load_config(options)
        try:
            summary = self.execute_run(config, options)
        except BoundaryConditionError as exc:
            logger.error(f"Invalid boundary conditions: {exc}")
            raise CommandError(str(exc), returncode=CONFIG_EXIT) from exc
        except (SolverError, ConstitutiveDomainError) as exc:
            logger.error(f"{self.__module__.rsplit('.', 1)[-1]} failed: {exc}")
            raise CommandError(str(exc), returncode=SOLVER_EXIT) from exc
        self.report(config, summary)

    def execute_run(self, config: RunConfig, options):
        raise NotImplementedError

    def report(self, config: RunConfig, summary):
        self.stdout.write(self.style.SUCCESS(f"Results written to {config.output_dir}"))
