from django.core.management.base import CommandError

from scheduling.domain import Instance
from scheduling.management.base import Outcome, SimulationCommand
from scheduling.services.experiments import certify_run
from scheduling.services.reporting import dump_json


class Command(SimulationCommand):
    help = 'Certify the chunk policy against SRPT with the dual-fitting certificate at one or every tau'

    subcommand = 'certify'
    default_policies = ['chunk']

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--tau', default='auto', help="Time to certify: an integer, 'auto' (earliest peak) or 'all'")
        parser.add_argument('--samples', type=int, default=None,
                            help='Random subsets for the primal check (falls back to OPFLOW_PRIMAL_SAMPLES)')
        parser.add_argument('--busy-period', action='store_true',
                            help='Confine boundary times and S sets to the busy period containing tau')

    def extra_options(self, options):
        return {'samples': options.get('samples'), 'busy_period': options.get('busy_period', False)}

    def execute_config(self, config):
        if config.policies != ['chunk']:
            raise CommandError("certify only applies to the chunk policy")
        (label, source), = self.sources(config).items()
        if not isinstance(source, Instance):
            raise CommandError(f"{label} is adaptive; certify a realized instance")

        report, violations = certify_run(source, config.tau or 'auto', config.seed,
                                         config.options.get('samples'),
                                         busy_period=config.options.get('busy_period', False))
        report = {'instance': label, **report}
        summary = {'instance': label, 'tau': config.tau or 'auto', 'violations': len(violations)}
        return Outcome(
            outputs={'certificate.json': dump_json(report)},
            summary=summary,
            violations=violations,
        )
