from django.core.management.base import CommandError

from scheduling.management.base import Outcome, SimulationCommand, parse_params
from scheduling.services.experiments import LOWERBOUND_CONSTRUCTIONS, lowerbound_report
from scheduling.services.reporting import dump_json


class Command(SimulationCommand):
    help = 'Run an adversarial lower-bound construction against non-clairvoyant policies'

    subcommand = 'lowerbound'
    uses_source = False
    default_policies = []

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--construction', required=True, choices=LOWERBOUND_CONSTRUCTIONS)
        parser.add_argument('--seeds', type=int, default=50,
                            help='Seeds --seed .. --seed+N-1 for the randomized construction')

    def extra_options(self, options):
        return {
            'construction': options['construction'],
            'params': parse_params(options.get('params')),
            'seeds': options.get('seeds', 50),
        }

    def execute_config(self, config):
        construction = config.options['construction']
        seeds = config.options.get('seeds', 50)
        if seeds < 1:
            raise CommandError("--seeds must be at least 1")
        report = lowerbound_report(
            construction,
            config.policies or None,
            config.options.get('params'),
            range(config.seed, config.seed + seeds),
            config.jobs,
        )
        report = {'construction': construction, **report}
        return Outcome(
            outputs={'lowerbound.json': dump_json(report)},
            summary={'construction': construction},
        )
