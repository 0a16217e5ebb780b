from django.core.management.base import CommandError

from scheduling.domain import Instance
from scheduling.management.base import Outcome, SimulationCommand


class Command(SimulationCommand):
    help = 'Generate a seeded instance and write it as JSON with its metadata block'

    subcommand = 'gen'

    def execute_config(self, config):
        if not config.gen:
            raise CommandError("gen needs --gen <family>")
        (label, source), = self.sources(config).items()
        if not isinstance(source, Instance):
            raise CommandError(f"{label} adapts to the policy; run it with 'lowerbound --construction det'")
        return Outcome(
            outputs={'instance.json': source.to_json()},
            summary={'family': label, 'jobs': len(source), 'total_volume': source.total_volume},
        )
