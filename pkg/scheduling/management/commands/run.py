from django.core.management.base import CommandError

from scheduling.management.base import Outcome, SimulationCommand
from scheduling.services.experiments import run_policy
from scheduling.services.reporting import dump_json, trace_csv


class Command(SimulationCommand):
    help = 'Simulate one policy on one instance and write the per-step trace against SRPT'

    subcommand = 'run'

    def execute_config(self, config):
        if len(config.policies) != 1:
            raise CommandError("run takes exactly one --policy; use compare for several")
        sources = self.sources(config)
        if len(sources) != 1:
            raise CommandError("run takes exactly one instance")
        (label, source), = sources.items()
        policy = config.policies[0]

        result = run_policy(source() if callable(source) else source, policy)
        summary = {'instance': label, **result.summary()}
        return Outcome(
            outputs={'trace.csv': trace_csv(result.trace, result.opt), 'summary.json': dump_json(summary)},
            summary={key: summary[key] for key in ('instance', 'policy', 'total_flow', 'opt_total_flow')},
        )
