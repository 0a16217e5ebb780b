from django.core.management.base import CommandError

from scheduling.management.base import Outcome, SimulationCommand
from scheduling.services.bounds import end_to_end_bound_check
from scheduling.services.experiments import compare_policies
from scheduling.services.reporting import dump_json


class Command(SimulationCommand):
    help = 'Run several policies on the same instances and report flows and ratios against SRPT'

    subcommand = 'compare'
    default_policies = ['srpt', 'ops-srpt', 'chunk']

    def execute_config(self, config):
        policies = list(dict.fromkeys(config.policies))
        if len(config.policies) < 2:
            raise CommandError("compare needs at least two policies, e.g. --policy srpt,ops-srpt")
        runs = compare_policies(self.sources(config), policies, config.jobs)

        report = {}
        violations = []
        for (label, policy), run in runs.items():
            entry = run.summary()
            del entry['flows'], entry['realized_instance']
            if policy == 'chunk':
                check = end_to_end_bound_check(run.trace, run.opt, run.decomposition)
                entry['end_to_end'] = check.to_dict()
                violations += [f"{label}/{policy}: {v}" for v in check.violations]
            report.setdefault(label, {})[policy] = entry

        totals = {
            f"{label}/{policy}": entry['total_flow']
            for label, entries in report.items()
            for policy, entry in entries.items()
        }
        return Outcome(
            outputs={'compare.json': dump_json({'policies': policies, 'instances': report})},
            summary={'total_flow': totals},
            violations=violations,
        )
