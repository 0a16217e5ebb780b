"""
Shared plumbing for the simulation management commands.

Every subcommand turns its flags into a RunConfig, executes it into a
``{file name: text}`` mapping, writes that mapping (plus run_config.json)
to --out or prints it, and stores a RunRecord. Exit codes: 0 success,
2 invariant violation, 1 usage or IO error.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path

from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError
from django.db import DatabaseError

from scheduling.domain import Instance
from scheduling.exceptions import InvariantViolation, SchedulingError
from scheduling.models import RunRecord
from scheduling.services.generators import GenSpec, GeneratorService
from scheduling.services.reporting import RunConfig, digest_outputs, write_outputs

logger = logging.getLogger(__name__)

RUN_CONFIG_FILE = 'run_config.json'


def parse_params(text):
    """'n=20,m=3' -> {'n': 20, 'm': 3}; values that are not integers stay strings."""
    params = {}
    if not text:
        return params
    for item in text.split(','):
        item = item.strip()
        if not item:
            continue
        key, sep, value = item.partition('=')
        if not sep or not key.strip():
            raise CommandError(f"Bad --params entry {item!r}; expected key=value")
        value = value.strip()
        try:
            params[key.strip()] = int(value)
        except ValueError:
            params[key.strip()] = value
    return params


def parse_tau(text):
    if text is None or text in ('auto', 'all'):
        return text
    try:
        tau = int(text)
    except ValueError:
        raise CommandError(f"--tau must be an integer, 'auto' or 'all', got {text!r}")
    if tau < 0:
        raise CommandError("--tau must be nonnegative")
    return str(tau)


def load_instance(path):
    try:
        return Instance.from_json(Path(path).read_text())
    except OSError as exc:
        raise CommandError(f"Cannot read instance {path}: {exc}")


@dataclass
class Outcome:
    """What a subcommand produced: files, a short summary and any broken claims"""
    outputs: dict
    summary: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def digest(self):
        return digest_outputs(self.outputs)


class SimulationCommand(BaseCommand):
    subcommand = None
    uses_source = True
    default_policies = ['srpt']

    def add_arguments(self, parser):
        if self.uses_source:
            parser.add_argument('--instance', action='append', default=[],
                                help='Instance JSON file (repeatable)')
            parser.add_argument('--gen', help='Generator family instead of --instance')
        parser.add_argument('--params', default='', help='Parameters as k=v,... for --gen or the construction')
        parser.add_argument('--policy', default=None, help='Policy name or comma-separated names')
        parser.add_argument('--seed', type=int, default=None, help='Seed (falls back to OPFLOW_SEED)')
        parser.add_argument('--out', default=None, help='Output directory; stdout when omitted')
        parser.add_argument('--jobs', type=int, default=None, help='Worker threads (falls back to OPFLOW_JOBS)')

    def build_config(self, options):
        policies = [name.strip() for name in (options.get('policy') or '').split(',') if name.strip()]
        gen = None
        if options.get('gen'):
            gen = {'family': options['gen'], 'params': parse_params(options.get('params'))}
        seed = options['seed'] if options.get('seed') is not None else settings.OPFLOW_SEED
        jobs = options.get('jobs') or settings.OPFLOW_JOBS
        if jobs < 1:
            raise CommandError("--jobs must be at least 1")
        return RunConfig(
            subcommand=self.subcommand,
            instance_paths=list(options.get('instance') or []),
            gen=gen,
            policies=policies or list(self.default_policies),
            tau=parse_tau(options.get('tau')),
            out=options.get('out'),
            seed=seed,
            jobs=jobs,
            options=self.extra_options(options),
        )

    def extra_options(self, options):
        return {}

    def execute_config(self, config):
        """Return an Outcome for ``config``. Subclasses implement this."""
        raise NotImplementedError

    def sources(self, config):
        """
        Label -> Instance or zero-argument adversary factory.

        Raises:
            CommandError: if neither or both of --instance and --gen are given
        """
        if bool(config.instance_paths) == bool(config.gen):
            raise CommandError("Give either --instance or --gen")
        if config.gen:
            spec = GenSpec(config.gen['family'], config.gen.get('params', {}), config.seed)
            built = GeneratorService.build(spec)
            if isinstance(built, Instance):
                return {spec.family: built}
            return {spec.family: lambda: GeneratorService.build(spec)}
        return {Path(path).stem: load_instance(path) for path in config.instance_paths}

    def handle(self, *args, **options):
        config = self.build_config(options)
        outcome = self.run_config(config)
        if config.out:
            written = write_outputs(config.out, {**outcome.outputs, RUN_CONFIG_FILE: config.to_json()})
            for path in written:
                self.stdout.write(f'  wrote {path}')
        else:
            for name in sorted(outcome.outputs):
                if name.endswith('.json'):
                    self.stdout.write(outcome.outputs[name], ending='')

        if outcome.violations:
            for violation in outcome.violations[:20]:
                self.stderr.write(self.style.ERROR(f'  {violation}'))
            raise CommandError(
                f"{len(outcome.violations)} invariant violations, first: {outcome.violations[0]}",
                returncode=2,
            )
        self.stdout.write(self.style.SUCCESS(f'{self.subcommand} finished (digest {outcome.digest[:12]})'))

    def run_config(self, config):
        """
        Execute ``config`` and store a RunRecord. Exceptions become
        CommandError with the documented exit codes; violations found by
        the checks are returned on the Outcome.
        """
        try:
            outcome = self.execute_config(config)
        except InvariantViolation as exc:
            self.record(config, 'VIOLATION', {'invariant': exc.invariant, 'error': str(exc)})
            raise CommandError(f"Invariant violated: {exc}", returncode=2)
        except ValidationError as exc:
            self.record(config, 'ERROR', {'error': '; '.join(exc.messages)})
            raise CommandError(f"Invalid instance: {'; '.join(exc.messages)}")
        except (SchedulingError, ValueError, OSError) as exc:
            self.record(config, 'ERROR', {'error': str(exc)})
            raise CommandError(str(exc))

        self.record(config, 'VIOLATION' if outcome.violations else 'OK', outcome.summary, outcome.digest)
        return outcome

    def record(self, config, status, summary, digest=''):
        try:
            return RunRecord.objects.create(
                subcommand=config.subcommand,
                config=config.to_dict(),
                summary=summary,
                output_digest=digest,
                status=status,
            )
        except DatabaseError as exc:
            logger.warning("Run not recorded (%s); run 'migrate' first", exc)
            return None
