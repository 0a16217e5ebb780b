import json
from pathlib import Path

from django.core.management import load_command_class
from django.core.management.base import BaseCommand, CommandError

from scheduling.management.base import RUN_CONFIG_FILE
from scheduling.models import RunRecord
from scheduling.services.reporting import RunConfig, digest_outputs, read_outputs


class Command(BaseCommand):
    help = 'Re-execute a stored RunConfig and check that its outputs are unchanged'

    def add_arguments(self, parser):
        source = parser.add_mutually_exclusive_group(required=True)
        source.add_argument('--config', help=f'Path to a {RUN_CONFIG_FILE} or the directory holding it')
        source.add_argument('--record', type=int, help='RunRecord id')

    def handle(self, *args, **options):
        if options.get('record') is not None:
            try:
                record = RunRecord.objects.get(pk=options['record'])
            except RunRecord.DoesNotExist:
                raise CommandError(f"No run record {options['record']}")
            if not record.output_digest:
                raise CommandError(f"Run record {record.pk} stopped before writing outputs; nothing to reproduce")
            config = RunConfig.from_dict(record.config)
            expected = record.output_digest
        else:
            config = self.load_config(options['config'])
            expected = None

        command = load_command_class('scheduling', config.subcommand)
        command.stdout, command.stderr = self.stdout, self.stderr
        outcome = command.run_config(config)

        if expected is None:
            if not config.out:
                raise CommandError("The stored config has no output directory to compare against")
            previous = read_outputs(config.out, outcome.outputs)
            if set(previous) != set(outcome.outputs):
                missing = sorted(set(outcome.outputs) - set(previous))
                raise CommandError(f"Stored outputs are missing: {', '.join(missing)}", returncode=2)
            expected = digest_outputs(previous)

        if outcome.digest != expected:
            raise CommandError(
                f"{config.subcommand} is not reproducible: digest {outcome.digest[:12]} != {expected[:12]}",
                returncode=2,
            )
        self.stdout.write(self.style.SUCCESS(f'{config.subcommand} reproduced (digest {outcome.digest[:12]})'))

    def load_config(self, location):
        path = Path(location)
        if path.is_dir():
            path = path / RUN_CONFIG_FILE
        try:
            return RunConfig.from_dict(json.loads(path.read_text()))
        except OSError as exc:
            raise CommandError(f"Cannot read {path}: {exc}")
        except (json.JSONDecodeError, ValueError, TypeError) as exc:
            raise CommandError(f"{path} is not a RunConfig: {exc}")
