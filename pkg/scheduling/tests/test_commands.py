import csv
import json
import tempfile
from fractions import Fraction
from io import StringIO
from pathlib import Path
from unittest import mock

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase

from scheduling.domain import Instance
from scheduling.exceptions import InvariantViolation
from scheduling.management.base import parse_params, parse_tau
from scheduling.models import RunRecord
from scheduling.services.generators import gen_monotone
from scheduling.services.policies import ChunkPolicy


class CommandTestCase(TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def write_instance(self, name, *jobs):
        path = self.root / f'{name}.json'
        path.write_text(Instance.of(*jobs).to_json())
        return str(path)

    def call(self, *args, **options):
        out = StringIO()
        call_command(*args, stdout=out, stderr=StringIO(), **options)
        return out.getvalue()

    def read_json(self, *parts):
        return json.loads(self.root.joinpath(*parts).read_text())


class RunCommandTests(CommandTestCase):

    def test_srpt_summary_and_trace(self):
        path = self.write_instance('pair', (0, [3]), (1, [1]))
        self.call('run', instance=[path], policy='srpt', out=str(self.root / 'out'))

        summary = self.read_json('out', 'summary.json')
        self.assertEqual(summary['total_flow'], 5)
        self.assertEqual(summary['flows'], [4, 1])
        self.assertEqual(summary['instance'], 'pair')
        with open(self.root / 'out' / 'trace.csv', newline='') as handle:
            rows = list(csv.DictReader(handle))
        self.assertEqual([row['processed_job'] for row in rows], ['0', '1', '0', '0'])
        self.assertTrue(all(row['ratio'] == '1' for row in rows))

        config = self.read_json('out', 'run_config.json')
        self.assertEqual(config['subcommand'], 'run')
        self.assertEqual(config['policies'], ['srpt'])

        record = RunRecord.objects.get()
        self.assertEqual(record.status, 'OK')
        self.assertEqual(len(record.output_digest), 64)
        self.assertEqual(record.summary['total_flow'], 5)

    def test_ops_srpt_ratio_column_on_monotone(self):
        path = self.root / 'monotone.json'
        instance = gen_monotone(15, 3, 8, seed=4)
        path.write_text(instance.to_json())
        self.call('run', instance=[str(path)], policy='ops-srpt', out=str(self.root / 'out'))
        with open(self.root / 'out' / 'trace.csv', newline='') as handle:
            ratios = [Fraction(row['ratio']) for row in csv.DictReader(handle)]
        self.assertTrue(ratios)
        self.assertLessEqual(max(ratios), 3)

    def test_empty_instance(self):
        path = self.root / 'empty.json'
        path.write_text('{"jobs": []}')
        self.call('run', instance=[str(path)], out=str(self.root / 'out'))
        self.assertEqual(self.read_json('out', 'summary.json')['total_flow'], 0)
        self.assertEqual((self.root / 'out' / 'trace.csv').read_text(), 't,processed_job,alg_active,opt_active,ratio\n')

    def test_generated_source(self):
        self.call('run', gen='monotone', params='n=4,m=2', seed=7, out=str(self.root / 'out'))
        summary = self.read_json('out', 'summary.json')
        self.assertEqual(summary['instance'], 'monotone')
        self.assertEqual(summary['realized_instance'], gen_monotone(4, 2, 8, 7).to_dict(include_metadata=False))

    def test_schema_violation_exits_one(self):
        path = self.root / 'bad.json'
        path.write_text('{"jobs": [{"release": 0, "ops": [-1]}]}')
        with self.assertRaises(CommandError) as raised:
            self.call('run', instance=[str(path)])
        self.assertEqual(raised.exception.returncode, 1)
        self.assertEqual(RunRecord.objects.get().status, 'ERROR')

    def test_missing_file(self):
        with self.assertRaises(CommandError) as raised:
            self.call('run', instance=[str(self.root / 'nope.json')])
        self.assertEqual(raised.exception.returncode, 1)

    def test_one_policy_only(self):
        path = self.write_instance('one', (0, [1]))
        with self.assertRaises(CommandError):
            self.call('run', instance=[path], policy='srpt,ops-srpt')

    def test_policy_assertion_exits_two(self):
        path = self.write_instance('one', (0, [2]))
        failure = InvariantViolation('stack-monotone', 'forced for the test')
        with mock.patch.object(ChunkPolicy, 'select', side_effect=failure):
            with self.assertRaises(CommandError) as raised:
                self.call('run', instance=[path], policy='chunk')
        self.assertEqual(raised.exception.returncode, 2)
        self.assertIn('stack-monotone', str(raised.exception))
        record = RunRecord.objects.get()
        self.assertEqual(record.status, 'VIOLATION')
        self.assertEqual(record.summary['invariant'], 'stack-monotone')


class GenCommandTests(CommandTestCase):

    def test_writes_instance_with_metadata(self):
        self.call('gen', gen='monotone', params='n=6,m=3,max_size=5', seed=2, out=str(self.root / 'out'))
        written = (self.root / 'out' / 'instance.json').read_text()
        self.assertEqual(written, gen_monotone(6, 3, 5, 2).to_json())
        metadata = json.loads(written)['metadata']
        self.assertEqual(set(metadata), {'family', 'params', 'seed', 'm', 'm1', 'm2'})

    def test_adaptive_family_refused(self):
        with self.assertRaises(CommandError):
            self.call('gen', gen='det-lb')

    def test_needs_family(self):
        path = self.write_instance('one', (0, [1]))
        with self.assertRaises(CommandError):
            self.call('gen', instance=[path])


class CompareCommandTests(CommandTestCase):

    def test_identical_policies(self):
        path = self.write_instance('pair', (0, [3]), (1, [1]))
        self.call('compare', instance=[path], policy='srpt,srpt', out=str(self.root / 'out'))
        report = self.read_json('out', 'compare.json')
        self.assertEqual(report['instances']['pair']['srpt']['ratio'], '1')

    def test_uniform_tests_within_two(self):
        self.call('compare', gen='uniform-tests', params='n=15,p=2', policy='srpt,ops-srpt,chunk',
                  seed=3, jobs=2, out=str(self.root / 'out'))
        entries = self.read_json('out', 'compare.json')['instances']['uniform-tests']
        self.assertEqual(set(entries), {'srpt', 'ops-srpt', 'chunk'})
        self.assertLessEqual(Fraction(entries['ops-srpt']['max_local_ratio']), 2)
        self.assertTrue(entries['chunk']['end_to_end']['passed'])

    def test_needs_two_policies(self):
        path = self.write_instance('pair', (0, [3]), (1, [1]))
        with self.assertRaises(CommandError):
            self.call('compare', instance=[path], policy='srpt')


class CertifyCommandTests(CommandTestCase):

    def test_one_job(self):
        path = self.write_instance('one', (0, [5]))
        self.call('certify', instance=[path], samples=50, out=str(self.root / 'out'))
        report = self.read_json('out', 'certificate.json')
        self.assertEqual(report['violations'], [])
        self.assertTrue(report['certificate']['feasible_at_1/14'])

    def test_tau_after_last_completion(self):
        path = self.write_instance('pair', (0, [3]), (1, [1, 2]))
        self.call('certify', instance=[path], tau='40', samples=10, out=str(self.root / 'out'))
        certificate = self.read_json('out', 'certificate.json')['certificate']
        self.assertEqual(certificate['y'], [])
        self.assertEqual(certificate['objective'], '0')
        self.assertEqual(certificate['active_jobs'], 0)

    def test_busy_period_flag(self):
        path = self.write_instance('gap', (0, [8]), (8, [1]), (10, [2]), (10, [8]))
        self.call('certify', instance=[path], tau='11', samples=10, busy_period=True, out=str(self.root / 'out'))
        report = self.read_json('out', 'certificate.json')
        self.assertTrue(report['busy_period'])
        self.assertEqual(report['certificate']['y'][0]['excess'], 1)
        self.assertTrue(self.read_json('out', 'run_config.json')['options']['busy_period'])

    def test_bad_tau(self):
        path = self.write_instance('one', (0, [5]))
        with self.assertRaises(CommandError):
            self.call('certify', instance=[path], tau='soon')


class LowerboundCommandTests(CommandTestCase):

    def test_det_construction(self):
        self.call('lowerbound', construction='det', params='N=2,m=2', out=str(self.root / 'out'))
        report = self.read_json('out', 'lowerbound.json')
        self.assertEqual(report['ops-srpt']['max_local_ratio'], '2')
        self.assertEqual(report['ops-srpt']['max_local_ratio_t'], 4)

    def test_randomized_construction(self):
        self.call('lowerbound', construction='randomized', params='m=6', seeds=3, seed=10,
                  out=str(self.root / 'out'))
        report = self.read_json('out', 'lowerbound.json')
        self.assertEqual(report['n'], 8)
        self.assertEqual([row['seed'] for row in report['per_seed']], [10, 11, 12])

    def test_logn_long_tail(self):
        self.call('lowerbound', construction='logn', params='k_star=2,scale=8,tail=long',
                  out=str(self.root / 'out'))
        report = self.read_json('out', 'lowerbound.json')
        self.assertEqual(report['tail'], 'long')
        self.assertEqual(report['alg_active_at_t_hat'], 3)


class ReplayCommandTests(CommandTestCase):

    def run_once(self):
        path = self.write_instance('pair', (0, [3]), (1, [1]), (2, [2, 1]))
        self.call('compare', instance=[path], policy='srpt,ops-srpt,chunk', out=str(self.root / 'out'))

    def test_replay_from_directory(self):
        self.run_once()
        output = self.call('replay', config=str(self.root / 'out'))
        self.assertIn('reproduced', output)

    def test_replay_detects_changed_outputs(self):
        self.run_once()
        report = self.root / 'out' / 'compare.json'
        report.write_text(report.read_text().replace('"total_flow"', '"total_flow_edited"'))
        with self.assertRaises(CommandError) as raised:
            self.call('replay', config=str(self.root / 'out' / 'run_config.json'))
        self.assertEqual(raised.exception.returncode, 2)

    def test_replay_from_record(self):
        self.run_once()
        record = RunRecord.objects.get()
        output = self.call('replay', record=record.pk)
        self.assertIn('reproduced', output)
        self.assertEqual(RunRecord.objects.count(), 2)

    def test_unknown_record(self):
        with self.assertRaises(CommandError):
            self.call('replay', record=999)


class OptionParsingTests(SimpleTestCase):

    def test_params(self):
        self.assertEqual(parse_params('n=20, m=3,family=x'), {'n': 20, 'm': 3, 'family': 'x'})
        self.assertEqual(parse_params(''), {})
        with self.assertRaises(CommandError):
            parse_params('n20')

    def test_tau(self):
        self.assertEqual(parse_tau('auto'), 'auto')
        self.assertEqual(parse_tau('all'), 'all')
        self.assertEqual(parse_tau('12'), '12')
        with self.assertRaises(CommandError):
            parse_tau('-1')
