"""
Desk-scale bound checks. The cheap campaigns run at full size; the
certificate and randomized campaigns run on a slice here and at full
size from verify_bounds.py.
"""

import tempfile
from fractions import Fraction
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.test import SimpleTestCase, TestCase, override_settings

from scheduling.services.experiments import (
    certificate_campaign,
    det_lb_report,
    logn_lb_report,
    monotone_campaign,
    oracle_equivalence_campaign,
    randomized_lb_report,
    uniform_tests_campaign,
)
from scheduling.services.reporting import dump_json


class OracleAndLocalBoundTests(SimpleTestCase):

    def test_srpt_matches_brute_force(self):
        result = oracle_equivalence_campaign()
        self.assertGreater(result['checked'], 1000)
        self.assertEqual(result['mismatches'], [])

    def test_monotone_within_m(self):
        result = monotone_campaign(1000, jobs=4)
        self.assertEqual(result['checked'], 1000)
        self.assertEqual(result['violations'], {})

    def test_uniform_tests_within_two(self):
        result = uniform_tests_campaign(1000, jobs=4)
        self.assertEqual(result['checked'], 1000)
        self.assertEqual(result['violations'], {})


@override_settings(OPFLOW_STRICT_CHECKS=True)
class ChunkPolicyCampaignTests(SimpleTestCase):

    def test_certificate_and_end_to_end(self):
        campaign = certificate_campaign(60, samples=300, jobs=4)
        self.assertEqual(campaign.checked, 60)
        self.assertGreater(campaign.primal_checked, 60 * 300)
        self.assertEqual(campaign.violations, {})

    def test_busy_period_campaign(self):
        campaign = certificate_campaign(60, samples=50, jobs=4, busy_period=True)
        self.assertEqual(campaign.checked, 60)
        self.assertGreater(campaign.gated, 0)
        self.assertEqual(campaign.violations, {})


class LowerBoundTests(SimpleTestCase):

    def test_deterministic_adversary(self):
        report = det_lb_report(10, 4)
        for policy in ('ops-srpt', 'chunk'):
            self.assertGreaterEqual(Fraction(report[policy]['max_local_ratio']), Fraction(9, 10) * 4, policy)

    def test_randomized_growth_direction(self):
        report = randomized_lb_report(20, range(8), policies=('ops-srpt',), jobs=4)
        n = report['n']
        self.assertEqual(n, 1024)
        self.assertEqual(report['eval_time'], 1685)
        alg_mean = Fraction(report['mean_active']['ops-srpt'])
        opt_mean = Fraction(report['mean_opt_active'])
        # mean >= n^(3/4) / 4 and mean_opt <= 4 n^(3/4), compared on fourth powers
        self.assertGreaterEqual((4 * alg_mean) ** 4, n ** 3)
        self.assertLessEqual((opt_mean / 4) ** 4, n ** 3)

    def test_logn_forced_counts_at_default_scale(self):
        for k_star in (4, 8):
            report = logn_lb_report(k_star)
            self.assertEqual(report['scale'], 2 ** (k_star + 3))
            self.assertEqual(report['alg_active_at_t_hat'], k_star + 1)
            self.assertEqual(report['opt_active_at_t_hat'], 1)

    def test_logn_ratio_growth_with_long_tail(self):
        small = logn_lb_report(4, scale=8, tail='long')
        large = logn_lb_report(8, scale=8, tail='long')
        for report in (small, large):
            self.assertEqual(report['alg_active_at_t_hat'], report['k_star'] + 1)
        self.assertGreaterEqual(Fraction(large['ratio']), Fraction(3, 2) * Fraction(small['ratio']))


class ReproducibilityTests(TestCase):

    def test_campaign_independent_of_workers(self):
        self.assertEqual(monotone_campaign(40, jobs=1), monotone_campaign(40, jobs=4))
        self.assertEqual(
            dump_json(randomized_lb_report(8, range(5), jobs=1)),
            dump_json(randomized_lb_report(8, range(5), jobs=3)),
        )

    def test_commands_write_identical_bytes(self):
        with tempfile.TemporaryDirectory() as tmp:
            for attempt in ('first', 'second'):
                call_command('compare', gen='general', params='n=8', seed=5, jobs=2,
                             out=str(Path(tmp) / attempt), stdout=StringIO())
                call_command('certify', gen='general', params='n=6', seed=5, samples=100,
                             out=str(Path(tmp) / attempt), stdout=StringIO())
            for name in ('compare.json', 'certificate.json'):
                first = (Path(tmp) / 'first' / name).read_bytes()
                second = (Path(tmp) / 'second' / name).read_bytes()
                self.assertEqual(first, second, name)
