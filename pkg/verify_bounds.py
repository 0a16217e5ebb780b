"""
Bound verification script
Runs every desk-scale campaign at full size and exits nonzero on any failure
"""

import os
import sys
import time
import django

# Setup Django environment
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'opflow_lab.settings')
django.setup()

from fractions import Fraction

from django.conf import settings
from django.test import override_settings

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

JOBS = settings.OPFLOW_JOBS


def print_header(text):
    print("\n" + "="*70)
    print(f"  {text}")
    print("="*70)


def report(ok, text):
    print(f"{'✓' if ok else '❌'} {text}")
    return ok


def check_oracle():
    print_header("SRPT against brute force (<= 3 jobs, sizes 1..3)")
    result = oracle_equivalence_campaign()
    for instance, srpt, best in result['mismatches'][:5]:
        print(f"  {instance}: SRPT {srpt}, optimum {best}")
    return report(not result['mismatches'], f"{result['checked']} instances, {len(result['mismatches'])} mismatches")


def check_monotone():
    print_header("ops-srpt within m of SRPT on monotone instances")
    result = monotone_campaign(1000, jobs=JOBS)
    for seed, found in list(result['violations'].items())[:5]:
        print(f"  seed {seed}: {found[0]}")
    return report(not result['violations'], f"{result['checked']} seeds, {len(result['violations'])} failing")


def check_uniform_tests():
    print_header("ops-srpt within 2 of SRPT with uniform obligatory tests")
    result = uniform_tests_campaign(1000, jobs=JOBS)
    for seed, found in list(result['violations'].items())[:5]:
        print(f"  seed {seed}: {found[0]}")
    return report(not result['violations'], f"{result['checked']} seeds, {len(result['violations'])} failing")


def check_chunk_policy():
    print_header("Chunk policy: certificate, primal sampling, end-to-end bound")
    ok = True
    for busy_period in (False, True):
        # strict checks make the policy's own assertions part of the campaign
        with override_settings(OPFLOW_STRICT_CHECKS=True):
            campaign = certificate_campaign(500, jobs=JOBS, busy_period=busy_period)
        window = 'busy period' if busy_period else 'whole run'
        print(f"  [{window}] certificate checked at {campaign.gated} of {campaign.checked} peaks")
        print(f"  [{window}] objective bound checked at {campaign.objective_gated}")
        print(f"  [{window}] primal constraints checked: {campaign.primal_checked}")
        for seed, found in list(campaign.violations.items())[:5]:
            print(f"  seed {seed}: {found[0]}")
        ok &= report(not campaign.violations, f"{window}: {len(campaign.violations)} instances with violations")
    return ok



def check_det_lower_bound():
    print_header("Deterministic adversary (N=10, m=4)")
    ok = True
    for policy, entry in det_lb_report(10, 4).items():
        ratio = Fraction(entry['max_local_ratio'])
        ok &= report(ratio >= Fraction(18, 5), f"{policy}: max ratio {ratio} at t={entry['max_local_ratio_t']}")
    return ok


def check_randomized_lower_bound():
    print_header("Randomized construction (m=20, 50 seeds)")
    result = randomized_lb_report(20, range(50), policies=('ops-srpt',), jobs=JOBS)
    n = result['n']
    alg_mean = Fraction(result['mean_active']['ops-srpt'])
    opt_mean = Fraction(result['mean_opt_active'])
    print(f"  n={n}, t={result['eval_time']}, n^(3/4)={n ** 0.75:.2f}")
    ok = report((4 * alg_mean) ** 4 >= n ** 3, f"ops-srpt mean active {float(alg_mean):.2f} >= n^(3/4)/4")
    ok &= report((opt_mean / 4) ** 4 <= n ** 3, f"SRPT mean active {float(opt_mean):.2f} <= 4 n^(3/4)")
    return ok


def check_logn_lower_bound():
    print_header("ops-srpt log n construction (k* = 4, 8)")
    ok = True
    for entry in (logn_lb_report(4), logn_lb_report(8)):
        forced = entry['alg_active_at_t_hat'] == entry['k_star'] + 1 and entry['opt_active_at_t_hat'] == 1
        ok &= report(forced, f"k*={entry['k_star']}: {entry['alg_active_at_t_hat']} active vs "
                             f"{entry['opt_active_at_t_hat']} at t={entry['t_hat']}, flow ratio {entry['ratio']}")
    small, large = logn_lb_report(4, scale=8, tail='long'), logn_lb_report(8, scale=8, tail='long')
    print(f"  long tail: ratio {small['ratio']} at k*=4, {large['ratio']} at k*=8")
    grown = Fraction(large['ratio']) >= Fraction(3, 2) * Fraction(small['ratio'])
    return report(grown, "ratio at k*=8 is at least 1.5x the ratio at k*=4") and ok


def check_reproducibility():
    print_header("Reproducibility across worker counts")
    first = dump_json(monotone_campaign(100, jobs=1))
    workers = max(JOBS, 4)
    second = dump_json(monotone_campaign(100, jobs=workers))
    third = dump_json(randomized_lb_report(12, range(10), jobs=workers))
    fourth = dump_json(randomized_lb_report(12, range(10), jobs=1))
    return report(first == second and third == fourth, "identical JSON from repeated runs")


def run_all_checks():
    """Run every campaign; returns True when all pass"""
    print("\n" + "="*70)
    print("  OPERATION FLOW-TIME BOUNDS - DESK-SCALE VERIFICATION")
    print("="*70)

    checks = [
        check_oracle,
        check_monotone,
        check_uniform_tests,
        check_chunk_policy,
        check_det_lower_bound,
        check_randomized_lower_bound,
        check_logn_lower_bound,
        check_reproducibility,
    ]
    failed = []
    for check in checks:
        started = time.perf_counter()
        if not check():
            failed.append(check.__name__)
        print(f"  ({time.perf_counter() - started:.1f}s)")

    print("\n" + "="*70)
    if failed:
        print(f"  ❌ FAILED: {', '.join(failed)}")
    else:
        print("  ✅ ALL BOUND CHECKS PASSED")
    print("="*70)
    return not failed


if __name__ == '__main__':
    sys.exit(0 if run_all_checks() else 1)
