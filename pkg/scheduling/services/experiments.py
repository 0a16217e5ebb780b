"""
Batch drivers: policy comparisons, certification at one or all times, the
lower-bound reports and the desk-scale verification campaigns.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from django.conf import settings

from scheduling.domain import Instance
from scheduling.services.accounting import ChunkAccounting, opt_alive_chunks
from scheduling.services.bounds import (
    check_local_ratio,
    check_single_partial,
    max_local_ratio,
    end_to_end_bound_check,
    verify_swt_volume_invariant_all,
)
from scheduling.services.certificate import (
    build_dual_certificate,
    check_reduced_assumption,
    verify_excess_lemmas,
    verify_primal_feasibility_sampled,
)
from scheduling.services.chunking import ChunkDecomposition
from scheduling.services.generators import (
    det_lb_adversary,
    gen_general,
    gen_monotone,
    gen_opsrpt_logn_lb,
    gen_randomized_lb,
    gen_uniform_tests,
    randomized_lb_jobs,
)
from scheduling.services.policies import PolicyFactory, SRPTPolicy, brute_force_optimal
from scheduling.services.simulation import simulate

logger = logging.getLogger(__name__)


def run_batch(tasks, jobs=None):
    """
    Run independent callables, ``jobs`` at a time.

    Args:
        tasks: dict mapping a sortable key to a zero-argument callable
        jobs: worker count (defaults to OPFLOW_JOBS)

    Returns:
        dict of results in sorted key order
    """
    jobs = jobs or settings.OPFLOW_JOBS
    logger.info("Running %d tasks on %d worker(s)", len(tasks), jobs)
    if jobs <= 1:
        return {key: tasks[key]() for key in sorted(tasks)}
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = {key: pool.submit(task) for key, task in tasks.items()}
        return {key: futures[key].result() for key in sorted(futures)}


def baseline(instance):
    """SRPT run on a realized instance."""
    return simulate(instance, SRPTPolicy())


@dataclass
class PolicyRun:
    policy: str
    trace: object
    opt: object

    @property
    def decomposition(self):
        return ChunkDecomposition(self.trace.instance)

    def summary(self):
        best, best_t = max_local_ratio(self.trace, self.opt)
        return {
            **self.trace.summary(),
            'policy': self.policy,
            'opt_total_flow': self.opt.total_flow,
            'ratio': str(Fraction(self.trace.total_flow, self.opt.total_flow or 1)),
            'max_local_ratio': str(best),
            'max_local_ratio_t': best_t,
        }


def run_policy(source, name):
    """Run one policy and its SRPT baseline on the realized instance."""
    instance = source if isinstance(source, Instance) else None
    trace = simulate(source, PolicyFactory.create(name, instance=instance))
    opt = trace if name == 'srpt' else baseline(trace.instance)
    return PolicyRun(name, trace, opt)


def compare_policies(sources, policies, jobs=None):
    """
    Run every policy on every source.

    Args:
        sources: dict label -> Instance or adversary factory (callable)
        policies: list of policy names

    Returns:
        dict (label, policy) -> PolicyRun
    """
    def task(source, name):
        return lambda: run_policy(source() if callable(source) else source, name)

    tasks = {
        (label, name): task(source, name)
        for label, source in sources.items()
        for name in policies
    }
    return run_batch(tasks, jobs)


@dataclass
class CertificationResult:
    tau: int
    certificate: object
    lemmas: object
    primal: object
    opt_alive_chunks: int

    def violations(self):
        found = [f"certificate: {v}" for v in self.certificate.violations()]
        if self.lemmas is not None:
            found += [f"excess: {v}" for v in self.lemmas.violations]
        found += [f"primal: {v}" for v in self.primal.violations]
        return found

    def to_dict(self):
        return {
            'tau': self.tau,
            'certificate': self.certificate.to_dict(),
            'excess_lemmas': self.lemmas.to_dict() if self.lemmas is not None else None,
            'primal': self.primal.to_dict(),
            'opt_alive_chunks': self.opt_alive_chunks,
        }


def certify_at(alg_trace, opt_trace, decomposition, tau, seed, samples=None, busy_period=False):
    accounting = ChunkAccounting(alg_trace, decomposition, tau, busy_period)
    assumption = check_reduced_assumption(alg_trace, decomposition, tau, accounting)
    certificate = build_dual_certificate(alg_trace, decomposition, tau, accounting, assumption)
    lemmas = verify_excess_lemmas(accounting, assumption) if assumption.crucial_holds else None
    primal = verify_primal_feasibility_sampled(
        opt_trace, decomposition, tau, seed, samples,
        families=[entry.members for entry in certificate.entries],
    )
    return CertificationResult(
        tau, certificate, lemmas, primal, opt_alive_chunks(opt_trace, decomposition, tau)
    )


def certify_run(instance, tau='auto', seed=0, samples=None, busy_period=False):
    """
    Chunk policy against SRPT on ``instance``, certified at ``tau``
    ('auto' for the earliest peak of |J(t)|, 'all' for every t). With
    ``busy_period`` the boundary times look back no further than the busy
    period containing tau.

    Returns:
        dict report and the list of violated claims
    """
    run = run_policy(instance, 'chunk')
    decomposition = ChunkDecomposition(run.trace.instance)
    if tau == 'all':
        times = list(range(run.trace.makespan))
    elif tau in (None, 'auto'):
        times = [run.trace.earliest_peak]
    else:
        times = [int(tau)]

    results = [certify_at(run.trace, run.opt, decomposition, t, seed, samples, busy_period) for t in times]
    end_to_end = end_to_end_bound_check(run.trace, run.opt, decomposition)
    violations = [f"tau={r.tau} {v}" for r in results for v in r.violations()]
    violations += [f"end-to-end: {v}" for v in end_to_end.violations]

    report = {
        'params': decomposition.params.to_dict(),
        'total_flow': run.trace.total_flow,
        'opt_total_flow': run.opt.total_flow,
        'end_to_end': end_to_end.to_dict(),
        'busy_period': busy_period,
        'violations': violations,
    }
    if tau == 'all':
        report['times'] = [_compact(r) for r in results]
        report['gated_times'] = sum(1 for r in results if r.certificate.gated)
        report['objective_gated_times'] = sum(1 for r in results if r.certificate.objective_gated)
    else:
        report.update(results[0].to_dict())
    return report, violations


def _compact(result):
    certificate = result.certificate
    return {
        'tau': result.tau,
        'gated': certificate.gated,
        'degenerate_classes': certificate.degenerate_classes,
        'objective_margin': str(certificate.objective - certificate.objective_bound),
        'max_slack': str(certificate.max_slack),
        'primal_checked': result.primal.checked,
    }


# Lower-bound reports


def det_lb_report(big_n, m, policies=('ops-srpt', 'chunk')):
    report = {}
    for name in policies:
        run = run_policy(det_lb_adversary(big_n, m), name)
        best, best_t = max_local_ratio(run.trace, run.opt)
        report[name] = {
            'max_local_ratio': str(best),
            'max_local_ratio_t': best_t,
            'heavy_jobs': sum(1 for job in run.trace.instance.jobs if job.size == m),
            'total_flow': run.trace.total_flow,
            'opt_total_flow': run.opt.total_flow,
        }
    return report


def randomized_lb_report(m, seeds, policies=('ops-srpt',), jobs=None):
    """Active counts at the evaluation time, per seed and averaged over seeds."""
    def task(seed):
        def run():
            instance = gen_randomized_lb(m, seed)
            t = instance.metadata['eval_time']
            opt = baseline(instance)
            counts = {name: simulate(instance, PolicyFactory.create(name)).count(t) for name in policies}
            return t, counts, opt.count(t)
        return run

    results = run_batch({seed: task(seed) for seed in seeds}, jobs)
    eval_time = next(iter(results.values()))[0] if results else None
    return {
        'm': m,
        'n': randomized_lb_jobs(m),
        'seeds': len(results),
        'eval_time': eval_time,
        'per_seed': [
            {'seed': seed, 'active': counts, 'opt_active': opt_count}
            for seed, (_, counts, opt_count) in results.items()
        ],
        'mean_active': {
            name: str(Fraction(sum(r[1][name] for r in results.values()), len(results) or 1))
            for name in policies
        },
        'mean_opt_active': str(Fraction(sum(r[2] for r in results.values()), len(results) or 1)),
    }


def logn_lb_report(k_star, scale=None, tail='short'):
    instance = gen_opsrpt_logn_lb(k_star, scale, tail)
    run = run_policy(instance, 'ops-srpt')
    t_hat = instance.metadata['t_hat']
    return {
        'k_star': k_star,
        'scale': instance.metadata['params']['scale'],
        'tail': tail,
        't_hat': t_hat,
        'alg_active_at_t_hat': run.trace.count(t_hat),
        'opt_active_at_t_hat': run.opt.count(t_hat),
        'total_flow': run.trace.total_flow,
        'opt_total_flow': run.opt.total_flow,
        'ratio': str(Fraction(run.trace.total_flow, run.opt.total_flow)),
    }


LOWERBOUND_CONSTRUCTIONS = ['det', 'randomized', 'logn']


def lowerbound_report(construction, policies=None, params=None, seeds=None, jobs=None):
    """
    Run one adversarial construction against non-clairvoyant policies.

    Args:
        construction: 'det', 'randomized' or 'logn'
        policies: policy names (defaults per construction)
        params: construction parameters (N/m, m, k_star/scale/tail)
        seeds: seeds for the randomized construction

    Returns:
        dict report
    """
    params = params or {}
    if construction == 'det':
        return det_lb_report(int(params.get('N', 10)), int(params.get('m', 4)),
                             tuple(policies or ('ops-srpt', 'chunk')))
    if construction == 'randomized':
        return randomized_lb_report(int(params.get('m', 20)), list(seeds or range(50)),
                                    tuple(policies or ('ops-srpt',)), jobs)
    if construction == 'logn':
        scale = params.get('scale')
        return logn_lb_report(int(params.get('k_star', 4)), int(scale) if scale is not None else None,
                              params.get('tail', 'short'))
    raise ValueError(
        f"Unknown construction {construction!r}; choose from {', '.join(LOWERBOUND_CONSTRUCTIONS)}"
    )


# Verification campaigns


def small_instances(max_jobs=3, max_release=3, max_size=3):
    """Every instance of up to ``max_jobs`` single-operation jobs in the given ranges."""
    options = [(r, (p,)) for r in range(max_release + 1) for p in range(1, max_size + 1)]
    for count in range(1, max_jobs + 1):
        for jobs in itertools.product(options, repeat=count):
            yield Instance.of(*jobs)


def oracle_equivalence_campaign():
    mismatches = []
    checked = 0
    for instance in small_instances():
        checked += 1
        srpt = baseline(instance).total_flow
        best = brute_force_optimal(instance).total_flow
        if srpt != best:
            mismatches.append((instance.to_dict(), srpt, best))
    return {'checked': checked, 'mismatches': mismatches}


def _seeded(count, first_seed):
    return range(first_seed, first_seed + count)


def monotone_campaign(count=1000, first_seed=0, jobs=None):
    """ops-srpt within factor m of SRPT at every t on monotone instances."""
    def task(seed):
        def run():
            # n in [1, 50], m in [1, 6], derived from the seed
            instance = gen_monotone(1 + seed % 50, 1 + seed % 6, 8, seed)
            result = run_policy(instance, 'ops-srpt')
            return check_local_ratio(result.trace, result.opt, instance.metadata['m']).violations
        return run

    results = run_batch({seed: task(seed) for seed in _seeded(count, first_seed)}, jobs)
    return {'checked': len(results), 'violations': {s: v for s, v in results.items() if v}}


def uniform_tests_campaign(count=1000, first_seed=0, jobs=None):
    """Factor-2 local bound, the volume invariant at every t and the single-partial property."""
    def task(seed):
        def run():
            instance = gen_uniform_tests(1 + seed % 50, 1 + seed % 5, 12, seed)
            result = run_policy(instance, 'ops-srpt')
            found = check_local_ratio(result.trace, result.opt, 2).violations
            found += verify_swt_volume_invariant_all(result.trace, result.opt).violations
            found += check_single_partial(result.trace, instance.jobs[0].ops[0]).violations
            return found
        return run

    results = run_batch({seed: task(seed) for seed in _seeded(count, first_seed)}, jobs)
    return {'checked': len(results), 'violations': {s: v for s, v in results.items() if v}}


def general_instance(seed):
    """Corpus member for the chunk-policy campaigns."""
    return gen_general(2 + seed % 11, (1, 4), (1, 32), seed)


@dataclass
class CertificateCampaign:
    checked: int = 0
    gated: int = 0
    objective_gated: int = 0
    primal_checked: int = 0
    violations: dict = field(default_factory=dict)


def certificate_campaign(count=500, first_seed=0, samples=None, jobs=None, busy_period=False):
    """
    Chunk policy vs SRPT on general instances: end-to-end bound on every
    instance; certificate, excess bounds and primal feasibility at the
    earliest peak wherever the assumption gate holds. ``busy_period``
    selects the accounting window as in certify_run.
    """
    def task(seed):
        def run():
            instance = general_instance(seed)
            result = run_policy(instance, 'chunk')
            decomposition = ChunkDecomposition(result.trace.instance)
            found = end_to_end_bound_check(result.trace, result.opt, decomposition).violations
            outcome = certify_at(result.trace, result.opt, decomposition,
                                 result.trace.earliest_peak, seed, samples, busy_period)
            found += outcome.violations()
            return outcome, found
        return run

    results = run_batch({seed: task(seed) for seed in _seeded(count, first_seed)}, jobs)
    campaign = CertificateCampaign()
    for seed, (outcome, found) in results.items():
        campaign.checked += 1
        campaign.gated += outcome.certificate.gated
        campaign.objective_gated += outcome.certificate.objective_gated
        campaign.primal_checked += outcome.primal.checked
        if found:
            campaign.violations[seed] = found
    if campaign.violations:
        logger.warning("Certificate campaign: %d of %d instances failed", len(campaign.violations), campaign.checked)
    return campaign
