"""
Pointwise comparisons of an algorithm trace against a reference (SRPT)
trace on the same realized instance.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction

from scheduling.services.simulation import local_counts

logger = logging.getLogger(__name__)

END_TO_END_FACTOR = 168


@dataclass
class BoundReport:
    name: str
    checked: int = 0
    violations: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return not self.violations

    def fail(self, message):
        self.violations.append(message)

    def to_dict(self):
        return {
            'check': self.name,
            'checked': self.checked,
            'passed': self.passed,
            'violations': self.violations[:20],
            **self.details,
        }


def max_local_ratio(alg_trace, opt_trace):
    """Largest |J_alg(t)| / |J_opt(t)| and the earliest t attaining it."""
    best, best_t = Fraction(1), 0
    for point in local_counts(alg_trace, opt_trace):
        if point.ratio > best:
            best, best_t = point.ratio, point.t
    return best, best_t


def check_local_ratio(alg_trace, opt_trace, factor):
    """|J_alg(t)| <= factor * |J_opt(t)| at every t; also reports the max ratio."""
    report = BoundReport('local-ratio')
    for point in local_counts(alg_trace, opt_trace):
        report.checked += 1
        if point.alg > factor * point.opt:
            report.fail(f"t={point.t}: {point.alg} > {factor} * {point.opt}")
    best, best_t = max_local_ratio(alg_trace, opt_trace)
    report.details = {'factor': str(factor), 'max_ratio': str(best), 'max_ratio_t': best_t}
    return report


def _uniform_test_size(instance):
    jobs = instance.jobs
    if not jobs or any(len(job.ops) != 2 for job in jobs):
        return None
    first = {job.ops[0] for job in jobs}
    return first.pop() if len(first) == 1 else None


def verify_swt_volume_invariant(alg_trace, opt_trace, tau):
    """
    Volume invariant for uniform obligatory tests at tau.

    Q* are the type-A jobs (payload >= test size p) active at tau in the
    reference schedule; L takes the |Q*| largest remaining payloads among
    type-A jobs active in the algorithm schedule. Checks
    vol(L) >= vol*(Q*) and |J(tau)| <= 2 * |J*(tau)|.

    Raises:
        ValueError: if the instance is not a uniform-test instance
    """
    instance = alg_trace.instance
    if instance != opt_trace.instance:
        raise ValueError("Traces come from different realized instances")
    test_size = _uniform_test_size(instance)
    if test_size is None:
        raise ValueError("Volume invariant needs two operations per job with a common first size")

    report = BoundReport('swt-volume')
    _check_swt_at(report, instance, test_size, tau,
                  lambda job: alg_trace.y(job, tau), lambda job: opt_trace.y(job, tau),
                  alg_trace.count(tau), opt_trace.count(tau),
                  lambda job: alg_trace.is_active(job, tau), lambda job: opt_trace.is_active(job, tau))
    return report


def verify_swt_volume_invariant_all(alg_trace, opt_trace):
    """Volume invariant at every t of both runs, in one sweep."""
    instance = alg_trace.instance
    if instance != opt_trace.instance:
        raise ValueError("Traces come from different realized instances")
    test_size = _uniform_test_size(instance)
    if test_size is None:
        raise ValueError("Volume invariant needs two operations per job with a common first size")

    report = BoundReport('swt-volume')
    y_alg = [0] * len(instance.jobs)
    y_opt = [0] * len(instance.jobs)
    for t in range(max(alg_trace.makespan, opt_trace.makespan) + 1):
        _check_swt_at(report, instance, test_size, t,
                      y_alg.__getitem__, y_opt.__getitem__,
                      alg_trace.count(t), opt_trace.count(t),
                      lambda job: alg_trace.is_active(job, t), lambda job: opt_trace.is_active(job, t))
        for trace, progress in ((alg_trace, y_alg), (opt_trace, y_opt)):
            if t < trace.makespan and trace.processed[t] is not None:
                progress[trace.processed[t]] += 1
    return report


def _check_swt_at(report, instance, test_size, t, y_alg, y_opt, alg_count, opt_count, alg_active, opt_active):
    report.checked += 1
    type_a = [job for job, spec in enumerate(instance.jobs) if spec.ops[1] >= test_size]

    def payload_left(job, progress):
        spec = instance.jobs[job]
        return min(spec.ops[1], spec.size - progress)

    opt_volume = sum(payload_left(job, y_opt(job)) for job in type_a if opt_active(job))
    opt_alive = sum(1 for job in type_a if opt_active(job))
    alg_left = sorted((payload_left(job, y_alg(job)) for job in type_a if alg_active(job)), reverse=True)
    alg_volume = sum(alg_left[:opt_alive])
    if alg_volume < opt_volume:
        report.fail(f"t={t}: largest {opt_alive} payloads hold {alg_volume} < {opt_volume}")
    if alg_count > 2 * opt_count:
        report.fail(f"t={t}: {alg_count} active jobs > 2 * {opt_count}")


def check_single_partial(trace, test_size):
    """At every t at most one active job has remaining total size below the test size."""
    report = BoundReport('single-partial')
    instance = trace.instance
    left = list(instance.sizes)
    partial = 0
    for t, job in enumerate(trace.processed):
        report.checked += 1
        if partial > 1:
            report.fail(f"t={t}: {partial} jobs below the test size")
        if job is None:
            continue
        before = left[job]
        left[job] -= 1
        if left[job] == 0:
            if before < test_size:
                partial -= 1
        elif before >= test_size > left[job]:
            partial += 1
    return report


def end_to_end_bound_check(alg_trace, opt_trace, decomposition):
    """
    At every t:
        |J(t)|     <= 168 * m2 * |J*_c(t)| + 1
        |J(t)|     <= 168 * m1 * m2 * |J*(t)| + 1
        |J*_c(t)|  <= m1 * |J*(t)|
    where J*_c(t) are the chunks alive in the reference schedule.
    """
    instance = alg_trace.instance
    if instance != opt_trace.instance:
        raise ValueError("Traces come from different realized instances")
    params = decomposition.params
    report = BoundReport('end-to-end')
    ends = [[chunk.end for chunk in chunks] for chunks in decomposition.by_job]
    cursor = [0] * len(instance.jobs)
    progress = [0] * len(instance.jobs)
    by_release = {}
    for job, release in enumerate(instance.releases):
        by_release.setdefault(release, []).append(job)

    alive_chunks = 0
    worst = Fraction(0)
    for t in range(max(alg_trace.makespan, opt_trace.makespan) + 1):
        for job in by_release.get(t, ()):
            alive_chunks += len(ends[job])
        alg, opt = alg_trace.count(t), opt_trace.count(t)
        report.checked += 1
        if alg > END_TO_END_FACTOR * params.m2 * alive_chunks + 1:
            report.fail(f"t={t}: {alg} > 168*{params.m2}*{alive_chunks} + 1")
        if alg > END_TO_END_FACTOR * params.m1 * params.m2 * opt + 1:
            report.fail(f"t={t}: {alg} > 168*{params.m1}*{params.m2}*{opt} + 1")
        if alive_chunks > params.m1 * opt:
            report.fail(f"t={t}: {alive_chunks} alive reference chunks > {params.m1} * {opt}")
        if opt:
            worst = max(worst, Fraction(alg, opt))
        if t < opt_trace.makespan and opt_trace.processed[t] is not None:
            job = opt_trace.processed[t]
            progress[job] += 1
            if progress[job] == ends[job][cursor[job]]:
                cursor[job] += 1
                alive_chunks -= 1
    report.details = {'m1': params.m1, 'm2': params.m2, 'max_ratio': str(worst)}
    if report.violations:
        logger.error("End-to-end bound broken %d times", len(report.violations))
    return report
