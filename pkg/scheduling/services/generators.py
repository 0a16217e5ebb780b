"""
Seeded instance families and the adversarial lower-bound constructions.

Every generator takes an explicit seed and draws from its own
``random.Random(seed)``; the same GenSpec always yields the same instance.
Jobs are emitted sorted by release, ties by position.
"""

import logging
import random
from dataclasses import dataclass, field
from math import isqrt

from django.conf import settings

from scheduling.domain import Instance, Job
from scheduling.exceptions import BudgetExceeded
from scheduling.services.chunking import ChunkService
from scheduling.services.simulation import AdversaryHook

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GenSpec:
    family: str
    params: dict = field(default_factory=dict, hash=False)
    seed: int = 0

    def to_dict(self):
        return {'family': self.family, 'params': dict(self.params), 'seed': self.seed}


def _finish(family, jobs, params, seed, extra=None):
    """Sort by release, attach metadata and enforce the volume budget."""
    jobs = sorted(jobs, key=lambda job: job.release)
    volume = sum(job.size for job in jobs)
    if volume > settings.OPFLOW_MAX_VOLUME:
        raise BudgetExceeded(
            f"{family} would emit total volume {volume} > OPFLOW_MAX_VOLUME={settings.OPFLOW_MAX_VOLUME}"
        )
    instance = Instance(tuple(jobs))
    metadata = {'family': family, 'params': params, 'seed': seed}
    metadata.update(ChunkService.instance_params(instance).to_dict())
    metadata.update(extra or {})
    return Instance(instance.jobs, metadata=metadata)


def _releases(rng, n, horizon):
    return sorted(rng.randint(0, max(horizon, 0)) for _ in range(n))


def gen_monotone(n, m, max_size, seed):
    """Jobs of m nondecreasing operation sizes in [1, max_size]."""
    rng = random.Random(seed)
    horizon = n * m * (max_size + 1) // 2
    releases = _releases(rng, n, horizon)
    jobs = [
        Job(release, tuple(sorted(rng.randint(1, max_size) for _ in range(m))))
        for release in releases
    ]
    return _finish('monotone', jobs, {'n': n, 'm': m, 'max_size': max_size}, seed)


def gen_uniform_tests(n, p, max_job_size, seed):
    """Two operations per job: a test of size p, then a payload in [0, max_job_size]."""
    if p < 1:
        raise ValueError("Test size must be at least 1")
    rng = random.Random(seed)
    horizon = n * (2 * p + max_job_size) // 2
    releases = _releases(rng, n, horizon)
    jobs = [Job(release, (p, rng.randint(0, max_job_size))) for release in releases]
    return _finish('uniform-tests', jobs, {'n': n, 'p': p, 'max_job_size': max_job_size}, seed)


def gen_general(n, m_range, size_range, seed):
    """
    Arbitrary operation sizes, drawn log-uniformly from ``size_range`` so
    that jobs cross several classes. A lower bound of 0 allows zero-size
    operations.
    """
    m_low, m_high = m_range
    size_low, size_high = size_range
    if not (1 <= m_low <= m_high) or not (0 <= size_low <= size_high) or size_high < 1:
        raise ValueError(f"Bad ranges: m in {m_range}, sizes in {size_range}")
    rng = random.Random(seed)
    low_class = max(size_low, 1).bit_length() - 1
    high_class = size_high.bit_length() - 1

    def draw():
        if size_low == 0 and rng.randrange(8) == 0:
            return 0
        k = rng.randint(low_class, high_class)
        return rng.randint(max(2 ** k, size_low, 1), min(2 ** (k + 1) - 1, size_high))

    drafts = []
    for _ in range(n):
        ops = [draw() for _ in range(rng.randint(m_low, m_high))]
        if not any(ops):
            ops[0] = max(size_low, 1)
        drafts.append(ops)
    horizon = sum(sum(ops) for ops in drafts)
    releases = _releases(rng, n, horizon)
    jobs = [Job(release, tuple(ops)) for release, ops in zip(releases, drafts)]
    params = {'n': n, 'm_range': list(m_range), 'size_range': list(size_range)}
    return _finish('general', jobs, params, seed)


def geometric_size(rng):
    """Pr[P = p] = 2**-p for p >= 1, by inverse CDF on a 64-bit uniform."""
    return 65 - rng.getrandbits(64).bit_length()


def randomized_lb_jobs(m):
    """floor(2 ** (m / 2))"""
    return isqrt(2 ** m)


def randomized_lb_eval_time(n):
    """floor(2 * (n - n ** (3/4))) = 2n - ceil(2 * n ** (3/4)), in integers."""
    target = 16 * n ** 3
    root = isqrt(isqrt(target))
    while root ** 4 < target:
        root += 1
    while (root - 1) ** 4 >= target:
        root -= 1
    return 2 * n - root


def split_geometric(size, m):
    """Operations for a job of hidden size ``size``: units, zeros, then the rest."""
    ops = [1 if position < size else 0 for position in range(m - 1)]
    ops.append(max(size - m + 1, 0))
    return ops


def gen_randomized_lb(m, seed):
    """floor(2^(m/2)) jobs at time 0 with geometric sizes split into m operations."""
    if m < 4:
        raise ValueError("m must be at least 4")
    rng = random.Random(seed)
    n = randomized_lb_jobs(m)
    jobs = [Job(0, tuple(split_geometric(geometric_size(rng), m))) for _ in range(n)]
    return _finish('randomized-lb', jobs, {'m': m}, seed, {'eval_time': randomized_lb_eval_time(n)})


LOGN_TAILS = ('short', 'long')


def gen_opsrpt_logn_lb(k_star, scale=None, tail='short'):
    """
    Instance forcing shortest-remaining-operation-first into k*+1 active jobs
    while SRPT has one, followed by a stream of small jobs.

    Units: eps = 2, M = 2**k* * scale. Time 0 releases [M/4 - 1, M/4 - 1] and
    [M/4, 0]; round k = 2..k* starts at t_k with the critical operation at
    M/2**k - eps and releases a = [M/2**k - 1, M/2**(k+1) - 1] at t_k and
    b = [M/2**(k+1), 0] at t_k + M/2**k + M/2**(k+1) - 2. After the last
    round (t_hat), jobs [U, 0] with U = M/2**(k*+1) arrive every U units
    starting at t_hat + U - eps: 2**k* + 1 of them for the 'short' tail, or
    spanning 4M for the 'long' tail, which keeps the k*+1 jobs waiting long
    enough for the total flow ratio to grow with k*.
    """
    if k_star < 1:
        raise ValueError("k_star must be at least 1")
    if tail not in LOGN_TAILS:
        raise ValueError(f"Unknown tail {tail!r}; choose from {', '.join(LOGN_TAILS)}")
    if scale is None:
        scale = 2 ** (k_star + 3)
    if scale < 8 or scale & (scale - 1):
        raise ValueError("scale must be a power of two of at least 8")
    eps = 2
    big = 2 ** k_star * scale
    base = big // 4

    jobs = [Job(0, (base - 1, base - 1)), Job(0, (base, 0))]
    t = base
    for k in range(2, k_star + 1):
        head, half = big // 2 ** k, big // 2 ** (k + 1)
        jobs.append(Job(t, (head - 1, half - 1)))
        jobs.append(Job(t + head + half - eps, (half, 0)))
        t += 2 * head - eps
    t_hat = t

    unit = big // 2 ** (k_star + 1)
    tail_jobs = 2 ** k_star + 1 if tail == 'short' else 4 * big // unit + 1
    jobs.extend(Job(t_hat + unit - eps + i * unit, (unit, 0)) for i in range(tail_jobs))

    params = {'k_star': k_star, 'scale': scale, 'tail': tail}
    return _finish('logn-lb', jobs, params, 0,
                   {'eps': eps, 'M': big, 'unit': unit, 't_hat': t_hat, 'tail_jobs': tail_jobs})



class DeterministicLowerBoundAdversary(AdversaryHook):
    """
    N(m+1) jobs at time 0 with first operation 1. Operations are revealed as
    1 until N distinct jobs have completed their (m-1)-th operation; every
    operation revealed after that has size 0.
    """

    name = 'det-lb'

    def __init__(self, big_n, m):
        if big_n < 1 or m < 2:
            raise ValueError("Need N >= 1 and m >= 2")
        self.big_n = big_n
        self.m = m
        self.reset()

    def reset(self):
        self.heavy = []
        self.triggered_at = None

    def release_dates(self):
        return [0] * (self.big_n * (self.m + 1))

    def has_operation(self, job, index):
        return index < self.m

    def reveal(self, job, index, history):
        if index == 0:
            return 1
        if self.triggered_at is not None:
            return 0
        if index == self.m - 1:
            self.heavy.append(job)
            if len(self.heavy) == self.big_n:
                self.triggered_at = history.time
                logger.info("det-lb: %d jobs reached operation %d at t=%d", self.big_n, self.m, history.time)
        return 1

    def horizon_bound(self):
        return self.big_n * (self.m + 1) * self.m + 1

    @property
    def metadata(self):
        return {'family': 'det-lb', 'params': {'N': self.big_n, 'm': self.m}, 'seed': 0}


def det_lb_adversary(big_n, m):
    return DeterministicLowerBoundAdversary(big_n, m)


FAMILIES = ['monotone', 'uniform-tests', 'general', 'randomized-lb', 'logn-lb', 'det-lb']


class GeneratorService:
    """Resolves a GenSpec to an Instance or an adversary"""

    @staticmethod
    def build(spec):
        params = spec.params
        family = spec.family
        if family == 'monotone':
            return gen_monotone(int(params.get('n', 20)), int(params.get('m', 3)),
                                int(params.get('max_size', 8)), spec.seed)
        if family == 'uniform-tests':
            return gen_uniform_tests(int(params.get('n', 20)), int(params.get('p', 3)),
                                     int(params.get('max_job_size', 10)), spec.seed)
        if family == 'general':
            return gen_general(
                int(params.get('n', 20)),
                (int(params.get('m_min', 1)), int(params.get('m_max', 6))),
                (int(params.get('size_min', 1)), int(params.get('size_max', 64))),
                spec.seed,
            )
        if family == 'randomized-lb':
            return gen_randomized_lb(int(params.get('m', 8)), spec.seed)
        if family == 'logn-lb':
            scale = params.get('scale')
            return gen_opsrpt_logn_lb(int(params.get('k_star', 4)),
                                      int(scale) if scale is not None else None,
                                      params.get('tail', 'short'))
        if family == 'det-lb':
            return det_lb_adversary(int(params.get('N', 10)), int(params.get('m', 4)))
        raise ValueError(f"Unknown family {family!r}; choose from {', '.join(FAMILIES)}")
