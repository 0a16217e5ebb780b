import heapq
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

from django.conf import settings

from scheduling.exceptions import BruteForceCapExceeded, InvariantViolation, PolicyError
from scheduling.services.chunking import class_of

logger = logging.getLogger(__name__)


class Policy:
    """
    Engine contract: ``reset`` before a run, then ``select(view)`` once per
    step, returning an active job id or None to idle.
    """

    name = ''
    clairvoyant = False

    def reset(self):
        pass

    def select(self, view):
        raise NotImplementedError


class SRPTPolicy(Policy):
    """Shortest remaining total size first; ties to the smaller job id."""

    name = 'srpt'
    clairvoyant = True

    def __init__(self):
        self.reset()

    def reset(self):
        self._heap = []

    def select(self, view):
        oracle = view.oracle
        changed = list(view.arrivals)
        if view.touched is not None:
            changed.append(view.touched)
        for job in changed:
            heapq.heappush(self._heap, (oracle.remaining(job), job))
        heap = self._heap
        while heap:
            remaining, job = heap[0]
            if job in view.active and oracle.remaining(job) == remaining:
                return job
            heapq.heappop(heap)
        return None


class OperationsSRPTPolicy(Policy):
    """
    Shortest remaining active operation first. Ties go to the smaller
    operation index (earlier stage), then to the smaller job id.
    """

    name = 'ops-srpt'

    def __init__(self):
        self.reset()

    def reset(self):
        self._heap = []

    @staticmethod
    def _key(state):
        return (state.remaining, state.op_index, state.job)

    def select(self, view):
        changed = list(view.arrivals)
        if view.touched is not None:
            changed.append(view.touched)
        for job in changed:
            heapq.heappush(self._heap, self._key(view.active[job]))
        heap = self._heap
        while heap:
            key = heap[0]
            state = view.active.get(key[2])
            if state is not None and self._key(state) == key:
                return key[2]
            heapq.heappop(heap)
        return None


@dataclass
class ChunkAlgState:
    """
    Private state of the chunk policy.

    ``full`` is a heap ordered by (class, active operation size, job id) and
    holds jobs whose current chunk has not been touched; ``part`` is the
    stack, top at the end. ``insertions`` logs every (job, t) entry into
    ``full``.
    """
    classes: dict = field(default_factory=dict)
    full: list = field(default_factory=list)
    part: list = field(default_factory=list)
    insertions: list = field(default_factory=list)

    @property
    def front_class(self):
        return self.full[0][0]

    @property
    def top(self):
        return self.part[-1] if self.part else None

    @property
    def top_class(self):
        return self.classes[self.part[-1]] if self.part else math.inf

    def insert(self, job, chunk_class, active_size, t):
        self.classes[job] = chunk_class
        heapq.heappush(self.full, (chunk_class, active_size, job))
        self.insertions.append((job, t))

    def push_front(self):
        _, _, job = heapq.heappop(self.full)
        self.part.append(job)
        return job

    def pop_top(self, job):
        if self.part and self.part[-1] == job:
            self.part.pop()
        else:
            self.part.remove(job)

    def finish(self, job):
        self.pop_top(job)
        del self.classes[job]


class ChunkPolicy(Policy):
    """
    Queue/stack scheduler working on chunks.

    Every step: completed jobs leave, the job processed last re-enters the
    queue if its newly active operation has a larger class, and arrivals
    enter the queue with the class of their first operation. Then, while
    the queue holds at least a quarter of the active jobs and its front
    has a strictly smaller class than the stack top, the front is pushed
    onto the stack. The stack top is processed.
    """

    name = 'chunk'

    def __init__(self, strict_checks=None):
        if strict_checks is None:
            strict_checks = settings.OPFLOW_STRICT_CHECKS
        self.strict_checks = strict_checks
        self.state = ChunkAlgState()

    def reset(self):
        self.state = ChunkAlgState()

    def select(self, view):
        state = self.state
        t = view.time

        for job in view.completed:
            state.finish(job)

        if view.touched is not None:
            job = view.touched
            active = view.active[job]
            new_class = class_of(active.active_size)
            if new_class >= state.classes[job] + 1:
                state.pop_top(job)
                state.insert(job, new_class, active.active_size, t)

        for job in view.arrivals:
            active = view.active[job]
            state.insert(job, class_of(active.active_size), active.active_size, t)

        active_count = len(view.active)
        while state.full and 4 * len(state.full) >= active_count and state.front_class < state.top_class:
            job = state.push_front()
            if self.strict_checks:
                self._check_minimum_class(job, t)
            if len(state.part) > 1 and not state.classes[state.part[-1]] < state.classes[state.part[-2]]:
                self._fail('stack-monotone', f"t={t}: stack classes {[state.classes[j] for j in state.part]}")

        if 4 * len(state.full) < active_count - 4:
            self._fail('full-queue-size', f"t={t}: |J_full|={len(state.full)} with {active_count} active jobs")
        if self.strict_checks and state.part:
            self._check_class_dichotomy(t)
        return state.top

    def _check_minimum_class(self, job, t):
        classes = self.state.classes
        if classes[job] > min(classes.values()):
            self._fail('push-minimum-class', f"t={t}: pushed job {job} of class {classes[job]}")

    def _check_class_dichotomy(self, t):
        classes = self.state.classes
        top = self.state.top
        current = classes[top]
        others = [k for job, k in classes.items() if job != top]
        if any(k < current for k in others) and sum(1 for k in others if k <= current) != 1:
            self._fail('class-dichotomy', f"t={t}: processed class {current}, others {sorted(others)}")

    def _fail(self, invariant, message):
        logger.error("Chunk policy invariant %s broken: %s", invariant, message)
        raise InvariantViolation(invariant, message)


@dataclass(frozen=True)
class BruteForceResult:
    total_flow: int
    schedule: tuple


def brute_force_optimal(instance, cap=None):
    """
    Exact minimum total flow time over all integer-slot preemptive schedules.

    Depth-first search over (time, remaining sizes) with memoization. Only
    total sizes matter to a clairvoyant schedule, so operations are merged.

    Args:
        instance: Instance to solve
        cap: Largest total size accepted (defaults to OPFLOW_BRUTE_FORCE_CAP)

    Returns:
        BruteForceResult with the optimum and one optimal schedule
        (job id or None per slot)
    """
    if cap is None:
        cap = settings.OPFLOW_BRUTE_FORCE_CAP
    if instance.total_volume > cap:
        raise BruteForceCapExceeded(f"Total size {instance.total_volume} exceeds the cap {cap}")

    releases = instance.releases
    later = sorted(set(releases))

    def candidates(t, remaining):
        seen = set()
        for job, left in enumerate(remaining):
            if left > 0 and releases[job] <= t and left not in seen:
                seen.add(left)
                yield job

    def next_release(t):
        return next(r for r in later if r > t)

    @lru_cache(maxsize=None)
    def best(t, remaining):
        if not any(remaining):
            return 0
        choices = list(candidates(t, remaining))
        if not choices:
            return best(next_release(t), remaining)
        alive = sum(1 for job, left in enumerate(remaining) if left > 0 and releases[job] <= t)
        return alive + min(best(t + 1, _take(remaining, job)) for job in choices)

    start = tuple(instance.sizes)
    total = best(0, start)

    schedule = []
    t, remaining = 0, start
    while any(remaining):
        choices = list(candidates(t, remaining))
        if not choices:
            gap = next_release(t) - t
            schedule.extend([None] * gap)
            t += gap
            continue
        target = best(t, remaining) - sum(
            1 for job, left in enumerate(remaining) if left > 0 and releases[job] <= t
        )
        job = next(j for j in choices if best(t + 1, _take(remaining, j)) == target)
        schedule.append(job)
        t, remaining = t + 1, _take(remaining, job)
    return BruteForceResult(total, tuple(schedule))


def _take(remaining, job):
    return remaining[:job] + (remaining[job] - 1,) + remaining[job + 1:]


class BruteForcePolicy(Policy):
    """Replays an optimal schedule found by exhaustive search."""

    name = 'bruteforce'
    clairvoyant = True

    def __init__(self, instance):
        self.instance = instance
        self._schedule = None

    def select(self, view):
        if self._schedule is None:
            self._schedule = brute_force_optimal(self.instance).schedule
        t = view.time
        if t >= len(self._schedule):
            raise PolicyError(f"bruteforce schedule ended at t={len(self._schedule)} with jobs left")
        return self._schedule[t]


POLICY_CHOICES = ['srpt', 'ops-srpt', 'chunk', 'bruteforce']


class PolicyFactory:
    """Builds policies by their CLI name"""

    @staticmethod
    def create(name, instance=None, **options):
        if name == 'srpt':
            return SRPTPolicy()
        if name == 'ops-srpt':
            return OperationsSRPTPolicy()
        if name == 'chunk':
            return ChunkPolicy(**options)
        if name == 'bruteforce':
            if instance is None:
                raise ValueError("bruteforce needs the full instance up front")
            return BruteForcePolicy(instance)
        raise ValueError(f"Unknown policy {name!r}; choose from {', '.join(POLICY_CHOICES)}")
