"""
Integer-timestep single machine simulation.

Each step t runs in a fixed order:
    1. the operation processed during [t-1, t] completes if it ran out;
       successors are revealed and zero-size successors complete at once
    2. jobs released at t arrive and their first operation is revealed
    3. the policy looks at the visible states and names a job (or idles)
    4. that job receives one unit during [t, t+1]

Operation sizes are pulled from the source lazily, at the moment an
operation becomes active, so nothing beyond the active operation exists on
the engine side for a policy to look at.
"""

import logging
from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from types import MappingProxyType
from typing import Optional

from scheduling.domain import Instance, Job
from scheduling.exceptions import HorizonExceeded, InvariantViolation, PolicyError, SchedulingError

logger = logging.getLogger(__name__)


class AdversaryHook:
    """
    Source of jobs whose operation sizes are decided online.

    ``reveal`` is called exactly once per operation, when it becomes active,
    with a read-only view of the run so far. Subclasses must be able to
    ``reset`` so one hook can drive several runs.
    """

    name = 'adversary'

    def reset(self):
        pass

    def release_dates(self):
        raise NotImplementedError

    def has_operation(self, job, index):
        raise NotImplementedError

    def reveal(self, job, index, history):
        raise NotImplementedError

    def horizon_bound(self):
        raise NotImplementedError

    @property
    def metadata(self):
        return {}


class FixedSource(AdversaryHook):
    """Reveals the sizes of a known instance."""

    name = 'instance'

    def __init__(self, instance):
        self.instance = instance

    def release_dates(self):
        return self.instance.releases

    def has_operation(self, job, index):
        return index < len(self.instance.jobs[job].ops)

    def reveal(self, job, index, history):
        return self.instance.jobs[job].ops[index]

    def horizon_bound(self):
        return self.instance.horizon()

    @property
    def metadata(self):
        return self.instance.metadata


class _JobRecord:
    __slots__ = ('job', 'release', 'ops', 'reveal_times', 'index', 'remaining', 'processed', 'completion')

    def __init__(self, job, release):
        self.job = job
        self.release = release
        self.ops = []
        self.reveal_times = []
        self.index = -1
        self.remaining = 0
        self.processed = 0
        self.completion = None


class VisibleJobState:
    """
    What a non-clairvoyant policy may know about an active job: its release,
    the index and sizes of the active operation, the sizes of completed
    operations and the processing received so far.

    The engine updates these objects in place; policies must treat them as
    read-only.
    """

    __slots__ = ('_record',)

    def __init__(self, record):
        self._record = record

    @property
    def job(self) -> int:
        return self._record.job

    @property
    def release(self) -> int:
        return self._record.release

    @property
    def op_index(self) -> int:
        return self._record.index

    @property
    def remaining(self) -> int:
        """Remaining size of the active operation."""
        return self._record.remaining

    @property
    def active_size(self) -> int:
        return self._record.ops[self._record.index]

    @property
    def completed_ops(self) -> tuple[int, ...]:
        return tuple(self._record.ops[:self._record.index])

    @property
    def processed(self) -> int:
        return self._record.processed

    def __repr__(self):
        return f"VisibleJobState(job={self.job}, op={self.op_index}, remaining={self.remaining})"


class RemainingSizeOracle:
    """True remaining job sizes; handed only to clairvoyant policies."""

    def __init__(self, instance, records):
        self._sizes = instance.sizes
        self._records = records

    def remaining(self, job):
        return self._sizes[job] - self._records[job].processed


class RunHistory:
    """Read-only view of a run in progress, given to adversaries."""

    def __init__(self, engine):
        self._engine = engine

    @property
    def time(self):
        return self._engine.time

    @property
    def processed(self):
        """Job processed in each slot so far (None when idle)."""
        return tuple(self._engine.processed)

    def progress(self, job):
        return self._engine.records[job].processed

    def revealed_ops(self, job):
        return tuple(self._engine.records[job].ops)


@dataclass(frozen=True)
class SchedulerView:
    """
    Everything a policy sees at one step.

    ``arrivals`` lists jobs released at this step, ``touched`` is the job
    processed in the previous slot if it is still active and ``completed``
    the jobs that finished since the previous call (an idle gap may lie
    in between); together they let policies keep
    incremental structures instead of rescanning ``active``.
    """
    time: int
    active: MappingProxyType
    arrivals: tuple[int, ...]
    touched: Optional[int]
    completed: tuple[int, ...]
    oracle: Optional[RemainingSizeOracle] = None


@dataclass(frozen=True)
class LocalCount:
    t: int
    alg: int
    opt: int
    ratio: Fraction


class Trace:
    """Complete record of one policy run on one (realized) instance."""

    def __init__(self, policy, instance, processed, counts, completions, reveal_times):
        self.policy = policy
        self.instance = instance
        self.processed = tuple(processed)
        self.counts = tuple(counts)
        self.completions = tuple(completions)
        self.reveal_times = tuple(tuple(times) for times in reveal_times)

    @property
    def releases(self):
        return self.instance.releases

    @property
    def makespan(self):
        return len(self.processed)

    def count(self, t):
        """|J(t)|, zero past the end of the run."""
        return self.counts[t] if 0 <= t < len(self.counts) else 0

    @cached_property
    def flows(self):
        return tuple(c - r for c, r in zip(self.completions, self.releases))

    @cached_property
    def total_flow(self):
        return sum(self.flows)

    @cached_property
    def _slots(self):
        slots = [[] for _ in self.instance.jobs]
        for t, job in enumerate(self.processed):
            if job is not None:
                slots[job].append(t)
        return slots

    def processing_slots(self, job):
        return self._slots[job]

    def y(self, job, t):
        """Processing job received before time t."""
        return bisect_left(self._slots[job], t)

    def progress(self, t):
        return [self.y(job, t) for job in range(len(self.instance.jobs))]

    def is_active(self, job, t):
        return self.releases[job] <= t < self.completions[job]

    def active_at(self, t):
        return [job for job in range(len(self.instance.jobs)) if self.is_active(job, t)]

    def chunk_activation(self, chunk):
        """Time a chunk's first operation became active."""
        if chunk.offset == 0:
            return chunk.release
        return max(chunk.release, self._slots[chunk.job][chunk.offset - 1] + 1)

    @cached_property
    def earliest_peak(self):
        """Earliest t maximizing |J(t)| (0 for an empty run)."""
        if not self.counts:
            return 0
        peak = max(self.counts)
        return self.counts.index(peak)

    def summary(self):
        return {
            'policy': self.policy,
            'total_flow': self.total_flow,
            'flows': list(self.flows),
            'realized_instance': self.instance.to_dict(include_metadata=False),
        }


class SimulationEngine:
    """Runs one policy against one source. Not reusable across threads."""

    def __init__(self, source, policy, horizon_guard=None):
        if isinstance(source, Instance):
            source = FixedSource(source)
        self.source = source
        self.policy = policy
        self.horizon_guard = horizon_guard
        self.time = 0
        self.records = {}
        self.processed = []

    def run(self):
        source, policy = self.source, self.policy
        source.reset()
        policy.reset()
        self.time = 0
        self.processed = []
        if policy.clairvoyant and not isinstance(source, FixedSource):
            raise SchedulingError(f"Policy {policy.name} needs a fixed instance, not an adaptive adversary")

        releases = list(source.release_dates())
        guard = self.horizon_guard if self.horizon_guard is not None else source.horizon_bound()
        pending = sorted(range(len(releases)), key=lambda job: (releases[job], job))
        records = {job: _JobRecord(job, releases[job]) for job in range(len(releases))}
        self.records = records
        history = RunHistory(self)
        oracle = RemainingSizeOracle(source.instance, records) if policy.clairvoyant else None

        active = {}
        views = {}
        counts = []
        last = None
        cursor = 0
        # completions not yet shown to the policy (the machine idled since)
        unseen = []
        logger.info("Simulating %s on %d jobs (%s)", policy.name, len(releases), source.name)

        while True:
            t = self.time
            completed = []
            if last is not None and records[last].remaining == 0:
                self._advance(records[last], history, completed)
            for job in completed:
                del active[job]
                del views[job]
            completed = unseen + completed

            arrivals = []
            while cursor < len(pending) and releases[pending[cursor]] <= t:
                job = pending[cursor]
                cursor += 1
                record = records[job]
                arrived = []
                self._advance(record, history, arrived)
                if arrived:
                    raise InvariantViolation('job-size', f"job {job} has total size 0")
                active[job] = record
                views[job] = VisibleJobState(record)
                arrivals.append(job)

            if not active:
                if cursor == len(pending):
                    break
                # idle until the next release
                gap = releases[pending[cursor]] - t
                self.processed.extend([None] * gap)
                counts.extend([0] * gap)
                self.time += gap
                last = None
                unseen = completed
                continue

            if t >= guard:
                raise HorizonExceeded(f"{policy.name} still has {len(active)} active jobs at horizon guard {guard}")

            view = SchedulerView(
                time=t,
                active=MappingProxyType(views),
                arrivals=tuple(arrivals),
                touched=last if last in active else None,
                completed=tuple(completed),
                oracle=oracle,
            )
            choice = policy.select(view)
            unseen = []
            if choice is not None and choice not in active:
                raise PolicyError(f"{policy.name} chose job {choice} at t={t}, which is not active")

            counts.append(len(active))
            self.processed.append(choice)
            if choice is not None:
                record = records[choice]
                record.remaining -= 1
                record.processed += 1
            last = choice
            self.time += 1

        realized = Instance(
            tuple(Job(records[job].release, tuple(records[job].ops)) for job in range(len(releases))),
            metadata=dict(source.metadata),
        )
        trace = Trace(
            policy=policy.name,
            instance=realized,
            processed=self.processed,
            counts=counts,
            completions=[records[job].completion for job in range(len(releases))],
            reveal_times=[records[job].reveal_times for job in range(len(releases))],
        )
        logger.info("%s finished at t=%d with total flow %d", policy.name, trace.makespan, trace.total_flow)
        return trace

    def _advance(self, record, history, completed):
        """Reveal operations after the current one until a positive one is active."""
        while True:
            index = record.index + 1
            if not self.source.has_operation(record.job, index):
                record.completion = self.time
                record.remaining = 0
                completed.append(record.job)
                return
            size = self.source.reveal(record.job, index, history)
            if not isinstance(size, int) or isinstance(size, bool) or size < 0:
                raise InvariantViolation(
                    'revealed-size', f"operation {index} of job {record.job} revealed as {size!r}"
                )
            record.ops.append(size)
            record.reveal_times.append(self.time)
            record.index = index
            if size > 0:
                record.remaining = size
                return


def simulate(source, policy, horizon_guard=None):
    """
    Run ``policy`` on ``source`` (an Instance or an AdversaryHook).

    Returns:
        Trace whose ``instance`` is the realized instance
    """
    return SimulationEngine(source, policy, horizon_guard).run()


def local_counts(trace_a, trace_b):
    """
    Per-t active counts of two runs on the same realized instance.

    Returns:
        list of LocalCount; the ratio is 1 where both counts are 0
    """
    if trace_a.instance != trace_b.instance:
        raise ValueError("Traces come from different realized instances")
    timeline = []
    for t in range(max(trace_a.makespan, trace_b.makespan)):
        a, b = trace_a.count(t), trace_b.count(t)
        if b == 0 and a > 0:
            raise InvariantViolation('baseline-idle', f"t={t}: {trace_a.policy} has {a} jobs, {trace_b.policy} has none")
        timeline.append(LocalCount(t, a, b, Fraction(a, b) if b else Fraction(1)))
    return timeline
