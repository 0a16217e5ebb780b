"""
Chunk-level bookkeeping of a schedule at a time tau: alive, active and full
chunks, crucial classes, the boundary times t_{>=k} / t_{>k} and the chunk
sets S_{<k} / S_{<=k} used by the dual certificate.
"""

import logging
from collections import defaultdict
from functools import cached_property

from scheduling.exceptions import InvariantViolation

logger = logging.getLogger(__name__)


def excess(chunks, tau):
    """
    Volume of a chunk set beyond the time elapsed since its earliest job
    release: max(0, p(S) - (tau - l_S)). The empty set has excess 0.
    """
    chunks = list(chunks)
    if not chunks:
        return 0
    earliest = min(chunk.release for chunk in chunks)
    if max(chunk.release for chunk in chunks) > tau:
        raise ValueError(f"Excess at {tau} is only defined for chunks of jobs released by then")
    return max(0, sum(chunk.size for chunk in chunks) - (tau - earliest))


def opt_alive_chunks(opt_trace, decomposition, tau):
    """
    Number of chunks alive at tau in a (reference) schedule.

    Raises:
        InvariantViolation: if the count exceeds m1 times the number of
            active jobs
    """
    active = opt_trace.active_at(tau)
    alive = sum(
        len(decomposition.alive_chunks(job, opt_trace.y(job, tau))) for job in active
    )
    if alive > decomposition.params.m1 * len(active):
        raise InvariantViolation(
            'alive-chunks', f"tau={tau}: {alive} alive chunks for {len(active)} active jobs"
        )
    return alive


class ChunkAccounting:
    """
    Chunk view of an algorithm schedule at time ``tau``.

    Boundary times look back over every slot before ``tau`` and are -1 when
    no slot qualifies. With ``busy_period`` the look-back stops at the start
    of the busy period containing ``tau``: jobs released before it have
    completed, no S set contains their chunks and boundary times fall back
    to ``busy_start - 1``.
    """

    def __init__(self, trace, decomposition, tau, busy_period=False):
        if tau < 0:
            raise ValueError("tau must be nonnegative")
        self.trace = trace
        self.decomposition = decomposition
        self.tau = tau
        self.busy_period = busy_period
        self.active_jobs = trace.active_at(tau)
        self.progress = {job: trace.y(job, tau) for job in self.active_jobs}
        self.slot_classes = self._slot_classes()
        self.busy_start = self._busy_start()
        self.window_start = self.busy_start if busy_period else 0
        logger.debug("tau=%d: %d active jobs, busy period from %d", tau, len(self.active_jobs), self.busy_start)

    def _slot_classes(self):
        """Class of the chunk processed in each slot before tau (None when idle)."""
        done = [0] * len(self.trace.instance.jobs)
        classes = []
        for t in range(self.tau):
            job = self.trace.processed[t] if t < self.trace.makespan else None
            if job is None:
                classes.append(None)
                continue
            classes.append(self.decomposition.chunk_at(job, done[job]).chunk_class)
            done[job] += 1
        return classes

    def _busy_start(self):
        for t in range(self.tau - 1, -1, -1):
            if self.slot_classes[t] is None:
                return t + 1
        return 0

    @cached_property
    def active_chunks(self):
        return [self.decomposition.chunk_at(job, self.progress[job]) for job in self.active_jobs]

    @cached_property
    def alive_chunks(self):
        return [
            chunk
            for job in self.active_jobs
            for chunk in self.decomposition.alive_chunks(job, self.progress[job])
        ]

    @cached_property
    def full(self):
        """Full active chunks grouped by class."""
        groups = defaultdict(list)
        for chunk in self.active_chunks:
            if chunk.offset == self.progress[chunk.job]:
                groups[chunk.chunk_class].append(chunk)
        return dict(groups)

    @cached_property
    def crucial_classes(self):
        return sorted(self.full)

    @cached_property
    def released_chunks(self):
        """Chunks of jobs released in the analysis window, up to tau."""
        return [
            chunk for chunk in self.decomposition.all_chunks
            if self.window_start <= chunk.release <= self.tau
        ]

    def activation(self, chunk):
        return self.trace.chunk_activation(chunk)

    def _last_slot(self, qualifies):
        for t in range(self.tau - 1, self.window_start - 1, -1):
            k = self.slot_classes[t]
            if k is not None and qualifies(k):
                return t
        return self.window_start - 1

    def t_geq(self, k):
        return self._last_slot(lambda processed: processed >= k)

    def t_gt(self, k):
        return self._last_slot(lambda processed: processed > k)

    def boundary_defined(self, boundary):
        return boundary >= self.window_start

    def idle_after(self, boundary):
        """Whether the machine idled in some slot of [boundary + 1, tau)."""
        return any(k is None for k in self.slot_classes[boundary + 1:])

    def s_lt(self, k):
        start = self.t_geq(k) + 1
        return [c for c in self.released_chunks if c.chunk_class < k and c.release >= start]

    def s_le(self, k):
        start = self.t_gt(k) + 1
        return [c for c in self.released_chunks if c.chunk_class <= k and c.release >= start]

    def full_volume_below(self, k, inclusive=False):
        """Total size of full active chunks of class < k (<= k if inclusive)."""
        return sum(
            chunk.size
            for chunk_class, chunks in self.full.items()
            if chunk_class < k or (inclusive and chunk_class == k)
            for chunk in chunks
        )
