from bisect import bisect_right
from functools import cached_property

from scheduling.domain import Chunk, InstanceParams


def class_of(size):
    """
    Class of a positive operation size: floor(log2(size)), exact on integers.

    Raises:
        ValueError: for sizes below 1 (zero-size operations have no class)
    """
    if size < 1:
        raise ValueError(f"Operations of size {size} have no class")
    return size.bit_length() - 1


class ChunkService:
    """Chunk decomposition of jobs and the instance parameters derived from it"""

    @staticmethod
    def decompose(job, job_index=0):
        """
        Split a job's operations into chunks.

        A chunk is the maximal prefix of the remaining operations whose
        classes do not exceed the class of its first operation. Zero-size
        operations never start a chunk; leading zeros belong to the first
        chunk, whose class is that of its first positive operation.

        Args:
            job: Job instance
            job_index: Position of the job in its instance

        Returns:
            list of Chunk in operation order
        """
        bounds = []  # (start, chunk_class)
        current = None
        for position, size in enumerate(job.ops):
            if size == 0:
                continue
            k = class_of(size)
            if current is None:
                bounds.append((0, k))
                current = k
            elif k > current:
                bounds.append((position, k))
                current = k
        if not bounds:
            raise ValueError(f"Job {job_index} has no positive operation")

        chunks = []
        offset = 0
        for number, (start, k) in enumerate(bounds):
            stop = bounds[number + 1][0] if number + 1 < len(bounds) else len(job.ops)
            size = sum(job.ops[start:stop])
            chunks.append(Chunk(
                job=job_index,
                start=start,
                stop=stop,
                size=size,
                chunk_class=k,
                release=job.release,
                offset=offset,
            ))
            offset += size
        return chunks

    @staticmethod
    def instance_params(instance):
        """
        Returns:
            InstanceParams with m (max operations per job), m1 (max chunks
            per job) and m2 (max operations per chunk, zeros included).
            All three are 0 for an instance without jobs.
        """
        return ChunkDecomposition(instance).params


class ChunkDecomposition:
    """Chunks of every job of an instance, with offset lookups."""

    def __init__(self, instance):
        self.instance = instance
        self.by_job = [
            ChunkService.decompose(job, index) for index, job in enumerate(instance.jobs)
        ]
        self._ends = [[chunk.end for chunk in chunks] for chunks in self.by_job]

    def chunks(self, job):
        return self.by_job[job]

    @cached_property
    def all_chunks(self):
        return [chunk for chunks in self.by_job for chunk in chunks]

    @cached_property
    def params(self):
        if not self.by_job:
            return InstanceParams(0, 0, 0)
        return InstanceParams(
            m=max(len(job.ops) for job in self.instance.jobs),
            m1=max(len(chunks) for chunks in self.by_job),
            m2=max(chunk.op_count for chunk in self.all_chunks),
        )

    def chunk_index_at(self, job, progress):
        """Index of the chunk holding volume offset ``progress`` of the job."""
        return bisect_right(self._ends[job], progress)

    def chunk_at(self, job, progress):
        return self.by_job[job][self.chunk_index_at(job, progress)]

    def alive_chunks(self, job, progress):
        """Chunks of the job not yet completed after ``progress`` units."""
        return self.by_job[job][self.chunk_index_at(job, progress):]
