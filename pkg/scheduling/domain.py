"""
Value types shared by every service: jobs, instances, chunks and the
instance parameters m, m1, m2.

Instances serialize to JSON with integer sizes only:
    {"jobs": [{"release": 0, "ops": [4, 2, 4]}, ...], "metadata": {...}}
Job identity is the position in the list.
"""

import json
from dataclasses import dataclass, field
from typing import Any

from django.core.exceptions import ValidationError


def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


@dataclass(frozen=True)
class Job:
    release: int
    ops: tuple[int, ...]

    @property
    def size(self) -> int:
        return sum(self.ops)

    def to_dict(self):
        return {'release': self.release, 'ops': list(self.ops)}


@dataclass(frozen=True)
class Instance:
    jobs: tuple[Job, ...]
    metadata: dict[str, Any] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        for index, job in enumerate(self.jobs):
            _validate_job(index, job.release, job.ops)

    @classmethod
    def of(cls, *jobs, metadata=None):
        """Build an instance from (release, ops) pairs."""
        return cls(
            tuple(Job(release, tuple(ops)) for release, ops in jobs),
            metadata=dict(metadata or {}),
        )

    def __len__(self):
        return len(self.jobs)

    @property
    def releases(self) -> tuple[int, ...]:
        return tuple(job.release for job in self.jobs)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(job.size for job in self.jobs)

    @property
    def total_volume(self) -> int:
        return sum(self.sizes)

    def horizon(self) -> int:
        """Latest time any work-conserving schedule can still be busy."""
        if not self.jobs:
            return 0
        return max(self.releases) + self.total_volume

    def to_dict(self, include_metadata=True):
        data = {'jobs': [job.to_dict() for job in self.jobs]}
        if include_metadata and self.metadata:
            data['metadata'] = self.metadata
        return data

    def to_json(self, include_metadata=True):
        return json.dumps(self.to_dict(include_metadata), sort_keys=True, indent=2) + '\n'

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict) or not isinstance(data.get('jobs'), list):
            raise ValidationError("Instance must be an object with a 'jobs' list")
        jobs = []
        for index, raw in enumerate(data['jobs']):
            if not isinstance(raw, dict) or 'release' not in raw or 'ops' not in raw:
                raise ValidationError(f"Job {index} must have 'release' and 'ops'")
            if not isinstance(raw['ops'], list):
                raise ValidationError(f"Job {index}: 'ops' must be a list")
            _validate_job(index, raw['release'], raw['ops'])
            jobs.append(Job(raw['release'], tuple(raw['ops'])))
        metadata = data.get('metadata') or {}
        if not isinstance(metadata, dict):
            raise ValidationError("'metadata' must be an object")
        return cls(tuple(jobs), metadata=metadata)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"Instance is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


def _validate_job(index, release, ops):
    if not _is_int(release) or release < 0:
        raise ValidationError(f"Job {index}: release must be a nonnegative integer, got {release!r}")
    if not ops:
        raise ValidationError(f"Job {index}: at least one operation is required")
    for position, size in enumerate(ops):
        if not _is_int(size) or size < 0:
            raise ValidationError(
                f"Job {index}: operation {position} must be a nonnegative integer, got {size!r}"
            )
    if sum(ops) < 1:
        raise ValidationError(f"Job {index}: total size must be at least 1")


@dataclass(frozen=True)
class Chunk:
    """
    Maximal run of a job's operations whose classes do not exceed the class
    of the run's first positive operation.

    ``start``/``stop`` index into the job's operations (half open);
    ``offset``/``end`` are the job's cumulative volume before and after it.
    """
    job: int
    start: int
    stop: int
    size: int
    chunk_class: int
    release: int
    offset: int

    @property
    def end(self) -> int:
        return self.offset + self.size

    @property
    def op_count(self) -> int:
        return self.stop - self.start

    @property
    def key(self) -> str:
        return f"{self.job}:{self.start}-{self.stop}"


@dataclass(frozen=True)
class InstanceParams:
    m: int
    m1: int
    m2: int

    def to_dict(self):
        return {'m': self.m, 'm1': self.m1, 'm2': self.m2}
