import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from scheduling.services.simulation import local_counts


@dataclass
class RunConfig:
    """Everything needed to re-execute a subcommand."""
    subcommand: str
    instance_paths: list = field(default_factory=list)
    gen: Optional[dict] = None
    policies: list = field(default_factory=list)
    tau: Optional[str] = None
    out: Optional[str] = None
    seed: int = 0
    jobs: int = 1
    options: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict) or 'subcommand' not in data:
            raise ValueError("RunConfig must be an object with a 'subcommand'")
        known = {name: data[name] for name in cls.__dataclass_fields__ if name in data}
        return cls(**known)

    def to_json(self):
        return dump_json(self.to_dict())


def dump_json(data):
    """Canonical JSON text: sorted keys, fixed indent, trailing newline."""
    return json.dumps(data, sort_keys=True, indent=2) + '\n'


def trace_csv(alg_trace, opt_trace):
    """
    One row per timestep: t, processed_job, alg_active, opt_active, ratio.
    Idle slots leave processed_job empty; the ratio is an exact fraction.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(['t', 'processed_job', 'alg_active', 'opt_active', 'ratio'])
    for point in local_counts(alg_trace, opt_trace):
        job = alg_trace.processed[point.t] if point.t < alg_trace.makespan else None
        writer.writerow([point.t, '' if job is None else job, point.alg, point.opt, str(point.ratio)])
    return buffer.getvalue()


def write_outputs(out_dir, outputs):
    """Write ``{file name: text}`` under ``out_dir``; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in sorted(outputs):
        path = out_dir / name
        path.write_text(outputs[name])
        paths.append(path)
    return paths


def digest_outputs(outputs):
    """sha256 over file names and contents, in sorted name order."""
    digest = hashlib.sha256()
    for name in sorted(outputs):
        digest.update(name.encode())
        digest.update(b'\0')
        digest.update(outputs[name].encode())
        digest.update(b'\0')
    return digest.hexdigest()


def read_outputs(out_dir, names):
    """Current contents of previously written outputs; missing files are skipped."""
    out_dir = Path(out_dir)
    return {name: (out_dir / name).read_text() for name in names if (out_dir / name).exists()}
