"""
Dual-fitting certificate for the chunk policy at a single time tau.

For every crucial class k (some full chunk of class k is active at tau)
one covering set gets a positive dual value:

    |F(k)| <  6*m2:  y(S_{<k})  = |F(k)| / (3*m2*e(S_{<k}))
    |F(k)| >= 6*m2:  y(S_{<=k}) = 1 / (m2 * 2**k)

All arithmetic uses Fraction. Hard verdicts are only issued when the
assumption gate holds at tau; otherwise the numbers are reported as-is.
"""

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction

from django.conf import settings

from scheduling.exceptions import SchedulingError
from scheduling.services.accounting import ChunkAccounting, excess

logger = logging.getLogger(__name__)

SLACK_LIMIT = 14
BELOW_FAMILY_LIMIT = 10
AT_MOST_FAMILY_LIMIT = 4
FULL_THRESHOLD = 6


@dataclass
class AssumptionReport:
    tau: int
    per_class: dict
    crucial_classes: list
    idle_windows: list = field(default_factory=list)

    @property
    def holds(self):
        return all(self.per_class.values())

    @property
    def crucial_holds(self):
        """Per-class property for every crucial class, each over a busy window."""
        return not self.idle_windows and all(self.per_class.get(k, True) for k in self.crucial_classes)

    def to_dict(self):
        return {
            'tau': self.tau,
            'holds': self.holds,
            'holds_for_crucial_classes': self.crucial_holds,
            'per_class': {str(k): ok for k, ok in sorted(self.per_class.items())},
            'idle_windows': list(self.idle_windows),
        }


def check_reduced_assumption(trace, decomposition, tau, accounting=None):
    """
    For each class k from 0 up to the largest class of chunks active at
    tau whose t_{>=k} is defined: every active chunk that became active
    after t_{>=k} has class < k. Classes without a qualifying slot pass.

    The report also lists the crucial classes k whose window
    [t_{>k} + 1, tau) contains an idle slot. Excess bounds over such a
    window do not follow and those classes close the gate too.

    Returns:
        AssumptionReport with the per-class breakdown
    """
    accounting = accounting or ChunkAccounting(trace, decomposition, tau)
    active = accounting.active_chunks
    per_class = {}
    if active:
        activation = {chunk: accounting.activation(chunk) for chunk in active}
        high = max(chunk.chunk_class for chunk in active)
        for k in range(high + 1):
            boundary = accounting.t_geq(k)
            if not accounting.boundary_defined(boundary):
                per_class[k] = True
                continue
            per_class[k] = all(
                chunk.chunk_class < k for chunk in active if activation[chunk] > boundary
            )
    idle_windows = [k for k in accounting.crucial_classes if accounting.idle_after(accounting.t_gt(k))]
    return AssumptionReport(tau, per_class, accounting.crucial_classes, idle_windows)


@dataclass
class DualEntry:
    chunk_class: int
    family: str  # 'below' for S_{<k}, 'at_most' for S_{<=k}
    full_count: int
    excess: int
    y: Fraction
    members: frozenset = field(repr=False)

    def to_dict(self):
        return {
            'class': self.chunk_class,
            'set': 'S_<k' if self.family == 'below' else 'S_<=k',
            'full_chunks': self.full_count,
            'set_size': len(self.members),
            'excess': self.excess,
            'y': str(self.y),
        }


@dataclass
class DualCertificate:
    tau: int
    active_jobs: int
    m2: int
    entries: list
    degenerate_classes: list
    slacks: dict
    below_sums: dict
    at_most_sums: dict
    assumption: AssumptionReport
    busy_period: bool = False

    @property
    def objective(self):
        return sum((entry.excess * entry.y for entry in self.entries), Fraction(0))

    @property
    def objective_bound(self):
        if self.m2 == 0:
            return Fraction(0)
        return Fraction(self.active_jobs, 12 * self.m2) - Fraction(1, 3 * self.m2)

    @property
    def max_slack(self):
        return max(self.slacks.values(), default=Fraction(0))

    @property
    def max_below_sum(self):
        return max(self.below_sums.values(), default=Fraction(0))

    @property
    def max_at_most_sum(self):
        return max(self.at_most_sums.values(), default=Fraction(0))

    @property
    def feasible(self):
        return self.max_slack <= SLACK_LIMIT

    @property
    def gated(self):
        """Slack limits are hard claims at this tau."""
        return self.assumption.crucial_holds

    @property
    def objective_gated(self):
        return self.gated and not self.degenerate_classes

    def violations(self):
        """Broken hard claims; always empty when the gate is closed."""
        found = []
        if self.gated:
            if self.max_slack > SLACK_LIMIT:
                found.append(f"slack {self.max_slack} > {SLACK_LIMIT}")
            if self.max_below_sum > BELOW_FAMILY_LIMIT:
                found.append(f"S_<k partial sum {self.max_below_sum} > {BELOW_FAMILY_LIMIT}")
            if self.max_at_most_sum >= AT_MOST_FAMILY_LIMIT:
                found.append(f"S_<=k partial sum {self.max_at_most_sum} >= {AT_MOST_FAMILY_LIMIT}")
        if self.objective_gated and self.objective < self.objective_bound:
            found.append(f"objective {self.objective} < {self.objective_bound}")
        return found

    def to_dict(self):
        return {
            'tau': self.tau,
            'active_jobs': self.active_jobs,
            'm2': self.m2,
            'y': [entry.to_dict() for entry in self.entries],
            'objective': str(self.objective),
            'objective_bound': str(self.objective_bound),
            'objective_ok': self.objective >= self.objective_bound,
            'max_slack': str(self.max_slack),
            'max_slack_S_<k': str(self.max_below_sum),
            'max_slack_S_<=k': str(self.max_at_most_sum),
            'feasible_at_1/14': self.feasible,
            'assumption': self.assumption.to_dict(),
            'degenerate_classes': list(self.degenerate_classes),
            'hard_checks': self.gated,
            'busy_period': self.busy_period,
            'violations': self.violations(),
        }


def build_dual_certificate(trace, decomposition, tau, accounting=None, assumption=None):
    """
    Build the dual solution at tau from an algorithm trace.

    Args:
        trace: Trace of the chunk policy
        decomposition: ChunkDecomposition of the trace's realized instance
        tau: Time to certify
        accounting: Precomputed ChunkAccounting at tau (optional)
        assumption: Precomputed AssumptionReport at tau (optional)

    Returns:
        DualCertificate; degenerate excess is reported, never raised
    """
    accounting = accounting or ChunkAccounting(trace, decomposition, tau)
    assumption = assumption or check_reduced_assumption(trace, decomposition, tau, accounting)
    m2 = decomposition.params.m2

    entries = []
    degenerate = []
    for k in accounting.crucial_classes:
        count = len(accounting.full[k])
        if count < FULL_THRESHOLD * m2:
            members = accounting.s_lt(k)
            value = excess(members, tau)
            if value == 0:
                degenerate.append(k)
                y = Fraction(0)
            else:
                y = Fraction(count, 3 * m2 * value)
            entries.append(DualEntry(k, 'below', count, value, y, frozenset(members)))
        else:
            members = accounting.s_le(k)
            value = excess(members, tau)
            entries.append(DualEntry(k, 'at_most', count, value, Fraction(1, m2 * 2 ** k), frozenset(members)))

    below_sums, at_most_sums, slacks = {}, {}, {}
    for chunk in accounting.released_chunks:
        below = sum(
            (min(chunk.size, e.excess) * e.y for e in entries if e.family == 'below' and chunk in e.members),
            Fraction(0),
        )
        at_most = sum(
            (min(chunk.size, e.excess) * e.y for e in entries if e.family == 'at_most' and chunk in e.members),
            Fraction(0),
        )
        below_sums[chunk.key] = below
        at_most_sums[chunk.key] = at_most
        slacks[chunk.key] = below + at_most

    if degenerate:
        logger.info("tau=%d: degenerate excess for classes %s", tau, degenerate)
    return DualCertificate(
        tau=tau,
        active_jobs=len(accounting.active_jobs),
        m2=m2,
        entries=entries,
        degenerate_classes=degenerate,
        slacks=slacks,
        below_sums=below_sums,
        at_most_sums=at_most_sums,
        assumption=assumption,
        busy_period=accounting.busy_period,
    )


@dataclass
class ExcessLemmaReport:
    tau: int
    rows: list
    violations: list

    @property
    def passed(self):
        return not self.violations

    def to_dict(self):
        return {'tau': self.tau, 'passed': self.passed, 'rows': self.rows, 'violations': self.violations}


def verify_excess_lemmas(accounting, assumption):
    """
    Integer check of both excess lower bounds for every crucial class k:
        e(S_{<k})  >= full volume of classes < k
        e(S_{<=k}) >= full volume of classes <= k  -  2 * m2 * 2**(k+1)

    Raises:
        SchedulingError: if the assumption was not checked or does not hold
    """
    if assumption is None:
        raise SchedulingError("Excess bounds need the assumption check at the same tau")
    if not assumption.crucial_holds:
        raise SchedulingError(f"Assumption fails at tau={assumption.tau}; excess bounds do not apply")

    tau = accounting.tau
    m2 = accounting.decomposition.params.m2
    rows, violations = [], []
    for k in accounting.crucial_classes:
        below = excess(accounting.s_lt(k), tau)
        below_needed = accounting.full_volume_below(k)
        at_most = excess(accounting.s_le(k), tau)
        at_most_needed = accounting.full_volume_below(k, inclusive=True) - 2 * m2 * 2 ** (k + 1)
        rows.append({
            'class': k,
            'e(S_<k)': below,
            'needed_<k': below_needed,
            'e(S_<=k)': at_most,
            'needed_<=k': at_most_needed,
        })
        if below < below_needed:
            violations.append(f"class {k}: e(S_<k)={below} < {below_needed}")
        if at_most < at_most_needed:
            violations.append(f"class {k}: e(S_<=k)={at_most} < {at_most_needed}")
    return ExcessLemmaReport(tau, rows, violations)


@dataclass
class PrimalReport:
    tau: int
    checked: int
    violations: list

    @property
    def passed(self):
        return not self.violations

    def to_dict(self):
        return {'tau': self.tau, 'checked': self.checked, 'passed': self.passed, 'violations': self.violations[:20]}


def verify_primal_feasibility_sampled(opt_trace, decomposition, tau, seed, count=None, families=()):
    """
    Check covering constraints sum_{c in S} min(p_c, e(S)) * x_c >= e(S) for
    the primal point x_c = 1 iff chunk c is alive at tau in ``opt_trace``.

    Sets checked: every per-job chunk set, the set of all released chunks,
    ``families`` (e.g. the certificate's S sets) and ``count`` random
    subsets drawn with ``random.Random(seed)``.
    """
    if count is None:
        count = settings.OPFLOW_PRIMAL_SAMPLES
    released = [c for c in decomposition.all_chunks if c.release <= tau]
    alive = set()
    for job in opt_trace.active_at(tau):
        alive.update(decomposition.alive_chunks(job, opt_trace.y(job, tau)))

    def check(chunks):
        value = excess(chunks, tau)
        if value == 0:
            return None
        covered = sum(min(c.size, value) for c in chunks if c in alive)
        if covered < value:
            return f"{len(chunks)} chunks: covered {covered} < excess {value}"
        return None

    candidates = [list(family) for family in families]
    candidates.extend(
        [c for c in chunks if c.release <= tau] for chunks in decomposition.by_job
    )
    candidates.append(released)

    rng = random.Random(seed)
    if released:
        for _ in range(count):
            size = rng.randint(1, len(released))
            candidates.append(rng.sample(released, size))

    violations = []
    checked = 0
    for chunks in candidates:
        if not chunks:
            continue
        checked += 1
        problem = check(chunks)
        if problem:
            violations.append(problem)
    if violations:
        logger.error("tau=%d: %d primal constraints violated", tau, len(violations))
    return PrimalReport(tau, checked, violations)
