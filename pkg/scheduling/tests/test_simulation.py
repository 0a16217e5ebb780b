from fractions import Fraction

from django.test import SimpleTestCase
from hypothesis import given, settings as hypothesis_settings
from hypothesis.extra.django import SimpleTestCase as PropertyTestCase

from scheduling.domain import Instance
from scheduling.exceptions import HorizonExceeded, InvariantViolation, PolicyError
from scheduling.services.generators import det_lb_adversary
from scheduling.services.policies import OperationsSRPTPolicy, Policy, SRPTPolicy
from scheduling.services.simulation import AdversaryHook, local_counts, simulate
from scheduling.tests.strategies import instances


class IdlePolicy(Policy):
    name = 'idle'

    def select(self, view):
        return None


class StrayPolicy(Policy):
    name = 'stray'

    def select(self, view):
        return 99


class RecordingPolicy(OperationsSRPTPolicy):
    """Keeps every view it was shown."""

    name = 'recording'

    def reset(self):
        super().reset()
        self.seen = []
        self.completions = []

    def select(self, view):
        self.completions.append((view.time, view.completed))
        self.seen.append({job: (s.op_index, s.remaining, s.completed_ops) for job, s in view.active.items()})
        return super().select(view)


class RecordingSource(AdversaryHook):
    """Logs which operations were asked for, and when."""

    name = 'recording'

    def __init__(self, ops):
        self.ops = ops
        self.reset()

    def reset(self):
        self.asked = []
        self.history = []

    def release_dates(self):
        return [0] * len(self.ops)

    def has_operation(self, job, index):
        return index < len(self.ops[job])

    def reveal(self, job, index, history):
        self.asked.append((job, index, history.time))
        self.history.append((history.revealed_ops(job), history.progress(job), history.processed))
        return self.ops[job][index]

    def horizon_bound(self):
        return sum(size for ops in self.ops for size in ops if size > 0) + 1


class EngineTests(SimpleTestCase):

    def test_single_job_flow(self):
        trace = simulate(Instance.of((0, [5])), SRPTPolicy())
        self.assertEqual(trace.flows, (5,))
        self.assertEqual(trace.total_flow, 5)
        self.assertEqual(trace.processed, (0, 0, 0, 0, 0))

    def test_srpt_preempts_for_short_arrival(self):
        trace = simulate(Instance.of((0, [3]), (1, [1])), SRPTPolicy())
        self.assertEqual(trace.flows, (4, 1))
        self.assertEqual(trace.total_flow, 5)
        self.assertEqual(trace.processed, (0, 1, 0, 0))

    def test_zero_operations_cascade(self):
        trace = simulate(Instance.of((0, [1, 0, 0, 2])), OperationsSRPTPolicy())
        self.assertEqual(trace.reveal_times[0], (0, 1, 1, 1))
        self.assertEqual(trace.completions, (3,))

    def test_idle_gap_before_release(self):
        trace = simulate(Instance.of((0, [1]), (4, [2])), SRPTPolicy())
        self.assertEqual(trace.processed, (0, None, None, None, 1, 1))
        self.assertEqual(trace.counts, (1, 0, 0, 0, 1, 1))
        self.assertEqual(trace.count(40), 0)

    def test_completion_before_idle_gap_reaches_policy(self):
        policy = RecordingPolicy()
        simulate(Instance.of((0, [1]), (3, [1])), policy)
        self.assertEqual(policy.completions, [(0, ()), (3, (0,))])

    def test_empty_instance(self):
        trace = simulate(Instance(()), SRPTPolicy())
        self.assertEqual(trace.makespan, 0)
        self.assertEqual(trace.total_flow, 0)
        self.assertEqual(local_counts(trace, trace), [])

    def test_idle_policy_hits_horizon_guard(self):
        with self.assertRaises(HorizonExceeded):
            simulate(Instance.of((0, [2])), IdlePolicy())

    def test_choice_outside_active_set(self):
        with self.assertRaises(PolicyError) as raised:
            simulate(Instance.of((0, [2])), StrayPolicy())
        self.assertEqual(raised.exception.invariant, 'policy-choice')

    def test_trace_accessors(self):
        trace = simulate(Instance.of((0, [3]), (1, [1])), SRPTPolicy())
        self.assertEqual(trace.processing_slots(0), [0, 2, 3])
        self.assertEqual(trace.progress(2), [1, 1])
        self.assertEqual(trace.active_at(1), [0, 1])
        self.assertEqual(trace.active_at(2), [0])
        self.assertEqual(trace.earliest_peak, 1)


class VisibilityTests(SimpleTestCase):

    def test_operations_are_revealed_only_when_active(self):
        source = RecordingSource([[1, 1], [2, 0]])
        simulate(source, OperationsSRPTPolicy())
        self.assertEqual(source.asked, [(0, 0, 0), (1, 0, 0), (0, 1, 1), (1, 1, 4)])

    def test_adversary_sees_run_so_far(self):
        source = RecordingSource([[1, 1], [2, 0]])
        simulate(source, OperationsSRPTPolicy())
        self.assertEqual(source.history[2], ((1,), 1, (0,)))
        self.assertEqual(source.history[3], ((2,), 2, (0, 0, 1, 1)))

    def test_policy_sees_no_future_operation(self):
        policy = RecordingPolicy()
        simulate(Instance.of((0, [1, 5]), (0, [2])), policy)
        self.assertEqual(policy.seen[0], {0: (0, 1, ()), 1: (0, 2, ())})
        self.assertEqual(policy.seen[1], {0: (1, 5, (1,)), 1: (0, 2, ())})

    def test_clairvoyant_policy_rejects_adversary(self):
        with self.assertRaisesMessage(Exception, 'needs a fixed instance'):
            simulate(det_lb_adversary(1, 2), SRPTPolicy())

    def test_bad_revealed_size(self):
        with self.assertRaises(InvariantViolation) as raised:
            simulate(RecordingSource([[1, -3]]), OperationsSRPTPolicy())
        self.assertEqual(raised.exception.invariant, 'revealed-size')


class LocalCountTests(SimpleTestCase):

    def test_identical_traces(self):
        trace = simulate(Instance.of((0, [3]), (1, [1]), (1, [2])), SRPTPolicy())
        self.assertTrue(all(point.ratio == 1 for point in local_counts(trace, trace)))

    def test_single_job_counts_agree(self):
        instance = Instance.of((2, [1, 3]))
        alg = simulate(instance, OperationsSRPTPolicy())
        opt = simulate(instance, SRPTPolicy())
        self.assertTrue(all(point.alg == point.opt for point in local_counts(alg, opt)))

    def test_det_lb_at_small_scale(self):
        alg = simulate(det_lb_adversary(2, 2), OperationsSRPTPolicy())
        opt = simulate(alg.instance, SRPTPolicy())
        self.assertEqual([job.ops for job in alg.instance.jobs],
                         [(1, 1), (1, 1), (1, 0), (1, 0), (1, 0), (1, 0)])
        point = local_counts(alg, opt)[4]
        self.assertEqual((point.alg, point.opt), (4, 2))
        self.assertEqual(point.ratio, Fraction(2))

    def test_different_instances_rejected(self):
        a = simulate(Instance.of((0, [1])), SRPTPolicy())
        b = simulate(Instance.of((0, [2])), SRPTPolicy())
        with self.assertRaises(ValueError):
            local_counts(a, b)


class SimulationProperties(PropertyTestCase):

    @given(instances())
    @hypothesis_settings(max_examples=150, deadline=None)
    def test_work_is_conserved(self, instance):
        for policy in (SRPTPolicy(), OperationsSRPTPolicy()):
            trace = simulate(instance, policy)
            self.assertEqual(trace.instance, instance)
            for job, spec in enumerate(instance.jobs):
                self.assertEqual(len(trace.processing_slots(job)), spec.size)
                self.assertGreaterEqual(trace.completions[job], spec.release + spec.size)
                self.assertTrue(all(t >= spec.release for t in trace.processing_slots(job)))
            # the machine idles only when nothing is active
            for t, job in enumerate(trace.processed):
                self.assertEqual(job is None, trace.count(t) == 0)

    @given(instances(max_release=30))
    @hypothesis_settings(max_examples=150, deadline=None)
    def test_total_flow_is_sum_of_active_counts(self, instance):
        for policy in (SRPTPolicy(), OperationsSRPTPolicy()):
            trace = simulate(instance, policy)
            self.assertEqual(trace.total_flow, sum(trace.counts))
