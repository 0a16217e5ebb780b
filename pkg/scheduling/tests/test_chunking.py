from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from hypothesis import given, settings as hypothesis_settings, strategies as st
from hypothesis.extra.django import SimpleTestCase as PropertyTestCase

from scheduling.domain import Instance, InstanceParams, Job
from scheduling.services.chunking import ChunkDecomposition, ChunkService, class_of
from scheduling.tests.strategies import operations

FIGURE_JOB = (4, 2, 4, 8, 4, 8, 2, 4, 32, 8, 2, 32)


class ClassOfTests(SimpleTestCase):

    def test_powers_and_neighbours(self):
        self.assertEqual(class_of(1), 0)
        self.assertEqual(class_of(7), 2)
        self.assertEqual(class_of(8), 3)
        self.assertEqual(class_of(2 ** 40 - 1), 39)

    def test_zero_has_no_class(self):
        with self.assertRaises(ValueError):
            class_of(0)


class DecomposeTests(SimpleTestCase):

    def test_three_chunk_job(self):
        chunks = ChunkService.decompose(Job(0, FIGURE_JOB))
        self.assertEqual([(c.start, c.stop) for c in chunks], [(0, 3), (3, 8), (8, 12)])
        self.assertEqual([c.chunk_class for c in chunks], [2, 3, 5])
        self.assertEqual([c.size for c in chunks], [10, 26, 74])
        self.assertEqual([c.offset for c in chunks], [0, 10, 36])

    def test_equal_classes_form_one_chunk(self):
        chunks = ChunkService.decompose(Job(0, (2, 3, 2)))
        self.assertEqual(len(chunks), 1)
        self.assertEqual(chunks[0].chunk_class, 1)

    def test_increasing_classes_are_singletons(self):
        chunks = ChunkService.decompose(Job(0, (1, 2, 4)))
        self.assertEqual([c.chunk_class for c in chunks], [0, 1, 2])
        self.assertTrue(all(c.op_count == 1 for c in chunks))

    def test_zeros_never_start_a_chunk(self):
        chunks = ChunkService.decompose(Job(3, (0, 0, 4, 0, 8)))
        self.assertEqual([(c.start, c.stop) for c in chunks], [(0, 4), (4, 5)])
        self.assertEqual([c.chunk_class for c in chunks], [2, 3])
        self.assertEqual({c.release for c in chunks}, {3})

    def test_chunk_key(self):
        chunk = ChunkService.decompose(Job(0, (1, 2)), job_index=7)[1]
        self.assertEqual(chunk.key, '7:1-2')


class InstanceParamsTests(SimpleTestCase):

    def test_three_chunk_job(self):
        instance = Instance.of((0, FIGURE_JOB))
        self.assertEqual(ChunkService.instance_params(instance), InstanceParams(12, 3, 5))

    def test_single_operation(self):
        self.assertEqual(ChunkService.instance_params(Instance.of((0, [5]))), InstanceParams(1, 1, 1))

    def test_two_jobs(self):
        instance = Instance.of((0, [1, 2]), (0, [2, 2, 2]))
        self.assertEqual(ChunkService.instance_params(instance), InstanceParams(3, 2, 3))

    def test_empty_instance(self):
        self.assertEqual(ChunkService.instance_params(Instance(())), InstanceParams(0, 0, 0))


class DecompositionLookupTests(SimpleTestCase):

    def setUp(self):
        self.decomposition = ChunkDecomposition(Instance.of((0, FIGURE_JOB), (2, [4, 8])))

    def test_chunk_at_offsets(self):
        self.assertEqual(self.decomposition.chunk_at(0, 0).chunk_class, 2)
        self.assertEqual(self.decomposition.chunk_at(0, 9).chunk_class, 2)
        self.assertEqual(self.decomposition.chunk_at(0, 10).chunk_class, 3)
        self.assertEqual(self.decomposition.chunk_at(0, 36).chunk_class, 5)

    def test_alive_chunks(self):
        self.assertEqual(len(self.decomposition.alive_chunks(0, 0)), 3)
        self.assertEqual(len(self.decomposition.alive_chunks(1, 5)), 1)
        self.assertEqual(self.decomposition.alive_chunks(1, 12), [])


class InstanceSchemaTests(SimpleTestCase):

    def test_json_keeps_jobs_and_metadata(self):
        instance = Instance.of((0, [1, 0, 2]), (4, [3]), metadata={'family': 'manual'})
        loaded = Instance.from_json(instance.to_json())
        self.assertEqual(loaded, instance)
        self.assertEqual(loaded.metadata, {'family': 'manual'})

    def test_rejects_bad_jobs(self):
        bad = [
            '{"jobs": [{"release": -1, "ops": [1]}]}',
            '{"jobs": [{"release": 0, "ops": []}]}',
            '{"jobs": [{"release": 0, "ops": [0, 0]}]}',
            '{"jobs": [{"release": 0, "ops": [1.5]}]}',
            '{"jobs": [{"release": true, "ops": [1]}]}',
            '{"jobs": [{"ops": [1]}]}',
            '{"tasks": []}',
            'not json',
        ]
        for text in bad:
            with self.subTest(text=text), self.assertRaises(ValidationError):
                Instance.from_json(text)


class DecompositionProperties(PropertyTestCase):

    @given(operations(max_ops=12, max_size=64))
    @hypothesis_settings(max_examples=200, deadline=None)
    def test_chunks_partition_the_job(self, ops):
        job = Job(0, tuple(ops))
        chunks = ChunkService.decompose(job)
        self.assertEqual(chunks[0].start, 0)
        self.assertEqual(chunks[-1].stop, len(ops))
        for left, right in zip(chunks, chunks[1:]):
            self.assertEqual(left.stop, right.start)
            self.assertEqual(left.end, right.offset)
            # chunk classes strictly increase along a job
            self.assertLess(left.chunk_class, right.chunk_class)
        self.assertEqual(sum(c.size for c in chunks), job.size)
        for chunk in chunks:
            self.assertTrue(all(
                size == 0 or class_of(size) <= chunk.chunk_class
                for size in ops[chunk.start:chunk.stop]
            ))

    @given(st.lists(operations(max_ops=6, max_size=32), min_size=1, max_size=5))
    @hypothesis_settings(max_examples=100, deadline=None)
    def test_params_bound_each_job(self, jobs):
        instance = Instance(tuple(Job(0, tuple(ops)) for ops in jobs))
        params = ChunkService.instance_params(instance)
        self.assertLessEqual(params.m1, params.m)
        self.assertLessEqual(params.m2, params.m)
        self.assertGreaterEqual(params.m1 * params.m2, 1)

    @given(st.lists(operations(max_ops=6, max_size=64), min_size=1, max_size=5))
    @hypothesis_settings(max_examples=150, deadline=None)
    def test_chunk_size_is_bounded_by_its_first_operation(self, jobs):
        instance = Instance(tuple(Job(0, tuple(ops)) for ops in jobs))
        decomposition = ChunkDecomposition(instance)
        m2 = decomposition.params.m2
        for chunk in decomposition.all_chunks:
            ops = instance.jobs[chunk.job].ops[chunk.start:chunk.stop]
            first = next(size for size in ops if size > 0)
            self.assertEqual(class_of(first), chunk.chunk_class)
            self.assertLessEqual(chunk.size, m2 * 2 ** (chunk.chunk_class + 1))
            self.assertLessEqual(m2 * 2 ** (chunk.chunk_class + 1), 2 * m2 * first)
