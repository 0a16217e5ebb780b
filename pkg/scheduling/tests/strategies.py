"""Hypothesis strategies for small instances."""

from hypothesis import strategies as st

from scheduling.domain import Instance, Job


def operations(max_ops=4, max_size=16, allow_zero=True):
    size = st.integers(min_value=0 if allow_zero else 1, max_value=max_size)
    return st.lists(size, min_size=1, max_size=max_ops).filter(lambda ops: sum(ops) > 0)


@st.composite
def instances(draw, max_jobs=6, max_release=12, max_ops=4, max_size=16, allow_zero=True):
    count = draw(st.integers(min_value=1, max_value=max_jobs))
    jobs = tuple(
        Job(draw(st.integers(min_value=0, max_value=max_release)),
            tuple(draw(operations(max_ops, max_size, allow_zero))))
        for _ in range(count)
    )
    return Instance(jobs)
