import numpy as np
import pytest

from treeclust.simgen import TreeGenSpec, generate_dataset
from treeclust.tree import SupportTreeSpec, Tree


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_forest():
    """Twenty clean depth-3 binary trees in two attribute ranges."""
    a = TreeGenSpec(2, 3, "same", ((2, 5),) * 3, 10)
    b = TreeGenSpec(2, 3, "same", ((10, 15),) * 3, 10)
    return generate_dataset(a, b, seed=7), SupportTreeSpec(2, 3)


def random_tree(rng, spec, q, tid="t", label=None):
    """Random connected subtree of ``spec`` with positive attributes."""
    present = set(spec.roots()[: 1 + rng.integers(len(spec.roots()))])
    for i in spec.iter_level_order():
        if i in present:
            for c in spec.children(i):
                if rng.random() < 0.6:
                    present.add(c)
    return Tree(tid, {i: tuple(rng.uniform(0.1, 10, size=q)) for i in present}, label)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
