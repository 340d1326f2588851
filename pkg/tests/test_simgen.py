import numpy as np
import pytest

from treeclust.simgen import (GenerationError, NoiseSpec, TreeGenSpec, add_attribute_noise, add_topology_noise,
                              child_patterns, free_slots, generate_dataset, sample_topology)
from treeclust.tree import SupportTreeSpec, Tree, parent_index


def spec2(pattern, lo_b=10, hi_b=15, depth=3, order=(2, 2)):
    return (TreeGenSpec(order[0], depth, pattern, ((2, 5),) * 3, 10),
            TreeGenSpec(order[1], depth, pattern, ((lo_b, hi_b),) * 3, 10))


def connected(tree, support):
    return all(parent_index(support, i) is None or parent_index(support, i) in tree.branches
               for i in tree.branches)


def test_child_patterns():
    assert child_patterns(2) == [(1,), (2,), (1, 2)]
    assert len(child_patterns(3)) == 7


def test_same_mode_dataset():
    trees = generate_dataset(*spec2("same"), seed=1)
    assert len(trees) == 20
    assert len({t.indices for t in trees}) == 1
    support = SupportTreeSpec(2, 3)
    for t in trees:
        assert connected(t, support)
        lo, hi = (2, 5) if t.label == "A" else (10, 15)
        assert all(lo <= v <= hi for row in t.branches.values() for v in row)
        assert t.depth(support) == 3


def test_different_mode_two_topologies():
    for seed in range(20):
        trees = generate_dataset(*spec2("different"), seed=seed)
        sets = {t.label: t.indices for t in trees}
        assert len({t.indices for t in trees}) == 2
        assert sets["A"] != sets["B"]


def test_random_depth_one_patterns():
    a = TreeGenSpec(2, 1, "random", ((1, 2),), 10)
    seen = set()
    for seed in range(30):
        for t in generate_dataset(a, a, seed=seed):
            seen.add(t.indices)
    assert seen == {frozenset({1, 2}), frozenset({1, 3}), frozenset({1, 2, 3})}


def test_same_mode_mixed_depth_truncates():
    a = TreeGenSpec(2, 3, "same", ((2, 5),), 10)
    b = TreeGenSpec(2, 5, "same", ((2, 5),), 10)
    trees = generate_dataset(a, b, seed=3)
    support = SupportTreeSpec(2, 5)
    ta = {t.indices for t in trees if t.label == "A"}
    tb = {t.indices for t in trees if t.label == "B"}
    assert len(ta) == len(tb) == 1
    big, small = next(iter(tb)), next(iter(ta))
    assert small == frozenset(i for i in big if support.level(i) <= 3)


def test_binomial_depth_clamped():
    a = TreeGenSpec(2, (4, 0.5), "random", ((2, 5),), 10)
    support = SupportTreeSpec(2, 4)
    for t in generate_dataset(a, a, seed=5):
        assert 1 <= t.depth(support) <= 4


def test_ternary_vs_binary():
    a, b = spec2("different", order=(2, 3))
    trees = generate_dataset(a, b, seed=2)
    support = SupportTreeSpec(3, 3)
    for t in trees:
        assert connected(t, support)
        if t.label == "A":
            assert all(support.slot(i) <= 2 for i in t.branches if i != 1)


def test_determinism():
    assert generate_dataset(*spec2("random"), seed=9) == generate_dataset(*spec2("random"), seed=9)
    assert generate_dataset(*spec2("random"), seed=9) != generate_dataset(*spec2("random"), seed=10)


def test_different_mode_gives_up(monkeypatch):
    import treeclust.simgen as sg

    monkeypatch.setattr(sg, "sample_topology", lambda order, depth, support, rng: frozenset({1}))
    a = TreeGenSpec(2, 1, "different", ((1, 2),), 2)
    with pytest.raises(GenerationError):
        sg.generate_dataset(a, a, seed=0)


def test_spec_validation():
    with pytest.raises(ValueError):
        TreeGenSpec(attr_ranges=((5, 2),))
    with pytest.raises(ValueError):
        TreeGenSpec(pattern_mode="odd")
    with pytest.raises(ValueError):
        NoiseSpec(attr_sd_frac=1.5)
    with pytest.raises(ValueError):
        generate_dataset(TreeGenSpec(attr_ranges=((1, 2),)), TreeGenSpec(), seed=0)


def full_tree(support, q=3, value=3.0):
    return Tree("full", {i: (value,) * q for i in range(1, support.p + 1)}, "A")


def test_attribute_noise_zero_sd():
    t = full_tree(SupportTreeSpec(2, 3))
    assert add_attribute_noise(t, NoiseSpec(attr_edges=15, attr_sd_frac=0.0), 1) == t


def test_attribute_noise_all_branches():
    t = full_tree(SupportTreeSpec(2, 3))
    out = add_attribute_noise(t, NoiseSpec(attr_edges=15), 1)
    assert out.indices == t.indices
    assert all(out.branches[i] != t.branches[i] for i in t.branches)
    few = add_attribute_noise(t, NoiseSpec(attr_edges=5), 1)
    assert sum(few.branches[i] != t.branches[i] for i in t.branches) == 5


def test_attribute_noise_positive():
    rng = np.random.default_rng(0)
    t = Tree("x", {1: (1e-3, 1.0, 1e3)})
    spec = NoiseSpec(attr_edges=1, attr_sd_frac=1.0)
    for _ in range(33_334):  # 3 values each: > 1e5 perturbations
        out = add_attribute_noise(t, spec, rng)
        assert min(out.branches[1]) > 0


def test_topology_noise_trivial():
    support = SupportTreeSpec(2, 3)
    t = Tree("x", {1: (2.0,), 2: (3.0,)})
    assert add_topology_noise(t, NoiseSpec(topo_candidates=5, topo_prob=0.0), support, 1) == t
    full = full_tree(support)
    assert add_topology_noise(full, NoiseSpec(topo_candidates=5, topo_prob=1.0), support, 1) == full
    assert free_slots(full, support) == []


def test_topology_noise_distribution():
    support = SupportTreeSpec(2, 3)
    rng = np.random.default_rng(1)
    base = Tree("x", {1: (2.0,), 2: (2.0,), 4: (2.0,)})
    spec = NoiseSpec(topo_candidates=5)
    counts = np.zeros(6, dtype=int)
    for _ in range(10_000):
        out = add_topology_noise(base, spec, support, rng)
        added = out.indices - base.indices
        assert connected(out, support)
        assert all(2 <= v <= 5 for i in added for v in out.branches[i])
        counts[len(added)] += 1
    assert counts.sum() == 10_000
    # Binomial(5, 0.5) rounds: every outcome 0..5 occurs
    assert (counts > 0).all()
    assert abs(counts @ np.arange(6) / 10_000 - 2.5) < 0.1


def test_sample_topology_fits_support():
    rng = np.random.default_rng(2)
    support = SupportTreeSpec(3, 4)
    for _ in range(200):
        idx = sample_topology(3, 4, support, rng)
        t = Tree("t", {i: (1.0,) for i in idx})
        t.validate(support)
        assert t.depth(support) == 4
