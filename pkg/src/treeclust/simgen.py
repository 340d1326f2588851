"""Seeded synthetic forests: two labeled sets of m-ary trees, plus noise models."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence, Union

import numpy as np

from .tree import SupportTreeSpec, Tree, TreeError, parent_index

PATTERNS = ("same", "different", "random")


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class TreeGenSpec:
    """One set of trees.

    ``depth`` is either an int or a ``(mu, p_b)`` pair for a binomial depth.
    """

    order: int = 2
    depth: Union[int, tuple] = 3
    pattern_mode: str = "same"
    attr_ranges: tuple = ((2.0, 5.0),) * 3
    count: int = 10

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("order must be >= 2")
        if self.pattern_mode not in PATTERNS:
            raise ValueError(f"pattern_mode must be one of {PATTERNS}")
        if isinstance(self.depth, tuple):
            mu, pb = self.depth
            if int(mu) != mu or mu < 1 or not 0 <= pb <= 1:
                raise ValueError(f"bad binomial depth {self.depth!r}")
        elif self.depth < 1:
            raise ValueError("depth must be >= 1")
        ranges = tuple((float(a), float(b)) for a, b in self.attr_ranges)
        if not ranges:
            raise ValueError("need at least one attribute range")
        for a, b in ranges:
            if not 0 < a < b:
                raise ValueError(f"attribute range [{a}, {b}] must satisfy 0 < a < b")
        object.__setattr__(self, "attr_ranges", ranges)
        if self.count < 1:
            raise ValueError("count must be >= 1")

    @property
    def q(self) -> int:
        return len(self.attr_ranges)

    @property
    def max_depth(self) -> int:
        return self.depth[0] if isinstance(self.depth, tuple) else self.depth

    def sample_depth(self, rng) -> int:
        if isinstance(self.depth, tuple):
            mu, pb = self.depth
            return int(np.clip(rng.binomial(mu, pb), 1, mu))
        return self.depth


@dataclass(frozen=True)
class NoiseSpec:
    attr_edges: int = 0
    attr_sd_frac: float = 0.30
    topo_candidates: int = 0
    topo_prob: float = 0.5
    topo_attr_range: tuple = (2.0, 5.0)

    def __post_init__(self):
        if self.attr_edges < 0 or self.topo_candidates < 0:
            raise ValueError("noise counts must be >= 0")
        if not 0 <= self.attr_sd_frac <= 1 or not 0 <= self.topo_prob <= 1:
            raise ValueError("noise fractions must lie in [0, 1]")
        a, b = self.topo_attr_range
        if not 0 < a < b:
            raise ValueError("topo_attr_range must satisfy 0 < a < b")


def child_patterns(order: int) -> list:
    """All nonempty subsets of child slots 1..order."""
    return [c for r in range(1, order + 1) for c in combinations(range(1, order + 1), r)]


def sample_topology(order: int, depth: int, support: SupportTreeSpec, rng) -> frozenset:
    """Top-down walk choosing a nonempty child subset at every node above ``depth``.

    Child slots of an ``order``-ary tree map to the first ``order`` slots of
    the (possibly wider) support tree.
    """
    if order > support.order or depth > support.depth:
        raise TreeError("topology does not fit the support tree")
    pats = child_patterns(order)
    present = set(support.roots() if support.trunk else [])
    frontier = list(present)
    if not support.trunk:
        # the virtual root above level 1 also picks its children
        pick = pats[rng.integers(len(pats))]
        present = {j for j in pick}
        frontier = sorted(present)
    level = 0 if support.trunk else 1
    while level < depth:
        nxt = []
        for i in frontier:
            pick = pats[rng.integers(len(pats))]
            nxt.extend(support.child(i, j) for j in pick)
        present.update(nxt)
        frontier = nxt
        level += 1
    return frozenset(present)


def truncate(indices, support: SupportTreeSpec, depth: int) -> frozenset:
    return frozenset(i for i in indices if support.level(i) <= depth)


def _attrs(rng, ranges):
    return tuple(float(rng.uniform(a, b)) for a, b in ranges)


def dataset_support(set_a: TreeGenSpec, set_b: TreeGenSpec) -> SupportTreeSpec:
    return SupportTreeSpec(max(set_a.order, set_b.order), max(set_a.max_depth, set_b.max_depth), True)


def generate_dataset(set_a: TreeGenSpec, set_b: TreeGenSpec, seed=0, labels=("A", "B"),
                     support: Optional[SupportTreeSpec] = None) -> list:
    """Two labeled sets of trees; ``set_a.pattern_mode`` governs topology sharing.

    same: one topology shared by every tree (shallower sets use its truncation);
    different: one topology per set, distinct between sets;
    random: every tree drawn independently.
    """
    if set_a.q != set_b.q:
        raise ValueError(f"attribute counts differ: {set_a.q} vs {set_b.q}")
    if set_a.pattern_mode != set_b.pattern_mode:
        raise ValueError("both sets must use the same pattern mode")
    mode = set_a.pattern_mode
    rng = np.random.default_rng(seed)
    support = support or dataset_support(set_a, set_b)

    shared = {}
    if mode == "same":
        order = min(set_a.order, set_b.order)
        topo = sample_topology(order, support.depth, support, rng)
        shared = {0: topo, 1: topo}
    elif mode == "different":
        ta = sample_topology(set_a.order, set_a.max_depth, support, rng)
        for _ in range(1000):
            tb = sample_topology(set_b.order, set_b.max_depth, support, rng)
            if tb != ta:
                break
        else:
            raise GenerationError("could not sample distinct topologies in 1000 attempts")
        shared = {0: ta, 1: tb}

    trees = []
    for s, (gs, lab) in enumerate(zip((set_a, set_b), labels)):
        for t in range(gs.count):
            d = gs.sample_depth(rng)
            if mode == "random":
                idx = sample_topology(gs.order, d, support, rng)
            else:
                idx = truncate(shared[s], support, d)
            branches = {i: _attrs(rng, gs.attr_ranges) for i in sorted(idx)}
            trees.append(Tree(id=f"{lab}{t}", branches=branches, label=lab))
    return trees


def add_attribute_noise(tree: Tree, spec: NoiseSpec, seed=None) -> Tree:
    """Perturb every attribute of ``spec.attr_edges`` random branches.

    Each value v becomes v + N(0, (frac * v)^2), resampled until positive.
    """
    rng = np.random.default_rng(seed)
    if spec.attr_sd_frac == 0 or spec.attr_edges == 0:
        return tree
    idx = list(tree.branches)
    chosen = rng.choice(len(idx), size=min(spec.attr_edges, len(idx)), replace=False)
    branches = dict(tree.branches)
    for c in sorted(chosen):
        i = idx[c]
        row = []
        for v in branches[i]:
            sd = spec.attr_sd_frac * v
            for _ in range(100):
                nv = v + rng.normal(0.0, sd)
                if nv > 0:
                    break
            else:
                nv = v * 0.01
            row.append(float(nv))
        branches[i] = tuple(row)
    return tree.replace(branches=branches)


def free_slots(tree: Tree, support: SupportTreeSpec) -> list:
    """Absent support branches whose parent is present (or that are roots)."""
    have = tree.branches
    out = []
    for i in support.iter_level_order():
        if i in have:
            continue
        par = parent_index(support, i)
        if par is None or par in have:
            out.append(i)
    return sorted(out)


def add_topology_noise(tree: Tree, spec: NoiseSpec, support: SupportTreeSpec, seed=None) -> Tree:
    rng = np.random.default_rng(seed)
    branches = dict(tree.branches)
    q = tree.q
    lo, hi = spec.topo_attr_range
    for _ in range(spec.topo_candidates):
        if rng.random() >= spec.topo_prob:
            continue
        slots = free_slots(Tree(tree.id, branches), support)
        if not slots:
            continue
        i = slots[rng.integers(len(slots))]
        branches[i] = tuple(float(v) for v in rng.uniform(lo, hi, size=q))
    if len(branches) == len(tree.branches):
        return tree
    return tree.replace(branches=branches)


def apply_noise(trees: Sequence[Tree], spec: NoiseSpec, support: SupportTreeSpec, seed=0) -> list:
    """Attribute noise then topology noise on every tree, one RNG stream per tree."""
    out = []
    for t, child in zip(trees, np.random.SeedSequence(seed).spawn(len(trees))):
        rng = np.random.default_rng(child)
        t = add_attribute_noise(t, spec, rng)
        t = add_topology_noise(t, spec, support, rng)
        out.append(t)
    return out
