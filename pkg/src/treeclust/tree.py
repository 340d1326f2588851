"""Support-tree indexing, attributed trees and Topology-Attribute matrices.

Branches of the m-ary support tree are numbered 1..p level by level, left to
right. With a trunk, branch 1 is the root trunk and the j-th child of branch
i is ``m*(i-1) + j + 1``. Without a trunk, branches 1..m form the first level
and the j-th child of branch i is ``m*i + j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np


class TreeError(ValueError):
    """Invalid tree, support spec or T-A matrix."""


@dataclass(frozen=True)
class SupportTreeSpec:
    order: int
    depth: int
    trunk: bool = True

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 2:
            raise TreeError(f"order must be an integer >= 2, got {self.order!r}")
        if int(self.depth) != self.depth or self.depth < 1:
            raise TreeError(f"depth must be an integer >= 1, got {self.depth!r}")

    @property
    def p(self) -> int:
        m, d = self.order, self.depth
        if self.trunk:
            return (m ** (d + 1) - 1) // (m - 1)
        return m * (m**d - 1) // (m - 1)

    def _check(self, i: int) -> None:
        if not 1 <= i <= self.p:
            raise TreeError(f"branch index {i} outside 1..{self.p}")

    def child(self, i: int, j: int) -> int:
        """Index of the j-th child (1-based) of branch i; may exceed p."""
        self._check(i)
        if not 1 <= j <= self.order:
            raise TreeError(f"child slot {j} outside 1..{self.order}")
        if self.trunk:
            return self.order * (i - 1) + j + 1
        return self.order * i + j

    def children(self, i: int) -> list[int]:
        """Children of branch i that exist in the support tree."""
        kids = [self.child(i, j) for j in range(1, self.order + 1)]
        return [c for c in kids if c <= self.p]

    def roots(self) -> list[int]:
        return [1] if self.trunk else list(range(1, self.order + 1))

    def level(self, i: int) -> int:
        """Level of branch i: 0 for the trunk, 1 for its children, and so on.

        Without a trunk the first level of branches is level 1.
        """
        self._check(i)
        lvl = 0 if self.trunk else 1
        while (j := parent_index(self, i)) is not None:
            i = j
            lvl += 1
        return lvl

    def slot(self, i: int) -> int:
        """Which child slot (1..m) branch i occupies under its parent."""
        self._check(i)
        if self.trunk:
            if i == 1:
                return 1
            return (i - 2) % self.order + 1
        return (i - 1) % self.order + 1

    def iter_level_order(self) -> Iterator[int]:
        """Walk the index tree breadth first from the roots."""
        queue = list(self.roots())
        while queue:
            nxt = []
            for i in queue:
                yield i
                nxt.extend(self.children(i))
            queue = nxt


def build_support_spec(order: int, depth: int, trunk: bool = True) -> SupportTreeSpec:
    return SupportTreeSpec(order, depth, trunk)


def parent_index(spec: SupportTreeSpec, i: int) -> Optional[int]:
    """Parent branch of i, or None for a root branch."""
    spec._check(i)
    m = spec.order
    if spec.trunk:
        return None if i == 1 else (i - 2) // m + 1
    par = (i - 1) // m
    return par if par > 0 else None


@dataclass(frozen=True)
class Tree:
    """An edge-attributed tree stored sparsely as index -> attribute row."""

    id: str
    branches: Mapping[int, tuple]
    label: Optional[str] = None

    def __post_init__(self):
        if not self.branches:
            raise TreeError(f"tree {self.id!r} has no branches")
        rows = {}
        q = None
        for idx, row in self.branches.items():
            if int(idx) != idx or idx < 1:
                raise TreeError(f"tree {self.id!r}: bad branch index {idx!r}")
            row = tuple(float(v) for v in np.atleast_1d(row))
            if q is None:
                q = len(row)
            elif len(row) != q:
                raise TreeError(f"tree {self.id!r}: branch {idx} has {len(row)} attributes, expected {q}")
            if not all(v > 0 and np.isfinite(v) for v in row):
                raise TreeError(f"tree {self.id!r}: branch {idx} has a nonpositive attribute")
            rows[int(idx)] = row
        object.__setattr__(self, "branches", MappingProxyType(dict(sorted(rows.items()))))

    @property
    def q(self) -> int:
        return len(next(iter(self.branches.values())))

    @property
    def indices(self) -> frozenset:
        return frozenset(self.branches)

    def validate(self, spec: SupportTreeSpec) -> None:
        """Check the branch set is a connected rooted subtree of ``spec``."""
        for i in self.branches:
            if i > spec.p:
                raise TreeError(f"tree {self.id!r}: branch index {i} exceeds p={spec.p}")
            par = parent_index(spec, i)
            if par is not None and par not in self.branches:
                raise TreeError(f"tree {self.id!r}: branch {i} is disconnected (parent {par} absent)")

    def depth(self, spec: SupportTreeSpec) -> int:
        return max(spec.level(i) for i in self.branches)

    def replace(self, branches=None, label=None, id=None) -> "Tree":
        return Tree(
            id=self.id if id is None else id,
            branches=self.branches if branches is None else branches,
            label=self.label if label is None else label,
        )


@dataclass(frozen=True)
class TAMatrix:
    spec: SupportTreeSpec
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != self.spec.p:
            raise TreeError(f"T-A matrix must be {self.spec.p} x q, got shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def p(self) -> int:
        return self.entries.shape[0]

    @property
    def q(self) -> int:
        return self.entries.shape[1]

    def is_positive_uniform(self) -> bool:
        return bool(row_uniform(self.entries).all())


def row_uniform(a: np.ndarray, threshold: float = 0.0) -> np.ndarray:
    """Per-row flag: every entry > threshold, or every entry <= threshold."""
    pos = a > threshold
    return pos.all(axis=1) | ~pos.any(axis=1)


def to_ta_matrix(tree: Tree, spec: SupportTreeSpec) -> TAMatrix:
    tree.validate(spec)
    out = np.zeros((spec.p, tree.q))
    for i, row in tree.branches.items():
        out[i - 1] = row
    return TAMatrix(spec, out)


def vectorize(ta) -> np.ndarray:
    """Stack the columns of a p x q matrix into a length p*q vector."""
    a = ta.entries if isinstance(ta, TAMatrix) else np.asarray(ta, dtype=float)
    return a.reshape(-1, order="F").copy()


def unvectorize(v: Sequence[float], p: int, q: int) -> np.ndarray:
    """Inverse of :func:`vectorize`; no positive-uniformity check."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size != p * q:
        raise TreeError(f"vector of length {v.size} cannot be reshaped to {p} x {q}")
    return v.reshape((p, q), order="F").copy()


def from_ta_matrix(entries: np.ndarray, id: str, label: Optional[str] = None) -> Tree:
    """Rebuild a sparse tree from the nonzero rows of a dense T-A matrix."""
    a = np.asarray(entries, dtype=float)
    rows = {i + 1: tuple(a[i]) for i in range(a.shape[0]) if a[i].any()}
    return Tree(id=id, branches=rows, label=label)
