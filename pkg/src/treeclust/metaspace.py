"""Distances and means for signature vectors in the meta-tree cone."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


def _pair(h1, h2):
    a = np.asarray(h1, dtype=float)
    b = np.asarray(h2, dtype=float)
    if a.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("zero-dimensional signature vectors")
    return a, b


def dist_l1(h1, h2) -> float:
    a, b = _pair(h1, h2)
    return float(np.abs(a - b).sum())


def dist_euclid(h1, h2) -> float:
    a, b = _pair(h1, h2)
    return float(np.linalg.norm(a - b))


@dataclass(frozen=True)
class ConePath:
    """Path h1 -> c1 -> c -> c2 -> h2 through a consensus point on a ray."""

    waypoints: tuple
    leg_lengths_l2: tuple
    leg_lengths_l1: tuple

    @property
    def length_l2(self) -> float:
        a1, b1, a2, b2 = self.leg_lengths_l2
        return float(np.hypot(a1, b1) + np.hypot(a2, b2))

    @property
    def length_l1(self) -> float:
        return float(sum(self.leg_lengths_l1))


def cone_path(h1, h2) -> ConePath:
    a, b = _pair(h1, h2)
    if (a < 0).any() or (b < 0).any():
        raise ValueError("signature vectors must be nonnegative")
    u = np.minimum(a, b)
    if not u.any():
        u = a + b
    if not u.any():
        raise ValueError("both signature vectors are zero")
    uu = u @ u
    c1 = max(a @ u / uu, 0.0) * u
    c2 = max(b @ u / uu, 0.0) * u
    c = 0.5 * (c1 + c2)
    pts = (a, c1, c, c2, b)
    legs = [pts[i + 1] - pts[i] for i in range(4)]
    return ConePath(
        waypoints=pts,
        leg_lengths_l2=tuple(float(np.linalg.norm(d)) for d in legs),
        leg_lengths_l1=tuple(float(np.abs(d).sum()) for d in legs),
    )


def dist_l2_path(h1, h2) -> float:
    a, b = _pair(h1, h2)
    if np.array_equal(a, b):
        return 0.0
    return cone_path(a, b).length_l2


def cone_ratio(a1, b1, a2, b2):
    """Ratio of the L1-style leg sum to the two-leg Euclidean length.

    Works elementwise on arrays.
    """
    a1, b1, a2, b2 = (np.asarray(x, dtype=float) for x in (a1, b1, a2, b2))
    den = np.hypot(a1, b1) + np.hypot(a2, b2)
    if np.any(den == 0):
        raise ValueError("cone_ratio undefined when all legs are zero")
    r = (a1 + b1 + a2 + b2) / den
    return float(r) if r.ndim == 0 else r


def frechet_mean(points: Sequence) -> np.ndarray:
    """Weighted-midpoint Fréchet mean, folding points in one at a time."""
    pts = [np.asarray(h, dtype=float) for h in points]
    if not pts:
        raise ValueError("frechet_mean of an empty set")
    mu = pts[0].copy()
    for i, h in enumerate(pts[1:], start=2):
        if h.shape != mu.shape:
            raise ValueError(f"dimension mismatch: {h.shape} vs {mu.shape}")
        mu = ((i - 1) * mu + h) / i
    return mu


METRICS = {
    "l1": dist_l1,
    "l2_path": dist_l2_path,
    "euclid": dist_euclid,
}


def pairwise(X, metric="l1") -> np.ndarray:
    """Distance matrix between the rows of ``X``."""
    X = np.asarray(X, dtype=float)
    if metric == "l1":
        return np.abs(X[:, None, :] - X[None, :, :]).sum(axis=2)
    if metric == "euclid":
        return np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))
    try:
        fn = METRICS[metric]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}") from None
    n = len(X)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = fn(X[i], X[j])
    return D
