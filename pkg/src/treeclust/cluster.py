"""Clustering of signature vectors: normalized cut and Fréchet-mean K-means."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import linear_sum_assignment

from .metaspace import METRICS, frechet_mean, pairwise


@dataclass(frozen=True)
class ClusterResult:
    assignments: np.ndarray
    method: str
    metric: str
    value: float  # inertia for kmeans, Ncut value for ncut
    seed: Optional[int] = None


@dataclass(frozen=True)
class AffinityGraph:
    weights: np.ndarray
    sigma: float
    sigma_fallback: bool = False
    metric: str = "l1"

    @property
    def n(self) -> int:
        return self.weights.shape[0]


def _as_rows(H_columns):
    """Accept a list of k-vectors or a k x n matrix whose columns are points."""
    if isinstance(H_columns, np.ndarray) and H_columns.ndim == 2:
        return np.asarray(H_columns, dtype=float).T.copy()
    return np.array([np.asarray(h, dtype=float) for h in H_columns])


def build_affinity(H_columns, metric: str = "l1", sigma: Union[str, float] = "median") -> AffinityGraph:
    """Gaussian-kernel affinity on pairwise cone distances.

    ``sigma="median"`` uses the median off-diagonal distance; a number is
    used as given.
    """
    X = _as_rows(H_columns)
    n = len(X)
    if n < 2:
        raise ValueError("need at least two points for an affinity graph")
    D = pairwise(X, metric)
    fallback = False
    if sigma == "median":
        s = float(np.median(D[np.triu_indices(n, 1)]))
        if not s > 0:
            s, fallback = 1.0, True
    else:
        s = float(sigma)
        if not s > 0:
            raise ValueError("sigma must be positive")
    Wt = np.exp(-(D**2) / (2 * s * s))
    Wt = 0.5 * (Wt + Wt.T)
    np.fill_diagonal(Wt, 1.0)
    return AffinityGraph(Wt, s, fallback, metric)


def ncut_value(W, mask) -> float:
    """Normalized cut of the bipartition ``mask`` / ``~mask``; inf if one side is empty."""
    W = np.asarray(W, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if mask.all() or not mask.any():
        return np.inf
    cut = W[mask][:, ~mask].sum()
    deg = W.sum(axis=1)
    return float(cut / deg[mask].sum() + cut / deg[~mask].sum())


def multiway_ncut(W, labels) -> float:
    """Sum over clusters of cut(A, rest) / assoc(A, V)."""
    W = np.asarray(W, dtype=float)
    labels = np.asarray(labels)
    deg = W.sum(axis=1)
    total = 0.0
    for c in np.unique(labels):
        m = labels == c
        total += W[m][:, ~m].sum() / deg[m].sum()
    return float(total)


def _spectral_embedding(W, k):
    deg = W.sum(axis=1)
    bad = np.flatnonzero(deg <= 0)
    if bad.size:
        raise ValueError(f"node {int(bad[0])} has zero degree")
    dis = 1.0 / np.sqrt(deg)
    L = np.eye(len(W)) - dis[:, None] * W * dis[None, :]
    vals, vecs = eigh(0.5 * (L + L.T), subset_by_index=[0, k - 1])
    # back to the generalized problem (D - W) x = lambda D x
    X = vecs * dis[:, None]
    for j in range(X.shape[1]):
        # fix the eigenvector sign so results do not depend on the solver
        piv = np.argmax(np.abs(X[:, j]))
        if X[piv, j] < 0:
            X[:, j] = -X[:, j]
    return vals, X


def ncut_cluster(graph: AffinityGraph, k_c: int = 2, seed: int = 0) -> ClusterResult:
    W = np.asarray(graph.weights, dtype=float)
    n = len(W)
    if k_c < 2 or k_c > n:
        raise ValueError(f"need 2 <= k_c <= n, got k_c={k_c}, n={n}")
    _, X = _spectral_embedding(W, k_c)
    if k_c == 2:
        x = X[:, 1]
        cuts = np.unique(x)[:-1]  # ascending; a split at the maximum is empty
        best_val, best_mask = np.inf, None
        for t in cuts:
            mask = x > t
            v = ncut_value(W, mask)
            if v < best_val:
                best_val, best_mask = v, mask
        if best_mask is None:
            # constant eigenvector: fall back to splitting off the last node
            best_mask = np.zeros(n, dtype=bool)
            best_mask[-1] = True
            best_val = ncut_value(W, best_mask)
        labels = best_mask.astype(int)
        labels = _canonical(labels)
        return ClusterResult(labels, "ncut", graph.metric, best_val, seed)
    km = kmeans_frechet(X.T, k_c, metric="euclid", restarts=10, seed=seed)
    labels = _canonical(km.assignments)
    return ClusterResult(labels, "ncut", graph.metric, multiway_ncut(W, labels), seed)


def _canonical(labels):
    """Relabel so cluster ids appear in order of first occurrence."""
    labels = np.asarray(labels)
    mapping = {}
    for c in labels:
        mapping.setdefault(int(c), len(mapping))
    return np.array([mapping[int(c)] for c in labels], dtype=int)


def _dist_to(X, C, metric):
    if metric == "l1":
        return np.abs(X[:, None, :] - C[None, :, :]).sum(axis=2)
    if metric == "euclid":
        return np.sqrt(((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2))
    fn = METRICS[metric]
    return np.array([[fn(x, c) for c in C] for x in X])


def _lloyd(X, k_c, metric, rng, max_iter=100, history=None):
    n = len(X)
    C = X[rng.choice(n, size=k_c, replace=False)].copy()
    labels = None
    for _ in range(max_iter):
        D = _dist_to(X, C, metric)
        new = np.argmin(D, axis=1)  # ties go to the lowest centroid index
        for c in range(k_c):
            if not (new == c).any():
                # re-seed an empty cluster from the point farthest from its centroid,
                # never taking the last member of another cluster
                sizes = np.bincount(new, minlength=k_c)
                d_own = np.where(sizes[new] > 1, D[np.arange(n), new], -np.inf)
                far = int(np.argmax(d_own))
                new[far] = c
                C[c] = X[far]
                D = _dist_to(X, C, metric)
        if history is not None:
            history.append(float((D[np.arange(n), new] ** 2).sum()))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k_c):
            C[c] = frechet_mean(X[labels == c])
        if history is not None:
            history.append(float((_dist_to(X, C, metric)[np.arange(n), labels] ** 2).sum()))
    D = _dist_to(X, C, metric)
    inertia = float((D[np.arange(n), labels] ** 2).sum())
    return labels, C, inertia


def kmeans_frechet(H_columns, k_c: int = 2, metric: str = "l1", restarts: int = 10, seed: int = 0,
                   history: Optional[list] = None) -> ClusterResult:
    """K-means whose centroid step is the weighted-midpoint Fréchet mean.

    Points are assigned with ``metric``; the kept restart minimizes the sum of
    squared metric distances to the assigned centroids. If ``history`` is a
    list, the inertia after every assignment and centroid step of the first
    restart is appended to it.
    """
    X = _as_rows(H_columns)
    n = len(X)
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    if k_c < 1 or k_c > n:
        raise ValueError(f"need 1 <= k_c <= n, got k_c={k_c}, n={n}")
    best = None
    for r, child in enumerate(np.random.SeedSequence(seed).spawn(restarts)):
        rng = np.random.default_rng(child)
        labels, _, inertia = _lloyd(X, k_c, metric, rng, history=history if r == 0 else None)
        if best is None or inertia < best[1]:
            best = (labels, inertia)
    return ClusterResult(_canonical(best[0]), "kmeans", metric, best[1], seed)


def accuracy(pred: Sequence, truth: Sequence) -> float:
    """Best fraction of agreement over one-to-one matchings of cluster ids to labels."""
    pred = list(pred)
    truth = list(truth)
    if len(pred) != len(truth):
        raise ValueError(f"length mismatch: {len(pred)} vs {len(truth)}")
    if not truth:
        raise ValueError("empty label vectors")
    pk = {v: i for i, v in enumerate(dict.fromkeys(pred))}
    tk = {v: i for i, v in enumerate(dict.fromkeys(truth))}
    M = np.zeros((len(pk), len(tk)))
    for a, b in zip(pred, truth):
        M[pk[a], tk[b]] += 1
    r, c = linear_sum_assignment(M, maximize=True)
    return float(M[r, c].sum() / len(truth))
