"""Structure-constrained nonnegative matrix factorization.

Factorizes a forest matrix ``F`` (pq x n) as ``tau(W) @ H`` where every column
of ``tau(W)``, reshaped to a p x q T-A matrix, has rows that are entirely
positive or entirely zero.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .forest_io import ForestMatrix


class FactorizationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class FactorizationConfig:
    rank: int = 8
    max_iters: int = 500
    rel_tol: float = 1e-6
    lam: float = 1e-3
    epsilon: float = 1e-12
    pos_threshold: float = 1e-9
    restarts: int = 5
    seed: int = 0
    patience: int = 10

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.max_iters < 1 or self.restarts < 1:
            raise ValueError("max_iters and restarts must be >= 1")
        if self.rel_tol <= 0 or self.epsilon <= 0 or self.lam <= 0:
            raise ValueError("rel_tol, epsilon and lam must be positive")
        if self.pos_threshold < 0 or self.lam <= self.pos_threshold:
            raise ValueError("need 0 <= pos_threshold < lam")


@dataclass
class MetaBasis:
    W: np.ndarray  # tau(W), pq x k; columns are meta-trees
    H: np.ndarray  # k x n; columns are signature vectors
    objective_trace: list = field(default_factory=list)
    converged: bool = False
    p: int = 0
    q: int = 0

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]

    def meta_tree(self, j: int) -> np.ndarray:
        return self.W[:, j].reshape((self.p, self.q), order="F")


def tau(column, p, q, lam=1e-3, pos_threshold=1e-9):
    """Enforce row positive-uniformity on one vectorized p x q column.

    Rows mixing positive (> pos_threshold) and zero-like entries get their
    zero-like entries raised to ``lam``; rows with no positive entry are
    zeroed; all-positive rows are untouched.
    """
    w = np.asarray(column, dtype=float)
    if w.shape != (p * q,):
        raise ValueError(f"column of length {w.size} does not match {p} x {q}")
    if (w < 0).any():
        raise ValueError("tau input has a negative entry")
    return tau_matrix(w[:, None], p, q, lam, pos_threshold)[:, 0]


def tau_matrix(W, p, q, lam=1e-3, pos_threshold=1e-9):
    """Apply :func:`tau` to every column of ``W`` (pq x k)."""
    k = W.shape[1]
    # (p, q, k) view: entry [i, a, j] is attribute a of branch i in column j
    T = W.reshape((q, p, k)).transpose(1, 0, 2)
    pos = T > pos_threshold
    any_pos = pos.any(axis=1, keepdims=True)
    all_pos = pos.all(axis=1, keepdims=True)
    mixed = any_pos & ~all_pos
    out = np.where(~any_pos, 0.0, T)
    out = np.where(mixed & ~pos, lam, out)
    return out.transpose(1, 0, 2).reshape((p * q, k))


def is_tau_fixed_point(W, p, q, pos_threshold=1e-9) -> bool:
    """Every row of every column is all >= pos_threshold or exactly zero."""
    k = W.shape[1]
    T = W.reshape((q, p, k)).transpose(1, 0, 2)
    zero = (T == 0).all(axis=1)
    pos = (T >= pos_threshold).all(axis=1)
    return bool((zero | pos).all())


def objective(F, W, H) -> float:
    F = np.asarray(F, dtype=float)
    W = np.asarray(W, dtype=float)
    H = np.asarray(H, dtype=float)
    if W.shape[0] != F.shape[0] or H.shape[1] != F.shape[1] or W.shape[1] != H.shape[0]:
        raise ValueError(f"shape mismatch: F{F.shape} W{W.shape} H{H.shape}")
    R = F - W @ H
    return float(np.einsum("ij,ij->", R, R))


def update_H(F, W, H, eps=1e-12):
    """One multiplicative H step with ``W`` (already constrained) held fixed."""
    return H * (W.T @ F) / (W.T @ W @ H + eps)


def update_W(F, W, H, eps=1e-12):
    return W * (F @ H.T) / (W @ (H @ H.T) + eps)


def _init(rng, F, k):
    scale = np.sqrt(F.mean() / k)
    W = (1.0 - rng.random((F.shape[0], k))) * scale
    H = (1.0 - rng.random((k, F.shape[1]))) * scale
    return W, H


def _run(F, p, q, cfg, W, H):
    W = tau_matrix(W, p, q, cfg.lam, cfg.pos_threshold)
    trace = []
    prev = objective(F, W, H)
    calm = 0
    converged = False
    for _ in range(cfg.max_iters):
        W = update_W(F, W, H, cfg.epsilon)
        W = tau_matrix(W, p, q, cfg.lam, cfg.pos_threshold)
        H = update_H(F, W, H, cfg.epsilon)
        obj = objective(F, W, H)
        trace.append(obj)
        if not np.isfinite(obj):
            break
        calm = calm + 1 if abs(prev - obj) <= cfg.rel_tol * max(prev, np.finfo(float).tiny) else 0
        prev = obj
        if calm >= cfg.patience:
            converged = True
            break
    return MetaBasis(W, H, trace, converged, p, q)


def scnmf_factorize(F, cfg: FactorizationConfig = FactorizationConfig(), p=None, q=None, init=None) -> MetaBasis:
    """Factorize a forest matrix, keeping the best of ``cfg.restarts`` runs.

    ``F`` is a :class:`ForestMatrix` or a raw pq x n array (then ``p`` and
    ``q`` are required). ``init`` optionally fixes ``(W0, H0)`` for a single
    run, bypassing random restarts.
    """
    if isinstance(F, ForestMatrix):
        p, q, F = F.spec.p, F.q, F.data
    F = np.asarray(F, dtype=float)
    if p is None or q is None or p * q != F.shape[0]:
        raise ValueError(f"forest has {F.shape[0]} rows; cannot split into p={p}, q={q}")
    if (F < 0).any():
        raise ValueError("forest matrix has negative entries")
    if not F.any():
        raise FactorizationError("forest matrix is all zero")
    if cfg.rank > min(F.shape):
        warnings.warn(f"rank {cfg.rank} exceeds min(pq, n) = {min(F.shape)}", stacklevel=2)

    if init is not None:
        W0, H0 = (np.array(a, dtype=float) for a in init)
        return _run(F, p, q, cfg, W0, H0)

    best = None
    for child in np.random.SeedSequence(cfg.seed).spawn(cfg.restarts):
        rng = np.random.default_rng(child)
        res = _run(F, p, q, cfg, *_init(rng, F, cfg.rank))
        if not res.objective_trace:
            continue
        if best is None or (np.isfinite(res.objective) and not res.objective >= best.objective):
            best = res
    if best is None or not np.isfinite(best.objective):
        raise FactorizationError("factorization produced a non-finite objective")
    return best
