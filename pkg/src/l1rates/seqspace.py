"""Weighted sequence spaces on a truncated index set.

The index set is materialized as ``0, ..., n-1``. A :class:`WeightSystem`
holds the operator weights ``a`` and the penalty weights ``r``; everything
else (the ``omega_t`` scale, the weak space ``k_t``) is derived from them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class WeightSystem:
    """Operator weights ``a`` and penalty weights ``r`` of equal length."""

    a: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        r = np.asarray(self.r, dtype=float)
        if a.ndim != 1 or r.ndim != 1:
            raise ValueError("weights must be one-dimensional")
        if a.shape != r.shape:
            raise ValueError(f"length mismatch: len(a)={a.size}, len(r)={r.size}")
        if a.size < 1:
            raise ValueError("weight system needs n >= 1")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(r))):
            raise ValueError("weights must be finite")
        if np.any(a <= 0) or np.any(r <= 0):
            raise ValueError("weights must be positive")
        a.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "r", r)

    @property
    def n(self) -> int:
        return self.a.size

    @classmethod
    def power(cls, n: int, a_power: float = 1.0, r_power: float = 0.0) -> "WeightSystem":
        """``a_j = j^{-a_power}``, ``r_j = j^{-r_power}`` for ``j = 1..n``."""
        j = np.arange(1, n + 1, dtype=float)
        return cls(j ** (-a_power), j ** (-r_power))

    @classmethod
    def constant(cls, n: int) -> "WeightSystem":
        return cls(np.ones(n), np.ones(n))

    @property
    def level_weights(self) -> np.ndarray:
        """``a_j^{-2} r_j^2``, the mass each index adds to the k_t count."""
        return (self.r / self.a) ** 2

    def thresholds(self, alpha: float) -> np.ndarray:
        """Coordinatewise thresholds ``a_j^{-2} r_j alpha``."""
        return self.r / self.a**2 * alpha

    def breakpoints(self, x) -> np.ndarray:
        """``b_j = |x_j| a_j^2 / r_j``; ``T_alpha`` keeps ``j`` iff ``b_j > alpha``."""
        return np.abs(as_sequence(x, self)) * self.a**2 / self.r

    def decay_profile(self) -> np.ndarray:
        """Ratios ``a_j / r_j`` sorted descending (should tend to zero)."""
        return np.sort(self.a / self.r)[::-1]


def as_sequence(x, ws: WeightSystem | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("sequence must be one-dimensional")
    if not np.all(np.isfinite(x)):
        raise ValueError("sequence entries must be finite")
    if ws is not None and x.size != ws.n:
        raise ValueError(f"length mismatch: sequence has {x.size}, weights have {ws.n}")
    return x


def lp_norm(x, w, p: float) -> float:
    """``(sum_j w_j^p |x_j|^p)^{1/p}``; a quasi-norm for ``p < 1``."""
    x = as_sequence(x)
    w = np.asarray(w, dtype=float)
    if w.shape != x.shape:
        raise ValueError(f"length mismatch: {x.size} vs {w.size}")
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    if x.size == 0:
        return 0.0
    v = w * np.abs(x)
    # scale out the max so small p / large exponents do not under/overflow
    m = v.max()
    if m == 0:
        return 0.0
    return float(m * np.sum((v / m) ** p) ** (1.0 / p))


def omega_weights(ws: WeightSystem, t: float) -> np.ndarray:
    """``(a_j^{2t-2} r_j^{2-t})^{1/t}``; equals ``r`` at t=1 and ``a`` at t=2."""
    if not 0 < t <= 2:
        raise ValueError(f"t must lie in (0, 2], got {t}")
    return ws.a ** ((2 * t - 2) / t) * ws.r ** ((2 - t) / t)


def omega_norm(x, ws: WeightSystem, p: float) -> float:
    """Shorthand for ``||x||_{omega_p, p}``."""
    return lp_norm(as_sequence(x, ws), omega_weights(ws, p), p)


def r1_norm(x, ws: WeightSystem) -> float:
    return float(np.sum(ws.r * np.abs(as_sequence(x, ws))))


def a2_norm(x, ws: WeightSystem) -> float:
    return float(np.linalg.norm(ws.a * as_sequence(x, ws)))


def count_function(x, ws: WeightSystem):
    """Distinct positive breakpoints and the mass at or above each.

    Returns ``(b, S)`` with ``b`` strictly increasing and
    ``S[i] = sum_{b_j >= b[i]} a_j^{-2} r_j^2``, which is the value of the
    k_t indicator sum just below ``b[i]``.
    """
    b = ws.breakpoints(x)
    c = ws.level_weights
    keep = b > 0
    b, c = b[keep], c[keep]
    if b.size == 0:
        return np.empty(0), np.empty(0)
    order = np.argsort(b, kind="stable")
    b, c = b[order], c[order]
    uniq, first = np.unique(b, return_index=True)
    # suffix sums over the sorted array, read off at the first index of each group
    tail = np.cumsum(c[::-1])[::-1]
    return uniq, tail[first]


def kt_norm(x, ws: WeightSystem, t: float) -> float:
    """Weak-space quasi-norm ``||x||_{k_t}``, computed exactly.

    The indicator set only changes at breakpoints and ``alpha * S(alpha)^{1/t}``
    increases between them, so the supremum is a maximum over breakpoints of
    ``b * S(b-)^{1/t}``.
    """
    if not 0 < t < 2:
        raise ValueError(f"t must lie in (0, 2), got {t}")
    b, S = count_function(x, ws)
    if b.size == 0:
        return 0.0
    return float(np.max(b * S ** (1.0 / t)))


def embedding_constant(s, r):
    """Continuity constant ``sup_j s_j / r_j`` of ``l^p_r -> l^q_s``.

    Also returns the ratios sorted descending; at finite truncation the tail
    of this profile is the only available proxy for compactness.
    """
    s = np.asarray(s, dtype=float)
    r = np.asarray(r, dtype=float)
    if s.shape != r.shape:
        raise ValueError(f"length mismatch: {s.size} vs {r.size}")
    if np.any(s <= 0) or np.any(r <= 0):
        raise ValueError("entries must be positive")
    ratios = np.sort(s / r)[::-1]
    return float(ratios[0]), ratios


def weak_embedding_constant(ws: WeightSystem, t: float, p: float) -> float:
    """Constant ``M`` with ``||x||_{omega_p,p} <= M ||x||_{k_t}`` for ``t < p <= 2``."""
    if not 0 < t < p <= 2:
        raise ValueError(f"need 0 < t < p <= 2, got t={t}, p={p}")
    c = float(np.min(ws.level_weights))
    C = 2 * (2 ** (p - t) - 1) ** (-1 / p)
    return 2 ** ((p - t) / p) * C * c ** ((t - p) / (t * p))
