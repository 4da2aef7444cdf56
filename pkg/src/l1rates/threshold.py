"""Hard and soft thresholding, and exact sup-estimators for k_t membership."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seqspace import WeightSystem, as_sequence, kt_norm, omega_weights


def _check_alpha(alpha):
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")


def hard_threshold(x, ws: WeightSystem, alpha: float) -> np.ndarray:
    """``T_alpha``: keep ``x_j`` iff ``a_j^{-2} r_j alpha < |x_j|`` (strict)."""
    _check_alpha(alpha)
    x = as_sequence(x, ws)
    return np.where(np.abs(x) > ws.thresholds(alpha), x, 0.0)


def soft_threshold(x, ws: WeightSystem, alpha: float) -> np.ndarray:
    """Shrink each ``x_j`` toward zero by ``a_j^{-2} r_j alpha``, clamped at zero."""
    _check_alpha(alpha)
    x = as_sequence(x, ws)
    return np.sign(x) * np.maximum(np.abs(x) - ws.thresholds(alpha), 0.0)


@dataclass(frozen=True)
class ThresholdCurve:
    """Piecewise structure of ``alpha -> T_alpha x``.

    ``breakpoints`` are the distinct positive ``b_j`` in increasing order.
    The per-breakpoint arrays aggregate the indices sharing that breakpoint:
    ``mass`` sums ``a^{-2} r^2``, ``r1`` sums ``r |x|`` and ``omega``
    sums ``omega_p^p |x|^p`` (only when ``p`` was given).
    """

    breakpoints: np.ndarray
    mass: np.ndarray
    r1: np.ndarray
    omega: np.ndarray | None = None

    @classmethod
    def of(cls, x, ws: WeightSystem, p: float | None = None) -> "ThresholdCurve":
        x = as_sequence(x, ws)
        b = ws.breakpoints(x)
        keep = b > 0
        order = np.argsort(b[keep], kind="stable")
        b = b[keep][order]
        groups = [ws.level_weights, ws.r * np.abs(x)]
        if p is not None:
            groups.append(omega_weights(ws, p) ** p * np.abs(x) ** p)
        groups = [g[keep][order] for g in groups]
        uniq, first = np.unique(b, return_index=True)
        sums = [np.add.reduceat(g, first) if g.size else g for g in groups]
        return cls(uniq, *sums)

    @property
    def empty(self) -> bool:
        return self.breakpoints.size == 0

    def tail(self, values: np.ndarray) -> np.ndarray:
        """Sums over ``b_j >= b_k`` for each k (what ``T_alpha`` keeps just below b_k)."""
        return np.cumsum(values[::-1])[::-1]

    def head(self, values: np.ndarray) -> np.ndarray:
        """Sums over ``b_j <= b_k`` for each k (what ``T_alpha`` drops at alpha = b_k)."""
        return np.cumsum(values)


def gamma_estimator(x, ws: WeightSystem, t: float, p: float) -> float:
    """``sup_alpha alpha^{(t-p)/p} ||x - T_alpha x||_{omega_p,p}``, exactly.

    On ``[b_k, b_{k+1})`` the residual is constant while the power of alpha
    decreases, so the sup is attained at a left endpoint ``b_k``.
    """
    if not 0 < t < p <= 2:
        raise ValueError(f"need 0 < t < p <= 2, got t={t}, p={p}")
    curve = ThresholdCurve.of(x, ws, p)
    if curve.empty:
        return 0.0
    b = curve.breakpoints
    residual = curve.head(curve.omega) ** (1.0 / p)
    return float(np.max(b ** ((t - p) / p) * residual))


def eta_estimator(x, ws: WeightSystem, t: float) -> float:
    """``sup_alpha alpha^{t-1} ||T_alpha x||_{r,1}`` for ``t in (1,2)``, exactly.

    ``T_alpha x`` is constant on ``[b_k, b_{k+1})`` and the power of alpha
    increases, so each interval contributes its right-end limit
    ``b_{k+1}^{t-1} * (sum over b_j >= b_{k+1})``. The last interval is empty.
    """
    if not 1 < t < 2:
        raise ValueError(f"t must lie in (1, 2), got {t}")
    curve = ThresholdCurve.of(x, ws)
    if curve.empty:
        return 0.0
    b = curve.breakpoints
    return float(np.max(b ** (t - 1) * curve.tail(curve.r1)))


def gamma_bound(kt: float, t: float, p: float) -> float:
    """Upper bound on gamma(x) in terms of ``||x||_{k_t}``."""
    return 2 * (2 ** (p - t) - 1) ** (-1 / p) * kt ** (t / p)


def kt_from_gamma_bound(gamma: float, t: float, p: float) -> float:
    """Upper bound on ``||x||_{k_t}`` in terms of gamma(x)."""
    return 2 ** (p / t) * (2**t - 1) ** (-1 / t) * gamma ** (p / t)


def eta_bound(kt: float, t: float) -> float:
    """Upper bound on eta(x) in terms of ``||x||_{k_t}``."""
    return 2 / (1 - 2 ** (1 - t)) * kt**t


__all__ = [
    "ThresholdCurve",
    "eta_bound",
    "eta_estimator",
    "gamma_bound",
    "gamma_estimator",
    "hard_threshold",
    "kt_from_gamma_bound",
    "kt_norm",
    "soft_threshold",
]
