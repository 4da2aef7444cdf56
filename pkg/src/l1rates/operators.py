"""Linear forward operators satisfying a two-sided Lipschitz bound.

The bound is ``(1/L)||x1 - x2||_{a,2} <= ||F x1 - F x2|| <= L ||x1 - x2||_{a,2}``
with a finite-dimensional Euclidean image space.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seqspace import WeightSystem, as_sequence


@dataclass(frozen=True, eq=False)
class ForwardOperator:
    """A diagonal or dense linear map from sequences to the image space.

    For ``kind="diagonal"`` the ``entries`` are the diagonal; for
    ``kind="matrix"`` they form an ``(image_dim, n)`` array. ``L`` is the
    declared Lipschitz bracket, ``shrinkage_closed`` records whether the
    domain is closed under coordinate shrinkage (always true here since the
    domain is the whole truncated space).
    """

    kind: str
    entries: np.ndarray
    L: float = 1.0
    shrinkage_closed: bool = True

    def __post_init__(self):
        if self.kind not in ("diagonal", "matrix"):
            raise ValueError(f"unknown operator kind {self.kind!r}")
        e = np.asarray(self.entries, dtype=float)
        if self.kind == "diagonal" and e.ndim != 1:
            raise ValueError("diagonal entries must be one-dimensional")
        if self.kind == "matrix" and e.ndim != 2:
            raise ValueError("matrix entries must be two-dimensional")
        if not np.all(np.isfinite(e)):
            raise ValueError("operator entries must be finite")
        if not self.L >= 1:
            raise ValueError(f"Lipschitz constant must be >= 1, got {self.L}")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @classmethod
    def diagonal(cls, ws: WeightSystem, scale: float = 1.0) -> "ForwardOperator":
        """``(F x)_j = scale * a_j x_j``; an isometry onto l^2 when scale is 1."""
        return cls("diagonal", scale * ws.a, L=max(abs(scale), 1 / abs(scale)))

    @classmethod
    def from_matrix(cls, A, L: float = 1.0) -> "ForwardOperator":
        return cls("matrix", np.atleast_2d(np.asarray(A, dtype=float)), L=L)

    @classmethod
    def from_file(cls, path, L: float = 1.0) -> "ForwardOperator":
        """Rows of whitespace-separated reals."""
        return cls.from_matrix(np.loadtxt(path, ndmin=2), L=L)

    @property
    def n(self) -> int:
        return self.entries.shape[-1]

    @property
    def image_dim(self) -> int:
        return self.entries.shape[0]

    def apply(self, x) -> np.ndarray:
        x = as_sequence(x)
        if x.size != self.n:
            raise ValueError(f"dimension mismatch: operator takes {self.n}, got {x.size}")
        if self.kind == "diagonal":
            return self.entries * x
        return self.entries @ x

    __call__ = apply

    def adjoint(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.ndim != 1 or y.size != self.image_dim:
            raise ValueError(f"dimension mismatch: image has {self.image_dim}, got {y.size}")
        if self.kind == "diagonal":
            return self.entries * y
        return self.entries.T @ y

    def norm_squared(self, iters: int = 200, seed: int = 0) -> float:
        """Squared operator norm ``||F||^2`` (Euclidean), by power iteration."""
        if self.kind == "diagonal":
            return float(np.max(self.entries**2))
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(self.n)
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(iters):
            w = self.adjoint(self.apply(v))
            nw = np.linalg.norm(w)
            if nw == 0:
                return 0.0
            new = float(v @ w)
            v = w / nw
            if abs(new - lam) <= 1e-12 * max(new, 1e-300):
                lam = new
                break
            lam = new
        return lam


def verify_lipschitz(op: ForwardOperator, ws: WeightSystem, samples: int = 100, seed: int = 0):
    """Min and max of ``||F x1 - F x2|| / ||x1 - x2||_{a,2}`` over random pairs.

    The declared ``op.L`` is consistent iff ``1/L <= min`` and ``max <= L``.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    if ws.n != op.n:
        raise ValueError(f"dimension mismatch: operator takes {op.n}, weights have {ws.n}")
    rng = np.random.default_rng(seed)
    ratios = []
    while len(ratios) < samples:
        x1 = rng.standard_normal(ws.n)
        x2 = rng.standard_normal(ws.n)
        den = np.linalg.norm(ws.a * (x1 - x2))
        if den == 0:
            continue
        ratios.append(np.linalg.norm(op.apply(x1) - op.apply(x2)) / den)
    return float(min(ratios)), float(max(ratios))
