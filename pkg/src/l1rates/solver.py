"""Minimizers of ``1/2 ||g - F x||^2 + alpha * sum_j r_j |x_j|``.

Diagonal operators are solved coordinatewise in closed form. Matrix
operators use accelerated proximal gradient with a monotone restart and a
gradient-mapping stopping test, which doubles as a subgradient certificate.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .operators import ForwardOperator
from .seqspace import WeightSystem, as_sequence

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TikhonovProblem:
    op: ForwardOperator
    ws: WeightSystem
    g_obs: np.ndarray
    alpha: float = 1.0

    def __post_init__(self):
        g = np.asarray(self.g_obs, dtype=float)
        if g.ndim != 1 or g.size != self.op.image_dim:
            raise ValueError(f"data has {g.size} entries, image dimension is {self.op.image_dim}")
        if not np.all(np.isfinite(g)):
            raise ValueError("data must be finite")
        if self.op.n != self.ws.n:
            raise ValueError(f"operator takes {self.op.n} coefficients, weights have {self.ws.n}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        object.__setattr__(self, "g_obs", g)

    def with_alpha(self, alpha: float) -> "TikhonovProblem":
        return replace(self, alpha=float(alpha))

    def residual(self, x) -> np.ndarray:
        return self.op.apply(x) - self.g_obs

    def penalty(self, x) -> float:
        return float(np.sum(self.ws.r * np.abs(x)))

    def objective(self, x) -> float:
        res = self.residual(x)
        return 0.5 * float(res @ res) + self.alpha * self.penalty(x)

    def certificate(self, x) -> float:
        """Distance of zero to the subdifferential of the objective at ``x``."""
        grad = self.op.adjoint(self.residual(x))
        bound = self.alpha * self.ws.r
        nz = x != 0
        viol = np.where(nz, np.abs(grad + bound * np.sign(x)), np.maximum(np.abs(grad) - bound, 0.0))
        return float(np.max(viol)) if viol.size else 0.0


@dataclass(frozen=True, eq=False)
class TikhonovSolution:
    x_hat: np.ndarray
    residual_norm: float
    penalty: float
    objective: float
    alpha: float
    iterations: int = 0
    converged: bool = True
    history: list = field(default_factory=list, repr=False)

    @classmethod
    def build(cls, problem: TikhonovProblem, x, **kw) -> "TikhonovSolution":
        res = np.linalg.norm(problem.residual(x))
        pen = problem.penalty(x)
        return cls(x, float(res), pen, 0.5 * float(res) ** 2 + problem.alpha * pen, problem.alpha, **kw)


class ConvergenceError(RuntimeError):
    """Raised when a caller demands a converged solution and did not get one."""


def _shrink(v, thr):
    return np.sign(v) * np.maximum(np.abs(v) - thr, 0.0)


def solve_diagonal(problem: TikhonovProblem) -> TikhonovSolution:
    """Exact minimizer for a diagonal operator.

    With ``(F x)_j = d_j x_j`` the problem separates; ``y_j = d_j x_j`` is the
    soft shrinkage of ``g_j`` by ``alpha r_j / |d_j|``.
    """
    op = problem.op
    if op.kind != "diagonal":
        raise ValueError("solve_diagonal needs a diagonal operator")
    d = op.entries
    if np.any(d == 0):
        raise ValueError("diagonal operator has a zero entry")
    y = _shrink(problem.g_obs, problem.alpha * problem.ws.r / np.abs(d))
    return TikhonovSolution.build(problem, y / d)


def solve_fista(
    problem: TikhonovProblem,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    x0=None,
    step: float | None = None,
) -> TikhonovSolution:
    """Accelerated proximal gradient with monotone restart.

    Stops once the gradient mapping ``||y - prox(y - s grad f(y))|| / s``
    falls below ``tol``; the returned prox point then has a subgradient of
    norm at most about ``2 tol``.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if not tol > 0:
        raise ValueError("tol must be positive")
    op, ws, alpha = problem.op, problem.ws, problem.alpha
    if step is None:
        lip = 1.05 * op.norm_squared()
        if lip == 0:
            return TikhonovSolution.build(problem, np.zeros(ws.n))
        step = 1.0 / lip
    thr = step * alpha * ws.r

    x = np.zeros(ws.n) if x0 is None else as_sequence(x0, ws).copy()
    y = x.copy()
    theta = 1.0
    obj = problem.objective(x)
    history = [obj]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        grad = op.adjoint(op.apply(y) - problem.g_obs)
        x_new = _shrink(y - step * grad, thr)
        gmap = np.linalg.norm(y - x_new) / step
        obj_new = problem.objective(x_new)
        if obj_new > obj:
            # restart: drop momentum and take a plain step from x, which cannot increase the objective
            theta = 1.0
            y = x
            grad = op.adjoint(op.apply(y) - problem.g_obs)
            x_new = _shrink(y - step * grad, thr)
            gmap = np.linalg.norm(y - x_new) / step
            obj_new = problem.objective(x_new)
        theta_new = 0.5 * (1 + np.sqrt(1 + 4 * theta**2))
        y = x_new + ((theta - 1) / theta_new) * (x_new - x)
        x, obj, theta = x_new, obj_new, theta_new
        history.append(obj)
        if gmap <= tol:
            converged = True
            break
    if not converged:
        log.warning("FISTA stopped after %d iterations without reaching tol=%g", it, tol)
    return TikhonovSolution.build(problem, x, iterations=it, converged=converged, history=history)


def solve(problem: TikhonovProblem, tol: float = 1e-10, max_iter: int = 100_000, x0=None) -> TikhonovSolution:
    """Closed form for diagonal operators, FISTA otherwise."""
    if problem.op.kind == "diagonal":
        return solve_diagonal(problem)
    return solve_fista(problem, tol=tol, max_iter=max_iter, x0=x0)


def solution_path(problem: TikhonovProblem, alphas, tol: float = 1e-10, max_iter: int = 100_000, slack: float = 1e-8):
    """Solve along an ascending alpha grid, warm-starting each solve.

    The residual must not decrease and the penalty must not increase along
    the path; violations beyond ``slack`` (relative) raise.
    """
    alphas = np.asarray(alphas, dtype=float)
    if alphas.ndim != 1 or alphas.size == 0:
        raise ValueError("alphas must be a non-empty 1-d grid")
    if np.any(np.diff(alphas) < 0):
        raise ValueError("alphas must be sorted ascending")
    out = []
    x0 = None
    for alpha in alphas:
        sol = solve(problem.with_alpha(alpha), tol=tol, max_iter=max_iter, x0=x0)
        x0 = sol.x_hat
        out.append(sol)
    res = np.array([s.residual_norm for s in out])
    pen = np.array([s.penalty for s in out])
    scale_r = slack * max(res.max(), 1.0)
    scale_p = slack * max(pen.max(), 1.0)
    if np.any(np.diff(res) < -scale_r) or np.any(np.diff(pen) > scale_p):
        raise AssertionError("solution path is not monotone (residual up, penalty down)")
    return out
