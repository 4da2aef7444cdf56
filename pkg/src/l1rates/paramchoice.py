"""Choice of the regularization parameter: a-priori rule and discrepancy principle."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .solver import ConvergenceError, TikhonovProblem, TikhonovSolution, solve

log = logging.getLogger(__name__)


class BracketError(RuntimeError):
    """The residual band ``[tau1 delta, tau2 delta]`` was not reached."""


@dataclass(frozen=True)
class DiscrepancyConfig:
    tau1: float = 1.2
    tau2: float = 2.0
    alpha_bracket: tuple = (1e-14, 1e4)
    max_bisections: int = 200
    # relative slack on the band, so that tau1 == tau2 stays reachable in floating point
    rtol: float = 1e-12

    def __post_init__(self):
        if not 1 <= self.tau1 <= self.tau2:
            raise ValueError(f"need 1 <= tau1 <= tau2, got tau1={self.tau1}, tau2={self.tau2}")
        lo, hi = self.alpha_bracket
        if not 0 < lo < hi:
            raise ValueError(f"alpha bracket must be positive and ordered, got {self.alpha_bracket}")
        if self.max_bisections < 1:
            raise ValueError("max_bisections must be >= 1")


def a_priori_alpha(rho: float, delta: float, t: float, c: float = 1.0) -> float:
    """``c rho^{t/(t-2)} delta^{2/(2-t)}``; ``c delta^2`` in the borderline case t = 1."""
    if not (rho > 0 and delta > 0 and c > 0):
        raise ValueError("rho, delta and c must be positive")
    if not 0 < t < 2:
        raise ValueError(f"t must lie in (0, 2), got {t}")
    if t == 1:
        return c * delta**2
    return c * rho ** (t / (t - 2)) * delta ** (2 / (2 - t))


def discrepancy_alpha(problem: TikhonovProblem, delta: float, cfg: DiscrepancyConfig = DiscrepancyConfig(),
                      tol: float = 1e-10, max_iter: int = 100_000):
    """Bisection on ``log alpha`` until the residual lies in ``[tau1 delta, tau2 delta]``.

    The residual of the minimizer is nondecreasing in alpha. Every trial
    solution must be converged, so the band is checked on certified
    minimizers only. Returns ``(alpha, solution)``.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    lo_band = cfg.tau1 * delta * (1 - cfg.rtol)
    hi_band = cfg.tau2 * delta * (1 + cfg.rtol)

    x0 = None

    def trial(alpha) -> TikhonovSolution:
        nonlocal x0
        sol = solve(problem.with_alpha(alpha), tol=tol, max_iter=max_iter, x0=x0)
        if not sol.converged:
            raise ConvergenceError(f"solver did not converge at alpha={alpha:g}")
        x0 = sol.x_hat
        return sol

    lo, hi = (float(v) for v in cfg.alpha_bracket)
    s_lo = trial(lo)
    if s_lo.residual_norm > hi_band:
        raise BracketError(
            f"residual {s_lo.residual_norm:.6g} at alpha_min={lo:g} already exceeds tau2*delta={cfg.tau2 * delta:.6g}"
        )
    if s_lo.residual_norm >= lo_band:
        return lo, s_lo
    s_hi = trial(hi)
    if s_hi.residual_norm < lo_band:
        raise BracketError(
            f"residual {s_hi.residual_norm:.6g} at alpha_max={hi:g} stays below tau1*delta={cfg.tau1 * delta:.6g}"
        )
    if s_hi.residual_norm <= hi_band:
        return hi, s_hi
    for _ in range(cfg.max_bisections):
        mid = float(np.sqrt(lo * hi))
        s = trial(mid)
        if s.residual_norm < lo_band:
            lo = mid
        elif s.residual_norm > hi_band:
            hi = mid
        else:
            return mid, s
    raise BracketError(f"band not reached within {cfg.max_bisections} bisections (alpha in [{lo:g}, {hi:g}])")
