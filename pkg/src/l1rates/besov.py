"""Haar wavelets on the 1-d torus and Besov sequence norms.

Flat layout of a coefficient vector for maximal level ``J``: index 0 is the
scaling coefficient, index ``2^j + k`` is the wavelet ``(j, k)`` with
``0 <= k < 2^j`` and ``0 <= j <= J``; ``n = 2^{J+1}``. The scaling
coefficient is grouped with level 0 for all level-dependent weights.

Functions are represented by their cell averages on ``2^R`` equal cells of
``[0, 1)``; all L^p norms are exact integrals of the piecewise constant
representative.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .operators import ForwardOperator
from .paramchoice import BracketError, DiscrepancyConfig, a_priori_alpha, discrepancy_alpha
from .seqspace import WeightSystem, a2_norm, as_sequence, count_function, kt_norm, r1_norm
from .solver import ConvergenceError, TikhonovProblem, solve

D = 1  # spatial dimension


@dataclass(frozen=True)
class WaveletGrid:
    J: int

    def __post_init__(self):
        if self.J < 0:
            raise ValueError("J must be >= 0")

    @property
    def n(self) -> int:
        return 2 ** (self.J + 1)

    @property
    def levels(self) -> np.ndarray:
        """Level of every flat index (scaling index counts as level 0)."""
        lv = np.zeros(self.n, dtype=int)
        for j in range(self.J + 1):
            lv[2**j : 2 ** (j + 1)] = j
        return lv

    def flat(self, j: int, k: int) -> int:
        if not (0 <= j <= self.J and 0 <= k < 2**j):
            raise IndexError(f"(j, k) = ({j}, {k}) outside grid with J={self.J}")
        return 2**j + k

    def unflat(self, i: int):
        """Inverse of :meth:`flat`; the scaling index maps to ``(-1, 0)``."""
        if not 0 <= i < self.n:
            raise IndexError(i)
        if i == 0:
            return -1, 0
        j = int(i).bit_length() - 1
        return j, i - 2**j

    def weight_system(self, a: float, r: float) -> WeightSystem:
        """``a_(j,k) = 2^{-j a}``, ``r_(j,k) = 2^{j (r - d/2)}``."""
        lv = self.levels.astype(float)
        return WeightSystem(2.0 ** (-lv * a), 2.0 ** (lv * (r - D / 2)))


@dataclass(frozen=True)
class BesovParams:
    """Smoothness ``s`` of the target, ``r`` of the penalty, ``a`` of the operator."""

    s: float
    a: float = 1.0
    r: float = 0.0

    # Haar characterizes Besov spaces only inside a window of width one
    s_max: float = 1.0

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"operator smoothing a must be positive, got {self.a}")
        if self.r < 0:
            raise ValueError(f"penalty smoothness r must be >= 0, got {self.r}")
        if not D / 2 - self.r < self.a:
            raise ValueError(f"need d/2 - r < a, got a={self.a}, r={self.r}")

    @property
    def t(self) -> float:
        return t_s_scale(self.s, self.a, self.r)

    @property
    def lp_exponent(self) -> float:
        """The function-space exponent ``(2a + 2r) / (2a + r)`` of the error norm."""
        return (2 * self.a + 2 * self.r) / (2 * self.a + self.r)

    @property
    def rate(self) -> float:
        return self.s / (self.s + self.a)


def t_s_scale(s: float, a: float, r: float) -> float:
    """``t_s = (2a + 2r) / (s + 2a + r)``; maps smoothness to the k_t scale."""
    if not s > -a:
        raise ValueError(f"need s > -a, got s={s}, a={a}")
    return (2 * a + 2 * r) / (s + 2 * a + r)


def s_from_t(t: float, a: float, r: float) -> float:
    """Inverse of :func:`t_s_scale`."""
    return (2 * a + 2 * r) / t - 2 * a - r


def besov_seq_norm(x, grid: WaveletGrid, s: float, p: float, q: float) -> float:
    """``b^s_{p,q}`` norm with the usual max-replacements for infinite p or q."""
    x = as_sequence(x)
    if x.size != grid.n:
        raise ValueError(f"expected {grid.n} coefficients, got {x.size}")
    if not (p > 0 and q > 0):
        raise ValueError(f"p and q must be positive (or inf), got p={p}, q={q}")
    lv = grid.levels
    per_level = np.empty(grid.J + 1)
    for j in range(grid.J + 1):
        v = np.abs(x[lv == j])
        per_level[j] = v.max() if np.isinf(p) else np.sum(v**p) ** (1 / p)
    inv_p = 0.0 if np.isinf(p) else 1 / p
    w = 2.0 ** (np.arange(grid.J + 1) * (s + D / 2 - D * inv_p))
    terms = w * per_level
    if np.isinf(q):
        return float(terms.max())
    return float(np.sum(terms**q) ** (1 / q))


def besov_weights(grid: WaveletGrid, s: float, p: float) -> np.ndarray:
    """Weights turning ``b^s_{p,p}`` into a weighted l^p norm."""
    return 2.0 ** (grid.levels * (s + D / 2 - D / p))


def haar_synthesize(x, grid: WaveletGrid, resolution: int | None = None) -> np.ndarray:
    """Cell averages of ``sum x_(j,k) psi_(j,k)`` on ``2^resolution`` cells."""
    x = as_sequence(x)
    if x.size != grid.n:
        raise ValueError(f"expected {grid.n} coefficients, got {x.size}")
    R = grid.J + 1 if resolution is None else resolution
    if R < grid.J + 1:
        raise ValueError(f"resolution {R} too small for J={grid.J}")
    avg = x[:1].copy()
    for j in range(grid.J + 1):
        d = x[2**j : 2 ** (j + 1)] * 2.0 ** (j / 2)
        nxt = np.empty(2 ** (j + 1))
        nxt[0::2] = avg + d
        nxt[1::2] = avg - d
        avg = nxt
    return np.repeat(avg, 2 ** (R - grid.J - 1))


def haar_analyze(f, J: int) -> np.ndarray:
    """Haar coefficients up to level ``J`` of a piecewise constant function."""
    f = np.asarray(f, dtype=float)
    R = int(np.log2(f.size)) if f.size else -1
    if f.ndim != 1 or f.size == 0 or 2**R != f.size:
        raise ValueError("number of cell averages must be a power of two")
    if R < J + 1:
        raise ValueError(f"resolution {R} too small for J={J}")
    avg = f.reshape(2 ** (J + 1), -1).mean(axis=1)
    out = np.empty(2 ** (J + 1))
    for j in range(J, -1, -1):
        out[2**j : 2 ** (j + 1)] = 2.0 ** (-j / 2 - 1) * (avg[0::2] - avg[1::2])
        avg = 0.5 * (avg[0::2] + avg[1::2])
    out[0] = avg[0]
    return out


def lp_function_norm(f, p: float) -> float:
    """Exact ``L^p(0,1)`` norm of a piecewise constant function on equal cells."""
    f = np.asarray(f, dtype=float)
    if np.isinf(p):
        return float(np.max(np.abs(f)))
    return float(np.mean(np.abs(f) ** p) ** (1 / p))


def _cell_edges(resolution: int) -> np.ndarray:
    return np.arange(2**resolution + 1) / 2**resolution


def piecewise_smooth_signal(kind: str, locations, resolution: int, background: float = 0.0,
                            heights=None) -> np.ndarray:
    """Exact cell averages of a test signal with jumps or kinks.

    ``jump``: ``sum_i h_i 1{x > x_i}``; ``kink``: ``sum_i h_i max(x - x_i, 0)``.
    ``background`` scales a fixed smooth term ``sin(2 pi x)``.
    """
    locations = np.atleast_1d(np.asarray(locations, dtype=float))
    if np.any(locations <= 0) or np.any(locations >= 1):
        raise ValueError("locations must lie in (0, 1)")
    if np.unique(locations).size != locations.size:
        raise ValueError("locations must be distinct")
    heights = np.ones_like(locations) if heights is None else np.asarray(heights, dtype=float)
    e = _cell_edges(resolution)
    lo, hi = e[:-1], e[1:]
    h = hi - lo
    f = np.zeros(2**resolution)
    for x0, c in zip(locations, heights):
        if kind == "jump":
            f += c * np.clip(hi - np.maximum(lo, x0), 0, None) / h
        elif kind == "kink":
            # integral of max(x - x0, 0) over [lo, hi]
            F = lambda z: 0.5 * np.maximum(z - x0, 0.0) ** 2  # noqa: E731
            f += c * (F(hi) - F(lo)) / h
        else:
            raise ValueError(f"unknown signal kind {kind!r}")
    if background:
        f += background * (np.cos(2 * np.pi * lo) - np.cos(2 * np.pi * hi)) / (2 * np.pi * h)
    return f


# ---------------------------------------------------------------------------
# experiments


def estimate_t(x, ws: WeightSystem, quantiles=(0.2, 0.8)) -> float:
    """k_t exponent read off the count function.

    For a sequence on the boundary of k_t the tail mass above a breakpoint
    behaves like ``b^{-t}``; the slope is fitted on the central quantile
    range of distinct breakpoints to stay away from the coarsest levels and
    the truncation edge. Returns nan when too few breakpoints exist.
    """
    b, S = count_function(x, ws)
    m = b.size
    i0, i1 = int(quantiles[0] * m), int(quantiles[1] * m)
    if i1 - i0 < 3:
        return float("nan")
    return float(-np.polyfit(np.log(b[i0:i1]), np.log(S[i0:i1]), 1)[0])


def measured_smoothness(f, grid: WaveletGrid, a: float, r: float) -> float:
    """Regularity ``s`` of a signal on the t_s scale, estimated from its Haar coefficients."""
    x = haar_analyze(f, grid.J)
    t = estimate_t(x, grid.weight_system(a, r))
    return s_from_t(t, a, r) if np.isfinite(t) else float("nan")


def besov_rate_experiment(params: BesovParams, signal, delta_grid, rule: str = "a_priori", seed: int = 0,
                          J: int | None = None, c_apriori: float = 1.0,
                          discrepancy: DiscrepancyConfig = DiscrepancyConfig()):
    """Denoise-and-deconvolve a sampled signal and fit the L^p error rate.

    The operator is ``(F x)_(j,k) = 2^{-j a} x_(j,k)``. The smoothness used
    for the theory slope ``s/(s+a)`` and for the a-priori rule is measured
    from the signal; ``params.s`` is used only if the measurement fails.
    """
    from .rates import RateReport, RateRow, fit_slope, unit_noise

    f = np.asarray(signal, dtype=float)
    R = int(np.log2(f.size)) if f.size else -1
    if f.ndim != 1 or f.size == 0 or 2**R != f.size:
        raise ValueError("signal must be cell averages on 2^R cells")
    J = R - 1 if J is None else J
    grid = WaveletGrid(J)
    ws = grid.weight_system(params.a, params.r)
    op = ForwardOperator.diagonal(ws)
    x_plus = haar_analyze(f, J)
    f_plus = haar_synthesize(x_plus, grid, R)
    p = params.lp_exponent

    t = estimate_t(x_plus, ws)
    s = s_from_t(t, params.a, params.r) if np.isfinite(t) else params.s
    if not np.isfinite(t):
        t = params.t
    rho = kt_norm(x_plus, ws, t)
    deltas = np.sort(np.asarray(delta_grid, dtype=float))[::-1]
    if deltas.size == 0 or np.any(deltas <= 0):
        raise ValueError("delta grid must be non-empty and positive")
    if rule not in ("a_priori", "discrepancy"):
        raise ValueError(f"unknown rule {rule!r}")

    rows = []
    for i, delta in enumerate(deltas):
        rng = np.random.default_rng([seed, i])
        g = op.apply(x_plus) + delta * unit_noise(grid.n, rng)
        base = TikhonovProblem(op, ws, g)
        row = RateRow(delta=float(delta))
        try:
            if rule == "a_priori":
                alpha = a_priori_alpha(rho if rho > 0 else 1.0, delta, t, c_apriori)
                sol = solve(base.with_alpha(alpha))
            else:
                alpha, sol = discrepancy_alpha(base, delta, discrepancy)
        except BracketError:
            row.status = "bracket_failure"
            rows.append(row)
            continue
        except ConvergenceError:
            row.status = "not_converged"
            rows.append(row)
            continue
        e = x_plus - sol.x_hat
        row.alpha = float(alpha)
        row.err_r1 = r1_norm(e, ws)
        row.err_a2 = a2_norm(e, ws)
        row.err_lp = lp_function_norm(f_plus - haar_synthesize(sol.x_hat, grid, R), p)
        row.residual = sol.residual_norm
        rows.append(row)

    ok = [r for r in rows if r.status == "ok" and r.err_lp > 0]
    theory = {"err_lp": s / (s + params.a)}
    fitted = {"err_lp": fit_slope([r.delta for r in ok], [r.err_lp for r in ok]) if len(ok) >= 2 else float("nan")}
    meta = {
        "J": J,
        "resolution": R,
        "lp_exponent": p,
        "t_measured": t,
        "s_measured": s,
        "s_nominal": params.s,
        "kt_norm": rho,
        "rule": rule,
        "projection_error_lp": lp_function_norm(f - f_plus, p),
    }
    columns = ("delta", "alpha", "err_r1", "err_a2", "err_lp", "residual", "status")
    return RateReport(rows, fitted, theory, meta, x_plus, columns)


def level_terms(x, grid: WaveletGrid, s: float, p: float) -> np.ndarray:
    """Per-level contributions ``2^{j p (s + d/2 - d/p)} sum_k |x_(j,k)|^p`` to ``||x||^p_{b^s_{p,p}}``."""
    x = as_sequence(x)
    lv = grid.levels
    w = 2.0 ** (np.arange(grid.J + 1) * p * (s + D / 2 - D / p))
    return w * np.array([np.sum(np.abs(x[lv == j]) ** p) for j in range(grid.J + 1)])


@dataclass
class MembershipScan:
    s: float
    t: float
    Js: np.ndarray
    norms: np.ndarray
    growth: float

    @property
    def bounded(self) -> bool:
        return self.growth < 0


def membership_scan(signal_fn, s: float, t: float, Js=range(6, 13)) -> MembershipScan:
    """Decide ``b^s_{t,t}`` membership from norms computed at increasing depth.

    ``signal_fn(resolution)`` returns cell averages. The norm stays bounded
    as J grows iff the level terms decay geometrically, so the verdict is
    the sign of the fitted log2-slope of the finest-level terms across Js.
    """
    Js = np.asarray(list(Js), dtype=int)
    norms, finest = [], []
    for J in Js:
        grid = WaveletGrid(int(J))
        x = haar_analyze(signal_fn(int(J) + 1), int(J))
        norms.append(besov_seq_norm(x, grid, s, t, t))
        finest.append(level_terms(x, grid, s, t)[-1])
    finest = np.array(finest)
    growth = float(np.polyfit(Js, np.log2(np.maximum(finest, 1e-300)), 1)[0])
    return MembershipScan(s, t, Js, np.array(norms), growth)


def membership_threshold(signal_fn, t: float, Js=range(6, 13), s_lo: float = 0.0, s_hi: float = 10.0,
                         tol: float = 1e-6) -> float:
    """Smallest s where the scan switches from bounded to diverging, by bisection."""
    lo, hi = s_lo, s_hi
    if not membership_scan(signal_fn, lo, t, Js).bounded or membership_scan(signal_fn, hi, t, Js).bounded:
        raise ValueError(f"membership does not switch inside [{s_lo}, {s_hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if membership_scan(signal_fn, mid, t, Js).bounded:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def read_signal_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if rows and rows[0][0].strip() == "value":
        rows = rows[1:]
    return np.array([float(r[0]) for r in rows])


def write_signal_csv(path, f) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["value"])
        for v in f:
            w.writerow([repr(float(v))])


def read_coefficients_csv(path, grid: WaveletGrid) -> np.ndarray:
    x = np.zeros(grid.n)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            j, k = int(row["j"]), int(row["k"])
            x[0 if j < 0 else grid.flat(j, k)] = float(row["value"])
    return x


def write_coefficients_csv(path, x, grid: WaveletGrid) -> None:
    x = as_sequence(x)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "k", "value"])
        for i, v in enumerate(x):
            j, k = grid.unflat(i)
            w.writerow([j, k, repr(float(v))])
