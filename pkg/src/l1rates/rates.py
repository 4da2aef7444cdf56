"""Experiment harness for convergence rates, converse results and optimality.

Noise model: ``g_obs = F x+ + delta * u`` with ``u`` uniform on the unit
sphere of the image space, so ``||g_obs - F x+|| = delta`` exactly.
"""
from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .operators import ForwardOperator
from .paramchoice import BracketError, DiscrepancyConfig, a_priori_alpha, discrepancy_alpha
from .seqspace import WeightSystem, a2_norm, as_sequence, kt_norm, omega_norm, r1_norm
from .solver import ConvergenceError, TikhonovProblem, solution_path, solve
from .threshold import hard_threshold

log = logging.getLogger(__name__)

STYLES = ("spike", "geometric", "random", "extremal")
CSV_HEADER = ["delta", "alpha", "err_r1", "err_a2", "err_omega_p", "residual", "status"]


class AdmissibilityError(ValueError):
    """The truncated weight system has no index satisfying the density hypothesis."""


# ---------------------------------------------------------------------------
# solutions and noise


def extremal_profile(ws: WeightSystem, t: float) -> np.ndarray:
    """Sequence whose k_t count function equals ``alpha^{-t}`` at every breakpoint.

    Indices are activated in order; breakpoint ``b_j = C_j^{-1/t}`` with
    ``C_j`` the cumulative mass ``sum_{i<=j} a_i^{-2} r_i^2``. Every
    breakpoint attains the k_t supremum, so the sequence sits on the
    boundary of the unit ball of k_t at every scale.
    """
    C = np.cumsum(ws.level_weights)
    return C ** (-1.0 / t) * ws.r / ws.a**2


def generate_solution(ws: WeightSystem, t: float, rho: float, style: str = "extremal", seed: int = 0) -> np.ndarray:
    """A sequence with ``||x||_{k_t} = rho``, rescaled by homogeneity."""
    if not 0 < t < 2:
        raise ValueError(f"t must lie in (0, 2), got {t}")
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    rng = np.random.default_rng(seed)
    if style == "spike":
        x = np.zeros(ws.n)
        x[0] = 1.0
    elif style == "geometric":
        x = 0.5 ** np.arange(ws.n)
    elif style == "extremal":
        x = extremal_profile(ws, t)
    elif style == "random":
        env = extremal_profile(ws, t)
        x = env * rng.uniform(0.0, 1.0, ws.n) * rng.choice([-1.0, 1.0], ws.n)
    else:
        raise ValueError(f"unknown style {style!r}; expected one of {STYLES}")
    k = kt_norm(x, ws, t)
    if not (k > 0 and np.isfinite(k)):
        raise ValueError("degenerate weight system: generated sequence has no finite positive k_t norm")
    return x * (rho / k)


def unit_noise(m: int, rng: np.random.Generator) -> np.ndarray:
    u = rng.standard_normal(m)
    return u / np.linalg.norm(u)


def fit_slope(xs, ys) -> float:
    """Least-squares slope of ``log ys`` against ``log xs``; nan if fewer than 2 usable points."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    ok = (xs > 0) & (ys > 0) & np.isfinite(ys)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(xs[ok]), np.log(ys[ok]), 1)[0])


def theory_slopes(t: float, p: float) -> dict:
    """Exponents of delta in the error bounds for each reported norm."""
    out = {"err_a2": 1.0}
    if t < 1:
        out["err_r1"] = (2 - 2 * t) / (2 - t)
        out["err_omega_p"] = (2 / p) * (p - t) / (2 - t)
    elif t == 1:
        # only an upper bound with ||x+||_{r,1} in the constant
        out["err_r1"] = 0.0
        out["err_omega_p"] = (2 * p - 2) / p
    else:
        out["err_omega_p"] = (2 / p) * (p - t) / (2 - t)
    return out


def oversmoothing_constants(t: float, L: float = 1.0) -> dict:
    """Explicit constants ``C_t, C_a, C_r`` of the oversmoothing preparatory bounds."""
    if not 1 < t < 2:
        raise ValueError(f"t must lie in (1, 2), got {t}")
    C1 = 2 / (1 - 2 ** (1 - t))
    C2 = 4 * L**2 / (2 ** (2 - t) - 1)
    Ct = C1 + C2
    return {"C_t": Ct, "C_a": 4 * L**2 * (C2 + Ct), "C_r": Ct + C1}


# ---------------------------------------------------------------------------
# rate experiments


@dataclass
class RateExperimentConfig:
    ws: WeightSystem
    op: ForwardOperator
    t: float
    rho: float
    delta_grid: np.ndarray
    p_report: float = 1.5
    rule: str = "a_priori"
    seed: int = 0
    style: str = "extremal"
    c_apriori: float = 1.0
    discrepancy: DiscrepancyConfig = field(default_factory=DiscrepancyConfig)
    tol: float = 1e-10
    max_iter: int = 100_000
    # errors below this are treated as solver floor and left out of fits
    floor: float = 0.0
    workers: int = 1

    def __post_init__(self):
        self.delta_grid = np.sort(np.asarray(self.delta_grid, dtype=float))[::-1]
        if not 0 < self.t < 2:
            raise ValueError(f"t must lie in (0, 2), got {self.t}")
        if not self.t < self.p_report <= 2:
            raise ValueError(f"need t < p_report <= 2, got t={self.t}, p={self.p_report}")
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.delta_grid.size == 0 or np.any(self.delta_grid <= 0):
            raise ValueError("delta grid must be non-empty and positive")
        if self.rule not in ("a_priori", "discrepancy"):
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.style not in STYLES:
            raise ValueError(f"unknown style {self.style!r}")
        if self.ws.n != self.op.n:
            raise ValueError("operator and weight system dimensions differ")
        if self.rule == "discrepancy" and self.t > 1 and not self.discrepancy.tau1 > 1:
            raise ValueError("the oversmoothing regime needs tau1 > 1")

    @property
    def n(self) -> int:
        return self.ws.n


@dataclass
class RateRow:
    delta: float
    alpha: float = float("nan")
    err_r1: float = float("nan")
    err_a2: float = float("nan")
    err_omega_p: float = float("nan")
    residual: float = float("nan")
    status: str = "ok"
    # extra quantities for the oversmoothing bounds (not written to CSV)
    functional: float = float("nan")
    thresh_a2_sq: float = float("nan")
    thresh_r1: float = float("nan")
    # function-space error, used by the wavelet experiments
    err_lp: float = float("nan")


@dataclass
class RateReport:
    rows: list
    fitted_slopes: dict
    theory_slopes: dict
    tail_metadata: dict
    x_plus: np.ndarray | None = None
    columns: tuple = tuple(CSV_HEADER)

    @property
    def ok_rows(self):
        return [r for r in self.rows if r.status == "ok"]

    def deviations(self) -> dict:
        return {k: abs(self.fitted_slopes.get(k, np.nan) - v) for k, v in self.theory_slopes.items()}

    def passed(self, tol: float = 0.1) -> bool:
        d = self.deviations()
        return bool(d) and all(np.isfinite(v) and v <= tol for v in d.values())

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns)
            for r in self.rows:
                w.writerow([_fmt(getattr(r, k)) if k != "status" else r.status for k in self.columns])

    def summary(self, tol: float = 0.1) -> dict:
        dev = self.deviations()
        return {
            "fitted_slopes": self.fitted_slopes,
            "theory_slopes": self.theory_slopes,
            "deviation": dev,
            "tolerance": tol,
            "pass": {k: bool(np.isfinite(v) and v <= tol) for k, v in dev.items()},
            "failed_rows": sum(r.status != "ok" for r in self.rows),
            "tail_metadata": self.tail_metadata,
        }

    def write_summary(self, path, tol: float = 0.1) -> None:
        write_json(path, self.summary(tol))


def _fmt(v) -> str:
    return repr(float(v))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def tail_metadata(x_plus, ws: WeightSystem, t: float, alphas) -> dict:
    """Truncation diagnostics: penalty growth with n and how deep the alphas reach."""
    b = ws.breakpoints(x_plus)
    half = ws.n // 2
    alphas = np.asarray(alphas, dtype=float)
    alphas = alphas[np.isfinite(alphas)]
    active = [int(np.sum(b > al)) for al in alphas] if alphas.size else []
    return {
        "n": ws.n,
        "kt_norm": kt_norm(x_plus, ws, t),
        "r1_norm": r1_norm(x_plus, ws),
        "r1_norm_half": float(np.sum(ws.r[:half] * np.abs(x_plus[:half]))),
        "min_breakpoint": float(b[b > 0].min()) if np.any(b > 0) else 0.0,
        "max_active": max(active) if active else 0,
        "max_active_fraction": (max(active) / ws.n) if active else 0.0,
    }


def _rate_row(cfg: RateExperimentConfig, x_plus, i: int, delta: float) -> RateRow:
    rng = np.random.default_rng([cfg.seed, i])
    g = cfg.op.apply(x_plus) + delta * unit_noise(cfg.op.image_dim, rng)
    base = TikhonovProblem(cfg.op, cfg.ws, g)
    row = RateRow(delta=float(delta))
    try:
        if cfg.rule == "a_priori":
            alpha = a_priori_alpha(cfg.rho, delta, cfg.t, cfg.c_apriori)
            sol = solve(base.with_alpha(alpha), tol=cfg.tol, max_iter=cfg.max_iter)
            if not sol.converged:
                raise ConvergenceError(f"no convergence at alpha={alpha:g}")
        else:
            alpha, sol = discrepancy_alpha(base, delta, cfg.discrepancy, tol=cfg.tol, max_iter=cfg.max_iter)
    except BracketError as exc:
        log.info("row delta=%g: %s", delta, exc)
        row.status = "bracket_failure"
        return row
    except ConvergenceError as exc:
        log.info("row delta=%g: %s", delta, exc)
        row.status = "not_converged"
        return row
    e = x_plus - sol.x_hat
    row.alpha = float(alpha)
    row.err_r1 = r1_norm(e, cfg.ws)
    row.err_a2 = a2_norm(e, cfg.ws)
    row.err_omega_p = omega_norm(e, cfg.ws, cfg.p_report)
    row.residual = sol.residual_norm
    row.functional = sol.objective
    d = hard_threshold(x_plus, cfg.ws, alpha) - sol.x_hat
    row.thresh_a2_sq = a2_norm(d, cfg.ws) ** 2
    row.thresh_r1 = r1_norm(d, cfg.ws)
    return row


def run_rate_experiment(cfg: RateExperimentConfig, x_plus=None) -> RateReport:
    """Errors and fitted log-log slopes over the delta grid."""
    if x_plus is None:
        x_plus = generate_solution(cfg.ws, cfg.t, cfg.rho, cfg.style, cfg.seed)
    x_plus = as_sequence(x_plus, cfg.ws)
    jobs = list(enumerate(cfg.delta_grid))
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            rows = list(pool.map(lambda a: _rate_row(cfg, x_plus, *a), jobs))
    else:
        rows = [_rate_row(cfg, x_plus, i, d) for i, d in jobs]

    theory = theory_slopes(cfg.t, cfg.p_report)
    ok = [r for r in rows if r.status == "ok"]
    fitted = {}
    for key in theory:
        pts = [(r.delta, getattr(r, key)) for r in ok if getattr(r, key) > cfg.floor]
        fitted[key] = fit_slope(*zip(*pts)) if len(pts) >= 2 else float("nan")
    meta = tail_metadata(x_plus, cfg.ws, cfg.t, [r.alpha for r in ok])
    meta["rule"] = cfg.rule
    if len(ok) < 2:
        meta["note"] = "fewer than two usable rows; slopes undefined"
    return RateReport(rows, fitted, theory, meta, x_plus)


def oversmoothing_bound_check(report: RateReport, t: float, rho: float, L: float = 1.0) -> dict:
    """Check the three oversmoothing preparatory bounds on every row.

    Returns the explicit constants, the smallest constants that make every
    row hold (``fitted``) and a per-bound verdict.
    """
    const = oversmoothing_constants(t, L)
    need = {"C_t": [], "C_a": [], "C_r": []}
    holds = {k: True for k in need}
    for r in report.ok_rows:
        scale2 = rho**t * r.alpha ** (2 - t)
        scale1 = rho**t * r.alpha ** (1 - t)
        lhs = {
            "C_t": (r.functional, r.delta**2, scale2),
            "C_a": (r.thresh_a2_sq, 8 * L**2 * r.delta**2, scale2),
            "C_r": (r.thresh_r1, r.delta**2 / r.alpha, scale1),
        }
        for k, (val, free, scale) in lhs.items():
            need[k].append((val - free) / scale)
            if val > (free + const[k] * scale) * (1 + 1e-10):
                holds[k] = False
    fitted = {k: max(v) if v else float("nan") for k, v in need.items()}
    spread = {}
    for k, v in need.items():
        pos = [u for u in v if u > 0]
        spread[k] = (max(pos) / min(pos)) if pos else float("nan")
    return {"constants": const, "fitted": fitted, "spread": spread, "holds": holds}


@dataclass
class BiasReport:
    alphas: np.ndarray
    errors: np.ndarray
    slope: float
    theory: float


def run_bias_experiment(ws: WeightSystem, op: ForwardOperator, x_plus, t: float, p: float, alphas) -> BiasReport:
    """Exact-data error ``||x+ - x_alpha||_{omega_p,p}`` along an alpha grid."""
    alphas = np.sort(np.asarray(alphas, dtype=float))
    path = solution_path(TikhonovProblem(op, ws, op.apply(x_plus)), alphas)
    errs = np.array([omega_norm(x_plus - s.x_hat, ws, p) for s in path])
    return BiasReport(alphas, errs, fit_slope(alphas, errs), (p - t) / p)


# ---------------------------------------------------------------------------
# variational source condition and Bernstein inequality


def vsc_constant(kt: float, t: float) -> float:
    return (2 + 4 / (2 ** (1 - t) - 1)) * kt ** (t / (2 - t))


def _rel(lhs, rhs) -> float:
    den = max(abs(lhs), abs(rhs))
    return 0.0 if den == 0 else (lhs - rhs) / den


def vsc_candidates(x_plus, ws: WeightSystem, trials: int, rng: np.random.Generator):
    """Test points for the source condition: perturbations, shrinkages, thresholdings."""
    x_plus = np.asarray(x_plus, dtype=float)
    b = ws.breakpoints(x_plus)
    bs = np.unique(b[b > 0])
    out = []
    for i in range(trials):
        kind = i % 4
        if kind == 0:
            scale = 10 ** rng.uniform(-6, 1) * np.max(np.abs(x_plus))
            out.append((x_plus + scale * rng.standard_normal(ws.n), False))
        elif kind == 1:
            out.append((x_plus * rng.uniform(0, 1, ws.n), True))
        elif kind == 2 and bs.size:
            al = bs[rng.integers(bs.size)] * rng.uniform(0.5, 1.5)
            thr = ws.thresholds(al)
            out.append((np.sign(x_plus) * np.maximum(np.abs(x_plus) - thr, 0), True))
        else:
            mask = rng.random(ws.n) < rng.uniform(0.05, 1)
            out.append((np.where(mask, x_plus, 0.0), True))
    return out


def check_vsc(x_plus, ws: WeightSystem, t: float, trials: int = 200, seed: int = 0):
    """Worst relative violation of the source condition for the embedding operator.

    Every candidate is tested against the full form; shrunk candidates
    (``|x_j| <= |x+_j|``) are also tested against the reduced form without
    the distance term. Returns ``(max_violation, K)``; a non-positive
    violation means the inequality held everywhere.
    """
    if not 0 < t < 1:
        raise ValueError(f"t must lie in (0, 1), got {t}")
    x_plus = as_sequence(x_plus, ws)
    K = vsc_constant(kt_norm(x_plus, ws, t), t)
    rng = np.random.default_rng(seed)
    expo = (2 - 2 * t) / (2 - t)
    pen = r1_norm(x_plus, ws)
    worst = -np.inf
    cands = [(x_plus.copy(), True), (np.zeros(ws.n), True)] + vsc_candidates(x_plus, ws, trials, rng)
    for x, shrunk in cands:
        dist_r = r1_norm(x_plus - x, ws)
        rhs = K * a2_norm(x_plus - x, ws) ** expo
        diff = pen - r1_norm(x, ws)
        worst = max(worst, _rel(dist_r + diff, rhs))
        if shrunk:
            worst = max(worst, _rel(diff, rhs))
    return float(worst), float(K)


def check_bernstein(x_plus, ws: WeightSystem, t: float, alpha: float, trials: int = 200, seed: int = 0) -> float:
    """Worst relative violation of ``||P_alpha x||_{r,1} <= ||x+||_{k_t}^{t/2} alpha^{-t/2} ||x||_{a,2}``."""
    if not 0 < t < 2:
        raise ValueError(f"t must lie in (0, 2), got {t}")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    x_plus = as_sequence(x_plus, ws)
    mask = ws.breakpoints(x_plus) > alpha
    const = kt_norm(x_plus, ws, t) ** (t / 2) * alpha ** (-t / 2)
    rng = np.random.default_rng(seed)
    # Cauchy-Schwarz equality case
    cands = [np.where(mask, ws.r / ws.a**2, 0.0), x_plus]
    for _ in range(trials):
        x = rng.standard_normal(ws.n) * 10 ** rng.uniform(-3, 3)
        if rng.random() < 0.5:
            x = x / ws.a
        cands.append(x)
    worst = -np.inf
    for x in cands:
        lhs = float(np.sum(ws.r[mask] * np.abs(x[mask])))
        worst = max(worst, _rel(lhs, const * a2_norm(x, ws)))
    return float(worst)


# ---------------------------------------------------------------------------
# converse results


@dataclass
class ConverseResult:
    alphas: np.ndarray
    err_r1: np.ndarray
    err_img: np.ndarray
    functional: np.ndarray
    slope_r1: float
    slope_img: float
    slope_functional: float
    t_recovered_pair: tuple
    regime: str


def converse_probe(x_plus, ws: WeightSystem, op: ForwardOperator, alpha_grid) -> ConverseResult:
    """Fit Hölder exponents of the exact-data error curves and invert them for t.

    The image-space error decays like ``alpha^{(2-t)/2}``. For ``t < 1`` the
    l^1_r error decays like ``alpha^{1-t}``; for ``t > 1`` the minimal
    Tikhonov value decays like ``alpha^{2-t}``. The image-space estimate
    decides which regime applies.
    """
    x_plus = as_sequence(x_plus, ws)
    alphas = np.sort(np.asarray(alpha_grid, dtype=float))
    g = op.apply(x_plus)
    path = solution_path(TikhonovProblem(op, ws, g), alphas)
    err_r1 = np.array([r1_norm(x_plus - s.x_hat, ws) for s in path])
    err_img = np.array([np.linalg.norm(g - op.apply(s.x_hat)) for s in path])
    functional = np.array([s.objective for s in path])
    s_r1 = fit_slope(alphas, err_r1)
    s_img = fit_slope(alphas, err_img)
    s_fun = fit_slope(alphas, functional)
    t_img = 2 - 2 * s_img
    if np.isfinite(t_img) and t_img > 1:
        regime, t_main = "oversmoothing", 2 - s_fun
    else:
        regime, t_main = "penalty_finite", 1 - s_r1
    return ConverseResult(alphas, err_r1, err_img, functional, s_r1, s_img, s_fun, (t_main, t_img), regime)


def converse_alpha_grid(x_plus, ws: WeightSystem, active_lo: int, active_hi: int, num: int = 60) -> np.ndarray:
    """Log-spaced alphas between the breakpoints leaving ``active_hi`` and ``active_lo`` coefficients."""
    b = np.sort(ws.breakpoints(x_plus))[::-1]
    b = b[b > 0]
    if b.size < max(active_lo, active_hi):
        raise ValueError("sequence has too few nonzero coefficients for the requested range")
    return np.logspace(np.log10(b[active_hi - 1]), np.log10(b[active_lo - 1]), num)


# ---------------------------------------------------------------------------
# optimality


def optimality_lower_bound(ws: WeightSystem, t: float, p: float, rho: float, delta: float,
                           L: float = 1.0, q: float = 0.5, c0: float | None = None):
    """Minimax lower bound on the worst-case ``omega_p`` error and its spike witness.

    Returns ``(bound, witness, j0)``.
    """
    if not 0 < t < p <= 2:
        raise ValueError(f"need 0 < t < p <= 2, got t={t}, p={p}")
    if not (rho > 0 and delta > 0 and L > 0 and 0 < q < 1):
        raise ValueError("need rho, delta, L > 0 and q in (0, 1)")
    ratio = ws.a / ws.r
    if c0 is None:
        c0 = float(ratio.max())
    if delta > 0.5 * L * rho * c0 ** ((2 - t) / t):
        raise AdmissibilityError(f"delta={delta:g} exceeds 1/2 L rho c0^((2-t)/t)")
    eta = (2 * delta / (L * rho)) ** (t / (2 - t))
    ok = np.flatnonzero((q * eta <= ratio) & (ratio <= eta))
    if ok.size == 0:
        raise AdmissibilityError(
            f"no index j with q*eta <= a_j/r_j <= eta for eta={eta:.3g}, q={q} "
            "(density hypothesis 'q eta <= a_j r_j^-1 <= eta' violated at this truncation)"
        )
    j0 = int(ok[np.argmax(ratio[ok])])
    w = np.zeros(ws.n)
    w[j0] = rho * ws.a[j0] ** ((2 - 2 * t) / t) * ws.r[j0] ** ((t - 2) / t)
    c = q ** ((2 * p - 2 * t) / (p * t)) * (2 / L) ** ((2 / p) * (p - t) / (2 - t))
    bound = c * rho ** ((t / p) * (2 - p) / (2 - t)) * delta ** ((2 / p) * (p - t) / (2 - t))
    k = kt_norm(w, ws, t)
    if abs(k - rho) > 1e-10 * rho:
        raise AssertionError(f"witness has k_t norm {k!r}, expected {rho!r}")
    if a2_norm(w, ws) > 2 * delta / L * (1 + 1e-12):
        raise AssertionError("witness violates the data-misfit constraint")
    return float(bound), w, j0
