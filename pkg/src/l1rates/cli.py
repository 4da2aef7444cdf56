"""Batch command-line front end.

Every subcommand reads a flat YAML mapping (``--config``), applies flag
overrides, validates everything, and only then computes. Outputs are CSV
tables plus a ``summary.json`` sidecar written to ``--out``.

Exit codes: 0 success, 2 validation, 3 solver non-convergence,
4 discrepancy bracket failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import besov, rates
from .operators import ForwardOperator
from .paramchoice import BracketError, DiscrepancyConfig, a_priori_alpha, discrepancy_alpha
from .seqspace import WeightSystem, kt_norm, lp_norm, omega_norm
from .solver import ConvergenceError, TikhonovProblem, solve
from .threshold import eta_estimator, gamma_estimator

log = logging.getLogger("l1rates")

EXIT_OK, EXIT_VALIDATION, EXIT_NOT_CONVERGED, EXIT_BRACKET = 0, 2, 3, 4


class ValidationError(ValueError):
    pass


# key -> (type, default); a default of None means optional
_WEIGHTS = {"n": (int, 1024), "a_power": (float, 1.0), "r_power": (float, 0.0), "weights": (str, None)}
_DISCREPANCY = {"tau1": (float, 1.2), "tau2": (float, 2.0), "alpha_min": (float, 1e-14), "alpha_max": (float, 1e4),
                "max_bisections": (int, 200)}
_RATES = {
    **_WEIGHTS, **_DISCREPANCY,
    "t": (float, 0.5), "rho": (float, 100.0), "p": (float, 1.5), "rule": (str, "a_priori"),
    "style": (str, "extremal"), "c": (float, 1.0), "delta_max": (float, 1e-1), "delta_min": (float, 1e-5),
    "n_delta": (int, 9), "tol": (float, 1e-10), "max_iter": (int, 100_000), "workers": (int, 1),
    "slope_tol": (float, 0.1),
}
SCHEMAS = {
    "norms": {
        **_WEIGHTS, "input": (str, None), "t": (float, 0.5), "p": (float, 1.5), "norms": (list, ["lp", "omega", "kt", "gamma"]),
    },
    "solve": {
        **_WEIGHTS, **_DISCREPANCY,
        "operator": (str, "diagonal"), "matrix": (str, None), "L": (float, 1.0), "data": (str, None),
        "alpha": (float, None), "rule": (str, None), "delta": (float, None), "t": (float, None), "rho": (float, None),
        "c": (float, 1.0), "tol": (float, 1e-10), "max_iter": (int, 100_000),
    },
    "rates": _RATES,
    "oversmooth": {**_RATES, "t": (float, 1.5), "rho": (float, 1.0), "p": (float, 1.8), "rule": (str, "discrepancy"),
                   "n": (int, 65536), "delta_max": (float, 0.3), "delta_min": (float, 0.01),
                   "bias_alpha_min": (float, 1e-5), "bias_alpha_max": (float, 1e-1), "n_alpha": (int, 30)},
    "converse": {**_WEIGHTS, "n": (int, 65536), "t": (float, 0.5), "rho": (float, 1.0), "style": (str, "extremal"),
                 "active_lo": (int, 100), "active_hi": (int, None), "n_alpha": (int, 60), "slope_tol": (float, 0.05)},
    "besov": {
        **_DISCREPANCY, "kind": (str, "jump"), "locations": (list, [1 / 3, 0.71]), "background": (float, 0.0),
        "J": (int, 12), "a": (float, 1.0), "r": (float, 0.0), "s": (float, 1.0), "rule": (str, "a_priori"),
        "c": (float, 1.0), "delta_max": (float, 1e-1), "delta_min": (float, 1e-4), "n_delta": (int, 7),
        "signal": (str, None), "slope_tol": (float, 0.1),
    },
}


@dataclass
class RunConfig:
    command: str
    params: dict
    seed: int = 0
    out: Path = field(default_factory=lambda: Path("out"))
    base_dir: Path = field(default_factory=Path.cwd)

    def __getitem__(self, key):
        return self.params[key]

    def path(self, key) -> Path | None:
        v = self.params.get(key)
        if v is None:
            return None
        p = Path(v)
        return p if p.is_absolute() else self.base_dir / p


def _coerce(key, typ, value):
    if value is None:
        return None
    try:
        if typ is list:
            return list(value) if isinstance(value, (list, tuple)) else [value]
        if typ is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        return typ(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{key}: cannot interpret {value!r} as {typ.__name__}") from None


def load_config(command: str, path: str | None, overrides: dict, seed: int | None, out: str | None) -> RunConfig:
    schema = SCHEMAS[command]
    raw = {}
    base = Path.cwd()
    if path is not None:
        p = Path(path)
        try:
            raw = yaml.safe_load(p.read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ValidationError(f"config {path} must be a flat key-value mapping")
        base = p.resolve().parent
    raw.pop("command", None)
    cfg_seed = raw.pop("seed", 0)
    cfg_out = raw.pop("out", None)
    raw.update(overrides)
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ValidationError(f"unknown config keys for {command}: {', '.join(unknown)}")
    params = {k: _coerce(k, typ, raw.get(k, default)) for k, (typ, default) in schema.items()}
    out_dir = Path(out) if out is not None else (base / cfg_out if cfg_out else Path("out"))
    return RunConfig(command, params, int(seed if seed is not None else cfg_seed), out_dir, base)


# ---------------------------------------------------------------------------
# builders (validate, no heavy work)


def _check(cond, msg):
    if not cond:
        raise ValidationError(msg)


def read_sequence_csv(path) -> np.ndarray:
    """A single numeric column with an optional ``value`` header."""
    try:
        return besov.read_signal_csv(path)
    except (OSError, ValueError, IndexError) as exc:
        raise ValidationError(f"cannot parse {path}: {exc}") from None


def build_weights(cfg: RunConfig, n: int | None = None) -> WeightSystem:
    wpath = cfg.path("weights")
    if wpath is not None:
        try:
            arr = np.loadtxt(wpath, ndmin=2, delimiter=",", skiprows=1)
        except (OSError, ValueError) as exc:
            raise ValidationError(f"cannot parse weights file {wpath}: {exc}") from None
        _check(arr.shape[1] == 2, "weights file needs two columns a,r")
        return WeightSystem(arr[:, 0], arr[:, 1])
    n = cfg["n"] if n is None else n
    _check(n >= 1, f"n must be >= 1, got {n}")
    return WeightSystem.power(n, cfg["a_power"], cfg["r_power"])


def build_discrepancy(cfg: RunConfig) -> DiscrepancyConfig:
    return DiscrepancyConfig(cfg["tau1"], cfg["tau2"], (cfg["alpha_min"], cfg["alpha_max"]), cfg["max_bisections"])


def _delta_grid(cfg: RunConfig) -> np.ndarray:
    _check(cfg["n_delta"] >= 1, "n_delta must be >= 1")
    _check(0 < cfg["delta_min"] <= cfg["delta_max"], "need 0 < delta_min <= delta_max")
    return np.geomspace(cfg["delta_max"], cfg["delta_min"], cfg["n_delta"])


def build_rate_config(cfg: RunConfig) -> rates.RateExperimentConfig:
    _check(0 < cfg["t"] < 2, f"t must lie in (0, 2), got {cfg['t']}")
    ws = build_weights(cfg)
    return rates.RateExperimentConfig(
        ws=ws, op=ForwardOperator.diagonal(ws), t=cfg["t"], rho=cfg["rho"], delta_grid=_delta_grid(cfg),
        p_report=cfg["p"], rule=cfg["rule"], seed=cfg.seed, style=cfg["style"], c_apriori=cfg["c"],
        discrepancy=build_discrepancy(cfg), tol=cfg["tol"], max_iter=cfg["max_iter"], workers=cfg["workers"],
    )


# ---------------------------------------------------------------------------
# commands


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def cmd_norms(cfg: RunConfig) -> int:
    t, p = cfg["t"], cfg["p"]
    _check(0 < t < 2, f"t must lie in (0, 2), got {t}")
    _check(0 < p <= 2, f"p must lie in (0, 2], got {p}")
    known = {"lp", "omega", "kt", "gamma", "eta"}
    bad = sorted(set(cfg["norms"]) - known)
    _check(not bad, f"unknown norms requested: {bad}; choose from {sorted(known)}")
    _check("gamma" not in cfg["norms"] or t < p, f"gamma needs t < p, got t={t}, p={p}")
    _check("eta" not in cfg["norms"] or 1 < t < 2, f"eta needs t in (1, 2), got t={t}")
    _check(cfg.path("input") is not None, "norms needs an input coefficient file")
    x = read_sequence_csv(cfg.path("input"))
    _check(np.all(np.isfinite(x)), "coefficients must be finite")
    rows = []
    if x.size == 0:
        rows = [(name, 0.0) for name in cfg["norms"]]
    else:
        ws = build_weights(cfg, n=x.size)
        _check(ws.n == x.size, f"weights have {ws.n} entries, input has {x.size}")
        for name in cfg["norms"]:
            if name == "lp":
                v = lp_norm(x, np.ones(x.size), p)
            elif name == "omega":
                v = omega_norm(x, ws, p)
            elif name == "kt":
                v = kt_norm(x, ws, t)
            elif name == "gamma":
                v = gamma_estimator(x, ws, t, p)
            else:
                v = eta_estimator(x, ws, t)
            rows.append((name, float(v)))
    cfg.out.mkdir(parents=True, exist_ok=True)
    _write_rows(cfg.out / "norms.csv", ["norm", "value"], rows)
    rates.write_json(cfg.out / "summary.json", {"t": t, "p": p, "n": int(x.size), "norms": dict(rows)})
    for name, v in rows:
        print(f"{name:6s} {v!r}")
    return EXIT_OK


def cmd_solve(cfg: RunConfig) -> int:
    _check(cfg.path("data") is not None, "solve needs a data file")
    g = read_sequence_csv(cfg.path("data"))
    if cfg["operator"] == "diagonal":
        ws = build_weights(cfg, n=g.size)
        op = ForwardOperator.diagonal(ws)
    elif cfg["operator"] == "matrix":
        _check(cfg.path("matrix") is not None, "matrix operator needs a matrix file")
        try:
            op = ForwardOperator.from_file(cfg.path("matrix"), L=cfg["L"])
        except (OSError, ValueError) as exc:
            raise ValidationError(f"cannot load matrix: {exc}") from None
        ws = build_weights(cfg, n=op.n)
    else:
        raise ValidationError(f"operator must be diagonal or matrix, got {cfg['operator']!r}")
    alpha, rule = cfg["alpha"], cfg["rule"]
    _check((alpha is None) != (rule is None), "give exactly one of alpha or rule")
    if alpha is not None:
        _check(alpha > 0, f"alpha must be positive, got {alpha}")
    else:
        _check(rule in ("a_priori", "discrepancy"), f"rule must be a_priori or discrepancy, got {rule!r}")
        _check(cfg["delta"] is not None and cfg["delta"] > 0, "rule-based choice needs delta > 0")
        if rule == "a_priori":
            _check(cfg["t"] is not None and 0 < cfg["t"] < 2, "a_priori rule needs t in (0, 2)")
            _check(cfg["rho"] is not None and cfg["rho"] > 0, "a_priori rule needs rho > 0")
            alpha = a_priori_alpha(cfg["rho"], cfg["delta"], cfg["t"], cfg["c"])
    dcfg = build_discrepancy(cfg)
    base = TikhonovProblem(op, ws, g, alpha if alpha is not None else 1.0)

    if alpha is None:
        alpha, sol = discrepancy_alpha(base, cfg["delta"], dcfg, tol=cfg["tol"], max_iter=cfg["max_iter"])
    else:
        sol = solve(base, tol=cfg["tol"], max_iter=cfg["max_iter"])
    problem = base.with_alpha(alpha)
    cfg.out.mkdir(parents=True, exist_ok=True)
    _write_rows(cfg.out / "solution.csv", ["index", "value"], [(i, float(v)) for i, v in enumerate(sol.x_hat)])
    summary = {
        "alpha": float(alpha), "residual": sol.residual_norm, "penalty": sol.penalty, "objective": sol.objective,
        "certificate": problem.certificate(sol.x_hat), "converged": sol.converged, "iterations": sol.iterations,
        "operator": op.kind, "n": ws.n,
    }
    rates.write_json(cfg.out / "summary.json", summary)
    print(f"alpha={alpha!r} residual={sol.residual_norm!r} penalty={sol.penalty!r} converged={sol.converged}")
    if not sol.converged:
        raise ConvergenceError(f"solver did not converge within {cfg['max_iter']} iterations")
    return EXIT_OK


def _print_slopes(rep: rates.RateReport, tol: float):
    for k, th in sorted(rep.theory_slopes.items()):
        fit = rep.fitted_slopes.get(k, float("nan"))
        ok = np.isfinite(fit) and abs(fit - th) <= tol
        print(f"{k:12s} fitted={fit:.4f} theory={th:.4f} {'PASS' if ok else 'FAIL'}")


def cmd_rates(cfg: RunConfig) -> int:
    rc = build_rate_config(cfg)
    rep = rates.run_rate_experiment(rc)
    cfg.out.mkdir(parents=True, exist_ok=True)
    rep.write_csv(cfg.out / "rates.csv")
    rep.write_summary(cfg.out / "summary.json", cfg["slope_tol"])
    _print_slopes(rep, cfg["slope_tol"])
    return EXIT_OK


def cmd_oversmooth(cfg: RunConfig) -> int:
    _check(1 < cfg["t"] < 2, f"oversmoothing needs t in (1, 2), got {cfg['t']}")
    _check(cfg["rule"] != "discrepancy" or cfg["tau1"] > 1, "oversmoothing with the discrepancy rule needs tau1 > 1")
    _check(0 < cfg["bias_alpha_min"] < cfg["bias_alpha_max"], "need 0 < bias_alpha_min < bias_alpha_max")
    _check(cfg["n_alpha"] >= 2, "n_alpha must be >= 2")
    rc = build_rate_config(cfg)
    x_plus = rates.generate_solution(rc.ws, rc.t, rc.rho, rc.style, rc.seed)
    alphas = np.geomspace(cfg["bias_alpha_min"], cfg["bias_alpha_max"], cfg["n_alpha"])
    bias = rates.run_bias_experiment(rc.ws, rc.op, x_plus, rc.t, rc.p_report, alphas)
    rep = rates.run_rate_experiment(rc, x_plus)
    check = rates.oversmoothing_bound_check(rep, rc.t, rc.rho, rc.op.L)
    cfg.out.mkdir(parents=True, exist_ok=True)
    rep.write_csv(cfg.out / "rates.csv")
    _write_rows(cfg.out / "bias.csv", ["alpha", "err_omega_p"], zip(bias.alphas, bias.errors))
    summary = rep.summary(cfg["slope_tol"])
    summary["bias"] = {"fitted": bias.slope, "theory": bias.theory,
                       "pass": bool(abs(bias.slope - bias.theory) <= cfg["slope_tol"])}
    summary["preparatory_bounds"] = check
    rates.write_json(cfg.out / "summary.json", summary)
    _print_slopes(rep, cfg["slope_tol"])
    print(f"{'bias':12s} fitted={bias.slope:.4f} theory={bias.theory:.4f}")
    print("preparatory bounds hold:", check["holds"])
    return EXIT_OK


def cmd_converse(cfg: RunConfig) -> int:
    _check(0 < cfg["t"] < 2, f"t must lie in (0, 2), got {cfg['t']}")
    _check(cfg["n_alpha"] >= 2, "n_alpha must be >= 2")
    ws = build_weights(cfg)
    hi = cfg["active_hi"] if cfg["active_hi"] is not None else max(ws.n // 100, cfg["active_lo"] + 1)
    _check(1 <= cfg["active_lo"] < hi <= ws.n, f"need 1 <= active_lo < active_hi <= n, got {cfg['active_lo']}, {hi}")
    x_plus = rates.generate_solution(ws, cfg["t"], cfg["rho"], cfg["style"], cfg.seed)
    grid = rates.converse_alpha_grid(x_plus, ws, cfg["active_lo"], hi, cfg["n_alpha"])
    res = rates.converse_probe(x_plus, ws, ForwardOperator.diagonal(ws), grid)
    cfg.out.mkdir(parents=True, exist_ok=True)
    _write_rows(cfg.out / "converse.csv", ["alpha", "err_r1", "err_img", "functional"],
                zip(res.alphas, res.err_r1, res.err_img, res.functional))
    tol = cfg["slope_tol"]
    t_main, t_img = res.t_recovered_pair
    summary = {
        "t": cfg["t"], "regime": res.regime, "t_recovered_main": t_main, "t_recovered_image": t_img,
        "slope_r1": res.slope_r1, "slope_img": res.slope_img, "slope_functional": res.slope_functional,
        "pass": bool(abs(t_main - cfg["t"]) <= tol and abs(t_img - cfg["t"]) <= tol and abs(t_main - t_img) <= tol),
    }
    rates.write_json(cfg.out / "summary.json", summary)
    print(f"t={cfg['t']} regime={res.regime} recovered={t_main:.4f} (main) {t_img:.4f} (image)")
    return EXIT_OK


def cmd_besov(cfg: RunConfig) -> int:
    params = besov.BesovParams(s=cfg["s"], a=cfg["a"], r=cfg["r"])
    _check(cfg["J"] >= 1, "J must be >= 1")
    _check(cfg["rule"] in ("a_priori", "discrepancy"), f"unknown rule {cfg['rule']!r}")
    deltas = _delta_grid(cfg)
    dcfg = build_discrepancy(cfg)
    R = cfg["J"] + 1
    if cfg.path("signal") is not None:
        try:
            f = besov.read_signal_csv(cfg.path("signal"))
        except (OSError, ValueError, IndexError) as exc:
            raise ValidationError(f"cannot parse signal: {exc}") from None
        _check(f.size == 2**R, f"signal needs {2**R} cell averages for J={cfg['J']}, got {f.size}")
    else:
        _check(cfg["kind"] in ("jump", "kink"), f"kind must be jump or kink, got {cfg['kind']!r}")
        f = besov.piecewise_smooth_signal(cfg["kind"], cfg["locations"], R, background=cfg["background"])
    rep = besov.besov_rate_experiment(params, f, deltas, cfg["rule"], cfg.seed, cfg["J"], cfg["c"], dcfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    rep.write_csv(cfg.out / "besov_rates.csv")
    grid = besov.WaveletGrid(cfg["J"])
    besov.write_signal_csv(cfg.out / "signal.csv", f)
    besov.write_coefficients_csv(cfg.out / "coefficients.csv", rep.x_plus, grid)
    rep.write_summary(cfg.out / "summary.json", cfg["slope_tol"])
    _print_slopes(rep, cfg["slope_tol"])
    print(f"measured s={rep.tail_metadata['s_measured']:.4f} (t={rep.tail_metadata['t_measured']:.4f})")
    return EXIT_OK


COMMANDS = {
    "norms": cmd_norms, "solve": cmd_solve, "rates": cmd_rates, "converse": cmd_converse,
    "oversmooth": cmd_oversmooth, "besov": cmd_besov,
}


def _parse_set(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValidationError(f"--set expects KEY=VALUE, got {item!r}")
        out[key.strip()] = yaml.safe_load(value)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="l1rates", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat YAML config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--n", type=int, help="truncation length (J for besov)")
        p.add_argument("--t", type=float)
        p.add_argument("--p", type=float)
        p.add_argument("--rho", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--delta", type=float)
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        overrides = _parse_set(args.set)
        flags = {"t": args.t, "p": args.p, "rho": args.rho, "alpha": args.alpha, "delta": args.delta}
        if args.n is not None:
            flags["J" if args.command == "besov" else "n"] = args.n
        schema = SCHEMAS[args.command]
        for k, v in flags.items():
            if v is not None:
                if k not in schema:
                    raise ValidationError(f"--{k} does not apply to {args.command}")
                overrides[k] = v
        cfg = load_config(args.command, args.config, overrides, args.seed, args.out)
        return COMMANDS[args.command](cfg)
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except BracketError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BRACKET


if __name__ == "__main__":
    sys.exit(main())
