import numpy as np
import pytest

from l1rates.operators import ForwardOperator
from l1rates.paramchoice import BracketError, DiscrepancyConfig, a_priori_alpha, discrepancy_alpha
from l1rates.seqspace import WeightSystem
from l1rates.solver import TikhonovProblem

from .oracles import diagonal_residual, invert_diagonal_residual


@pytest.mark.parametrize(
    "rho, delta, t, c, expected",
    [(1.0, 1.0, 0.5, 1.0, 1.0), (1.0, 1e-3, 0.5, 1.0, 1e-4), (5.0, 0.1, 1.0, 2.0, 0.02)],
)
def test_a_priori_examples(rho, delta, t, c, expected):
    assert a_priori_alpha(rho, delta, t, c) == pytest.approx(expected, rel=1e-12)


def test_a_priori_validation():
    for args in [(0.0, 1.0, 0.5), (1.0, -1.0, 0.5), (1.0, 1.0, 2.0), (1.0, 1.0, 0.0)]:
        with pytest.raises(ValueError):
            a_priori_alpha(*args)


def test_config_validation():
    with pytest.raises(ValueError):
        DiscrepancyConfig(tau1=0.9)
    with pytest.raises(ValueError):
        DiscrepancyConfig(tau1=2.0, tau2=1.5)
    with pytest.raises(ValueError):
        DiscrepancyConfig(alpha_bracket=(1.0, 0.5))
    with pytest.raises(ValueError):
        DiscrepancyConfig(alpha_bracket=(0.0, 1.0))
    DiscrepancyConfig(tau1=1.0, tau2=1.0)


def diagonal_problem(rng, n=80):
    ws = WeightSystem(rng.uniform(0.05, 1.0, n), rng.uniform(0.5, 2.0, n))
    op = ForwardOperator.diagonal(ws)
    x = rng.standard_normal(n) * np.arange(1, n + 1) ** -1.5
    delta = 0.05
    u = rng.standard_normal(n)
    g = op.apply(x) + delta * u / np.linalg.norm(u)
    return TikhonovProblem(op, ws, g), delta


def test_band_postcondition_and_closed_form_inversion(rng):
    for _ in range(5):
        prob, delta = diagonal_problem(rng)
        cfg = DiscrepancyConfig(1.2, 2.0)
        alpha, sol = discrepancy_alpha(prob, delta, cfg)
        assert cfg.tau1 * delta * (1 - 1e-12) <= sol.residual_norm <= cfg.tau2 * delta * (1 + 1e-12)
        d, r = prob.op.entries, prob.ws.r
        lo = invert_diagonal_residual(cfg.tau1 * delta, prob.g_obs, d, r)
        hi = invert_diagonal_residual(cfg.tau2 * delta, prob.g_obs, d, r)
        assert np.log(lo) - 1e-10 <= np.log(alpha) <= np.log(hi) + 1e-10


def test_equal_taus_recover_path_point(rng):
    prob, delta = diagonal_problem(rng)
    alpha_star = invert_diagonal_residual(1.5 * delta, prob.g_obs, prob.op.entries, prob.ws.r)
    tau = diagonal_residual(alpha_star, prob.g_obs, prob.op.entries, prob.ws.r) / delta
    alpha, sol = discrepancy_alpha(prob, delta, DiscrepancyConfig(tau, tau))
    assert abs(np.log(alpha) - np.log(alpha_star)) <= 1e-10


def test_bracket_failure_below(rng):
    prob, delta = diagonal_problem(rng)
    with pytest.raises(BracketError):
        discrepancy_alpha(prob, 1e-6, DiscrepancyConfig(alpha_bracket=(10.0, 1e4)))


def test_bracket_failure_above(rng):
    prob, _ = diagonal_problem(rng)
    # the residual can never exceed ||g||
    huge = 10 * np.linalg.norm(prob.g_obs)
    with pytest.raises(BracketError):
        discrepancy_alpha(prob, huge)


def test_bisection_budget(rng):
    prob, delta = diagonal_problem(rng)
    with pytest.raises(BracketError):
        discrepancy_alpha(prob, delta, DiscrepancyConfig(1.5, 1.5, rtol=0.0, max_bisections=3))


def test_matrix_operator(rng):
    n = 20
    ws = WeightSystem.power(n)
    A = (np.eye(n) + 0.05 * rng.standard_normal((n, n))) * ws.a
    x = np.zeros(n)
    x[:3] = [1.0, -0.5, 0.2]
    u = rng.standard_normal(n)
    delta = 0.02
    prob = TikhonovProblem(ForwardOperator.from_matrix(A), ws, A @ x + delta * u / np.linalg.norm(u))
    alpha, sol = discrepancy_alpha(prob, delta)
    assert sol.converged
    assert 1.2 * delta * (1 - 1e-12) <= sol.residual_norm <= 2.0 * delta * (1 + 1e-12)


def test_delta_validation(rng):
    prob, _ = diagonal_problem(rng)
    with pytest.raises(ValueError):
        discrepancy_alpha(prob, 0.0)
