import csv
import io
import math

import numpy as np
import pytest

from cardgas.admm import (AdmmConfig, AdmmState, BruteForce, GasHard, TRACE_COLUMNS,
                          admm_solve, default_t_max, eval_lagrangian, lagrangian_lower_bound,
                          monitor_step, risk_quadratic, select_parameters, trace_csv,
                          zeta_bound)
from cardgas.errors import InvalidTolerance, ValidationError
from cardgas.grover import GasConfig
from cardgas.model import (BqpFcInstance, RiskParityInstance, brute_force_bqpfc,
                           eval_quadratic, reduce_x1_subproblem, risk_term,
                           synth_instance, weight_k_strings)


def term_by_term_lagrangian(inst, s, zeta, beta):
    n = inst.n
    a = [sum(inst.sigma[i, j] * s.x2[j] for j in range(n)) for i in range(n)]
    g = sum((s.x1[i] * a[i] - s.x1[j] * a[j]) ** 2 for i in range(n) for j in range(n) if i != j)
    f = 0.0
    for i in range(n):
        f -= inst.mu[i] * s.x2[i]
        for j in range(n):
            f += 0.5 * inst.sigma[i, j] * s.x2[i] * s.x2[j]
    total = g + inst.lam * f + 0.5 * zeta * sum(v * v for v in s.y)
    for i in range(n):
        r = s.x1[i] - s.x2[i] - s.y[i]
        total += s.w[i] * r + 0.5 * beta * r * r
    return total


def test_zeta_bound_arithmetic():
    # [2*64*(sqrt2+0.2) + 2 + 4*(sqrt2+0.2) + 0.1] / 0.1
    s = math.sqrt(2) + 0.2
    expected = (128 * s + 2 + 4 * s + 0.1) / 0.1
    assert math.isclose(zeta_bound(4, 2, 1.0, 1.0, 1.0, 0.1, 0.1), expected, rel_tol=1e-14)
    assert math.isclose(expected, 2151.7619, rel_tol=1e-6)


def test_select_parameters_strict_and_ratio():
    sigma = np.eye(4)
    rp = RiskParityInstance(BqpFcInstance(4, 2, sigma, [1.0, 0.2, 0.3, 0.4]), 1.0)
    assert rp.c1 == 1.0 and rp.c2 == 1.0
    zeta, beta = select_parameters(rp, 0.1, 0.1)
    bound = zeta_bound(4, 2, 1.0, 1.0, 1.0, 0.1, 0.1)
    assert zeta > bound and zeta == math.nextafter(bound, math.inf)
    assert beta / zeta == 1.5
    zeta2, beta2 = select_parameters(rp, 0.1, 0.1, c4_margin=2.0, c5=2.0)
    assert zeta2 == 2 * bound and beta2 == 2 * zeta2


def test_select_parameters_validation():
    rp = synth_instance(4, 2, seed=0)
    for kwargs in ({"epsilon": 0}, {"delta": 1.0}, {"c4_margin": 0.5}, {"c5": 1.4}):
        with pytest.raises(InvalidTolerance):
            select_parameters(rp, **kwargs)


def test_config_validation():
    with pytest.raises(ValidationError):
        AdmmConfig(0.1, 0.1, zeta=1.0, beta=1.4, t_max=10)
    with pytest.raises(ValidationError):
        AdmmConfig(0.1, 0.1, zeta=0.0, beta=1.0, t_max=10)
    with pytest.raises(InvalidTolerance):
        AdmmConfig(1.5, 0.1, zeta=1.0, beta=2.0, t_max=10)


def test_default_t_max():
    assert default_t_max(2, 1, 0.5, 0.5) == math.ceil(64 / 0.125)
    assert default_t_max(6, 3, 0.1, 0.1) == 10**6


def test_lagrangian_trivial_cases():
    rp = synth_instance(4, 2, seed=1)
    x1 = np.array([1.0, 0, 1, 0])
    z = np.zeros(4)
    s = AdmmState(0, x1, x1.copy(), z, z)
    expected = risk_term(x1, x1, rp.sigma) + rp.lam * eval_quadratic(rp, x1)
    assert math.isclose(eval_lagrangian(rp, s, 5.0, 8.0), expected, rel_tol=1e-12)
    x2 = np.array([0.3, -0.1, 0.8, 0.2])
    s = AdmmState(0, x1, x2, x1 - x2, z)
    phi = (risk_term(x1, x2, rp.sigma) + rp.lam * eval_quadratic(rp, x2)
           + 2.5 * (x1 - x2) @ (x1 - x2))
    assert math.isclose(eval_lagrangian(rp, s, 5.0, 8.0), phi, rel_tol=1e-12)


def test_lagrangian_random_state_term_by_term():
    rng = np.random.default_rng(0)
    rp = synth_instance(5, 2, seed=2, lam=0.6)
    for _ in range(10):
        x1 = weight_k_strings(5, 2)[rng.integers(10)].astype(float)
        s = AdmmState(0, x1, rng.normal(size=5), rng.normal(size=5), rng.normal(size=5))
        assert abs(eval_lagrangian(rp, s, 3.0, 5.0)
                   - term_by_term_lagrangian(rp, s, 3.0, 5.0)) < 1e-10


def test_lagrangian_infeasible_is_infinite():
    rp = synth_instance(3, 1, seed=0)
    z = np.zeros(3)
    assert eval_lagrangian(rp, AdmmState(0, np.ones(3), z, z, z), 1, 2) == math.inf


def test_risk_quadratic_matches_risk_term():
    rp = synth_instance(5, 3, seed=4)
    rng = np.random.default_rng(1)
    x1, x2 = weight_k_strings(5, 3)[3], rng.normal(size=5)
    assert np.isclose(x2 @ risk_quadratic(rp, x1) @ x2, risk_term(x1, x2, rp.sigma))


def test_monitor_stationary_point():
    rp = synth_instance(4, 2, seed=5)
    x1 = np.array([1.0, 1, 0, 0])
    z = np.zeros(4)
    s = AdmmState(3, x1, x1.copy(), z.copy(), z.copy())
    rec = monitor_step(rp, s, s, zeta=10.0, beta=16.0)
    assert rec.lagrangian_drop == 0 and rec.descent_rhs == 0
    assert rec.delta_dual == 0 and rec.primal_residual == 0
    assert rec.identity_ok and rec.descent_ok and rec.lower_ok


def _instances():
    for i in range(6):
        n = 4 if i < 3 else 6
        yield i, synth_instance(n, 2 + i % 2, seed=100 + i)


@pytest.mark.parametrize("i,rp", list(_instances()))
def test_admm_brute_force_properties(i, rp):
    cfg = AdmmConfig.for_instance(rp)
    res = admm_solve(rp, cfg, seed=i)
    assert res.termination_reason == "converged"
    assert res.final_delta < cfg.epsilon / (cfg.beta + 1)
    assert res.consistency_error < cfg.epsilon + cfg.delta
    lower = lagrangian_lower_bound(rp)
    for rec in res.trace:
        assert abs(rec.primal_residual - rec.predicted_residual) < 1e-8
        assert rec.descent_ok and rec.lower_ok and rec.subgrad_ok
        assert rec.lagrangian >= lower - 1e-6
        assert rec.dual_identity_error < 1e-9
        assert rec.x1_bits.count("1") == rp.k
    assert res.x1_final.sum() == rp.k


def test_admm_respects_t_max():
    rp = synth_instance(5, 2, seed=3)
    cfg = AdmmConfig.for_instance(rp, t_max=1)
    res = admm_solve(rp, cfg, seed=0)
    assert res.iterations == 1 and res.termination_reason == "t_max"


def test_admm_two_asset_example():
    rp = RiskParityInstance(BqpFcInstance(2, 1, np.eye(2), [1.0, 0.0]), 1.0)
    assert list(brute_force_bqpfc(rp).x) == [1, 0]
    cfg = AdmmConfig.for_instance(rp)
    finals = {}
    for seed in range(10):
        res = admm_solve(rp, cfg, seed)
        start = np.random.default_rng(seed).choice(2, size=1, replace=False)
        finals[int(start[0])] = list(res.x1_final)
        assert res.termination_reason == "converged"
    # With the selected (large) beta the x1 block keeps its starting point;
    # starting on the optimum stays there.
    assert finals[0] == [1, 0]


def test_admm_gas_solver_matches_brute_force():
    rp = synth_instance(4, 2, seed=7)
    brute = admm_solve(rp, AdmmConfig.for_instance(rp), seed=3)
    gas = admm_solve(rp, AdmmConfig.for_instance(rp, x1_solver=GasHard(GasConfig())), seed=3)
    assert np.array_equal(brute.x1_final, gas.x1_final)
    assert gas.solver_queries == sum(r.solver_queries for r in gas.trace) > 0


def test_admm_gas_budget_is_logged():
    rp = synth_instance(6, 3, seed=1)
    solver = GasHard(GasConfig(max_oracle_queries=1))
    res = admm_solve(rp, AdmmConfig.for_instance(rp, t_max=3, x1_solver=solver), seed=0)
    assert any("budget exhausted" in e for e in res.events)


def test_trace_csv_columns_and_determinism():
    rp = synth_instance(4, 2, seed=8)
    cfg = AdmmConfig.for_instance(rp)
    a = trace_csv(admm_solve(rp, cfg, seed=1))
    b = trace_csv(admm_solve(rp, cfg, seed=1))
    assert a == b
    rows = list(csv.reader(io.StringIO(a)))
    assert tuple(rows[0]) == TRACE_COLUMNS
    assert [int(r[0]) for r in rows[1:]] == list(range(1, len(rows)))


def test_brute_force_solver_protocol():
    rp = synth_instance(4, 2, seed=2)
    z = np.zeros(4)
    red = reduce_x1_subproblem(rp, np.array([1.0, 0, 1, 0]), z, z, 2.0)
    step = BruteForce().solve(red, 2, seed=0)
    assert step.exact and step.queries == 0
    assert np.array_equal(step.x, brute_force_bqpfc(red, k=2).x)
