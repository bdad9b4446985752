"""Hybrid ADMM for the cardinality-constrained risk-parity model.

The quartic objective is split over three primal blocks (binary x1, real
x2, slack y) coupled by x1 - x2 - y = 0 with dual w:

    L(x1, x2, y, w) = g(x1, x2) + f(x2) + zeta/2 ||y||^2
                      + w^T (x1 - x2 - y) + beta/2 ||x1 - x2 - y||^2

where g(x1, x2) = x2^T Sigma H(x1) Sigma x2 is the risk-contribution
disparity and f(x2) = lam (1/2 x2^T Sigma x2 - mu^T x2). The x1 block is a
QUBO over weight-k strings handed to a pluggable solver; the x2 and y
blocks have closed forms.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import InvalidTolerance, SingularSystem, ValidationError
from .grover import GasConfig, bits_str, gas_minimize
from .model import (BqpFcInstance, QuadraticReduction, RiskParityInstance,
                    brute_force_bqpfc, disparity_matrix, eval_quadratic,
                    reduce_x1_subproblem, risk_term)

T_MAX_CAP = 10**6
DESCENT_SLACK = 1e-8
IDENTITY_TOL = 1e-8
LOWER_BOUND_SLACK = 1e-6
GAP_REPORT_LIMIT = 10**5


# -- x1 solvers ---------------------------------------------------------------

@dataclass(frozen=True)
class X1Step:
    x: np.ndarray
    queries: int = 0
    exact: bool = True
    budget_exhausted: bool = False
    gap: float | None = None


class X1Solver(Protocol):
    name: str

    def solve(self, red: QuadraticReduction, k: int, seed: int) -> X1Step: ...


@dataclass(frozen=True)
class BruteForce:
    name: str = "brute"

    def solve(self, red: QuadraticReduction, k: int, seed: int) -> X1Step:
        return X1Step(brute_force_bqpfc(red, k=k).x.astype(np.int8))


@dataclass(frozen=True)
class GasHard:
    """Constrained GAS on the scaled QUBO; reports the gap against brute force
    when the feasible set is small enough to enumerate."""

    gas: GasConfig = GasConfig()
    name: str = "gas"

    def solve(self, red: QuadraticReduction, k: int, seed: int) -> X1Step:
        cfg = GasConfig(self.gas.xi, self.gas.r_cap, self.gas.max_oracle_queries, seed,
                        self.gas.cap_patience, self.gas.backend)
        res = gas_minimize(red.to_poly(), cfg, "hard", k=k)
        gap = None
        if math.comb(red.n, k) <= GAP_REPORT_LIMIT:
            gap = red.evaluate(res.best_x) - brute_force_bqpfc(red, k=k).value
        exact = gap is not None and gap <= 1e-12 * max(1.0, abs(red.evaluate(res.best_x)))
        return X1Step(res.best_x.astype(np.int8), res.oracle_queries, exact,
                      res.budget_exhausted, gap)


# -- configuration --------------------------------------------------------------

def zeta_bound(n: int, k: int, lam: float, c1: float, c2: float,
               epsilon: float, delta: float) -> float:
    """Right-hand side of the zeta condition that makes termination consistent."""
    s = math.sqrt(k) + epsilon + delta
    num = 2 * c2**2 * n**3 * s + c1 * lam * math.sqrt(n) + c2 * lam * n * s + epsilon
    return num / delta


def _check_tolerances(epsilon: float, delta: float) -> None:
    if not (0 < epsilon < 1 and 0 < delta < 1):
        raise InvalidTolerance(f"epsilon and delta must lie in (0, 1), got {epsilon}, {delta}")


def select_parameters(inst: RiskParityInstance, epsilon: float = 0.1, delta: float = 0.1,
                      c4_margin: float = 1.0, c5: float = 1.5) -> tuple[float, float]:
    """(zeta, beta) with zeta strictly above the bound and beta = c5 * zeta."""
    _check_tolerances(epsilon, delta)
    if c4_margin < 1:
        raise InvalidTolerance("c4_margin must be at least 1")
    if not c5 > math.sqrt(2):
        raise InvalidTolerance("c5 must exceed sqrt(2)")
    bound = zeta_bound(inst.n, inst.k, inst.lam, inst.c1, inst.c2, epsilon, delta)
    zeta = max(c4_margin * bound, math.nextafter(bound, math.inf))
    return zeta, c5 * zeta


def default_t_max(n: int, k: int, epsilon: float, delta: float) -> int:
    return min(T_MAX_CAP, math.ceil(n**6 * k**1.5 / (epsilon**2 * delta)))


@dataclass(frozen=True)
class AdmmConfig:
    epsilon: float
    delta: float
    zeta: float
    beta: float
    t_max: int
    x1_solver: X1Solver = BruteForce()

    def __post_init__(self):
        _check_tolerances(self.epsilon, self.delta)
        if not self.zeta > 0:
            raise ValidationError("zeta must be positive")
        if not self.beta > math.sqrt(2) * self.zeta:
            raise ValidationError(f"beta={self.beta} must exceed sqrt(2)*zeta={math.sqrt(2) * self.zeta}")
        if self.t_max < 1:
            raise ValidationError("t_max must be positive")

    @classmethod
    def for_instance(cls, inst: RiskParityInstance, epsilon: float = 0.1, delta: float = 0.1,
                     c4_margin: float = 1.0, c5: float = 1.5, t_max: int | None = None,
                     x1_solver: X1Solver = BruteForce()) -> "AdmmConfig":
        zeta, beta = select_parameters(inst, epsilon, delta, c4_margin, c5)
        if t_max is None:
            t_max = default_t_max(inst.n, inst.k, epsilon, delta)
        return cls(epsilon, delta, zeta, beta, t_max, x1_solver)


# -- state and monitors -----------------------------------------------------------

@dataclass
class AdmmState:
    t: int
    x1: np.ndarray
    x2: np.ndarray
    y: np.ndarray
    w: np.ndarray
    delta_dual: float = math.inf
    lagrangian: float = math.nan
    history: list = field(default_factory=list)


@dataclass(frozen=True)
class MonitorRecord:
    t: int
    lagrangian: float
    lagrangian_drop: float
    descent_rhs: float
    delta_dual: float
    primal_residual: float
    predicted_residual: float
    subgrad_norm: float
    subgrad_bound: float
    lower_bound: float
    dual_identity_error: float
    x1_bits: str
    solver_queries: int
    exact_step: bool
    identity_ok: bool
    descent_ok: bool
    subgrad_ok: bool
    lower_ok: bool

    @property
    def descent_lhs(self) -> float:
        return self.lagrangian_drop


def as_risk_parity(inst) -> RiskParityInstance:
    if isinstance(inst, RiskParityInstance):
        return inst
    if isinstance(inst, BqpFcInstance):
        return RiskParityInstance(inst, 1.0)
    raise ValidationError(f"unsupported instance type {type(inst).__name__}")


def lagrangian_lower_bound(inst: RiskParityInstance) -> float:
    return -inst.lam * inst.c1**2 * inst.n / (2 * inst.c3)


def eval_lagrangian(inst: RiskParityInstance, state: AdmmState, zeta: float,
                    beta: float) -> float:
    if int(round(np.sum(state.x1))) != inst.k or not np.all(np.isin(state.x1, (0, 1))):
        return math.inf
    r = state.x1 - state.x2 - state.y
    phi = (risk_term(state.x1, state.x2, inst.sigma)
           + inst.lam * eval_quadratic(inst, state.x2)
           + 0.5 * zeta * float(state.y @ state.y))
    return float(phi + state.w @ r + 0.5 * beta * r @ r)


def risk_quadratic(inst: RiskParityInstance, x1) -> np.ndarray:
    """Q = Sigma H(x1) Sigma, so g(x1, x2) = x2^T Q x2."""
    return inst.sigma @ disparity_matrix(np.asarray(x1, dtype=float)) @ inst.sigma


def monitor_step(inst: RiskParityInstance, prev: AdmmState, nxt: AdmmState, zeta: float,
                 beta: float, solver_queries: int = 0, exact: bool = True) -> MonitorRecord:
    lp = prev.lagrangian if math.isfinite(prev.lagrangian) else eval_lagrangian(inst, prev, zeta, beta)
    ln = nxt.lagrangian if math.isfinite(nxt.lagrangian) else eval_lagrangian(inst, nxt, zeta, beta)
    dx2 = nxt.x2 - prev.x2
    dy = nxt.y - prev.y
    ndy = float(np.linalg.norm(dy))
    c1 = beta / 2 - zeta**2 / beta
    drop = lp - ln
    rhs = c1 * float(dx2 @ dx2 + dy @ dy)
    r = nxt.x1 - nxt.x2 - nxt.y
    primal = float(np.linalg.norm(r))
    predicted = zeta / beta * ndy
    g_y = zeta * nxt.y - nxt.w - beta * r
    q = risk_quadratic(inst, nxt.x1)
    g_x2 = 2 * q @ nxt.x2 + inst.lam * (inst.sigma @ nxt.x2 - inst.mu) - nxt.w - beta * r
    sub = float(np.linalg.norm(g_x2) + np.linalg.norm(g_y) + primal)
    bound = (beta + zeta / beta) * ndy
    lower = lagrangian_lower_bound(inst)
    slack = DESCENT_SLACK * max(1.0, abs(lp))
    return MonitorRecord(
        t=nxt.t, lagrangian=ln, lagrangian_drop=drop, descent_rhs=rhs, delta_dual=ndy,
        primal_residual=primal, predicted_residual=predicted, subgrad_norm=sub,
        subgrad_bound=bound, lower_bound=lower,
        dual_identity_error=float(np.linalg.norm(nxt.w - zeta * nxt.y)),
        x1_bits=bits_str(nxt.x1), solver_queries=solver_queries, exact_step=exact,
        identity_ok=abs(primal - predicted) < IDENTITY_TOL,
        descent_ok=drop >= rhs - slack,
        subgrad_ok=sub <= bound + slack,
        lower_ok=ln >= lower - LOWER_BOUND_SLACK)


# -- solver -----------------------------------------------------------------------

@dataclass
class AdmmResult:
    x1_final: np.ndarray
    x2_final: np.ndarray
    y_final: np.ndarray
    w_final: np.ndarray
    trace: list[MonitorRecord]
    termination_reason: str
    iterations: int
    zeta: float
    beta: float
    epsilon: float
    delta: float
    events: list[str] = field(default_factory=list)
    solver_queries: int = 0

    @property
    def consistency_error(self) -> float:
        return float(np.linalg.norm(self.x1_final - self.x2_final))

    @property
    def final_delta(self) -> float:
        return self.trace[-1].delta_dual if self.trace else math.inf

    @property
    def stop_threshold(self) -> float:
        return self.epsilon / (self.beta + 1)


def _solve_x2(inst: RiskParityInstance, x1, y, w, beta: float) -> np.ndarray:
    a = 2 * risk_quadratic(inst, x1) + inst.lam * inst.sigma + beta * np.eye(inst.n)
    rhs = inst.lam * inst.mu + w + beta * (x1 - y)
    try:
        return cho_solve(cho_factor(a), rhs)
    except LinAlgError as exc:
        raise SingularSystem(f"x2 system is not positive definite: {exc}") from exc


def random_weight_k(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    x = np.zeros(n, dtype=np.int8)
    x[rng.choice(n, size=k, replace=False)] = 1
    return x


def admm_solve(inst, cfg: AdmmConfig, seed: int) -> AdmmResult:
    inst = as_risk_parity(inst)
    rng = np.random.default_rng(seed)
    n, k, zeta, beta = inst.n, inst.k, cfg.zeta, cfg.beta
    x1 = random_weight_k(n, k, rng).astype(float)
    state = AdmmState(0, x1, x1.copy(), np.zeros(n), np.zeros(n))
    state.lagrangian = eval_lagrangian(inst, state, zeta, beta)
    threshold = cfg.epsilon / (beta + 1)
    trace: list[MonitorRecord] = []
    events: list[str] = []
    queries = 0
    reason = "t_max"
    while state.t < cfg.t_max:
        t = state.t + 1
        red = reduce_x1_subproblem(inst, state.x2, state.y, state.w, beta)
        step = cfg.x1_solver.solve(red, k, int(rng.integers(2**63)))
        x1n = step.x.astype(float)
        if step.budget_exhausted:
            events.append(f"t={t}: x1 solver budget exhausted; proceeding with incumbent")
        if step.gap is not None and step.gap > 0:
            events.append(f"t={t}: x1 step optimality gap {step.gap:.6g}")
        x2n = _solve_x2(inst, x1n, state.y, state.w, beta)
        yn = (state.w + beta * (x1n - x2n)) / (zeta + beta)
        wn = state.w + beta * (x1n - x2n - yn)
        nxt = AdmmState(t, x1n, x2n, yn, wn, float(np.linalg.norm(yn - state.y)))
        nxt.lagrangian = eval_lagrangian(inst, nxt, zeta, beta)
        rec = monitor_step(inst, state, nxt, zeta, beta, step.queries, step.exact)
        if not rec.descent_ok:
            events.append(f"t={t}: descent violated (drop {rec.lagrangian_drop:.6g} "
                          f"< {rec.descent_rhs:.6g}); exact step: {step.exact}")
        trace.append(rec)
        queries += step.queries
        nxt.history = state.history
        nxt.history.append(rec)
        state = nxt
        if state.delta_dual < threshold:
            reason = "converged"
            break
    return AdmmResult(state.x1.astype(np.int8), state.x2, state.y, state.w, trace, reason,
                      state.t, zeta, beta, cfg.epsilon, cfg.delta, events, queries)


TRACE_COLUMNS = ("t", "L_beta", "delta_dual", "primal_residual", "predicted_residual",
                 "descent_lhs", "descent_rhs", "x1_bits", "solver_queries")


def trace_rows(result: AdmmResult) -> list[list]:
    return [[r.t, repr(r.lagrangian), repr(r.delta_dual), repr(r.primal_residual),
             repr(r.predicted_residual), repr(r.lagrangian_drop), repr(r.descent_rhs),
             r.x1_bits, r.solver_queries] for r in result.trace]


def trace_csv(result: AdmmResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    writer.writerows(trace_rows(result))
    return buf.getvalue()
