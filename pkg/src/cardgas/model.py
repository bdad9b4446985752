"""Problem instances, objective evaluation, the binary ADMM subproblem as a
QUBO, and exhaustive classical baselines."""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from math import comb
from pathlib import Path
from typing import Callable, Union

import numpy as np

from .errors import DimensionMismatch, NotSquare, TooLarge, ValidationError
from .qdict import PolyObjective

SYMMETRY_TOL = 1e-12
FILE_SYMMETRY_TOL = 1e-9
DEGENERACY_TOL = 1e-12
BRUTE_FORCE_LIMIT = 10**7


@dataclass(frozen=True)
class BqpFcInstance:
    n: int
    k: int
    sigma: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=float)
        mu = np.array(self.mu, dtype=float).reshape(-1)
        if sigma.shape != (self.n, self.n) or mu.shape != (self.n,):
            raise DimensionMismatch(
                f"sigma {sigma.shape} / mu {mu.shape} do not match n={self.n}")
        if not np.allclose(sigma, sigma.T, atol=SYMMETRY_TOL, rtol=0):
            raise ValidationError("sigma is not symmetric")
        if not 0 <= self.k <= self.n:
            raise ValidationError(f"cardinality k={self.k} outside [0, {self.n}]")
        sigma.setflags(write=False)
        mu.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "mu", mu)

    def objective(self, max_bits: int = 16) -> PolyObjective:
        return PolyObjective.from_quadratic(self.sigma, self.mu, max_bits)


@dataclass(frozen=True)
class RiskParityInstance:
    base: BqpFcInstance
    lam: float = 1.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValidationError("trade-off weight lambda must be positive")
        if self.c3 <= 0:
            raise ValidationError(
                f"covariance is not positive definite (min eigenvalue {self.c3:.3g}); "
                "try shrink_covariance")

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def k(self) -> int:
        return self.base.k

    @property
    def sigma(self) -> np.ndarray:
        return self.base.sigma

    @property
    def mu(self) -> np.ndarray:
        return self.base.mu

    @property
    def c1(self) -> float:
        return float(np.max(np.abs(self.mu)))

    @property
    def c2(self) -> float:
        return float(np.max(np.diag(self.sigma)))

    @property
    def c3(self) -> float:
        return float(np.linalg.eigvalsh(self.sigma)[0])


Instance = Union[BqpFcInstance, RiskParityInstance]


def _as_vector(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != n:
        raise DimensionMismatch(f"expected {n} entries, got {x.size}")
    return x


def eval_quadratic(inst: Instance, x) -> float:
    """1/2 x^T sigma x - mu^T x."""
    x = _as_vector(x, inst.n)
    return float(0.5 * x @ inst.sigma @ x - inst.mu @ x)


def risk_term(x1, x2, sigma) -> float:
    """sum_{i != j} (x1_i (sigma x2)_i - x1_j (sigma x2)_j)^2."""
    sigma = np.asarray(sigma, dtype=float)
    r = np.asarray(x1, dtype=float) * (sigma @ np.asarray(x2, dtype=float))
    return float(2 * r.size * (r @ r) - 2 * r.sum() ** 2)


def eval_risk_parity(inst: RiskParityInstance, x) -> float:
    x = _as_vector(x, inst.n)
    return risk_term(x, x, inst.sigma) + inst.lam * eval_quadratic(inst, x)


def disparity_matrix(a) -> np.ndarray:
    """H_a with x^T H_a x = sum_{i != j} (x_i a_i - x_j a_j)^2."""
    a = np.asarray(a, dtype=float)
    h = -2.0 * np.outer(a, a)
    np.fill_diagonal(h, 2.0 * (a.size - 1) * a**2)
    return h


@dataclass(frozen=True)
class QuadraticReduction:
    """q(x) = x^T matrix x + linear^T x + constant."""

    matrix: np.ndarray
    linear: np.ndarray
    constant: float

    @property
    def n(self) -> int:
        return self.linear.size

    def evaluate(self, x) -> float:
        x = _as_vector(x, self.n)
        return float(x @ self.matrix @ x + self.linear @ x + self.constant)

    def evaluate_many(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        return np.einsum("bi,ij,bj->b", xs, self.matrix, xs) + xs @ self.linear + self.constant

    def to_poly(self, max_bits: int = 16) -> PolyObjective:
        return PolyObjective.from_qubo(self.matrix, self.linear, self.constant, max_bits)


def reduce_x1_subproblem(inst: Instance, x2, y, w, beta: float) -> QuadraticReduction:
    """Binary ADMM step as a QUBO over x1 (valid on binary x1 only).

    q(x1) = sum_{i != j}(x1_i a_i - x1_j a_j)^2 + w^T x1 + beta/2 ||x1 - x2 - y||^2
    with a = sigma x2; ||x1||^2 = sum(x1) folds into the linear part.
    """
    n = inst.n
    x2, y, w = _as_vector(x2, n), _as_vector(y, n), _as_vector(w, n)
    shift = x2 + y
    linear = w - beta * shift + 0.5 * beta
    return QuadraticReduction(disparity_matrix(inst.sigma @ x2), linear,
                              float(0.5 * beta * shift @ shift))


# -- brute force -------------------------------------------------------------

@dataclass(frozen=True)
class BruteForceResult:
    x: np.ndarray
    value: float
    degeneracy: int


def _batch_evaluator(target) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(target, PolyObjective):
        weights = 1 << np.arange(target.n, dtype=np.int64)
        return lambda xs: target.values_on_indices(xs.astype(np.int64) @ weights)
    if isinstance(target, QuadraticReduction):
        return target.evaluate_many
    if isinstance(target, RiskParityInstance):
        sigma, mu, lam, n = target.sigma, target.mu, target.lam, target.n

        def quartic(xs):
            xs = xs.astype(float)
            r = xs * (xs @ sigma)
            risk = 2 * n * (r * r).sum(axis=1) - 2 * r.sum(axis=1) ** 2
            return risk + lam * (0.5 * np.einsum("bi,ij,bj->b", xs, sigma, xs) - xs @ mu)
        return quartic
    if isinstance(target, BqpFcInstance):
        return lambda xs: (0.5 * np.einsum("bi,ij,bj->b", xs.astype(float), target.sigma,
                                           xs.astype(float)) - xs @ target.mu)
    if callable(target):
        return lambda xs: np.array([target(x) for x in xs])
    raise TypeError(f"cannot evaluate {type(target).__name__}")


def weight_k_strings(n: int, k: int) -> np.ndarray:
    """All weight-k bit vectors, one per row (x[i] is variable i)."""
    count = comb(n, k)
    xs = np.zeros((count, n), dtype=np.int8)
    for row, idx in enumerate(combinations(range(n), k)):
        xs[row, list(idx)] = 1
    return xs


def brute_force_bqpfc(target, k: int | None = None, n: int | None = None) -> BruteForceResult:
    """Exhaustive minimum over weight-k strings.

    Returns the lexicographically smallest minimiser (comparing x[0], x[1], ...)
    and the number of strings within DEGENERACY_TOL of the optimum. Scaled
    objectives (PolyObjective) report integer values and count exact ties.
    """
    if k is None:
        k = target.k
    n = target.n if n is None else n
    if comb(n, k) > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"C({n},{k}) = {comb(n, k)} exceeds {BRUTE_FORCE_LIMIT}")
    xs = weight_k_strings(n, k)
    values = np.asarray(_batch_evaluator(target)(xs))
    best = values.min()
    tol = 0 if np.issubdtype(values.dtype, np.integer) else DEGENERACY_TOL
    ties = np.flatnonzero(values <= best + tol)
    chosen = min(ties, key=lambda r: tuple(xs[r]))
    value = int(best) if tol == 0 else float(best)
    return BruteForceResult(xs[chosen].astype(np.int64), value, int(ties.size))


# -- covariance and instance generation --------------------------------------

def shrink_covariance(sigma, rho: float) -> np.ndarray:
    """(1 - rho) sigma + rho (tr(sigma)/n) I."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise NotSquare(f"covariance has shape {sigma.shape}")
    if not 0.0 <= rho <= 1.0:
        raise ValidationError("shrinkage intensity must lie in [0, 1]")
    n = sigma.shape[0]
    return (1.0 - rho) * sigma + rho * (np.trace(sigma) / n) * np.eye(n)


def synth_instance(n: int, k: int, seed: int, lam: float = 1.0,
                   rho: float = 0.0) -> RiskParityInstance:
    """Sigma = F F^T / n + 0.1 I with standard-normal F, mu ~ U[0, 1]."""
    rng = np.random.default_rng(seed)
    f = rng.standard_normal((n, max(2, n // 2)))
    sigma = f @ f.T / n + 0.1 * np.eye(n)
    sigma = 0.5 * (sigma + sigma.T)
    if rho:
        sigma = shrink_covariance(sigma, rho)
    mu = rng.uniform(0.0, 1.0, n)
    return RiskParityInstance(BqpFcInstance(n, k, sigma, mu), lam)


def random_integer_instance(n: int, k: int, seed: int, low: int = -4,
                            high: int = 4) -> BqpFcInstance:
    """Symmetric integer sigma (even diagonal) and integer mu, so f is integral."""
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.integers(low, high + 1, (n, n)), 1)
    sigma = upper + upper.T + np.diag(2 * rng.integers(low, high + 1, n))
    mu = rng.integers(low, high + 1, n)
    return BqpFcInstance(n, k, sigma, mu)


def planted_instance(n: int, k: int, seed: int, low: int = -2, high: int = 2) -> BqpFcInstance:
    """Integer instance whose optimum over weight-k strings is unique.

    A random weight-k support gets a linear reward larger than the spread of
    the remaining objective.
    """
    inst = random_integer_instance(n, k, seed, low, high)
    rng = np.random.default_rng([seed, 1])
    support = rng.choice(n, size=k, replace=False)
    obj = inst.objective()
    lo, hi = obj.value_bounds(k)
    reward = (hi - lo) // obj.scale + 1
    mu = inst.mu.copy()
    mu[support] += reward
    return BqpFcInstance(n, k, inst.sigma, mu)


# -- multilinear expansion of the quartic objective --------------------------

def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for a, ca in p.items():
        for b, cb in q.items():
            key = a | b
            out[key] = out.get(key, 0.0) + ca * cb
    return out


def _poly_add(p: dict, q: dict, scale: float = 1.0) -> dict:
    out = dict(p)
    for key, c in q.items():
        out[key] = out.get(key, 0.0) + scale * c
    return out


def risk_parity_poly(inst: RiskParityInstance, max_bits: int = 16) -> PolyObjective:
    """The quartic objective as a degree-4 multilinear polynomial."""
    n, sigma = inst.n, inst.sigma
    contrib = []
    for i in range(n):
        contrib.append({frozenset((i, l)): sigma[i, l] for l in range(n)})
    squares: dict = {}
    total: dict = {}
    for r in contrib:
        squares = _poly_add(squares, _poly_mul(r, r))
        total = _poly_add(total, r)
    poly = _poly_add({}, squares, 2.0 * n)
    poly = _poly_add(poly, _poly_mul(total, total), -2.0)
    for i in range(n):
        poly = _poly_add(poly, {frozenset((i,)): inst.lam * (0.5 * sigma[i, i] - inst.mu[i])})
        for j in range(i + 1, n):
            poly = _poly_add(poly, {frozenset((i, j)): inst.lam * sigma[i, j]})
    coeffs = {tuple(sorted(key)): c for key, c in poly.items() if key}
    return PolyObjective.from_real(n, coeffs, poly.get(frozenset(), 0.0), max_bits)


# -- instance files ----------------------------------------------------------

def load_instance(path) -> Instance:
    """Read a JSON instance: n, k, sigma (row-major, n*n numbers), mu, optional lambda."""
    data = json.loads(Path(path).read_text())
    try:
        n, k = int(data["n"]), int(data["k"])
        sigma = np.asarray(data["sigma"], dtype=float)
        mu = np.asarray(data["mu"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed instance file {path}: {exc}") from exc
    if sigma.size != n * n or mu.size != n:
        raise ValidationError(f"instance {path}: sigma/mu sizes do not match n={n}")
    sigma = sigma.reshape(n, n)
    if not np.allclose(sigma, sigma.T, atol=FILE_SYMMETRY_TOL, rtol=0):
        raise ValidationError(f"instance {path}: sigma is not symmetric")
    base = BqpFcInstance(n, k, 0.5 * (sigma + sigma.T), mu)
    if data.get("lambda") is not None:
        return RiskParityInstance(base, float(data["lambda"]))
    return base


def save_instance(inst: Instance, path) -> None:
    base = inst.base if isinstance(inst, RiskParityInstance) else inst
    data = {"n": base.n, "k": base.k, "sigma": base.sigma.reshape(-1).tolist(),
            "mu": base.mu.tolist()}
    if isinstance(inst, RiskParityInstance):
        data["lambda"] = inst.lam
    Path(path).write_text(json.dumps(data, indent=2) + "\n")
