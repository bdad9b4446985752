"""Grover search over the fixed-cardinality subspace, the soft-penalty
baseline over all 2^n strings, and randomized Grover Adaptive Search.

Two oracle backends are available. ``"circuit"`` simulates the full
quantum-dictionary sign oracle on n + m qubits for every rotation.
``"diagonal"`` applies the same +-1 pattern (two's-complement wrap included)
directly to the n-qubit variable register, which is what the circuit does
when its ancilla starts and ends in |0^m>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .dicke import (build_constrained_diffusion, constrained_state_prep,
                    reflection_about_zero_pattern, weight_mask)
from .errors import InvalidCounts, ValidationError
from .model import BqpFcInstance, RiskParityInstance
from .qdict import (OracleConfig, PolyObjective, auto_precision, build_sign_oracle,
                    oracle_diagonal)
from .qsim import Circuit, Statevector, apply_circuit, hadamard, register_distribution

BACKENDS = ("diagonal", "circuit")


class Mode(str, Enum):
    HARD = "hard"
    SOFT = "soft"


def optimal_rotations(space_size: int, marked_count: int) -> int:
    """Integer r maximising sin^2((2r + 1) a) with sin a = sqrt(M / |C|)."""
    if not 1 <= marked_count <= space_size:
        raise InvalidCounts(f"need 1 <= M <= |C|, got M={marked_count}, |C|={space_size}")
    a = math.asin(math.sqrt(marked_count / space_size))
    return max(0, round(math.pi / (4 * a) - 0.5))


def success_probability(space_size: int, marked_count: int, r: int) -> float:
    a = math.asin(math.sqrt(marked_count / space_size))
    return math.sin((2 * r + 1) * a) ** 2


def default_penalty(base: PolyObjective) -> int:
    """1 + width of the unpenalised objective over all 2^n corners (scaled units)."""
    lo, hi = base.value_bounds(None)
    return 1 + hi - lo


def build_soft_penalty_objective(problem, k: int, lam: int | None = None) -> PolyObjective:
    """Base objective plus lam * (sum_i x_i - k)^2 expanded on binaries.

    ``lam`` is in the base objective's scaled units.
    """
    base = problem.objective() if isinstance(problem, (BqpFcInstance, RiskParityInstance)) \
        else problem
    if lam is None:
        lam = default_penalty(base)
    lam = int(lam)
    if lam <= 0:
        raise ValidationError("penalty weight must be a positive scaled integer")
    n = base.n
    terms = {(i,): lam * (1 - 2 * k) for i in range(n)}
    for i in range(n):
        for j in range(i + 1, n):
            terms[(i, j)] = 2 * lam
    return base + PolyObjective(n, terms, base.scale_bits, lam * k * k)


def uniform_state_prep(n: int) -> Circuit:
    return Circuit(n, [hadamard(q) for q in range(n)])


def uniform_diffusion(n: int) -> Circuit:
    """H^n (X^n MCZ X^n) H^n, i.e. 2|s><s| - I up to sign."""
    h = [hadamard(q) for q in range(n)]
    return Circuit(n, h + reflection_about_zero_pattern(n, 0).ops + h)


@dataclass
class GroverPlan:
    n: int
    k: int
    mode: Mode
    objective: PolyObjective
    m: int
    state_prep: Circuit
    diffusion: Circuit
    search_space: int
    penalty: int | None = None
    _oracles: dict = field(default_factory=dict, repr=False)
    _diagonals: dict = field(default_factory=dict, repr=False)
    _prepared: np.ndarray | None = field(default=None, repr=False)

    @property
    def support(self) -> np.ndarray:
        """Basis indices the prepared state can occupy."""
        if self.mode is Mode.HARD:
            return np.flatnonzero(weight_mask(self.n, self.k))
        return np.arange(1 << self.n)

    def oracle_config(self, y: int) -> OracleConfig:
        return OracleConfig(self.m, int(y))

    def oracle(self, y: int) -> Circuit:
        y = int(y)
        if y not in self._oracles:
            k = self.k if self.mode is Mode.HARD else None
            self._oracles[y] = build_sign_oracle(self.objective, self.oracle_config(y), k)
        return self._oracles[y]

    def diagonal(self, y: int) -> np.ndarray:
        y = int(y)
        if y not in self._diagonals:
            diag = np.ones(1 << self.n)
            idx = self.support
            diag[idx] = oracle_diagonal(self.objective, self.oracle_config(y), idx)
            self._diagonals = {y: diag}  # thresholds only move down; keep one
        return self._diagonals[y]

    def prepared_amplitudes(self) -> np.ndarray:
        if self._prepared is None:
            self._prepared = apply_circuit(Statevector(self.n), self.state_prep).amps.copy()
        return self._prepared

    def angles(self, marked_count: int) -> tuple[float, float]:
        """Subspace angle a and the real-valued optimum pi / (4a)."""
        if not 1 <= marked_count <= self.search_space:
            raise InvalidCounts(f"M={marked_count} outside [1, {self.search_space}]")
        a = math.asin(math.sqrt(marked_count / self.search_space))
        return a, math.pi / (4 * a)

    def is_feasible(self, x) -> bool:
        return int(np.sum(x)) == self.k


def build_grover_plan(problem, mode: Mode | str = Mode.HARD, k: int | None = None,
                      penalty: int | None = None, m: int | None = None) -> GroverPlan:
    """``problem`` is a BqpFcInstance (k taken from it) or a PolyObjective plus ``k``."""
    mode = Mode(mode)
    if isinstance(problem, (BqpFcInstance, RiskParityInstance)):
        k = problem.k if k is None else k
        base = problem.objective()
    else:
        base = problem
    if k is None:
        raise ValidationError("cardinality k is required for a bare objective")
    n = base.n
    if mode is Mode.HARD:
        obj = base
        bounds = obj.value_bounds(k)
        prep, diff = constrained_state_prep(n, k), build_constrained_diffusion(n, k)
        space = math.comb(n, k)
    else:
        penalty = default_penalty(base) if penalty is None else int(penalty)
        obj = build_soft_penalty_objective(base, k, penalty)
        bounds = obj.value_bounds(None)
        prep, diff = uniform_state_prep(n), uniform_diffusion(n)
        space = 1 << n
    if m is None:
        m = auto_precision(obj, bounds)
    return GroverPlan(n, k, mode, obj, m, prep, diff, space, penalty)


Monitor = Callable[[str, int, Statevector], None]


def grover_state(plan: GroverPlan, threshold_y: int, r: int, backend: str = "diagonal",
                 monitor: Monitor | None = None) -> Statevector:
    """State after preparing the start superposition and r oracle+diffusion rounds.

    The diagonal backend returns an n-qubit state; the circuit backend returns
    the full n + m qubit state with the ancilla back in |0^m>.
    """
    if r < 0:
        raise ValueError("rotation count must be non-negative")
    if backend == "diagonal":
        state = Statevector(plan.n, plan.prepared_amplitudes().copy())
    elif backend == "circuit":
        state = apply_circuit(Statevector(plan.n + plan.m), plan.state_prep)
    else:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    if monitor is not None:
        monitor("prep", 0, state)
    if r == 0:
        return state
    if backend == "diagonal":
        diag = plan.diagonal(threshold_y)
    else:
        oracle = plan.oracle(threshold_y)
    for i in range(1, r + 1):
        if backend == "diagonal":
            state.amps *= diag
        else:
            apply_circuit(state, oracle)
        if monitor is not None:
            monitor("oracle", i, state)
        apply_circuit(state, plan.diffusion)
        if monitor is not None:
            monitor("diffusion", i, state)
    return state


def variable_distribution(plan: GroverPlan, state: Statevector) -> np.ndarray:
    if state.n_qubits == plan.n:
        return state.probabilities()
    return register_distribution(state, range(plan.n))


def index_to_bits(index: int, n: int) -> np.ndarray:
    return ((int(index) >> np.arange(n)) & 1).astype(np.int8)


def bits_to_index(x) -> int:
    return int(sum(int(b) << i for i, b in enumerate(np.asarray(x).reshape(-1))))


def grover_search(plan: GroverPlan, threshold_y: int, r: int,
                  rng: int | np.random.Generator | None = None, backend: str = "diagonal",
                  monitor: Monitor | None = None) -> np.ndarray:
    """Run r rotations and sample the variable register; returns bits x[0..n-1]."""
    rng = np.random.default_rng(rng)
    state = grover_state(plan, threshold_y, r, backend, monitor)
    p = variable_distribution(plan, state)
    index = rng.choice(p.size, p=p / p.sum())
    return index_to_bits(index, plan.n)


def mass_outside_weight(plan_or_n, state: Statevector, k: int | None = None) -> float:
    """Probability of the variable register having Hamming weight != k."""
    if isinstance(plan_or_n, GroverPlan):
        n, k = plan_or_n.n, plan_or_n.k
    else:
        n = plan_or_n
    p = state.probabilities() if state.n_qubits == n else register_distribution(state, range(n))
    return float(p[~weight_mask(n, k)].sum())


# -- adaptive search ---------------------------------------------------------

@dataclass(frozen=True)
class GasConfig:
    xi: float = 1.34
    r_cap: int | None = None
    max_oracle_queries: int = 10_000
    seed: int = 0
    cap_patience: int = 5
    backend: str = "diagonal"

    def __post_init__(self):
        if not self.xi > 1:
            raise ValidationError("growth factor xi must exceed 1")
        if self.r_cap is not None and self.r_cap < 1:
            raise ValidationError("r_cap must be positive")
        if self.max_oracle_queries < 1 or self.cap_patience < 1:
            raise ValidationError("query budget and cap patience must be positive")
        if self.backend not in BACKENDS:
            raise ValidationError(f"backend must be one of {BACKENDS}")


@dataclass(frozen=True)
class GasStep:
    iteration: int
    r_max: float
    rotations: int
    threshold: int
    x: str
    value: int
    accepted: bool


@dataclass
class GasResult:
    best_x: np.ndarray
    best_value: int
    oracle_queries: int
    grover_rotations: int
    iterations: int
    trace: list[GasStep]
    budget_exhausted: bool
    mode: Mode
    m: int
    scale_bits: int
    r_cap: int
    k: int

    @property
    def feasible(self) -> bool:
        return int(self.best_x.sum()) == self.k


def default_r_cap(space_size: int) -> int:
    return math.ceil(math.pi / 4 * math.sqrt(space_size)) + 1


def bits_str(x) -> str:
    """Variable-order bitstring, x[0] first."""
    return "".join(str(int(b)) for b in np.asarray(x).reshape(-1))


def gas_minimize(problem, cfg: GasConfig = GasConfig(), mode: Mode | str = Mode.HARD,
                 k: int | None = None, penalty: int | None = None,
                 plan: GroverPlan | None = None,
                 monitor: Monitor | None = None) -> GasResult:
    """Randomized Grover Adaptive Search.

    Each round draws r uniformly from {0, ..., ceil(r_max - 1)}, runs a Grover
    search with the current incumbent value as threshold and accepts the
    sample only if it is feasible and strictly better. r_max resets to 1 on
    success and grows by ``xi`` (capped at ``r_cap``) otherwise. The run stops
    after ``cap_patience`` consecutive failures at the cap or when the next
    round would exceed the query budget.
    """
    if plan is None:
        plan = build_grover_plan(problem, mode, k=k, penalty=penalty)
    rng = np.random.default_rng(cfg.seed)
    n = plan.n
    r_cap = cfg.r_cap if cfg.r_cap is not None else default_r_cap(plan.search_space)

    if plan.mode is Mode.HARD:
        u = np.zeros(n, dtype=np.int8)
        u[rng.choice(n, size=plan.k, replace=False)] = 1
    else:
        u = rng.integers(0, 2, n).astype(np.int8)
    y = plan.objective.eval_scaled(u)

    r_max = 1.0
    queries = 0
    streak = 0
    exhausted = False
    trace: list[GasStep] = []
    i = 0
    while True:
        at_cap = r_max >= r_cap
        r = int(rng.integers(0, math.ceil(r_max - 1) + 1))
        if queries + r > cfg.max_oracle_queries:
            exhausted = True
            break
        x = grover_search(plan, y, r, rng, cfg.backend, monitor)
        queries += r
        i += 1
        value = plan.objective.eval_scaled(x)
        accepted = plan.is_feasible(x) and value < y
        trace.append(GasStep(i, r_max, r, int(y), bits_str(x), int(value), accepted))
        if accepted:
            u, y = x, value
            r_max = 1.0
            streak = 0
        else:
            r_max = min(cfg.xi * r_max, float(r_cap))
            streak = streak + 1 if at_cap else 0
            if streak >= cfg.cap_patience:
                break
    return GasResult(u, int(y), queries, queries, i, trace, exhausted, plan.mode, plan.m,
                     plan.objective.scale_bits, r_cap, plan.k)

