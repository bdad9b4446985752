"""Closed-form resource estimates.

Per-oracle controlled rotations and the built diffusion circuits are counted
exactly. Everything else evaluates an asymptotic form with constant 1 and is tagged
``"order estimate"`` wherever it is serialized.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum

from .dicke import build_constrained_diffusion
from .errors import InvalidCounts, InvalidTolerance, UnsupportedDegree

ORDER_ESTIMATE = "order estimate"


class Method(str, Enum):
    QD_GAS_SOFT = "QdGasSoft"
    ADMM_GAS_HARD = "AdmmGasHard"


def oracle_gate_counts(n: int, m: int, degree: int) -> dict[int, int]:
    """Controlled rotations per oracle keyed by number of controls."""
    if degree not in (2, 4):
        raise UnsupportedDegree(f"degree must be 2 or 4, got {degree}")
    if n < 1 or m < 1:
        raise InvalidCounts("n and m must be positive")
    return {d: m * math.comb(n, d) for d in range(1, degree + 1)}


def iqft_toffoli_estimate(m: int) -> float:
    return m * math.log2(m) if m > 1 else 0.0


def binary_entropy(p: float) -> float:
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


@dataclass(frozen=True)
class RotationEstimates:
    hard: float
    soft: float
    ratio: float
    entropy_exponent: float


def grover_iteration_estimates(n: int, k: int, marked: int = 1) -> RotationEstimates:
    space = math.comb(n, k)
    if not 1 <= marked <= space:
        raise InvalidCounts(f"need 1 <= M <= C({n},{k})={space}, got {marked}")
    hard = math.pi / 4 * math.sqrt(space / marked)
    soft = math.pi / 4 * math.sqrt(2**n / marked)
    return RotationEstimates(hard, soft, math.sqrt(space / 2**n), binary_entropy(k / n))


@dataclass(frozen=True)
class QueryEstimates:
    admm_gas_hard: float
    qd_gas: float
    degenerate: bool = False


def total_query_estimate(n: int, k: int, marked: int, epsilon: float,
                         delta: float) -> QueryEstimates:
    if not (0 < epsilon < 1 and 0 < delta < 1):
        raise InvalidTolerance("epsilon and delta must lie in (0, 1)")
    if marked < 1:
        raise InvalidCounts("M must be positive")
    hard = math.sqrt(math.comb(n, k)) * n**6 * k**1.5 / (math.sqrt(marked) * epsilon**2 * delta)
    soft = 2 ** (n / 2) / math.sqrt(marked)
    return QueryEstimates(hard, soft, degenerate=(k == 0))


def query_crossover(k: int, marked: int, epsilon: float, delta: float,
                    n_max: int = 400) -> int | None:
    """Smallest n >= k at which the hybrid estimate drops below the soft one."""
    for n in range(max(k, 1), n_max + 1):
        est = total_query_estimate(n, k, marked, epsilon, delta)
        if est.admm_gas_hard < est.qd_gas:
            return n
    return None


@dataclass(frozen=True)
class DecompositionEstimate:
    depth: float
    gates: float


def decomposition_estimates(d: int) -> DecompositionEstimate:
    """Depth log2(d)^3 and gates d log2(d)^4 for a d-controlled gate."""
    if d < 2:
        raise InvalidCounts("decomposition estimates need d >= 2")
    lg = math.log2(d)
    return DecompositionEstimate(lg**3, d * lg**4)


@dataclass
class ResourceReport:
    method: Method
    n: int
    k: int
    m: int
    degree: int
    per_oracle_gates: dict[int, int]
    iqft_toffoli_estimate: float
    diffusion_gates: int
    diffusion_depth: int
    grover_rotations: float
    total_oracle_queries: float
    admm_iterations: float | None = None
    labels: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["method"] = self.method.value
        out["per_oracle_gates"] = {str(d): c for d, c in self.per_oracle_gates.items()}
        return out


def resource_report(method: Method | str, n: int, k: int, m: int, degree: int = 2,
                    marked: int = 1, epsilon: float = 0.1, delta: float = 0.1) -> ResourceReport:
    """Full estimate for one method.

    Diffusion cost is read off the built circuit (SCS blocks count as one
    gate each); the soft diffusion is 2n Hadamards, 2n X gates and one MCZ.
    """
    method = Method(method)
    gates = oracle_gate_counts(n, m, degree)
    rot = grover_iteration_estimates(n, k, marked)
    queries = total_query_estimate(n, k, marked, epsilon, delta)
    if method is Method.ADMM_GAS_HARD:
        diff = build_constrained_diffusion(n, k)
        diff_gates, diff_depth = len(diff), diff.depth()
        iters = n**6 * k**1.5 / (epsilon**2 * delta)
        return ResourceReport(method, n, k, m, degree, gates, iqft_toffoli_estimate(m),
                              diff_gates, diff_depth, rot.hard, queries.admm_gas_hard, iters,
                              _labels(admm=True))
    return ResourceReport(method, n, k, m, degree, gates, iqft_toffoli_estimate(m),
                          4 * n + 1, 5, rot.soft, queries.qd_gas, None, _labels(admm=False))


def _labels(admm: bool) -> dict[str, str]:
    labels = {"per_oracle_gates": "exact",
              "iqft_toffoli_estimate": ORDER_ESTIMATE,
              "diffusion_gates": "exact",
              "diffusion_depth": "exact",
              "grover_rotations": ORDER_ESTIMATE,
              "total_oracle_queries": ORDER_ESTIMATE}
    if admm:
        labels["admm_iterations"] = ORDER_ESTIMATE
    return labels
