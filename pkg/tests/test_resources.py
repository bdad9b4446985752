import math
from collections import Counter

import pytest

from cardgas.dicke import build_constrained_diffusion
from cardgas.errors import InvalidCounts, InvalidTolerance, UnsupportedDegree
from cardgas.qdict import OracleConfig, build_value_encoder, dense_poly
from cardgas.qsim import Statevector, apply_circuit
from cardgas.resources import (ORDER_ESTIMATE, binary_entropy, decomposition_estimates,
                               grover_iteration_estimates, iqft_toffoli_estimate,
                               oracle_gate_counts, query_crossover, resource_report,
                               total_query_estimate)


def test_table_counts_examples():
    assert oracle_gate_counts(4, 3, 2) == {1: 12, 2: 18}
    assert oracle_gate_counts(4, 3, 4) == {1: 12, 2: 18, 3: 12, 4: 3}
    assert oracle_gate_counts(1, 5, 2) == {1: 5, 2: 0}
    assert oracle_gate_counts(20, 8, 2) == {1: 160, 2: 1520}
    with pytest.raises(UnsupportedDegree):
        oracle_gate_counts(4, 3, 3)


@pytest.mark.parametrize("n,m,degree", [(3, 2, 2), (5, 3, 4), (6, 2, 4)])
def test_counts_match_simulated_encoder(n, m, degree):
    circ = build_value_encoder(dense_poly(n, degree, 1), OracleConfig(m, 0), strict=False)
    counter = Counter()
    apply_circuit(Statevector(n + m), circ, counter=counter)
    recorded = {d: c for (kind, d, label), c in counter.items() if kind == "CP" and label == "dict"}
    expected = {d: c for d, c in oracle_gate_counts(n, m, degree).items() if c}
    assert recorded == expected


def test_iqft_estimate():
    assert iqft_toffoli_estimate(8) == 24
    assert iqft_toffoli_estimate(1) == 0


def test_rotation_estimates():
    est = grover_iteration_estimates(20, 2, 1)
    assert math.isclose(est.hard, math.pi / 4 * math.sqrt(190))
    assert math.isclose(est.hard, 10.83, abs_tol=5e-3)
    assert math.isclose(est.soft, 804.2, abs_tol=5e-2)
    assert abs(est.hard / est.soft - est.ratio) < 1e-12
    assert math.isclose(grover_iteration_estimates(5, 5, 1).hard, math.pi / 4)
    with pytest.raises(InvalidCounts):
        grover_iteration_estimates(5, 2, 11)


def test_binary_entropy():
    assert binary_entropy(0.5) == 1
    assert binary_entropy(0.0) == 0
    assert math.isclose(binary_entropy(0.1), binary_entropy(0.9))


def test_total_query_estimates():
    est = total_query_estimate(30, 3, 1, 0.1, 0.1)
    assert math.isclose(est.qd_gas, 2**15)
    assert math.isclose(est.admm_gas_hard, math.sqrt(4060) * 30**6 * 3**1.5 / 1e-3)
    deg = total_query_estimate(10, 0, 1, 0.1, 0.1)
    assert deg.admm_gas_hard == 0 and deg.degenerate
    full = total_query_estimate(8, 3, math.comb(8, 3), 0.5, 0.5)
    assert math.isclose(full.admm_gas_hard, 8**6 * 3**1.5 / 0.125)
    with pytest.raises(InvalidTolerance):
        total_query_estimate(8, 3, 1, 0.0, 0.1)


def test_query_crossover_is_first_crossing():
    n = query_crossover(3, 1, 0.1, 0.1)
    assert n is not None
    before = total_query_estimate(n - 1, 3, 1, 0.1, 0.1)
    at = total_query_estimate(n, 3, 1, 0.1, 0.1)
    assert before.admm_gas_hard >= before.qd_gas and at.admm_gas_hard < at.qd_gas


def test_decomposition_estimates():
    assert decomposition_estimates(2).depth == 1 and decomposition_estimates(2).gates == 2
    assert decomposition_estimates(16).depth == 64 and decomposition_estimates(16).gates == 4096
    values = [decomposition_estimates(d) for d in range(2, 50)]
    assert all(a.depth <= b.depth and a.gates < b.gates for a, b in zip(values, values[1:]))
    with pytest.raises(InvalidCounts):
        decomposition_estimates(1)


def test_resource_report_fields():
    hard = resource_report("AdmmGasHard", 6, 2, 5, degree=4)
    diff = build_constrained_diffusion(6, 2)
    assert hard.diffusion_gates == len(diff) and hard.diffusion_depth == diff.depth()
    assert hard.admm_iterations is not None
    assert hard.labels["total_oracle_queries"] == ORDER_ESTIMATE
    soft = resource_report("QdGasSoft", 6, 2, 5).to_dict()
    assert soft["admm_iterations"] is None and soft["per_oracle_gates"] == {"1": 30, "2": 75}
    assert soft["diffusion_gates"] == 25
