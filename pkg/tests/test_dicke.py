import math
from itertools import combinations

import numpy as np
import pytest

from cardgas.dicke import (build_constrained_diffusion, build_dicke_unitary, build_scs,
                           dicke_gate_count, prepare_constrained_superposition,
                           weight_mask)
from cardgas.errors import CardinalityOutOfRange, InvalidIndices
from cardgas.qsim import Statevector, apply_circuit


def weight_k_indices(n, k):
    return [sum(1 << i for i in c) for c in combinations(range(n), k)]


def fidelity_up_to_phase(a, b):
    return abs(np.vdot(a, b)) ** 2


def test_scs21_splits_evenly():
    s = apply_circuit(Statevector.basis(2, 0b01), build_scs(2, 1))
    assert np.allclose(np.abs(s.amps) ** 2, [0, 0.5, 0.5, 0], atol=1e-12)


def test_scs31_splits_one_third():
    s = apply_circuit(Statevector.basis(2, 0b01), build_scs(3, 1))
    assert np.isclose(abs(s.amps[0b01]) ** 2, 1 / 3)
    assert np.isclose(abs(s.amps[0b10]) ** 2, 2 / 3)


def test_scs_fixes_all_zero():
    s = apply_circuit(Statevector(3), build_scs(4, 2))
    assert np.isclose(abs(s.amps[0]), 1)


def test_scs_rejects_bad_indices():
    with pytest.raises(InvalidIndices):
        build_scs(3, 3)
    with pytest.raises(InvalidIndices):
        build_scs(1, 0)


def test_three_qubit_w_state():
    s = prepare_constrained_superposition(3, 1)
    assert np.allclose(s.amps[[1, 2, 4]], 3**-0.5, atol=1e-12)


def test_two_qubit_and_trivial_cases():
    s = prepare_constrained_superposition(2, 1)
    assert np.allclose(np.abs(s.amps) ** 2, [0, 0.5, 0.5, 0])
    assert np.isclose(abs(prepare_constrained_superposition(1, 1).amps[1]), 1)
    plan = build_dicke_unitary(5, 0)
    assert plan.gate_count == 0
    assert np.isclose(abs(prepare_constrained_superposition(5, 0).amps[0]), 1)


@pytest.mark.parametrize("n,k", [(4, 2), (6, 3), (7, 2), (9, 5)])
def test_uniform_over_weight_k(n, k):
    p = prepare_constrained_superposition(n, k).probabilities()
    idx = weight_k_indices(n, k)
    assert np.allclose(p[idx], 1 / math.comb(n, k), atol=1e-10)
    mask = np.ones(1 << n, bool)
    mask[idx] = False
    assert p[mask].max(initial=0) < 1e-18


@pytest.mark.parametrize("n", range(1, 11))
def test_gate_count_and_depth(n):
    for k in range(n + 1):
        plan = build_dicke_unitary(n, k)
        assert plan.gate_count == dicke_gate_count(n, k)
        assert plan.depth <= 3 * n


def test_gate_count_formula_examples():
    assert dicke_gate_count(4, 2) == 5
    assert dicke_gate_count(6, 3) == 12
    assert dicke_gate_count(6, 6) == 0


def test_rejects_bad_cardinality():
    with pytest.raises(CardinalityOutOfRange):
        build_dicke_unitary(3, 4)


def _diffusion_matrix(n, k):
    c = build_constrained_diffusion(n, k)
    return np.stack([apply_circuit(Statevector.basis(n, i), c).amps for i in range(1 << n)], 1)


@pytest.mark.parametrize("n,k", [(3, 1), (4, 2), (5, 2)])
def test_diffusion_is_reflection_about_dicke(n, k):
    h = prepare_constrained_superposition(n, k).amps
    u = _diffusion_matrix(n, k)
    target = 2 * np.outer(h, h.conj()) - np.eye(1 << n)
    # Global phase of the circuit is -1.
    assert np.allclose(-u, target, atol=1e-10)


def test_diffusion_fixes_dicke_and_negates_orthogonal():
    n, k = 4, 2
    c = build_constrained_diffusion(n, k)
    h = prepare_constrained_superposition(n, k)
    out = apply_circuit(h.copy(), c)
    assert fidelity_up_to_phase(out.amps, h.amps) > 1 - 1e-10
    idx = weight_k_indices(n, k)
    v = np.zeros(1 << n, dtype=complex)
    v[idx[0]], v[idx[1]] = 2**-0.5, -(2**-0.5)
    w = apply_circuit(Statevector(n, v), c).amps
    # Relative to h (phase -1 on h), an orthogonal vector gets the opposite sign.
    assert np.allclose(w, v, atol=1e-10)
    assert np.allclose(out.amps, -h.amps, atol=1e-10)


def test_diffusion_involution():
    u = _diffusion_matrix(4, 2)
    assert np.allclose(u @ u, np.eye(16), atol=1e-10)


def test_weight_mask():
    m = weight_mask(4, 2)
    assert m.sum() == 6
    assert m[0b0011] and not m[0b0111]
