"""Dicke-state preparation from Split & Cyclic Shift blocks, and the
fixed-cardinality diffusion operator built on top of it.

Ket strings are written with the highest qubit first, so the Dicke input
``|0^{n-k} 1^k>`` has qubits ``0 .. k-1`` set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CardinalityOutOfRange, InvalidIndices
from .qsim import (MAX_QUBITS, Circuit, Statevector, apply_circuit, mcz, pauli_x,
                   scs2, scs3)


@dataclass(frozen=True)
class DickePlan:
    n: int
    k: int
    ops: Circuit
    layout: tuple[int, ...]

    @property
    def gate_count(self) -> int:
        return len(self.ops)

    @property
    def depth(self) -> int:
        return self.ops.depth()


def _split_angle(ell: int, i: int) -> float:
    return 2.0 * np.arccos(np.sqrt(ell / i))


def build_scs(i: int, j: int) -> Circuit:
    """SCS_{i,j} on j+1 local qubits.

    Local qubit 0 holds the excitation that gets split off: an input with
    qubits ``0..l-1`` set keeps amplitude sqrt(l/i) and sends the remainder to
    the state with qubits ``1..l`` set.
    """
    if i < 2 or not 1 <= j <= i - 1:
        raise InvalidIndices(f"SCS_{{{i},{j}}} needs i >= 2 and 1 <= j <= i-1")
    circ = Circuit(j + 1, [scs2(_split_angle(1, i), 0, 1)])
    for t in range(2, j + 1):
        circ.append(scs3(_split_angle(t, i), 0, t - 1, t))
    return circ


def _check_nk(n: int, k: int) -> None:
    if not (1 <= n <= MAX_QUBITS and 0 <= k <= n):
        raise CardinalityOutOfRange(f"need 0 <= k <= n <= {MAX_QUBITS}, got n={n}, k={k}")


def dicke_gate_count(n: int, k: int) -> int:
    """Closed-form block count of the sequential construction."""
    if k in (0, n):
        return 0
    return k * (n - k) + k * (k - 1) // 2


def build_dicke_unitary(n: int, k: int) -> DickePlan:
    _check_nk(n, k)
    circ = Circuit(n)
    if 0 < k < n:
        # SCS_{l,k} for l = n .. k+1 (applied first), then SCS_{l,l-1} for l = k .. 2
        blocks = [(ell, k) for ell in range(n, k, -1)]
        blocks += [(ell, ell - 1) for ell in range(k, 1, -1)]
        for ell, j in blocks:
            circ.extend(build_scs(ell, j).shifted(n - ell, n).ops)
    return DickePlan(n, k, circ, tuple(range(n)))


def reflection_about_zero_pattern(n: int, k: int) -> Circuit:
    """X on qubits k..n-1, multi-controlled Z on all n qubits, X again.

    Equals -(2|0^{n-k}1^k><0^{n-k}1^k| - I).
    """
    flips = [pauli_x(q) for q in range(k, n)]
    return Circuit(n, flips + [mcz(range(n - 1), n - 1)] + flips)


def build_constrained_diffusion(n: int, k: int) -> Circuit:
    """Reflection about the Dicke state, equal to 2|h_k><h_k| - I up to a sign."""
    u = build_dicke_unitary(n, k).ops
    circ = Circuit(n)
    circ.extend(u.adjoint().ops)
    circ.extend(reflection_about_zero_pattern(n, k).ops)
    circ.extend(u.ops)
    return circ


def constrained_state_prep(n: int, k: int) -> Circuit:
    """|0^n> -> |h_k>: X on qubits 0..k-1 followed by the Dicke unitary."""
    _check_nk(n, k)
    circ = Circuit(n, [pauli_x(q) for q in range(k)])
    circ.extend(build_dicke_unitary(n, k).ops.ops)
    return circ


def prepare_constrained_superposition(n: int, k: int) -> Statevector:
    return apply_circuit(Statevector(n), constrained_state_prep(n, k))


def weight_mask(n: int, k: int) -> np.ndarray:
    """Boolean mask over basis indices with Hamming weight k."""
    idx = np.arange(1 << n)
    weights = np.zeros(idx.size, dtype=np.int64)
    for q in range(n):
        weights += (idx >> q) & 1
    return weights == k
