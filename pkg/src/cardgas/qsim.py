"""Dense statevector simulator.

Qubit ``q`` is bit ``q`` of the basis-state index (qubit 0 is the least
significant bit). Amplitudes are stored as a flat ``complex128`` array and
gates act on a ``(2,) * n`` tensor view of it, so no ``2^n x 2^n`` matrix is
ever formed.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ControlTargetOverlap, IndexOutOfRange, QubitLimitExceeded

MAX_QUBITS = 26

_SQRT_HALF = 1.0 / np.sqrt(2.0)


class GateKind(str, Enum):
    HADAMARD = "H"
    PAULI_X = "X"
    PAULI_Z = "Z"
    PHASE = "P"
    CPHASE = "CP"
    MCZ = "MCZ"
    SWAP = "SWAP"
    SCS2 = "SCS2"
    SCS3 = "SCS3"


@dataclass(frozen=True)
class GateOp:
    kind: GateKind
    targets: tuple[int, ...]
    angle: float = 0.0
    controls: tuple[int, ...] = ()
    dagger: bool = False
    label: str = ""

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + self.targets

    def adjoint(self) -> "GateOp":
        if self.kind in (GateKind.PHASE, GateKind.CPHASE):
            return replace(self, angle=-self.angle)
        if self.kind in (GateKind.SCS2, GateKind.SCS3):
            return replace(self, dagger=not self.dagger)
        return self

    def matrix(self) -> np.ndarray:
        """Local unitary on ``targets`` (bit i of the row index is targets[i]).

        Only defined for the dense SCS blocks.
        """
        if self.kind is GateKind.SCS2:
            u = scs2_matrix(self.angle)
        elif self.kind is GateKind.SCS3:
            u = scs3_matrix(self.angle)
        else:
            raise TypeError(f"{self.kind.value} has no dense matrix form")
        return u.conj().T if self.dagger else u


def hadamard(q: int) -> GateOp:
    return GateOp(GateKind.HADAMARD, (q,))


def pauli_x(q: int) -> GateOp:
    return GateOp(GateKind.PAULI_X, (q,))


def pauli_z(q: int) -> GateOp:
    return GateOp(GateKind.PAULI_Z, (q,))


def phase(q: int, angle: float, label: str = "") -> GateOp:
    return GateOp(GateKind.PHASE, (q,), angle=float(angle), label=label)


def cphase(controls: Iterable[int], target: int, angle: float, label: str = "") -> GateOp:
    return GateOp(GateKind.CPHASE, (target,), angle=float(angle),
                  controls=tuple(controls), label=label)


def mcz(controls: Iterable[int], target: int) -> GateOp:
    return GateOp(GateKind.MCZ, (target,), controls=tuple(controls))


def swap(a: int, b: int) -> GateOp:
    return GateOp(GateKind.SWAP, (a, b))


def scs2(theta: float, q0: int, q1: int) -> GateOp:
    return GateOp(GateKind.SCS2, (q0, q1), angle=float(theta))


def scs3(theta: float, q0: int, qc: int, qt: int) -> GateOp:
    return GateOp(GateKind.SCS3, (q0, qc, qt), angle=float(theta))


# -- dense SCS blocks --------------------------------------------------------

def _cx(nbits: int, control: int, target: int) -> np.ndarray:
    dim = 1 << nbits
    u = np.zeros((dim, dim))
    for i in range(dim):
        j = i ^ (1 << target) if (i >> control) & 1 else i
        u[j, i] = 1.0
    return u


def _controlled_ry(nbits: int, controls: Sequence[int], target: int, theta: float) -> np.ndarray:
    dim = 1 << nbits
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    u = np.eye(dim)
    for i in range(dim):
        if (i >> target) & 1 or not all((i >> q) & 1 for q in controls):
            continue
        j = i | (1 << target)
        u[i, i], u[j, i] = c, s
        u[i, j], u[j, j] = -s, c
    return u


def scs2_matrix(theta: float) -> np.ndarray:
    # local bits: 0 -> q0, 1 -> q1
    cx = _cx(2, control=1, target=0)
    return (cx @ _controlled_ry(2, [0], 1, theta) @ cx).astype(complex)


def scs3_matrix(theta: float) -> np.ndarray:
    # local bits: 0 -> q0, 1 -> control qubit, 2 -> qt
    cx = _cx(3, control=2, target=0)
    return (cx @ _controlled_ry(3, [0, 1], 2, theta) @ cx).astype(complex)


# -- state -------------------------------------------------------------------

class Statevector:
    """Amplitudes of an ``n_qubits`` register; gates mutate ``amps`` in place."""

    def __init__(self, n_qubits: int, amps: np.ndarray | None = None):
        if n_qubits < 1:
            raise ValueError("a statevector needs at least one qubit")
        if n_qubits > MAX_QUBITS:
            raise QubitLimitExceeded(
                f"{n_qubits} qubits requested, simulator cap is {MAX_QUBITS}")
        self.n_qubits = n_qubits
        if amps is None:
            amps = np.zeros(1 << n_qubits, dtype=complex)
            amps[0] = 1.0
        else:
            amps = np.array(amps, dtype=complex).reshape(-1)
            if amps.size != 1 << n_qubits:
                raise ValueError(f"expected {1 << n_qubits} amplitudes, got {amps.size}")
        self.amps = amps

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "Statevector":
        sv = cls(n_qubits)
        sv.amps[0] = 0.0
        sv.amps[index] = 1.0
        return sv

    def copy(self) -> "Statevector":
        return Statevector(self.n_qubits, self.amps.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def tensor(self) -> np.ndarray:
        return self.amps.reshape((2,) * self.n_qubits)

    def __repr__(self) -> str:
        return f"Statevector(n_qubits={self.n_qubits})"


@dataclass
class Circuit:
    n_qubits: int
    ops: list[GateOp] = field(default_factory=list)

    def append(self, op: GateOp) -> "Circuit":
        self.ops.append(op)
        return self

    def extend(self, ops: Iterable[GateOp]) -> "Circuit":
        self.ops.extend(ops)
        return self

    def adjoint(self) -> "Circuit":
        return Circuit(self.n_qubits, [op.adjoint() for op in reversed(self.ops)])

    def shifted(self, offset: int, n_qubits: int) -> "Circuit":
        """Same ops relabelled onto qubits ``q + offset`` of a wider register."""
        out = []
        for op in self.ops:
            out.append(replace(op, targets=tuple(q + offset for q in op.targets),
                               controls=tuple(q + offset for q in op.controls)))
        return Circuit(n_qubits, out)

    def __len__(self) -> int:
        return len(self.ops)

    def count(self, kind: GateKind) -> int:
        return sum(op.kind is kind for op in self.ops)

    def controlled_rotation_counts(self, label: str | None = None) -> dict[int, int]:
        counts: Counter = Counter()
        for op in self.ops:
            if op.kind is GateKind.CPHASE and (label is None or op.label == label):
                counts[len(op.controls)] += 1
        return dict(counts)

    def depth(self) -> int:
        level = [0] * self.n_qubits
        for op in self.ops:
            d = 1 + max(level[q] for q in op.qubits)
            for q in op.qubits:
                level[q] = d
        return max(level, default=0)


# -- gate application --------------------------------------------------------

def _check(n: int, op: GateOp) -> None:
    qs = op.qubits
    for q in qs:
        if not 0 <= q < n:
            raise IndexOutOfRange(f"qubit {q} outside register of {n}")
    if len(set(op.targets)) != len(op.targets) or len(set(op.controls)) != len(op.controls):
        raise ControlTargetOverlap(f"repeated qubit in {op}")
    if set(op.controls) & set(op.targets):
        raise ControlTargetOverlap(f"controls {op.controls} overlap targets {op.targets}")


def _index(n: int, fixed: dict[int, int]) -> tuple:
    idx: list = [slice(None)] * n
    for q, bit in fixed.items():
        idx[n - 1 - q] = bit
    return tuple(idx)


def _apply_dense(t: np.ndarray, n: int, targets: Sequence[int], u: np.ndarray) -> None:
    k = len(targets)
    axes = [n - 1 - q for q in reversed(targets)]
    moved = np.moveaxis(t, axes, range(k))
    rest = moved.shape[k:]
    out = (u @ moved.reshape(1 << k, -1)).reshape((2,) * k + rest)
    t[...] = np.moveaxis(out, range(k), axes)


def apply(state: Statevector, op: GateOp) -> Statevector:
    """Apply ``op`` to ``state`` in place and return the same object."""
    n = state.n_qubits
    _check(n, op)
    t = state.tensor()
    kind = op.kind
    if kind is GateKind.HADAMARD:
        q = op.targets[0]
        i0, i1 = _index(n, {q: 0}), _index(n, {q: 1})
        a0 = t[i0].copy()
        a1 = t[i1]
        t[i0] = (a0 + a1) * _SQRT_HALF
        t[i1] = (a0 - a1) * _SQRT_HALF
    elif kind is GateKind.PAULI_X:
        q = op.targets[0]
        i0, i1 = _index(n, {q: 0}), _index(n, {q: 1})
        a0 = t[i0].copy()
        t[i0] = t[i1]
        t[i1] = a0
    elif kind is GateKind.PAULI_Z:
        t[_index(n, {op.targets[0]: 1})] *= -1.0
    elif kind in (GateKind.PHASE, GateKind.CPHASE):
        ones = {q: 1 for q in op.qubits}
        t[_index(n, ones)] *= np.exp(1j * op.angle)
    elif kind is GateKind.MCZ:
        t[_index(n, {q: 1 for q in op.qubits})] *= -1.0
    elif kind is GateKind.SWAP:
        a, b = op.targets
        i01, i10 = _index(n, {a: 1, b: 0}), _index(n, {a: 0, b: 1})
        tmp = t[i01].copy()
        t[i01] = t[i10]
        t[i10] = tmp
    elif kind in (GateKind.SCS2, GateKind.SCS3):
        _apply_dense(t, n, op.targets, op.matrix())
    else:  # pragma: no cover
        raise TypeError(f"unknown gate kind {kind}")
    return state


def apply_circuit(state: Statevector, circuit: Circuit, counter: Counter | None = None,
                  monitor: Callable[[int, GateOp, Statevector], None] | None = None) -> Statevector:
    """Apply every op of ``circuit`` in order.

    ``counter`` (if given) tallies ``(kind, n_controls, label)`` for each
    applied op; ``monitor`` is called after each op.
    """
    if circuit.n_qubits > state.n_qubits:
        raise IndexOutOfRange(
            f"circuit on {circuit.n_qubits} qubits applied to {state.n_qubits}-qubit state")
    for i, op in enumerate(circuit.ops):
        apply(state, op)
        if counter is not None:
            counter[(op.kind.value, len(op.controls), op.label)] += 1
        if monitor is not None:
            monitor(i, op, state)
    return state


# -- QFT ---------------------------------------------------------------------

def _check_register(n: int, register: Sequence[int]) -> None:
    if len(set(register)) != len(register):
        raise ControlTargetOverlap(f"register {register} has repeated qubits")
    for q in register:
        if not 0 <= q < n:
            raise IndexOutOfRange(f"qubit {q} outside register of {n}")


def qft_circuit(n_qubits: int, register: Sequence[int], label: str = "qft") -> Circuit:
    """Forward QFT on ``register`` (register[0] is the least significant bit).

    Maps |v> to 2^{-m/2} sum_K exp(2 pi i v K / 2^m) |K>.
    """
    register = list(register)
    _check_register(n_qubits, register)
    m = len(register)
    ops: list[GateOp] = []
    for i in reversed(range(m)):
        ops.append(hadamard(register[i]))
        for j in reversed(range(i)):
            ops.append(cphase([register[j]], register[i], np.pi / (1 << (i - j)), label=label))
    for i in range(m // 2):
        ops.append(swap(register[i], register[m - 1 - i]))
    return Circuit(n_qubits, ops)


def inverse_qft_circuit(n_qubits: int, register: Sequence[int], label: str = "iqft") -> Circuit:
    return qft_circuit(n_qubits, register, label=label).adjoint()


def qft(state: Statevector, register: Sequence[int]) -> Statevector:
    return apply_circuit(state, qft_circuit(state.n_qubits, register))


def inverse_qft(state: Statevector, register: Sequence[int]) -> Statevector:
    return apply_circuit(state, inverse_qft_circuit(state.n_qubits, register))


# -- measurement -------------------------------------------------------------

def register_distribution(state: Statevector, register: Sequence[int]) -> np.ndarray:
    """Born probabilities of the register value sum_i bit(register[i]) 2^i."""
    n = state.n_qubits
    register = list(register)
    _check_register(n, register)
    probs = state.probabilities().reshape((2,) * n)
    keep = [n - 1 - q for q in reversed(register)]
    rest = [a for a in range(n) if a not in keep]
    marg = np.transpose(probs, keep + rest).reshape(1 << len(register), -1).sum(axis=1)
    return marg


def sample_register(state: Statevector, register: Sequence[int], shots: int,
                    rng: int | np.random.Generator | None) -> np.ndarray:
    rng = np.random.default_rng(rng)
    p = register_distribution(state, register)
    return rng.choice(p.size, size=shots, p=p / p.sum())


def format_bits(value: int, width: int) -> str:
    """Ket-order bitstring: the highest register qubit is printed first."""
    return format(int(value), f"0{width}b") if width else ""


def measure_register(state: Statevector, register: Sequence[int],
                     rng_seed: int | np.random.Generator | None) -> str:
    """Sample one outcome without collapsing ``state``."""
    value = sample_register(state, register, 1, rng_seed)[0]
    return format_bits(value, len(register))
