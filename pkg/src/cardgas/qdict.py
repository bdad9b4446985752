"""Quantum-dictionary oracle.

Writes ``f(x) - y`` in two's complement into an m-qubit ancilla register:
Hadamards on the ancilla, one controlled phase ladder per monomial, then an
inverse QFT. The sign oracle flips the phase of every ``x`` with
``f(x) - y < 0`` by hitting the ancilla's top bit with Z and uncomputing.

Register layout for an n-variable objective: variable i is qubit i, ancilla
bit j is qubit n + j (so ancilla qubit n + m - 1 is the sign bit).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Iterable, Mapping

import numpy as np

from .errors import DimensionMismatch, PrecisionOverflow, RangeViolation
from .qsim import (Circuit, cphase, hadamard, inverse_qft_circuit, pauli_z, phase)

DEFAULT_MAX_SCALE_BITS = 16
MAX_PRECISION_BITS = 62
_SCALE_TOL = 1e-9


def _choose_scale_bits(values: Iterable[float], max_bits: int) -> int:
    vals = np.asarray(list(values), dtype=float)
    for p in range(max_bits + 1):
        scaled = vals * (1 << p)
        if np.all(np.abs(scaled - np.round(scaled)) < _SCALE_TOL):
            return p
    return max_bits


@dataclass(frozen=True)
class PolyObjective:
    """Multilinear polynomial with integer coefficients in units of 2^-scale_bits.

    ``terms`` maps sorted variable-index tuples (1 to 4 entries in practice)
    to integer coefficients.
    """

    n: int
    terms: Mapping[tuple[int, ...], int] = field(default_factory=dict)
    scale_bits: int = 0
    constant: int = 0

    def __post_init__(self):
        clean: dict[tuple[int, ...], int] = {}
        for key, c in self.terms.items():
            key = tuple(sorted(set(key)))
            if any(not 0 <= i < self.n for i in key):
                raise DimensionMismatch(f"term {key} outside {self.n} variables")
            if not key:
                raise ValueError("use `constant` for the empty monomial")
            clean[key] = clean.get(key, 0) + int(c)
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "constant", int(self.constant))

    # -- construction --------------------------------------------------------

    @classmethod
    def from_real(cls, n: int, coeffs: Mapping[tuple[int, ...], float], constant: float = 0.0,
                  max_bits: int = DEFAULT_MAX_SCALE_BITS) -> "PolyObjective":
        folded: dict[tuple[int, ...], float] = {}
        for key, c in coeffs.items():
            key = tuple(sorted(set(key)))
            folded[key] = folded.get(key, 0.0) + float(c)
        p = _choose_scale_bits(list(folded.values()) + [constant], max_bits)
        s = float(1 << p)
        terms = {key: int(round(c * s)) for key, c in folded.items() if c != 0.0}
        return cls(n, terms, p, int(round(constant * s)))

    @classmethod
    def from_qubo(cls, matrix, linear=None, constant: float = 0.0,
                  max_bits: int = DEFAULT_MAX_SCALE_BITS) -> "PolyObjective":
        """q(x) = x^T matrix x + linear^T x + constant on binary x."""
        a = np.asarray(matrix, dtype=float)
        n = a.shape[0]
        lin = np.zeros(n) if linear is None else np.asarray(linear, dtype=float)
        coeffs: dict[tuple[int, ...], float] = {}
        for i in range(n):
            coeffs[(i,)] = a[i, i] + lin[i]
            for j in range(i + 1, n):
                coeffs[(i, j)] = a[i, j] + a[j, i]
        return cls.from_real(n, coeffs, constant, max_bits)

    @classmethod
    def from_quadratic(cls, sigma, mu, max_bits: int = DEFAULT_MAX_SCALE_BITS) -> "PolyObjective":
        """f(x) = 1/2 x^T sigma x - mu^T x."""
        sigma = np.asarray(sigma, dtype=float)
        return cls.from_qubo(0.5 * sigma, -np.asarray(mu, dtype=float), 0.0, max_bits)

    # -- evaluation ----------------------------------------------------------

    @property
    def scale(self) -> int:
        return 1 << self.scale_bits

    @property
    def degree(self) -> int:
        return max((len(key) for key in self.terms), default=0)

    def eval_scaled(self, x) -> int:
        x = np.asarray(x).reshape(-1)
        if x.size != self.n:
            raise DimensionMismatch(f"expected {self.n} bits, got {x.size}")
        total = self.constant
        for key, c in self.terms.items():
            if all(x[i] for i in key):
                total += c
        return int(total)

    def eval(self, x) -> float:
        return self.eval_scaled(x) / self.scale

    def values_on_indices(self, indices) -> np.ndarray:
        """Scaled values at basis indices (bit i of the index is variable i)."""
        idx = np.asarray(indices, dtype=np.int64)
        out = np.full(idx.shape, self.constant, dtype=np.int64)
        for key, c in self.terms.items():
            mask = 0
            for i in key:
                mask |= 1 << i
            out += c * ((idx & mask) == mask)
        return out

    def value_bounds(self, k: int | None = None) -> tuple[int, int]:
        """Interval containing every scaled value, restricted to weight-k strings if given.

        A weight-k string switches on exactly C(k, d) monomials of degree d,
        so the bound sums the C(k, d) most negative (positive) coefficients.
        """
        lo = hi = self.constant
        by_degree: dict[int, list[int]] = {}
        for key, c in self.terms.items():
            by_degree.setdefault(len(key), []).append(c)
        for d, cs in by_degree.items():
            cs = np.sort(np.asarray(cs, dtype=np.int64))
            take = cs.size if k is None else min(comb(k, d), cs.size)
            neg, pos = cs[cs < 0], cs[cs > 0][::-1]
            lo += int(neg[:take].sum())
            hi += int(pos[:take].sum())
        return lo, hi

    def __add__(self, other: "PolyObjective") -> "PolyObjective":
        if self.n != other.n or self.scale_bits != other.scale_bits:
            raise DimensionMismatch("objectives differ in size or scale")
        terms = dict(self.terms)
        for key, c in other.terms.items():
            terms[key] = terms.get(key, 0) + c
        return PolyObjective(self.n, terms, self.scale_bits, self.constant + other.constant)


def dense_poly(n: int, degree: int, rng, low: int = -3, high: int = 3) -> PolyObjective:
    """Random objective with a nonzero integer coefficient on every monomial up to ``degree``."""
    rng = np.random.default_rng(rng)
    values = [v for v in range(low, high + 1) if v != 0]
    terms = {}
    for d in range(1, degree + 1):
        for key in combinations(range(n), d):
            terms[key] = int(rng.choice(values))
    return PolyObjective(n, terms, 0, int(rng.integers(low, high + 1)))


# -- oracle configuration ----------------------------------------------------

@dataclass(frozen=True)
class OracleConfig:
    m: int
    y: int


def auto_precision(obj: PolyObjective, feasible_bound: tuple[int, int],
                   max_bits: int = MAX_PRECISION_BITS) -> int:
    """Smallest m whose two's-complement window holds v - y for all v, y in the bound."""
    lo, hi = feasible_bound
    span = int(hi) - int(lo)
    if span < 0:
        raise ValueError(f"empty interval {feasible_bound}")
    m = span.bit_length() + 1
    if m > max_bits:
        raise PrecisionOverflow(f"value span {span} needs {m} ancilla bits (cap {max_bits})")
    return m


def check_range(obj: PolyObjective, cfg: OracleConfig, k: int | None = None) -> None:
    lo, hi = obj.value_bounds(k)
    half = 1 << (cfg.m - 1)
    if lo - cfg.y < -half or hi - cfg.y >= half:
        raise RangeViolation(
            f"f - y spans [{lo - cfg.y}, {hi - cfg.y}], outside [-{half}, {half}) for m={cfg.m}")


def twos_complement(value: int, m: int) -> int:
    return int(value) % (1 << m)


def wrapped_difference(values: np.ndarray, y: int, m: int) -> np.ndarray:
    """(v - y) read back from m bits as a signed integer."""
    half = 1 << (m - 1)
    return ((np.asarray(values, dtype=np.int64) - y + half) % (1 << m)) - half


def oracle_diagonal(obj: PolyObjective, cfg: OracleConfig, indices) -> np.ndarray:
    """+-1 phase the sign oracle imprints on each basis index.

    Computed from the same m-bit wrap-around the ancilla register performs,
    so it agrees with the simulated circuit even outside the safe range.
    """
    diff = wrapped_difference(obj.values_on_indices(indices), cfg.y, cfg.m)
    return np.where(diff < 0, -1.0, 1.0)


# -- circuits ----------------------------------------------------------------

def _ladder_angle(coeff: int, j: int, m: int) -> float:
    return 2.0 * np.pi * ((int(coeff) << j) % (1 << m)) / (1 << m)


def build_phase_encoder(obj: PolyObjective, cfg: OracleConfig) -> Circuit:
    """Hadamards plus rotation ladders: ancilla |K> picks up exp(2 pi i K (f - y) / 2^m)."""
    n, m = obj.n, cfg.m
    anc = [n + j for j in range(m)]
    circ = Circuit(n + m, [hadamard(q) for q in anc])
    for key, c in obj.terms.items():
        for j in range(m):
            circ.append(cphase(key, anc[j], _ladder_angle(c, j, m), label="dict"))
    offset = obj.constant - cfg.y
    for j in range(m):
        circ.append(phase(anc[j], _ladder_angle(offset, j, m), label="dict"))
    return circ


def build_value_encoder(obj: PolyObjective, cfg: OracleConfig, k: int | None = None,
                        strict: bool = True) -> Circuit:
    """|x>|0^m> -> |x>|f(x) - y> (two's complement), exact for in-range values.

    ``strict=False`` skips the range check; out-of-range values then wrap
    modulo 2^m, which is still a valid circuit for gate counting.
    """
    if strict:
        check_range(obj, cfg, k)
    circ = build_phase_encoder(obj, cfg)
    circ.extend(inverse_qft_circuit(obj.n + cfg.m, range(obj.n, obj.n + cfg.m)).ops)
    return circ


def build_sign_oracle(obj: PolyObjective, cfg: OracleConfig, k: int | None = None,
                      strict: bool = True) -> Circuit:
    """|x>|0^m> -> sgn(f(x) - y) |x>|0^m>, ancilla restored."""
    enc = build_value_encoder(obj, cfg, k, strict)
    circ = Circuit(enc.n_qubits, list(enc.ops))
    circ.append(pauli_z(obj.n + cfg.m - 1))
    circ.extend(enc.adjoint().ops)
    return circ
