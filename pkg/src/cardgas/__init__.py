"""Grover Adaptive Search over fixed-cardinality subspaces, simulated on a
dense statevector, plus a hybrid ADMM solver for risk-parity portfolios."""

__version__ = "0.1.0"

from .admm import AdmmConfig, AdmmResult, BruteForce, GasHard, admm_solve, select_parameters
from .dicke import build_constrained_diffusion, build_dicke_unitary, prepare_constrained_superposition
from .grover import GasConfig, GasResult, build_grover_plan, gas_minimize, grover_search, optimal_rotations
from .model import BqpFcInstance, RiskParityInstance, brute_force_bqpfc, synth_instance
from .qdict import OracleConfig, PolyObjective, build_sign_oracle, build_value_encoder
from .qsim import Circuit, Statevector, apply_circuit

__all__ = [
    "AdmmConfig", "AdmmResult", "BqpFcInstance", "BruteForce", "Circuit", "GasConfig",
    "GasHard", "GasResult", "OracleConfig", "PolyObjective", "RiskParityInstance",
    "Statevector", "admm_solve", "apply_circuit", "brute_force_bqpfc",
    "build_constrained_diffusion", "build_dicke_unitary", "build_grover_plan",
    "build_sign_oracle", "build_value_encoder", "gas_minimize", "grover_search",
    "optimal_rotations", "prepare_constrained_superposition", "select_parameters",
    "synth_instance",
]
