"""Command-line experiment harness.

Every command writes a JSON report ``{config, seed, results, warnings}`` to
``--out`` (stdout when omitted). ``gas`` and ``admm`` also write one CSV
trace per repeat next to the report. Exit codes: 0 success, 1 failed check,
2 invalid input, 3 search budget exhausted (incumbent still reported).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .admm import AdmmConfig, BruteForce, GasHard, admm_solve, trace_csv
from .dicke import prepare_constrained_superposition, weight_mask
from .errors import CardGasError
from .grover import (GasConfig, bits_str, build_grover_plan, gas_minimize, grover_state,
                     index_to_bits, optimal_rotations, variable_distribution)
from .model import (BqpFcInstance, RiskParityInstance, brute_force_bqpfc, load_instance,
                    planted_instance, random_integer_instance, shrink_covariance,
                    synth_instance)
from .resources import (decomposition_estimates, grover_iteration_estimates, query_crossover,
                        resource_report, total_query_estimate)

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_BUDGET = 0, 1, 2, 3
GENERATORS = {"synth": synth_instance, "integer": random_integer_instance,
              "planted": planted_instance}
SYNTH_KEYS = {"n": int, "k": int, "lam": float, "rho": float}
GAS_TRACE_COLUMNS = ("iteration", "r_max", "rotations", "threshold", "x", "value", "accepted")


class UsageError(CardGasError):
    pass


# -- argument parsing -------------------------------------------------------------

def parse_synth(tokens: list[str]) -> dict:
    out = {}
    for tok in tokens:
        key, sep, value = tok.partition("=")
        if not sep or key not in SYNTH_KEYS:
            raise UsageError(f"bad --synth token {tok!r}; expected key=value with key in "
                             f"{sorted(SYNTH_KEYS)}")
        try:
            out[key] = SYNTH_KEYS[key](value)
        except ValueError as exc:
            raise UsageError(f"bad value in --synth token {tok!r}") from exc
    if "n" not in out or "k" not in out:
        raise UsageError("--synth needs both n= and k=")
    return out


def _add_instance_args(p: argparse.ArgumentParser, generator: str = "synth") -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--instance", type=Path, help="JSON instance file")
    src.add_argument("--synth", nargs="+", metavar="KEY=VALUE",
                     help="synthetic instance, e.g. n=8 k=3 [lam=1.0] [rho=0.0]")
    p.add_argument("--generator", choices=sorted(GENERATORS), default=generator,
                   help="seeded generator used with --synth")


def _add_common(p: argparse.ArgumentParser, stochastic: bool) -> None:
    p.add_argument("--seed", type=int, required=stochastic,
                   default=None if stochastic else 0)
    p.add_argument("--out", type=Path, help="report path (JSON); traces go alongside")
    if stochastic:
        p.add_argument("--repeats", type=int, default=1)
        p.add_argument("--workers", type=int, default=4)


def _add_gas_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=("hard", "soft"), default="hard")
    p.add_argument("--xi", type=float, default=1.34)
    p.add_argument("--r-cap", type=int, default=None)
    p.add_argument("--budget", type=int, default=10_000, help="max oracle queries per run")
    p.add_argument("--cap-patience", type=int, default=5)
    p.add_argument("--backend", choices=("diagonal", "circuit"), default="diagonal")
    p.add_argument("--penalty", type=int, default=None,
                   help="soft-mode penalty weight in scaled units")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cardgas", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dicke-check", help="verify Dicke-state preparation")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=None, help="omit to check every k")
    p.add_argument("--tol", type=float, default=1e-10)
    _add_common(p, stochastic=False)

    p = sub.add_parser("grover", help="one Grover search at a given threshold")
    _add_instance_args(p, "integer")
    _add_common(p, stochastic=True)
    _add_gas_args(p)
    p.add_argument("--threshold", type=int, default=None,
                   help="scaled threshold y (default: optimum + 1)")
    p.add_argument("--rotations", type=int, default=None,
                   help="default: optimal count for the measured marked set")

    p = sub.add_parser("gas", help="Grover Adaptive Search")
    _add_instance_args(p, "integer")
    _add_common(p, stochastic=True)
    _add_gas_args(p)

    p = sub.add_parser("admm", help="hybrid ADMM for the risk-parity model")
    _add_instance_args(p, "synth")
    _add_common(p, stochastic=True)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--c4-margin", type=float, default=1.0)
    p.add_argument("--c5", type=float, default=1.5)
    p.add_argument("--lam", type=float, default=None, help="override the instance lambda")
    p.add_argument("--rho", type=float, default=None, help="covariance shrinkage")
    p.add_argument("--t-max", type=int, default=None)
    p.add_argument("--x1-solver", choices=("brute", "gas"), default="brute")
    _add_gas_args(p)

    p = sub.add_parser("resources", help="closed-form resource estimates")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--marked", type=int, default=1)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.1)
    _add_common(p, stochastic=False)

    p = sub.add_parser("compare", help="GAS (hard) against brute force over many instances")
    _add_instance_args(p, "integer")
    _add_common(p, stochastic=True)
    _add_gas_args(p)
    return parser


# -- helpers ----------------------------------------------------------------------

def _config_echo(args: argparse.Namespace) -> dict:
    out = {}
    for key, value in sorted(vars(args).items()):
        out[key] = str(value) if isinstance(value, Path) else value
    return out


def make_instance(args: argparse.Namespace, seed: int):
    if args.instance is not None:
        return load_instance(args.instance)
    params = parse_synth(args.synth)
    gen = GENERATORS[args.generator]
    base = gen(params["n"], params["k"], seed)
    if isinstance(base, RiskParityInstance):
        base = base.base
    if params.get("rho"):
        base = BqpFcInstance(base.n, base.k, shrink_covariance(base.sigma, params["rho"]),
                             base.mu)
    if "lam" in params:
        return RiskParityInstance(base, params["lam"])
    return base


def _gas_config(args: argparse.Namespace, seed: int) -> GasConfig:
    return GasConfig(args.xi, args.r_cap, args.budget, seed, args.cap_patience, args.backend)


def _map_repeats(args: argparse.Namespace, fn) -> list:
    seeds = [args.seed + i for i in range(args.repeats)]
    if args.repeats < 1:
        raise UsageError("--repeats must be positive")
    if args.repeats == 1 or args.workers <= 1:
        return [fn(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        return list(pool.map(fn, seeds))


def _base(inst) -> BqpFcInstance:
    return inst.base if isinstance(inst, RiskParityInstance) else inst


def gas_trace_csv(result) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(GAS_TRACE_COLUMNS)
    for s in result.trace:
        writer.writerow([s.iteration, repr(s.r_max), s.rotations, s.threshold, s.x, s.value,
                         int(s.accepted)])
    return buf.getvalue()


def _trace_path(out: Path | None, index: int, repeats: int) -> Path | None:
    if out is None:
        return None
    suffix = ".trace.csv" if repeats == 1 else f".trace.{index}.csv"
    return out.with_name(out.stem + suffix)


def _write_traces(args, texts: list[str]) -> list[str]:
    paths = []
    for i, text in enumerate(texts):
        path = _trace_path(args.out, i, len(texts))
        if path is not None:
            path.write_text(text)
            paths.append(str(path))
    return paths


# -- commands ---------------------------------------------------------------------

def cmd_dicke_check(args):
    ks = range(args.n + 1) if args.k is None else [args.k]
    rows, ok = [], True
    for k in ks:
        p = prepare_constrained_superposition(args.n, k).probabilities()
        mask = weight_mask(args.n, k)
        dev = float(np.max(np.abs(p[mask] - 1 / math.comb(args.n, k))))
        leak = float(p[~mask].max(initial=0.0))
        passed = dev < args.tol and leak < args.tol**2
        ok &= passed
        rows.append({"k": k, "max_amplitude_deviation": dev, "max_leak": leak,
                     "status": "PASS" if passed else "FAIL"})
        print(f"n={args.n} k={k} {'PASS' if passed else 'FAIL'} max_dev={dev:.3e}",
              file=sys.stderr)
    return {"checks": rows, "status": "PASS" if ok else "FAIL"}, [], (EXIT_OK if ok else EXIT_FAIL)


def cmd_grover(args):
    def one(seed):
        inst = make_instance(args, seed)
        base = _base(inst)
        plan = build_grover_plan(base, args.mode, penalty=args.penalty)
        values = plan.objective.values_on_indices(plan.support)
        feasible = np.array([bin(int(i)).count("1") == base.k for i in plan.support])
        opt = int(values[feasible].min())
        y = opt + 1 if args.threshold is None else args.threshold
        marked = int(np.sum(values < y))
        if args.rotations is None:
            r = optimal_rotations(plan.search_space, marked) if marked else 0
        else:
            r = args.rotations
        state = grover_state(plan, y, r, args.backend)
        p = variable_distribution(plan, state)
        marked_idx = plan.support[values < y]
        rng = np.random.default_rng(seed)
        sample = index_to_bits(rng.choice(p.size, p=p / p.sum()), base.n)
        return {"seed": seed, "threshold": int(y), "rotations": r, "marked": marked,
                "search_space": plan.search_space, "m": plan.m,
                "marked_probability": float(p[marked_idx].sum()),
                "sample": bits_str(sample), "sample_value": plan.objective.eval_scaled(sample)}
    runs = _map_repeats(args, one)
    return {"runs": runs}, [], EXIT_OK


def cmd_gas(args):
    def one(seed):
        inst = make_instance(args, seed)
        base = _base(inst)
        res = gas_minimize(base, _gas_config(args, seed), args.mode, penalty=args.penalty)
        return res, base
    runs = _map_repeats(args, one)
    results, warnings = [], []
    for (res, base), seed in zip(runs, range(args.seed, args.seed + args.repeats)):
        if res.budget_exhausted:
            warnings.append(f"seed {seed}: query budget exhausted; incumbent reported")
        results.append({"seed": seed, "best_x": bits_str(res.best_x),
                        "best_value_scaled": res.best_value,
                        "best_value": res.best_value / 2**res.scale_bits,
                        "feasible": res.feasible, "oracle_queries": res.oracle_queries,
                        "grover_rotations": res.grover_rotations,
                        "iterations": res.iterations, "m": res.m, "r_cap": res.r_cap,
                        "budget_exhausted": res.budget_exhausted})
    traces = _write_traces(args, [gas_trace_csv(r) for r, _ in runs])
    code = EXIT_BUDGET if any(r.budget_exhausted for r, _ in runs) else EXIT_OK
    return {"runs": results, "traces": traces}, warnings, code


def cmd_admm(args):
    def one(seed):
        inst = make_instance(args, seed)
        base = _base(inst)
        lam = args.lam if args.lam is not None else (
            inst.lam if isinstance(inst, RiskParityInstance) else 1.0)
        if args.rho:
            base = BqpFcInstance(base.n, base.k, shrink_covariance(base.sigma, args.rho),
                                 base.mu)
        rp = RiskParityInstance(base, lam)
        solver = GasHard(_gas_config(args, seed)) if args.x1_solver == "gas" else BruteForce()
        cfg = AdmmConfig.for_instance(rp, args.epsilon, args.delta, args.c4_margin, args.c5,
                                      args.t_max, solver)
        return rp, cfg, admm_solve(rp, cfg, seed)
    runs = _map_repeats(args, one)
    results, warnings = [], []
    for (rp, cfg, res), seed in zip(runs, range(args.seed, args.seed + args.repeats)):
        warnings.extend(f"seed {seed}: {e}" for e in res.events)
        best = brute_force_bqpfc(rp)
        results.append({
            "seed": seed, "x1_final": bits_str(res.x1_final),
            "x2_final": res.x2_final.tolist(), "termination_reason": res.termination_reason,
            "iterations": res.iterations, "zeta": cfg.zeta, "beta": cfg.beta,
            "t_max": cfg.t_max, "final_delta": res.final_delta,
            "stop_threshold": res.stop_threshold, "consistency_error": res.consistency_error,
            "solver_queries": res.solver_queries,
            "identity_ok": all(r.identity_ok for r in res.trace),
            "descent_ok": all(r.descent_ok for r in res.trace),
            "lower_bound_ok": all(r.lower_ok for r in res.trace),
            "subgradient_ok": all(r.subgrad_ok for r in res.trace),
            "brute_force_x": bits_str(best.x), "brute_force_value": best.value})
    traces = _write_traces(args, [trace_csv(res) for _, _, res in runs])
    code = EXIT_BUDGET if any("budget exhausted" in w for w in warnings) else EXIT_OK
    return {"runs": results, "traces": traces}, warnings, code


def cmd_resources(args):
    method_reports = {m: resource_report(m, args.n, args.k, args.m, args.degree, args.marked,
                                         args.epsilon, args.delta).to_dict()
                      for m in ("QdGasSoft", "AdmmGasHard")}
    rot = grover_iteration_estimates(args.n, args.k, args.marked)
    q = total_query_estimate(args.n, args.k, args.marked, args.epsilon, args.delta)
    results = {
        "oracle_gate_counts": method_reports["AdmmGasHard"]["per_oracle_gates"],
        "rotation_estimates": asdict(rot),
        "query_estimates": asdict(q),
        "query_crossover_n": query_crossover(args.k, args.marked, args.epsilon, args.delta),
        "decomposition_estimates": asdict(decomposition_estimates(max(2, args.n))),
        "methods": method_reports,
    }
    warnings = ["k=0: hybrid estimate is degenerate"] if q.degenerate else []
    return results, warnings, EXIT_OK


def cmd_compare(args):
    def one(seed):
        inst = _base(make_instance(args, seed))
        bf = brute_force_bqpfc(inst.objective(), k=inst.k)
        res = gas_minimize(inst, _gas_config(args, seed), "hard")
        return {"seed": seed, "match": res.best_value == bf.value,
                "gas_value_scaled": res.best_value, "optimum_scaled": int(bf.value),
                "degeneracy": bf.degeneracy, "oracle_queries": res.oracle_queries,
                "budget_exhausted": res.budget_exhausted}
    rows = _map_repeats(args, one)
    n_match = sum(r["match"] for r in rows)
    results = {"agreement_rate": n_match / len(rows), "matches": n_match, "runs": len(rows),
               "mean_oracle_queries": float(np.mean([r["oracle_queries"] for r in rows])),
               "per_run": rows}
    warnings = [f"seed {r['seed']}: GAS value {r['gas_value_scaled']} != optimum "
                f"{r['optimum_scaled']}" for r in rows if not r["match"]]
    code = EXIT_BUDGET if any(r["budget_exhausted"] for r in rows) else EXIT_OK
    return results, warnings, code


COMMANDS = {"dicke-check": cmd_dicke_check, "grover": cmd_grover, "gas": cmd_gas,
            "admm": cmd_admm, "resources": cmd_resources, "compare": cmd_compare}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        results, warnings, code = COMMANDS[args.command](args)
    except (CardGasError, FileNotFoundError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report = {"config": _config_echo(args), "seed": args.seed, "results": results,
              "warnings": warnings}
    text = json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)
    return code


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def main() -> None:
    sys.exit(run())
