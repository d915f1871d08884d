"""``prospect`` command-line front end.

Exit codes: 0 success, 2 invalid input, 3 numerical failure. Configs are
flat JSON objects with one section per record (``solver``, ``problem``,
``model``, ``data``, ``phase_transition``, ``scaling``, ``selftest``) plus a
top-level ``seed``; command-line flags override file values. The worker
count never enters an output, so results are byte-identical across
``--parallel`` settings.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import asdict, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .errors import ConvergenceError, DomainError
from .experiments import (
    ExperimentTable,
    LinearModelSpec,
    PhaseTransitionConfig,
    ScalingConfig,
    gen_linear_model,
    recovery_rates,
    run_phase_transition,
    run_scaling_benchmark,
)
from .oracles import KINDS
from .solvers import DRConfig

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "trace": logging.DEBUG}

log = logging.getLogger("prospect")


class InvalidInput(Exception):
    """Bad flags, config values or input files (exit code 2)."""


class NumericalFailure(Exception):
    """A computation finished without a trustworthy result (exit code 3)."""

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload


# ---------------------------------------------------------------- parsing helpers


def _float_list(text: str) -> List[float]:
    try:
        vals = [float(_fraction(t)) for t in str(text).split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _int_list(text: str) -> List[int]:
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _fraction(token: str) -> float:
    token = token.strip()
    if "/" in token:
        a, b = token.split("/", 1)
        return float(a) / float(b)
    return float(token)


def _number(text: str) -> float:
    try:
        return _fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _range_list(text: str) -> List[float]:
    """``lo:hi:step`` or a comma-separated list."""
    if ":" in text:
        try:
            lo, hi, step = (_fraction(t) for t in text.split(":"))
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"expected lo:hi:step, got {text!r}") from exc
        if step <= 0 or hi < lo:
            raise argparse.ArgumentTypeError(f"bad range {text!r}")
        k = int(round((hi - lo) / step))
        return [round(lo + i * step, 10) for i in range(k + 1)]
    return _float_list(text)


def _load_config(path: Optional[str], sections: Sequence[str]) -> Dict[str, Any]:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError as exc:
        raise InvalidInput(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise InvalidInput(f"{path}: top level must be an object")
    allowed = set(sections) | {"seed"}
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise InvalidInput(f"{path}: unknown keys {unknown}; allowed: {sorted(allowed)}")
    for name in sections:
        if name in cfg and not isinstance(cfg[name], dict):
            raise InvalidInput(f"{path}: section {name!r} must be an object")
    return cfg


def _section(cfg: dict, name: str, record, overrides: Dict[str, Any]):
    """Build dataclass ``record`` from a config section and flag overrides."""
    names = {f.name for f in fields(record)}
    values = dict(cfg.get(name, {}))
    unknown = sorted(set(values) - names)
    if unknown:
        raise InvalidInput(f"unknown keys in section {name!r}: {unknown}; allowed: {sorted(names)}")
    values.update({k: v for k, v in overrides.items() if v is not None})
    for k, v in values.items():
        if isinstance(v, list):
            values[k] = tuple(v)
    try:
        return record(**values)
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"section {name!r}: {exc}") from exc


def _solver_overrides(args) -> Dict[str, Any]:
    return {"gamma": args.gamma, "relaxation": args.mu, "tol": args.tol, "max_iter": args.max_iter}


def _seed(args, cfg) -> int:
    if args.seed is not None:
        return int(args.seed)
    return int(cfg.get("seed", 0))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    return obj


def _emit(payload: dict, path: Optional[str] = None) -> None:
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=False)
    if path is None:
        print(text)
    else:
        Path(path).write_text(text + "\n")


def read_matrix_csv(path: str, *, columns: Optional[int] = None) -> np.ndarray:
    """Headerless numeric CSV; raises :class:`InvalidInput` naming the bad line."""
    rows: List[List[float]] = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            try:
                vals = [float(c) for c in rec]
            except ValueError as exc:
                raise InvalidInput(f"{path}, line {lineno}: non-numeric entry") from exc
            if not all(math.isfinite(v) for v in vals):
                raise InvalidInput(f"{path}, line {lineno}: non-finite entry")
            width = columns if columns is not None else (len(rows[0]) if rows else len(vals))
            if len(vals) != width:
                raise InvalidInput(f"{path}, line {lineno}: expected {width} values, found {len(vals)}")
            rows.append(vals)
    if not rows:
        raise InvalidInput(f"{path}: no data")
    return np.asarray(rows, dtype=float)


# ---------------------------------------------------------------- prox-eval


def _prox_operator(args):
    from . import perspective as P

    kind = args.kind
    need_y = args.y
    if kind == "radial":
        q = 2.0 if args.q is None else args.q
        spec = P.PowerSpec(q, args.alpha or 1.0, args.delta or 0.0, args.v).as_radial()
        return (lambda g, e, y: P.prox_perspective_radial(spec, g, e, y)), {"q": q, "alpha": args.alpha or 1.0,
                                                                           "delta": args.delta or 0.0, "v": args.v}
    if kind == "sqrt":
        return P.prox_perspective_sqrt, {}
    if kind in ("power", "quadratic"):
        q = 2.0 if kind == "quadratic" else (1.5 if args.q is None else args.q)
        if kind == "quadratic" and args.q not in (None, 2.0):
            raise InvalidInput("the quadratic kind fixes q = 2")
        alpha = 1.0 if args.alpha is None else args.alpha
        delta = 0.0 if args.delta is None else args.delta
        params = {"q": q, "alpha": alpha, "delta": delta, "v": args.v}
        if kind == "quadratic":
            return (lambda g, e, y: P.prox_perspective_quadratic(g, e, y, alpha=alpha, delta=delta, v=args.v)), params
        spec = P.PowerSpec(q, alpha, delta, args.v)
        return (lambda g, e, y: P.prox_perspective_power(spec, g, e, y)), params
    if kind == "distance-ball":
        q = 2.0 if args.q is None else args.q
        alpha = 2.0 if args.alpha is None else args.alpha
        base = P.PowerSpec(q, alpha)
        spec = P.RadialSpec(base.phi0_conj, base.phi0_conj_deriv)
        return (lambda g, e, y: P.prox_perspective_distance_ball(spec, g, e, y)), {"q": q, "alpha": alpha}
    if kind == "cone-orthant":
        return P.prox_perspective_orthant, {}
    if kind == "huber":
        rho = 1.0 if args.rho is None else args.rho
        spec = P.HuberSpec(rho)
        _scalar_y(need_y, kind)
        return (lambda g, e, y: P.prox_perspective_huber(spec, g, e, y)), {"rho": rho}
    if kind == "vapnik":
        eps = 0.5 if args.epsilon is None else args.epsilon
        spec = P.VapnikSpec(eps)
        _scalar_y(need_y, kind)
        return (lambda g, e, y: P.prox_perspective_vapnik(spec, g, e, y)), {"epsilon": eps}
    if kind == "separable":
        alpha = 1.0 if args.alpha is None else args.alpha

        def scalar(g, e, y):
            return P.prox_perspective_quadratic(g, e, y, alpha=alpha)

        return (lambda g, e, y: P.prox_separable_perspective(scalar, g, e, y)), {"alpha": alpha, "block": "quadratic"}
    raise InvalidInput(f"unknown kind {kind!r}")  # pragma: no cover - argparse restricts choices


def _scalar_y(y, kind):
    if len(y) != 1:
        raise InvalidInput(f"{kind} takes a scalar y, got {len(y)} values")


def cmd_prox_eval(args) -> int:
    op, params = _prox_operator(args)
    y = np.asarray(args.y, dtype=float)
    if args.kind == "separable":
        eta = np.asarray(args.eta, dtype=float)
        if eta.shape != y.shape:
            raise InvalidInput("separable: --eta and --y need the same number of entries")
    else:
        if len(args.eta) != 1:
            raise InvalidInput("--eta takes one value for this kind")
        eta = float(args.eta[0])
    if args.v is not None and len(args.v) != y.size:
        raise InvalidInput(f"--v has {len(args.v)} entries but y has {y.size}")
    try:
        out = op(args.gamma, eta, y)
    except (DomainError, ConvergenceError) as exc:
        raise NumericalFailure(str(exc)) from exc
    except ValueError as exc:
        raise InvalidInput(str(exc)) from exc
    eta_out = np.asarray(out.eta)
    payload = {
        "eta": eta_out.tolist() if eta_out.ndim else float(eta_out),
        "y": np.atleast_1d(np.asarray(out.y)).tolist(),
        "input": {"kind": args.kind, "gamma": args.gamma, "eta": args.eta if args.kind == "separable" else eta,
                  "y": args.y, **{k: v for k, v in params.items()}},
    }
    _emit(payload, args.out)
    return EXIT_OK


# ---------------------------------------------------------------- trex

TREX_SECTIONS = ("solver", "problem", "model", "data")


def _trex_inputs(args, cfg):
    data = dict(cfg.get("data", {}))
    unknown = sorted(set(data) - {"X", "z"})
    if unknown:
        raise InvalidInput(f"unknown keys in section 'data': {unknown}")
    x_path = args.X or data.get("X")
    z_path = args.z or data.get("z")
    if x_path or z_path:
        if not (x_path and z_path):
            raise InvalidInput("both X and z files are required")
        X = read_matrix_csv(x_path)
        z = read_matrix_csv(z_path, columns=1)[:, 0]
        if z.shape[0] != X.shape[0]:
            raise InvalidInput(f"z has {z.shape[0]} rows but X has {X.shape[0]}")
        return X, z, None, {"X": x_path, "z": z_path}
    if "model" not in cfg:
        raise InvalidInput("provide --X/--z files or a 'model' section in the config")
    spec = _section(cfg, "model", LinearModelSpec, {"seed": _seed(args, cfg)})
    X, z, b_star = gen_linear_model(spec)
    return X, z, b_star, {"model": asdict(spec)}


def cmd_trex(args) -> int:
    from .trex import TrexProblem, solve_trex_full

    cfg = _load_config(args.config, TREX_SECTIONS)
    solver = _section(cfg, "solver", DRConfig, _solver_overrides(args))
    prob = dict(cfg.get("problem", {}))
    unknown = sorted(set(prob) - {"alpha", "q"})
    if unknown:
        raise InvalidInput(f"unknown keys in section 'problem': {unknown}")
    alpha = args.alpha if args.alpha is not None else prob.get("alpha", 0.5)
    q = args.q if args.q is not None else prob.get("q", 2.0)
    X, z, b_star, source = _trex_inputs(args, cfg)
    try:
        problem = TrexProblem(X, z, alpha, q)
    except ValueError as exc:
        raise InvalidInput(str(exc)) from exc
    try:
        res = solve_trex_full(problem, solver, n_jobs=args.parallel)
    except (DomainError, ConvergenceError) as exc:
        raise NumericalFailure(str(exc)) from exc
    winner = next(r for r in res.per_subproblem if r.id == res.winner)
    payload = {
        "config": {"solver": asdict(solver), "problem": {"alpha": problem.alpha, "q": problem.q}, "seed": _seed(args, cfg),
                   **source},
        "result": {
            "objective": res.objective,
            "subproblem_objective": res.subproblem_objective,
            "winner": {"j": res.winner.j, "s": res.winner.s},
            "converged": res.converged,
            "iterations": winner.iterations,
            "support": [int(i) for i in np.flatnonzero(res.b_hat)],
            "b_hat": res.b_hat,
        },
    }
    if b_star is not None:
        payload["result"]["b_star"] = b_star
    if args.out:
        stem = Path(args.out)
        _emit(payload, str(stem.with_suffix(".json")))
        with open(stem.with_suffix(".csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("j", "coef"))
            for j, v in enumerate(res.b_hat):
                w.writerow((j, repr(float(v))))
    else:
        _emit(payload)
    if not res.converged:
        log.warning("winning subproblem did not meet the stopping rule")
        return EXIT_NUMERICAL
    return EXIT_OK


# ---------------------------------------------------------------- experiments


def _write_table(table: ExperimentTable, out: Optional[str], summary: dict) -> None:
    if out:
        table.to_csv(out)
        Path(out).with_suffix(".json").write_text(json.dumps(_jsonable({**table.to_json(), "summary": summary}),
                                                             indent=2) + "\n")
    else:
        sys.stdout.write(table.to_csv())


def cmd_phase_transition(args) -> int:
    cfg = _load_config(args.config, ("phase_transition",))
    over = {"theta_grid": args.theta, "q_list": args.q, "alpha_grid": args.alpha_grid, "repetitions": args.reps,
            "p": args.p, "seed": _seed(args, cfg) if (args.seed is not None or "seed" in cfg) else None,
            "tol": args.tol, "max_iter": args.max_iter, "relaxation": args.mu, "gamma_per_alpha": args.gamma,
            "k0": args.k0}
    pt = _section(cfg, "phase_transition", PhaseTransitionConfig, over)
    if args.keep is not None:
        try:
            pt = replace(pt, keep=args.keep or None)
        except ValueError as exc:
            raise InvalidInput(str(exc)) from exc
    try:
        table = run_phase_transition(pt, n_jobs=args.parallel)
    except (DomainError, ConvergenceError) as exc:
        raise NumericalFailure(str(exc)) from exc
    summary = {"config": asdict(pt), "recovery_rate": recovery_rates(table)}
    _write_table(table, args.out, summary)
    if args.out:
        _emit(summary)
    return EXIT_OK


def cmd_scaling(args) -> int:
    cfg = _load_config(args.config, ("scaling",))
    over = {"dims": args.dims, "repetitions": args.reps, "n": args.n, "alpha": args.alpha, "q": args.q,
            "k0": args.k0, "seed": _seed(args, cfg) if (args.seed is not None or "seed" in cfg) else None,
            **_solver_overrides(args)}
    sc = _section(cfg, "scaling", ScalingConfig, over)
    try:
        table = run_scaling_benchmark(sc, n_jobs=args.parallel)
    except (DomainError, ConvergenceError) as exc:
        raise NumericalFailure(str(exc)) from exc
    summary = {"config": asdict(sc), "timing": table.meta["summary"]}
    _write_table(table, args.out, summary)
    if args.out:
        _emit(summary)
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    cfg = _load_config(args.config, ("selftest",))
    opts = dict(cfg.get("selftest", {}))
    unknown = sorted(set(opts) - {"kinds", "draws", "pairs", "oracle"})
    if unknown:
        raise InvalidInput(f"unknown keys in section 'selftest': {unknown}")
    kinds = args.kinds or opts.get("kinds") or list(KINDS)
    bad = sorted(set(kinds) - set(KINDS))
    if bad:
        raise InvalidInput(f"unknown kinds {bad}; choose from {list(KINDS)}")
    draws = args.draws if args.draws is not None else int(opts.get("draws", 1000))
    pairs = args.pairs if args.pairs is not None else int(opts.get("pairs", 10_000))
    oracle = (not args.no_oracle) and bool(opts.get("oracle", True))
    if draws < 1 or pairs < 1:
        raise InvalidInput("draws and pairs must be positive")
    seed = _seed(args, cfg)
    results = run_selftest(kinds, oracle_draws=draws, pairs=pairs, seed=seed, oracle=oracle)
    table = ExperimentTable(meta={"experiment": "selftest", "kinds": list(kinds), "draws": draws, "pairs": pairs,
                                  "seed": seed, "oracle": oracle})
    for r in results:
        cid = f"{r.suite}/{r.kind}"
        table.append(cid, seed, "cases", r.cases)
        table.append(cid, seed, "max_violation", r.max_violation)
        table.append(cid, seed, "tolerance", r.tolerance)
        table.append(cid, seed, "passed", float(r.passed))
    summary = {"config": table.meta, "passed": all(r.passed for r in results),
               "max_firm_nonexpansive_violation": max(r.max_violation for r in results
                                                      if r.suite == "firm_nonexpansive"),
               "suites": [r.summary() for r in results]}
    if args.out:
        table.to_csv(args.out)
    _emit(summary)
    if not summary["passed"]:
        failed = [r.summary() for r in results if not r.passed]
        raise NumericalFailure(f"{len(failed)} suite(s) failed", {"failed": failed})
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser, solver: bool = True):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--parallel", type=int, default=1, help="worker processes (results do not depend on it)")
    p.add_argument("--out", help="output path")
    if solver:
        p.add_argument("--gamma", type=_number, help="Douglas-Rachford step size")
        p.add_argument("--mu", type=_number, help="relaxation parameter in ]0, 2[")
        p.add_argument("--tol", type=_number, help="stopping tolerance")
        p.add_argument("--max-iter", type=int, help="iteration cap")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prospect", description="Perspective proximity operators and TREX tools.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prox-eval", help="evaluate one perspective prox")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--gamma", required=True, type=_number)
    p.add_argument("--eta", required=True, type=_float_list, help="scalar, or a list for the separable kind")
    p.add_argument("--y", required=True, type=_float_list, help="comma-separated vector")
    p.add_argument("--alpha", type=_number)
    p.add_argument("--q", type=_number)
    p.add_argument("--delta", type=_number)
    p.add_argument("--v", type=_float_list)
    p.add_argument("--rho", type=_number)
    p.add_argument("--epsilon", type=_number)
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_prox_eval)

    p = sub.add_parser("trex", help="solve generalized TREX on CSV data or a generated model")
    _common(p)
    p.add_argument("--X", help="design matrix CSV (n rows, p columns, no header)")
    p.add_argument("--z", help="response CSV (one column)")
    p.add_argument("--alpha", type=_number)
    p.add_argument("--q", type=_number)
    p.set_defaults(func=cmd_trex)

    p = sub.add_parser("phase-transition", help="support-recovery experiment")
    _common(p)
    p.add_argument("--theta", type=_range_list, help="theta grid, list or lo:hi:step")
    p.add_argument("--q", type=_float_list, help="exponents, e.g. 9/8,7/6,3/2,2")
    p.add_argument("--alpha-grid", type=_range_list)
    p.add_argument("--reps", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--k0", type=int, help="sign-screening iterations per alpha")
    p.add_argument("--keep", type=int, help="columns kept after screening (0 keeps all)")
    p.set_defaults(func=cmd_phase_transition)

    p = sub.add_parser("scaling", help="DR versus DR-Sel timing")
    _common(p)
    p.add_argument("--dims", type=_int_list)
    p.add_argument("--reps", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--alpha", type=_number)
    p.add_argument("--q", type=_number)
    p.add_argument("--k0", type=int)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("selftest", help="randomized prox property suites")
    _common(p, solver=False)
    p.add_argument("--kinds", type=lambda s: [t for t in s.split(",") if t])
    p.add_argument("--draws", type=int, help="oracle draws per kind")
    p.add_argument("--pairs", type=int, help="draws per property suite")
    p.add_argument("--no-oracle", action="store_true", help="skip the brute-force comparison")
    p.set_defaults(func=cmd_selftest)
    return parser


def _setup_logging() -> None:
    level = os.environ.get("PROSPECT_LOG", "quiet").strip().lower() or "quiet"
    if level not in LOG_LEVELS:
        raise InvalidInput(f"PROSPECT_LOG must be one of {sorted(LOG_LEVELS)}, got {level!r}")
    logging.basicConfig(level=LOG_LEVELS[level], stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits with 2 on bad flags already
        return int(exc.code or 0)
    try:
        _setup_logging()
        if getattr(args, "parallel", 1) < 1:
            raise InvalidInput("--parallel must be at least 1")
        return args.func(args)
    except (InvalidInput, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        if exc.payload is not None:
            print(json.dumps(_jsonable(exc.payload)), file=sys.stderr)
        return EXIT_NUMERICAL
    except (DomainError, ConvergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
