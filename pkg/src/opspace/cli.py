"""Command-line front end: JSON in, JSON or CSV reports out.

Commands
    norm            operator norm of a matrix
    cbnorm          cb norm and ascent lower bound of a linear map
    haagerup        Haagerup norm of a tensor (SDP route) with Gram norms
    schur-apply     apply a symbol to a block matrix
    schur-norm      multiplier cb norm and lower bound of a symbol
    factorize       attaining representation: tensor input runs the
                    factorization search, scalar symbol input extracts the
                    norm-attaining vectors from the SDP certificate
    tail-report     tail multiplier norms for every truncation level
    counterexample  norm-vs-cb table for weighted transpose blocks
    check-suite     run the acceptance battery; nonzero exit on failure

Reports are deterministic for a fixed (input, flags) pair, including the
seed; wall-clock timings go to stderr so they never perturb report bytes.
Exit codes: 0 success, 1 solver failure, 2 input error.  The environment
variable OPSPACE_THREADS caps BLAS parallelism.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_INPUT = 2

_TABLE_COMMANDS = {"tail-report", "counterexample"}


@dataclass
class RunConfig:
    command: str
    input_path: str | None
    output_path: str | None
    tol: float
    seed: int
    restarts: int
    csv: bool

    def __post_init__(self):
        if not 0.0 < self.tol < 1.0:
            raise ValueError("tol must lie in (0, 1)")
        if self.restarts < 1:
            raise ValueError("restarts must be positive")


class InputError(Exception):
    pass


def _cap_threads():
    cap = os.environ.get("OPSPACE_THREADS")
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                    "NUMEXPR_NUM_THREADS", "VECLIB_MAXIMUM_THREADS"):
            os.environ.setdefault(var, cap)


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read input: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(
            f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _run_norm(cfg: RunConfig, payload):
    from . import serialize
    from .linalg import operator_norm
    m = serialize.matrix_from_json(payload)
    return {"operator_norm": operator_norm(m), "method": "svd"}


def _run_cbnorm(cfg: RunConfig, payload):
    from . import serialize
    from .cbmaps import cb_norm, norm_lower
    m = serialize.map_from_json(payload)
    value = cb_norm(m, tol=cfg.tol)
    lb = norm_lower(m, restarts=cfg.restarts, seed=cfg.seed)
    return {"cb": value, "tol": cfg.tol, "solver_status": "optimal",
            "norm_lb": lb, "restarts": cfg.restarts, "seed": cfg.seed}


def _run_haagerup(cfg: RunConfig, payload):
    from . import serialize
    from .haagerup import col_norm, haagerup_norm_sdp, row_norm
    v = serialize.tensor_from_json(payload)
    value = haagerup_norm_sdp(v, tol=cfg.tol)
    return {"haagerup_sdp": value, "tol": cfg.tol, "solver_status": "optimal",
            "row_norm": row_norm(v), "col_norm": col_norm(v)}


def _run_schur_apply(cfg: RunConfig, payload):
    from . import serialize
    from .schur import apply_symbol
    sym = serialize.symbol_from_json(payload.get("symbol"), "symbol")
    operand = serialize.block_matrix_from_json(payload.get("operand"), "operand")
    out = apply_symbol(sym, operand)
    return {"result": serialize.block_matrix_to_json(out)}


def _run_schur_norm(cfg: RunConfig, payload):
    from . import serialize
    from .schur import multiplier_norm
    sym = serialize.symbol_from_json(payload)
    res = multiplier_norm(sym, tol=cfg.tol, restarts=cfg.restarts, seed=cfg.seed)
    return {"cb": res.cb, "norm_lb": res.norm_lb, "tol": cfg.tol,
            "solver_status": "optimal", "restarts": cfg.restarts, "seed": cfg.seed}


def _run_factorize(cfg: RunConfig, payload):
    from . import serialize
    if isinstance(payload, dict) and "rows" in payload and "cols" in payload:
        from .haagerup import haagerup_norm_factorized
        v = serialize.tensor_from_json(payload)
        res = haagerup_norm_factorized(v, seed=cfg.seed, restarts=cfg.restarts)
        return {"value": res.value, "converged": res.converged,
                "tensor": serialize.tensor_to_json(res.tensor)}
    if isinstance(payload, dict) and ("scalar" in payload or "entries" in payload):
        from .schur import scalar_factorization
        sym = serialize.symbol_from_json(payload)
        res = scalar_factorization(sym, tol=cfg.tol)
        return {"value": res.value, "tol": cfg.tol, "solver_status": "optimal",
                "x": serialize.matrix_to_json(res.x),
                "y": serialize.matrix_to_json(res.y)}
    raise InputError("factorize expects a tensor (rows/cols) or a symbol "
                     "(scalar/entries) object")


def _run_tail_report(cfg: RunConfig, payload):
    from . import serialize
    from .schur import tail_multiplier_norm
    sym = serialize.symbol_from_json(payload)
    table = [{"n": n, "tail_norm": tail_multiplier_norm(sym, n, tol=cfg.tol)}
             for n in range(sym.grid_size + 1)]
    return {"tol": cfg.tol, "solver_status": "optimal", "table": table}


def _run_counterexample(cfg: RunConfig, payload):
    from .schur import counterexample_report
    if not isinstance(payload, dict) or "K" not in payload:
        raise InputError("counterexample expects an object with field 'K'")
    k = int(payload["K"])
    weights = payload.get("weights")
    rows = counterexample_report(k, weights=weights, tol=cfg.tol,
                                 restarts=cfg.restarts, seed=cfg.seed)
    table = [{"k": r.k, "weight": r.weight, "block_norm": r.block_norm,
              "block_cb": r.block_cb} for r in rows]
    return {"tol": cfg.tol, "solver_status": "optimal",
            "restarts": cfg.restarts, "seed": cfg.seed, "table": table}


def _run_check_suite(cfg: RunConfig, payload):
    from .acceptance import run_all
    results = run_all(printer=lambda line: print(line, flush=True))
    report = {"criteria": [
        {"number": r.number, "name": r.name, "passed": r.passed,
         "worst": {k: float(v) for k, v in r.worst.items()}}
        for r in results]}
    report["all_passed"] = all(r.passed for r in results)
    return report


_HANDLERS = {
    "norm": _run_norm,
    "cbnorm": _run_cbnorm,
    "haagerup": _run_haagerup,
    "schur-apply": _run_schur_apply,
    "schur-norm": _run_schur_norm,
    "factorize": _run_factorize,
    "tail-report": _run_tail_report,
    "counterexample": _run_counterexample,
    "check-suite": _run_check_suite,
}


def _to_csv(report: dict) -> str:
    table = report.get("table")
    if table is None:
        raise InputError("--csv is only available for table commands "
                         "(tail-report, counterexample)")
    header = list(table[0].keys()) if table else []
    lines = [",".join(header)]
    for row in table:
        lines.append(",".join(repr(row[k]) if isinstance(row[k], float)
                              else str(row[k]) for k in header))
    return "\n".join(lines) + "\n"


def _emit(report: dict, cfg: RunConfig):
    if cfg.csv:
        text = _to_csv(report)
    else:
        text = json.dumps({"command": cfg.command,
                           "config": {"tol": cfg.tol, "seed": cfg.seed,
                                      "restarts": cfg.restarts},
                           "results": report},
                          sort_keys=True, separators=(",", ":")) + "\n"
    if cfg.output_path:
        with open(cfg.output_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opspace",
        description="Operator-space numerics: cb norms, Haagerup norms, "
                    "Schur multipliers.")
    parser.add_argument("command", choices=sorted(_HANDLERS))
    parser.add_argument("input", nargs="?", help="input JSON file")
    parser.add_argument("--tol", type=float, default=1e-8,
                        help="solver tolerance (default 1e-8)")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for ascent restarts (default 0)")
    parser.add_argument("--restarts", type=int, default=32,
                        help="ascent restarts (default 32)")
    parser.add_argument("--csv", action="store_true",
                        help="emit tables as CSV instead of JSON")
    parser.add_argument("--out", dest="out", default=None,
                        help="write the report to this path instead of stdout")
    return parser


def main(argv=None) -> int:
    _cap_threads()
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(command=args.command, input_path=args.input,
                        output_path=args.out, tol=args.tol, seed=args.seed,
                        restarts=args.restarts, csv=args.csv)
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    payload = None
    if cfg.command != "check-suite":
        if cfg.input_path is None:
            print(f"input error: command '{cfg.command}' needs an input file",
                  file=sys.stderr)
            return EXIT_INPUT
    started = time.perf_counter()
    try:
        if cfg.input_path is not None:
            payload = _load_json(cfg.input_path)
        report = _HANDLERS[cfg.command](cfg, payload)
        _emit(report, cfg)
    except (InputError, ValueError, TypeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:
        from .sdp import SdpFailure
        if isinstance(exc, SdpFailure):
            print(str(exc), file=sys.stderr)
            return EXIT_SOLVER
        raise
    elapsed = time.perf_counter() - started
    print(f"opspace {cfg.command}: {elapsed:.3f}s", file=sys.stderr)
    if cfg.command == "check-suite" and not report.get("all_passed", False):
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
