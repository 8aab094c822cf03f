"""Command-line front end: ``pqgraph <command> [flags]``.

Exit status: 0 success, 1 validation failure, 2 solver stall, 3 I/O, parse or
usage error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .energy import (NehariClass, ProblemInstance, analyze_fiber, constants, threshold_constants)
from .errors import (FiberClassificationError, GraphValidationError, InvalidParameterError,
                     NonPositiveFunctionError, NotInRangeError, ParseError, PQGraphError)
from .graph import validate_graph
from .io import LoadedInstance, atomic_write, dumps_csv, dumps_json, load_function, load_instance
from .solvers import (CHECK_RTOL, SolverOptions, minimize_global_negative, minimize_on_branch,
                      verify_solution)
from .spaces import Exponents, lp_norm, sobolev_norm

log = logging.getLogger("pqgraph")

EXIT_OK, EXIT_INVALID, EXIT_STALL, EXIT_USAGE = 0, 1, 2, 3
COMMANDS = ("validate", "constants", "fiber", "solve-plus", "solve-minus", "solve-negative",
            "verify", "sweep")
LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}

SWEEP_COLUMNS = ["index", "p", "lambda", "lambda_ratio", "Lambda_star", "X_lambda", "X0",
                 "S_lambda", "S0", "J_plus", "J_minus", "norm_Wa_plus", "norm_Wa_minus",
                 "norm_alpha1_plus", "norm_alpha1_minus", "residual_plus", "residual_minus",
                 "converged_plus", "converged_minus"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    instance_path: str
    lam: float | None = None
    lam_ratio: float | None = None
    exponents: dict | None = None
    solver: dict | None = None
    output_path: str | None = None
    output_format: str | None = None
    jobs: int = 1
    extra: dict | None = None


def _floats(text: str) -> list[float]:
    parts = [s for s in text.replace(" ", ",").split(",") if s]
    try:
        return [float(s) for s in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", required=True, metavar="PATH", help="instance file")
    lam = common.add_mutually_exclusive_group()
    lam.add_argument("--lambda", dest="lam", type=float, metavar="X", help="absolute lambda")
    lam.add_argument("--lambda-ratio", dest="lam_ratio", type=float, metavar="R",
                     help="lambda as a multiple of Lambda*")
    for name in ("p", "q", "gamma", "alpha"):
        common.add_argument(f"--{name}", type=float, help=f"override exponent {name}")
    common.add_argument("--grad-tol", type=float)
    common.add_argument("--max-iters", type=int)
    common.add_argument("--energy-tol", type=float)
    common.add_argument("--step-init", type=float)
    common.add_argument("--armijo-c", type=float)
    common.add_argument("--shrink", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--jobs", type=int, default=1, metavar="N")

    parser = _Parser(prog="pqgraph", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("validate", parents=[common], help="check graph and coefficient hypotheses")
    sub.add_parser("constants", parents=[common], help="Lambda*, X, X0, S, S0")
    fib = sub.add_parser("fiber", parents=[common], help="tabulate the fibering map")
    fib.add_argument("--direction", metavar="PATH", help="direction u (default: u = 1)")
    fib.add_argument("--t-min", type=float)
    fib.add_argument("--t-max", type=float)
    fib.add_argument("--points", type=int, default=200)
    for name, text in (("solve-plus", "minimize on D+ (0 < lambda < Lambda*)"),
                       ("solve-minus", "minimize on D- (0 < lambda < Lambda*)"),
                       ("solve-negative", "global minimization (lambda < 0)")):
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.add_argument("--init", metavar="PATH", help="initial guess (default: u = 1)")
    ver = sub.add_parser("verify", parents=[common], help="a-posteriori checks of a solution")
    ver.add_argument("--solution", required=True, metavar="PATH")
    sw = sub.add_parser("sweep", parents=[common], help="constants and solves over a grid")
    grid = sw.add_mutually_exclusive_group(required=True)
    grid.add_argument("--lambda-ratios", type=_floats, metavar="LIST")
    grid.add_argument("--p-grid", type=_floats, metavar="LIST")
    sw.add_argument("--constants-only", action="store_true")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    exps = {k: getattr(ns, k) for k in ("p", "q", "gamma", "alpha") if getattr(ns, k) is not None}
    solver = {k: getattr(ns, k) for k in ("grad_tol", "max_iters", "energy_tol", "step_init",
                                          "armijo_c", "shrink", "seed")
              if getattr(ns, k) is not None}
    extra = {k: v for k, v in vars(ns).items()
             if k in ("direction", "t_min", "t_max", "points", "init", "solution",
                      "lambda_ratios", "p_grid", "constants_only")}
    return RunConfig(ns.command, ns.instance, ns.lam, ns.lam_ratio, exps, solver, ns.out,
                     ns.format, ns.jobs, extra)


# -- helpers -------------------------------------------------------------------

def _exponents(loaded: LoadedInstance, cfg: RunConfig) -> Exponents:
    vals = {k: loaded.params.get(k) for k in ("p", "q", "gamma", "alpha")}
    vals.update(cfg.exponents or {})
    missing = [k for k, v in vals.items() if v is None]
    if missing:
        raise UsageError(f"exponents {missing} not given (use 'param' lines or --{missing[0]})")
    return Exponents(**vals)


def _instance(loaded: LoadedInstance, cfg: RunConfig, need_lambda: bool = True) -> ProblemInstance:
    if loaded.fields is None:
        raise UsageError("instance has no coefficient columns (need 'v <id> <mu> <a> <b> <f> <g>')")
    report = validate_graph(loaded.graph)
    if not report.ok:
        raise GraphValidationError("; ".join(report.violations), report.violations)
    inst = ProblemInstance(loaded.graph, loaded.fields, _exponents(loaded, cfg), 0.0)
    if cfg.lam_ratio is not None:
        return inst.with_lambda(cfg.lam_ratio * inst.lambda_star)
    lam = cfg.lam if cfg.lam is not None else loaded.params.get("lambda")
    if lam is None:
        if need_lambda:
            raise UsageError("lambda not given (use --lambda, --lambda-ratio or 'param lambda')")
        return inst
    return inst.with_lambda(lam)


def _options(cfg: RunConfig) -> SolverOptions:
    try:
        return SolverOptions(**(cfg.solver or {}))
    except InvalidParameterError as exc:
        raise UsageError(str(exc)) from None


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.output_path:
        atomic_write(cfg.output_path, text)
    else:
        sys.stdout.write(text)


def _identity_slacks(inst: ProblemInstance) -> dict:
    e = inst.exps
    at_star = threshold_constants(e.p, e.gamma, e.alpha, inst.a0, inst.mu0, inst.g_inf,
                                  inst.f_norm_p, inst.lambda_star)
    return {"X_identity_slack": abs(at_star.X_lambda - at_star.X0) / at_star.X0,
            "S_identity_slack": abs(at_star.S_lambda - at_star.S0) / at_star.S0}


# -- commands ------------------------------------------------------------------

def cmd_validate(cfg: RunConfig, loaded: LoadedInstance) -> int:
    report = validate_graph(loaded.graph)
    out = {"graph": report.to_dict(), "n": loaded.graph.n,
           "has_coefficients": loaded.fields is not None}
    ok = report.ok
    if loaded.fields is not None:
        problems = loaded.fields.violations()
        if not problems and loaded.fields.a.shape[0] != loaded.graph.n:
            problems.append("coefficient length does not match vertex count")
        out["coefficient_violations"] = problems
        ok = ok and not problems
    out["ok"] = ok
    _emit(cfg, dumps_json(out))
    return EXIT_OK if ok else EXIT_INVALID


def cmd_constants(cfg: RunConfig, loaded: LoadedInstance) -> int:
    inst = _instance(loaded, cfg)
    if not inst.lam > 0:
        raise NotInRangeError(f"constants need lambda > 0, got {inst.lam}")
    out = constants(inst).to_dict()
    out.update(_identity_slacks(inst))
    out["lambda_ratio"] = inst.lam / inst.lambda_star
    out["in_range"] = 0 < inst.lam < inst.lambda_star
    out["scalars"] = inst.cached_scalars()
    _emit(cfg, dumps_json(out))
    return EXIT_OK


def cmd_fiber(cfg: RunConfig, loaded: LoadedInstance) -> int:
    inst = _instance(loaded, cfg)
    if not inst.lam > 0:
        raise NotInRangeError(f"fiber analysis needs lambda > 0, got {inst.lam}")
    ex = cfg.extra or {}
    u = np.ones(inst.n) if not ex.get("direction") else load_function(ex["direction"], inst.graph)
    fa = analyze_fiber(inst, u)
    right = fa.t2 if fa.t2 is not None else fa.t_tilde
    t_min = ex.get("t_min") or fa.t_tilde * 1e-2
    t_max = ex.get("t_max") or right * 1e2
    points = ex.get("points") or 200
    if not (0 < t_min < t_max) or points < 2:
        raise UsageError("need 0 < t-min < t-max and at least 2 points")
    rows = []
    with np.errstate(over="ignore"):
        # numpy scalars so that huge t gives inf rather than OverflowError
        for t in np.geomspace(t_min, t_max, points):
            rows.append({"t": float(t), "phi": float(fa.fiber.value(t)),
                         "phi_prime": float(fa.fiber.derivative(t)),
                         "J_of_tu": float(fa.fiber.energy(t))})
    summary = {"t1": fa.t1, "t_tilde": fa.t_tilde, "t2": fa.t2,
               "classification": fa.classification.value, "lambda": inst.lam,
               "phi_at_t_tilde": fa.phi_at_t_tilde}
    if (cfg.output_format or "csv") == "json":
        _emit(cfg, dumps_json({"analysis": summary, "grid": rows}))
        return EXIT_OK
    table = dumps_csv(rows, ["t", "phi", "phi_prime", "J_of_tu"])
    if cfg.output_path:
        atomic_write(cfg.output_path, table)
        atomic_write(cfg.output_path + ".json", dumps_json(summary))
    else:
        sys.stdout.write(table + "\n" + dumps_json(summary))
    return EXIT_OK


def _emit_report(cfg: RunConfig, inst: ProblemInstance, report) -> int:
    ids = inst.graph.external_ids()
    if (cfg.output_format or "json") == "csv":
        rows = [{"id": k, "value": float(v)} for k, v in zip(ids, report.solution.tolist())]
        _emit(cfg, dumps_csv(rows, ["id", "value"]))
    else:
        out = report.to_dict(ids)
        out["checks_ok"] = report.checks_ok
        _emit(cfg, dumps_json(out))
    if not report.converged:
        log.warning("solver did not converge: %s", report.message)
        return EXIT_STALL
    return EXIT_OK


def cmd_solve(cfg: RunConfig, loaded: LoadedInstance) -> int:
    inst = _instance(loaded, cfg)
    opts = _options(cfg)
    ex = cfg.extra or {}
    init = load_function(ex["init"], inst.graph) if ex.get("init") else None
    if cfg.command == "solve-negative":
        report = minimize_global_negative(inst, init=init, opts=opts)
    else:
        branch = NehariClass.PLUS if cfg.command == "solve-plus" else NehariClass.MINUS
        report = minimize_on_branch(inst, branch, init=init, opts=opts)
    return _emit_report(cfg, inst, report)


def cmd_verify(cfg: RunConfig, loaded: LoadedInstance) -> int:
    inst = _instance(loaded, cfg)
    opts = _options(cfg)
    u = load_function((cfg.extra or {})["solution"], inst.graph)
    checks = verify_solution(inst, u, grad_tol=opts.grad_tol, seed=opts.seed)
    ok = all(c.holds(CHECK_RTOL) for c in checks)
    _emit(cfg, dumps_json({"lambda": inst.lam, "ok": ok,
                           "checks": [c.to_dict(CHECK_RTOL) for c in checks]}))
    return EXIT_OK if ok else EXIT_INVALID


def sweep_point(inst: ProblemInstance, index: int, ratio: float, opts: SolverOptions,
                constants_only: bool) -> dict:
    """One sweep row; stalls are recorded in the row, never raised."""
    inst = inst.with_lambda(ratio * inst.lambda_star)
    c = constants(inst)
    row = {"index": index, "p": inst.exps.p, "lambda": inst.lam, "lambda_ratio": ratio,
           "Lambda_star": c.Lambda_star, "X_lambda": c.X_lambda, "X0": c.X0,
           "S_lambda": c.S_lambda, "S0": c.S0}
    if constants_only:
        return row
    g, e = inst.graph, inst.exps
    for branch, tag in ((NehariClass.PLUS, "plus"), (NehariClass.MINUS, "minus")):
        try:
            rep = minimize_on_branch(inst, branch, opts=opts)
        except (PQGraphError, ArithmeticError) as exc:
            log.warning("sweep point %d (%s) failed: %s", index, tag, exc)
            row[f"converged_{tag}"] = False
            continue
        row[f"J_{tag}"] = rep.energy
        row[f"norm_Wa_{tag}"] = sobolev_norm(g, rep.solution, inst.fields.a, e.p)
        row[f"norm_alpha1_{tag}"] = lp_norm(g, rep.solution, e.alpha + 1)
        row[f"residual_{tag}"] = rep.residual_inf
        row[f"converged_{tag}"] = rep.converged
    return row


def _sweep_task(args):
    return sweep_point(*args)


def cmd_sweep(cfg: RunConfig, loaded: LoadedInstance) -> int:
    ex = cfg.extra or {}
    only = bool(ex.get("constants_only"))
    base = _instance(loaded, cfg, need_lambda=False)
    opts = _options(cfg)
    if ex.get("lambda_ratios") is not None:
        grid = ex["lambda_ratios"]
        tasks = [(base, i, r, opts, only) for i, r in enumerate(grid)]
    else:
        grid = ex.get("p_grid") or []
        if cfg.lam is not None:
            raise UsageError("a p-grid sweep takes --lambda-ratio, not --lambda")
        ratio = cfg.lam_ratio if cfg.lam_ratio is not None else 0.5
        tasks = []
        for i, p in enumerate(grid):
            try:
                tasks.append((base.with_exponents(p=p), i, ratio, opts, only))
            except InvalidParameterError as exc:
                raise InvalidParameterError(f"grid point {i} (p={p}): {exc}") from None
    if not grid:
        raise UsageError("empty sweep grid")
    for t in tasks:
        r = t[2]
        if not r > 0 or (not only and not r < 1):
            raise NotInRangeError(f"grid point {t[1]}: lambda ratio {r} outside "
                                  + ("(0, inf)" if only else "(0, 1)"))
    if cfg.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(_sweep_task, tasks))
    else:
        rows = [_sweep_task(t) for t in tasks]
    rows.sort(key=lambda r: r["index"])
    cols = SWEEP_COLUMNS[:9] if only else SWEEP_COLUMNS
    if (cfg.output_format or "csv") == "json":
        _emit(cfg, dumps_json({"rows": rows}))
    else:
        _emit(cfg, dumps_csv(rows, cols))
    if not only and all(not (r.get("converged_plus") or r.get("converged_minus")) for r in rows):
        log.warning("every sweep point stalled")
        return EXIT_STALL
    return EXIT_OK


HANDLERS = {"validate": cmd_validate, "constants": cmd_constants, "fiber": cmd_fiber,
            "solve-plus": cmd_solve, "solve-minus": cmd_solve, "solve-negative": cmd_solve,
            "verify": cmd_verify, "sweep": cmd_sweep}


def run(cfg: RunConfig) -> int:
    if cfg.command not in HANDLERS:
        print(f"pqgraph: error: unknown command {cfg.command!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        loaded = load_instance(cfg.instance_path)
        return HANDLERS[cfg.command](cfg, loaded)
    except (ParseError, UsageError) as exc:
        print(f"pqgraph: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"pqgraph: error: {exc.strerror or exc}: {exc.filename or ''}".rstrip(": "),
              file=sys.stderr)
        return EXIT_USAGE
    except GraphValidationError as exc:
        print(f"pqgraph: invalid instance: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NotInRangeError, InvalidParameterError, NonPositiveFunctionError,
            FiberClassificationError) as exc:
        print(f"pqgraph: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


def _setup_logging() -> None:
    level = LOG_LEVELS.get(os.environ.get("PQGRAPH_LOG", "warn").strip().lower(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr, format="pqgraph %(levelname)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    ns = build_parser().parse_args(argv)
    return run(config_from_args(ns))


if __name__ == "__main__":
    sys.exit(main())
