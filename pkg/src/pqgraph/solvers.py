"""Descent solvers for the two Nehari branches (lam in (0, Lambda*)) and for lam < 0.

Both solvers run steepest descent in the mu-weighted inner product, where the
gradient of J is the pointwise residual. Step lengths start from a
Barzilai-Borwein guess and are cut back until the Armijo condition holds; any
trial point with a nonpositive entry is rejected. On a branch every trial point
is pulled back onto the manifold by rescaling along its ray, so the descent
works on the reduced energy w -> J(t_i(w) w).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .energy import (Fiber, FiberClass, NehariClass, ProblemInstance, analyze_fiber, constants,
                     energy_change, j_lambda, monotonicity_pairing, nehari_classify,
                     operator_bounds, pointwise_residual)
from .errors import (FiberClassificationError, InvalidParameterError, NonPositiveFunctionError,
                     NotInRangeError)
from .graph import as_function
from .spaces import Check, lp_norm, sobolev_norm

log = logging.getLogger(__name__)

CHECK_RTOL = 1e-12
STALL_PATIENCE = 200
MAX_BACKTRACKS = 80


@dataclass
class SolverOptions:
    max_iters: int = 50000
    grad_tol: float = 1e-8
    energy_tol: float = 1e-12
    step_init: float = 1.0
    armijo_c: float = 1e-4
    shrink: float = 0.5
    seed: int = 0
    positivity_floor_policy: str = "RejectStep"

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidParameterError("max_iters must be at least 1")
        for name in ("grad_tol", "energy_tol", "step_init"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be positive")
        if not 0 < self.armijo_c < 1 or not 0 < self.shrink < 1:
            raise InvalidParameterError("armijo_c and shrink must lie in (0, 1)")
        if self.positivity_floor_policy != "RejectStep":
            raise InvalidParameterError("only the RejectStep positivity policy is supported")


@dataclass
class SolveReport:
    solution: np.ndarray
    energy: float
    residual_inf: float
    residual_l2: float
    nehari_class: NehariClass | None
    iterations: int
    inequality_checks: list[Check]
    converged: bool
    mode: str = ""
    lam: float = float("nan")
    message: str = ""
    energy_history: list[float] = field(default_factory=list, repr=False)
    max_energy_change: float = float("-inf")
    off_branch_iterates: int = 0

    @property
    def checks_ok(self) -> bool:
        return all(c.holds(CHECK_RTOL) for c in self.inequality_checks)

    def check(self, name: str) -> Check:
        for c in self.inequality_checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self, ids=None) -> dict:
        ids = ids if ids is not None else [str(i) for i in range(len(self.solution))]
        return {
            "mode": self.mode,
            "lambda": self.lam,
            "converged": self.converged,
            "iterations": self.iterations,
            "energy": self.energy,
            "residual_inf": self.residual_inf,
            "residual_l2": self.residual_l2,
            "nehari_class": self.nehari_class.value if self.nehari_class else None,
            "max_energy_change": self.max_energy_change,
            "message": self.message,
            "solution": {k: float(v) for k, v in zip(ids, self.solution.tolist())},
            "inequality_checks": [c.to_dict(CHECK_RTOL) for c in self.inequality_checks],
        }


def project_to_nehari(inst: ProblemInstance, u, branch: NehariClass) -> np.ndarray:
    """Rescale u along its ray onto D+ (smaller root) or D- (larger root)."""
    if branch not in (NehariClass.PLUS, NehariClass.MINUS):
        raise InvalidParameterError("branch must be PLUS or MINUS")
    u = as_function(inst.graph, u)
    fa = analyze_fiber(inst, u)
    if fa.classification is not FiberClass.TWO_ROOTS:
        raise FiberClassificationError(
            f"fibering map has no {branch.value} root ({fa.classification.value})", fa.classification)
    return (fa.t1 if branch is NehariClass.PLUS else fa.t2) * u


def _mu_dot(inst: ProblemInstance, x: np.ndarray, y: np.ndarray) -> float:
    return math.fsum((inst.graph.measure * x * y).tolist())


def _descend(inst: ProblemInstance, v: np.ndarray, opts: SolverOptions,
             project: Callable[[np.ndarray], np.ndarray],
             branch: NehariClass | None) -> tuple[np.ndarray, int, bool, str, list[float], float, int]:
    J = j_lambda(inst, v)
    r = pointwise_residual(inst, v)
    history = [J]
    worst_change = float("-inf")
    off_branch = 0
    v_prev = r_prev = None
    best_rinf = float("inf")
    quiet = 0
    for it in range(opts.max_iters + 1):
        rinf = float(np.max(np.abs(r)))
        if rinf <= opts.grad_tol:
            return v, it, True, "converged", history, worst_change, off_branch
        if it == opts.max_iters:
            break
        step = opts.step_init
        if v_prev is not None:
            s, y = v - v_prev, r - r_prev
            sy = _mu_dot(inst, s, y)
            if sy > 0:
                step = min(max(_mu_dot(inst, s, s) / sy, 1e-12), 1e12)
        slope = -_mu_dot(inst, r, r)
        accepted = None
        t = step
        for _ in range(MAX_BACKTRACKS):
            w = v - t * r
            if np.all(w > 0):
                try:
                    w = project(w)
                except (FiberClassificationError, ArithmeticError):
                    w = None
                if w is not None:
                    dJ = energy_change(inst, v, w)
                    if dJ < 0 and dJ <= opts.armijo_c * t * slope:
                        accepted = (w, dJ)
                        break
            t *= opts.shrink
        if accepted is None:
            return v, it, False, "line search failed", history, worst_change, off_branch
        w, dJ = accepted
        v_prev, r_prev = v, r
        v = w
        r = pointwise_residual(inst, v)
        J = J + dJ
        history.append(J)
        worst_change = max(worst_change, dJ)
        if branch is not None and nehari_classify(inst, v) is not branch:
            off_branch += 1
        # stagnation: negligible energy progress and no residual progress
        if abs(dJ) < opts.energy_tol * max(abs(J), 1.0) and rinf >= 0.5 * best_rinf:
            quiet += 1
            if quiet >= STALL_PATIENCE:
                return v, it + 1, False, "stagnated", history, worst_change, off_branch
        else:
            quiet = 0
        best_rinf = min(best_rinf, rinf)
    return v, opts.max_iters, False, "max_iters reached", history, worst_change, off_branch


def _report(inst, v, iters, converged, message, history, worst, off_branch, mode,
            opts, branch=None) -> SolveReport:
    r = pointwise_residual(inst, v)
    rinf = float(np.max(np.abs(r)))
    rl2 = math.sqrt(_mu_dot(inst, r, r))
    cls = nehari_classify(inst, v) if inst.lam > 0 else None
    checks = verify_solution(inst, v, grad_tol=opts.grad_tol, branch=branch, seed=opts.seed)
    converged = converged and rinf <= opts.grad_tol and bool(np.all(v > 0))
    log.info("%s: converged=%s iters=%d residual=%.3e", mode, converged, iters, rinf)
    return SolveReport(v.copy(), j_lambda(inst, v), rinf, rl2, cls, iters, checks, converged,
                       mode=mode, lam=inst.lam, message=message, energy_history=history,
                       max_energy_change=worst, off_branch_iterates=off_branch)


def default_init(inst: ProblemInstance) -> np.ndarray:
    return np.ones(inst.n)


def minimize_on_branch(inst: ProblemInstance, branch: NehariClass, init=None,
                       opts: SolverOptions | None = None) -> SolveReport:
    """Minimise J over D+ or D- for 0 < lam < Lambda*."""
    opts = opts or SolverOptions()
    if branch not in (NehariClass.PLUS, NehariClass.MINUS):
        raise InvalidParameterError("branch must be PLUS or MINUS")
    if not 0 < inst.lam < inst.lambda_star:
        raise NotInRangeError(f"lambda={inst.lam} outside (0, Lambda*={inst.lambda_star})")
    u0 = default_init(inst) if init is None else as_function(inst.graph, init)
    if np.any(u0 < 0) or not np.any(u0 > 0):
        raise InvalidParameterError("initial guess must be nonnegative and not identically zero")
    v = project_to_nehari(inst, u0, branch)
    out = _descend(inst, v, opts, lambda w: project_to_nehari(inst, w, branch), branch)
    return _report(inst, *out, mode=f"branch-{branch.value.lower()}", opts=opts, branch=branch)


def minimize_global_negative(inst: ProblemInstance, init=None,
                             opts: SolverOptions | None = None) -> SolveReport:
    """Unconstrained minimisation of J for lam < 0 (J is convex on u > 0 there)."""
    opts = opts or SolverOptions()
    if not inst.lam < 0:
        raise NotInRangeError(f"this solver needs lambda < 0, got {inst.lam}")
    v = default_init(inst) if init is None else as_function(inst.graph, init).copy()
    if not np.all(v > 0):
        raise NonPositiveFunctionError("initial guess must be strictly positive")
    out = _descend(inst, v, opts, lambda w: w, None)
    return _report(inst, *out, mode="negative", opts=opts)


def verify_solution(inst: ProblemInstance, u, grad_tol: float = 1e-8,
                    branch: NehariClass | None = None, seed: int = 0,
                    n_probes: int = 100) -> list[Check]:
    """A-posteriori checks of a candidate positive solution.

    For lam > 0 the branch is taken from the Nehari classification unless
    given; the norm gaps and energy sign are those expected on that branch.
    For lam < 0 the monotonicity pairing against random positive functions is
    probed as well.
    """
    g, e = inst.graph, inst.exps
    u = as_function(g, u)
    if not np.all(u > 0):
        raise NonPositiveFunctionError("verify_solution needs a strictly positive function")
    rng = np.random.default_rng(seed)
    r = pointwise_residual(inst, u)
    J = j_lambda(inst, u)
    checks = [
        Check("residual_inf", float(np.max(np.abs(r))), grad_tol, "<="),
        Check("min_value", float(u.min()), 0.0, ">"),
    ]
    probe = rng.uniform(0.1, 1.0, g.n) * float(np.max(u))
    for phi_name, phi in (("u", u), ("probe", probe)):
        for c in operator_bounds(inst, u, phi):
            checks.append(Check(f"{c.name}[{phi_name}]", c.lhs, c.rhs, c.relation))

    if inst.lam > 0:
        fib = Fiber.of(inst, u)
        checks.append(Check("nehari_phi", abs(fib.value(1.0)), 1e-9 * fib.scale, "<="))
        cls = branch or nehari_classify(inst, u)
        consts = constants(inst) if inst.lam < inst.lambda_star else None
        norm_a = sobolev_norm(g, u, inst.fields.a, e.p)
        norm_l = lp_norm(g, u, e.alpha + 1)
        if cls is NehariClass.PLUS:
            checks.append(Check("nehari_phi_prime", fib.derivative(1.0), 0.0, ">"))
            checks.append(Check("energy", J, 0.0, "<"))
            if consts is not None:
                checks += [Check("norm_Wa<X0", norm_a, consts.X0, "<"),
                           Check("X0<X", consts.X0, consts.X_lambda, "<"),
                           Check("norm_alpha+1<S0", norm_l, consts.S0, "<"),
                           Check("S0<S", consts.S0, consts.S_lambda, "<")]
        elif cls is NehariClass.MINUS:
            checks.append(Check("nehari_phi_prime", fib.derivative(1.0), 0.0, "<"))
            if consts is not None:
                checks += [Check("norm_Wa>X", norm_a, consts.X_lambda, ">"),
                           Check("norm_alpha+1>S", norm_l, consts.S_lambda, ">")]
    elif inst.lam < 0:
        checks.append(Check("energy", J, 0.0, "<"))
        scale = float(np.max(u))
        pairings = [monotonicity_pairing(inst, u, rng.uniform(0.05, 2.0, g.n) * scale)
                    for _ in range(n_probes)]
        checks.append(Check("monotonicity_min", min(pairings), 0.0, ">="))
    return checks
