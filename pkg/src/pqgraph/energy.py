"""Energy functional, residuals, fibering maps and the threshold constants.

The problem is

    -Delta_p u - Delta_q u + a u^(p-1) + b u^(q-1) = f u^(-gamma) + lam g u^alpha,  u > 0

on a finite weighted graph, with energy

    J(u) = A/p + B/q - F/(1-gamma) - lam G/(alpha+1)

where A = ||u||^p_{W_a^{1,p}}, B = ||u||^q_{W_b^{1,q}}, F = int f |u|^(1-gamma)
and G = int g |u|^(alpha+1).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from . import roots
from .errors import (DegenerateDirectionError, FiberClassificationError, InvalidParameterError,
                     NoStationaryError, NonPositiveFunctionError)
from .graph import (WeightedGraph, as_function, edge_differences, gamma, grad_norm, grad_power,
                    s_laplacian)
from .spaces import Check, CoefficientFields, Exponents, linf_norm, lp_norm, sobolev_norm, sobolev_power

TANGENT_RTOL = 1e-10
MANIFOLD_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    graph: WeightedGraph
    fields: CoefficientFields
    exps: Exponents
    lam: float

    def __post_init__(self):
        self.fields.check(self.graph)
        if not math.isfinite(self.lam):
            raise InvalidParameterError("lambda must be finite")

    @property
    def n(self) -> int:
        return self.graph.n

    @cached_property
    def a0(self) -> float:
        return self.fields.a0

    @cached_property
    def b0(self) -> float:
        return self.fields.b0

    @cached_property
    def mu0(self) -> float:
        return self.graph.mu0

    @cached_property
    def g_inf(self) -> float:
        return linf_norm(self.fields.g)

    @cached_property
    def f_norm_p(self) -> float:
        """||f|| in L^(p/(p-1+gamma))."""
        return lp_norm(self.graph, self.fields.f, self.exps.theta_p)

    @cached_property
    def f_norm_q(self) -> float:
        return lp_norm(self.graph, self.fields.f, self.exps.theta_q)

    def cached_scalars(self) -> dict:
        return {"a0": self.a0, "b0": self.b0, "mu0": self.mu0, "g_inf": self.g_inf,
                "f_norm_p": self.f_norm_p, "f_norm_q": self.f_norm_q}

    def with_lambda(self, lam: float) -> "ProblemInstance":
        return replace(self, lam=float(lam))

    def with_exponents(self, **changes) -> "ProblemInstance":
        return replace(self, exps=replace(self.exps, **changes))

    @cached_property
    def lambda_star(self) -> float:
        e = self.exps
        return lambda_star(e.p, e.gamma, e.alpha, self.a0, self.mu0, self.g_inf, self.f_norm_p)


def _positive(inst: ProblemInstance, u) -> np.ndarray:
    u = as_function(inst.graph, u)
    if not np.all(u > 0):
        raise NonPositiveFunctionError("u must be strictly positive at every vertex")
    return u


# -- energy and its derivatives -------------------------------------------------

def energy_terms(inst: ProblemInstance, u) -> tuple[float, float, float, float]:
    """The four integrals (A, B, F, G) the energy and the fibering map are built from."""
    g, fl, e = inst.graph, inst.fields, inst.exps
    u = as_function(g, u)
    au = np.abs(u)
    A = sobolev_power(g, u, fl.a, e.p)
    B = sobolev_power(g, u, fl.b, e.q)
    F = math.fsum((g.measure * fl.f * au ** (1 - e.gamma)).tolist())
    G = math.fsum((g.measure * fl.g * au ** (e.alpha + 1)).tolist())
    return A, B, F, G


def j_lambda(inst: ProblemInstance, u) -> float:
    e = inst.exps
    A, B, F, G = energy_terms(inst, u)
    return math.fsum([A / e.p, B / e.q, -F / (1 - e.gamma), -inst.lam * G / (e.alpha + 1)])


def pointwise_residual(inst: ProblemInstance, u) -> np.ndarray:
    """Left minus right side of the equation at every vertex (u must be > 0)."""
    g, fl, e = inst.graph, inst.fields, inst.exps
    u = _positive(inst, u)
    return (-s_laplacian(g, u, e.p) - s_laplacian(g, u, e.q)
            + fl.a * u ** (e.p - 1) + fl.b * u ** (e.q - 1)
            - fl.f * u ** (-e.gamma) - inst.lam * fl.g * u ** e.alpha)


def weak_residual(inst: ProblemInstance, u, phi) -> float:
    """Weak form of the equation tested against ``phi``."""
    g, fl, e = inst.graph, inst.fields, inst.exps
    u = _positive(inst, u)
    phi = as_function(g, phi)
    gn = grad_norm(g, u)
    gup = gamma(g, u, phi)
    dens = (grad_power(gn, e.p) * gup + fl.a * u ** (e.p - 1) * phi
            + grad_power(gn, e.q) * gup + fl.b * u ** (e.q - 1) * phi
            - fl.f * u ** (-e.gamma) * phi - inst.lam * fl.g * u ** e.alpha * phi)
    return math.fsum((g.measure * dens).tolist())


def energy_gradient(inst: ProblemInstance, u) -> np.ndarray:
    """Partial derivatives of J with respect to the vertex values."""
    return inst.graph.measure * pointwise_residual(inst, u)


def _pow_change(x: np.ndarray, dx: np.ndarray, e: float) -> np.ndarray:
    """(x + dx)^e - x^e for x >= 0, x + dx >= 0, without cancellation."""
    out = np.empty_like(x)
    pos = x > 0
    with np.errstate(divide="ignore"):
        xp = x[pos]
        out[pos] = xp ** e * np.expm1(e * np.log1p(dx[pos] / xp))
    out[~pos] = np.maximum(dx[~pos], 0.0) ** e
    return out


def energy_change(inst: ProblemInstance, u, w) -> float:
    """J(w) - J(u) for nonnegative u, w, accurate even when w is very close to u.

    Forming J(w) and J(u) separately loses everything below roughly
    1e-16 * |J|; this works with the increment directly.
    """
    g, fl, e = inst.graph, inst.fields, inst.exps
    u = as_function(g, u)
    w = as_function(g, w)
    if np.any(u < 0) or np.any(w < 0):
        raise NonPositiveFunctionError("energy_change needs nonnegative arguments")
    d = w - u
    du = edge_differences(g, u)
    dd = edge_differences(g, d)
    gam_u = gamma(g, u, u)
    dgam = np.bincount(g.src, weights=g.weights * (dd * (2.0 * du + dd)), minlength=g.n) / (2.0 * g.measure)
    # Gamma(w) >= 0 exactly; clip rounding so log1p stays finite
    dgam = np.maximum(dgam, -gam_u)
    dens = ((_pow_change(gam_u, dgam, e.p / 2) + fl.a * _pow_change(u, d, e.p)) / e.p
            + (_pow_change(gam_u, dgam, e.q / 2) + fl.b * _pow_change(u, d, e.q)) / e.q
            - fl.f * _pow_change(u, d, 1 - e.gamma) / (1 - e.gamma)
            - inst.lam * fl.g * _pow_change(u, d, e.alpha + 1) / (e.alpha + 1))
    return math.fsum((g.measure * dens).tolist())


# -- fibering map -----------------------------------------------------------------

class FiberClass(str, enum.Enum):
    TWO_ROOTS = "TwoRoots"
    TANGENT = "Tangent"
    NO_ROOT = "NoRoot"


class NehariClass(str, enum.Enum):
    PLUS = "Plus"
    ZERO = "Zero"
    MINUS = "Minus"
    NOT_ON_MANIFOLD = "NotOnManifold"


@dataclass(frozen=True)
class Fiber:
    """Fibering map of one direction u, evaluated from the cached integrals."""

    A: float
    B: float
    F: float
    G: float
    exps: Exponents
    lam: float

    @classmethod
    def of(cls, inst: ProblemInstance, u) -> "Fiber":
        u = as_function(inst.graph, u)
        if np.any(u < 0):
            raise InvalidParameterError("fibering map needs a nonnegative direction")
        if not np.any(u != 0):
            raise DegenerateDirectionError("direction u is identically zero")
        return cls(*energy_terms(inst, u), exps=inst.exps, lam=inst.lam)

    @property
    def scale(self) -> float:
        return self.A + self.B + self.F

    def value(self, t: float) -> float:
        """phi_u(t) = t^gamma d/dt J(t u)."""
        e = self.exps
        return (t ** (e.p - 1 + e.gamma) * self.A + t ** (e.q - 1 + e.gamma) * self.B
                - self.F - self.lam * t ** (e.alpha + e.gamma) * self.G)

    def derivative(self, t: float) -> float:
        e = self.exps
        return ((e.p - 1 + e.gamma) * t ** (e.p - 2 + e.gamma) * self.A
                + (e.q - 1 + e.gamma) * t ** (e.q - 2 + e.gamma) * self.B
                - (e.alpha + e.gamma) * self.lam * t ** (e.alpha + e.gamma - 1) * self.G)

    def energy(self, t: float) -> float:
        """J(t u)."""
        e = self.exps
        return (t ** e.p * self.A / e.p + t ** e.q * self.B / e.q
                - t ** (1 - e.gamma) * self.F / (1 - e.gamma)
                - self.lam * t ** (e.alpha + 1) * self.G / (e.alpha + 1))

    def stationary_gap(self, t: float) -> float:
        """M(t) - (alpha+gamma) lam G; same sign as phi'_u(t), strictly decreasing in t."""
        e = self.exps
        M = ((e.p - 1 + e.gamma) * t ** (e.p - 1 - e.alpha) * self.A
             + (e.q - 1 + e.gamma) * t ** (e.q - 1 - e.alpha) * self.B)
        return M - (e.alpha + e.gamma) * self.lam * self.G

    def stationary_point(self) -> float:
        if not (self.lam > 0 and self.G > 0):
            raise NoStationaryError("phi' has no zero: need lam > 0 and int g u^(alpha+1) > 0")
        h = self.stationary_gap
        if h(1.0) > 0:
            lo = 1.0
            hi = roots.bracket_up(h, 2.0, want_positive=False)
            lo = hi / 2.0
        else:
            hi = 1.0
            lo = roots.bracket_down(h, 0.5, want_positive=True)
            hi = lo * 2.0
        return roots.bisect(h, lo, hi)


def fiber_value(inst: ProblemInstance, u, t: float) -> float:
    if not t > 0:
        raise InvalidParameterError("t must be positive")
    return Fiber.of(inst, u).value(t)


def fiber_derivative(inst: ProblemInstance, u, t: float) -> float:
    if not t > 0:
        raise InvalidParameterError("t must be positive")
    return Fiber.of(inst, u).derivative(t)


@dataclass(frozen=True)
class FiberAnalysis:
    t_tilde: float
    phi_at_t_tilde: float
    t1: float | None
    t2: float | None
    classification: FiberClass
    fiber: Fiber

    def to_dict(self) -> dict:
        return {"t_tilde": self.t_tilde, "phi_at_t_tilde": self.phi_at_t_tilde,
                "t1": self.t1, "t2": self.t2, "classification": self.classification.value,
                "A": self.fiber.A, "B": self.fiber.B, "F": self.fiber.F, "G": self.fiber.G}


def analyze_fiber(inst: ProblemInstance, u) -> FiberAnalysis:
    """Stationary point, roots and root structure of the fibering map along u (lam > 0)."""
    if not inst.lam > 0:
        raise InvalidParameterError("fiber analysis is for lam > 0")
    fib = Fiber.of(inst, u)
    t_tilde = fib.stationary_point()
    peak = fib.value(t_tilde)
    if abs(peak) <= TANGENT_RTOL * fib.scale:
        return FiberAnalysis(t_tilde, peak, t_tilde, t_tilde, FiberClass.TANGENT, fib)
    if peak < 0:
        return FiberAnalysis(t_tilde, peak, None, None, FiberClass.NO_ROOT, fib)
    lo = roots.bracket_down(fib.value, 0.5 * t_tilde, want_positive=False)
    t1 = roots.bisect(fib.value, lo, t_tilde)
    hi = roots.bracket_up(fib.value, 2.0 * t_tilde, want_positive=False)
    t2 = roots.bisect(fib.value, t_tilde, hi)
    return FiberAnalysis(t_tilde, peak, t1, t2, FiberClass.TWO_ROOTS, fib)


def nehari_classify(inst: ProblemInstance, v) -> NehariClass:
    v = as_function(inst.graph, v)
    if not np.any(v != 0):
        return NehariClass.ZERO
    fib = Fiber.of(inst, v)
    tol = MANIFOLD_RTOL * fib.scale
    if abs(fib.value(1.0)) > tol:
        return NehariClass.NOT_ON_MANIFOLD
    e = inst.exps
    # equals phi'_v(1)
    s = ((e.p - 1 + e.gamma) * fib.A + (e.q - 1 + e.gamma) * fib.B
         - (e.alpha + e.gamma) * inst.lam * fib.G)
    if abs(s) <= tol:
        return NehariClass.ZERO
    return NehariClass.PLUS if s > 0 else NehariClass.MINUS


# -- threshold constants ------------------------------------------------------------

def lambda_star(p, gam, alpha, a0, mu0, g_inf, f_norm) -> float:
    r = p - 1 + gam
    m = alpha + 1 - p
    k = alpha + gam
    return ((r / k) ** (k / r) * (m / r) ** (m / r) / g_inf
            * mu0 ** (m / p) * a0 ** (k / r) * (1.0 / f_norm) ** (m / r))


@dataclass(frozen=True)
class ConstantsReport:
    X_lambda: float
    X0: float
    S_lambda: float
    S0: float
    Lambda_star: float
    lam: float

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "Lambda_star": self.Lambda_star, "X_lambda": self.X_lambda,
                "X0": self.X0, "S_lambda": self.S_lambda, "S0": self.S0}


def threshold_constants(p, gam, alpha, a0, mu0, g_inf, f_norm, lam) -> ConstantsReport:
    """The five closed forms, from scalars only (f_norm is ||f|| in L^(p/(p-1+gamma)))."""
    if not lam > 0:
        raise InvalidParameterError("constants are defined for lam > 0")
    r = p - 1 + gam
    m = alpha + 1 - p
    k = alpha + gam
    X = (r / (lam * k * g_inf * mu0 ** ((p - 1 - alpha) / p) * a0 ** (-(alpha + 1) / p))) ** (1 / m)
    X0 = (k / m) ** (1 / r) * a0 ** (-(1 - gam) / (p * r)) * f_norm ** (1 / r)
    S = ((r / (lam * k)) ** (1 / m) * (1 / mu0) ** (-1 / (alpha + 1))
         * a0 ** (1 / m) * (1 / g_inf) ** (1 / m))
    S0 = ((k / m) ** (1 / r) * (1 / mu0) ** (m / (p * (alpha + 1)))
          * a0 ** (-1 / r) * f_norm ** (1 / r))
    Ls = lambda_star(p, gam, alpha, a0, mu0, g_inf, f_norm)
    return ConstantsReport(X, X0, S, S0, Ls, lam)


def constants(inst: ProblemInstance) -> ConstantsReport:
    e = inst.exps
    return threshold_constants(e.p, e.gamma, e.alpha, inst.a0, inst.mu0, inst.g_inf,
                               inst.f_norm_p, inst.lam)


# -- bounds used along minimising sequences ------------------------------------------

def operator_bounds(inst: ProblemInstance, u, phi) -> list[Check]:
    """|pairing| <= norm bounds for the p-, q- and g-parts of the weak form (u >= 0)."""
    g, fl, e = inst.graph, inst.fields, inst.exps
    u = as_function(g, u)
    phi = as_function(g, phi)
    if np.any(u < 0):
        raise NonPositiveFunctionError("bounds are stated for nonnegative u")
    gn = grad_norm(g, u)
    gup = gamma(g, u, phi)
    I = math.fsum((g.measure * (grad_power(gn, e.p) * gup + fl.a * u ** (e.p - 1) * phi)).tolist())
    II = math.fsum((g.measure * (grad_power(gn, e.q) * gup + fl.b * u ** (e.q - 1) * phi)).tolist())
    III = math.fsum((g.measure * fl.g * u ** e.alpha * phi).tolist())
    na_u, na_phi = sobolev_norm(g, u, fl.a, e.p), sobolev_norm(g, phi, fl.a, e.p)
    nb_u, nb_phi = sobolev_norm(g, u, fl.b, e.q), sobolev_norm(g, phi, fl.b, e.q)
    iii_rhs = (inst.g_inf * linf_norm(u) ** (e.alpha - e.p + 1)
               * lp_norm(g, u, e.p) ** (e.p - 1) * lp_norm(g, phi, e.p))
    return [
        Check("pairing_p", abs(I), na_u ** (e.p - 1) * na_phi),
        Check("pairing_q", abs(II), nb_u ** (e.q - 1) * nb_phi),
        Check("pairing_g", abs(III), iii_rhs),
    ]


def monotonicity_pairing(inst: ProblemInstance, u, w) -> float:
    """<E'(u) - E'(w), u - w> through the weak form; nonnegative when lam < 0."""
    d = as_function(inst.graph, u) - as_function(inst.graph, w)
    return math.fsum([weak_residual(inst, u, d), -weak_residual(inst, w, d)])
