"""Lebesgue and Sobolev norms on a weighted graph, plus the embedding bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GraphValidationError, InvalidParameterError
from .graph import WeightedGraph, as_function, gamma


@dataclass(frozen=True)
class Exponents:
    """Exponents (p, q, gamma, alpha) with 0 < gamma < 1 < q <= p < alpha + 1."""

    p: float
    q: float
    gamma: float
    alpha: float

    def __post_init__(self):
        p, q, gam, alpha = self.p, self.q, self.gamma, self.alpha
        if not all(math.isfinite(v) for v in (p, q, gam, alpha)):
            raise InvalidParameterError("exponents must be finite")
        if not (0 < gam < 1 < q <= p < alpha + 1):
            raise InvalidParameterError(
                f"need 0 < gamma < 1 < q <= p < alpha + 1, got p={p}, q={q}, gamma={gam}, alpha={alpha}")

    @property
    def theta_p(self) -> float:
        """Integrability exponent p / (p - 1 + gamma) required of f."""
        return self.p / (self.p - 1 + self.gamma)

    @property
    def theta_q(self) -> float:
        return self.q / (self.q - 1 + self.gamma)


@dataclass(frozen=True, eq=False)
class CoefficientFields:
    """Coefficient functions a, b, f, g of the equation, one value per vertex."""

    a: np.ndarray
    b: np.ndarray
    f: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        for name in ("a", "b", "f", "g"):
            arr = np.array(getattr(self, name), dtype=np.float64, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def violations(self) -> list[str]:
        out = []
        n = self.a.shape[0]
        for name in ("a", "b", "f", "g"):
            arr = getattr(self, name)
            if arr.ndim != 1 or arr.shape[0] != n:
                out.append(f"{name} has shape {arr.shape}, expected ({n},)")
            elif not np.all(np.isfinite(arr)):
                out.append(f"{name} has non-finite values")
        if out:
            return out
        if np.any(self.a <= 0):
            out.append("a must be positive")
        if np.any(self.b <= 0):
            out.append("b must be positive")
        if np.any(self.f <= 0):
            out.append("f must be positive")
        if np.any(self.g < 0):
            out.append("g must be nonnegative")
        elif not np.any(self.g > 0):
            out.append("g must not vanish identically")
        return out

    def check(self, graph: WeightedGraph) -> "CoefficientFields":
        problems = self.violations()
        if not problems and self.a.shape[0] != graph.n:
            problems.append(f"coefficients sized {self.a.shape[0]}, graph has {graph.n} vertices")
        if problems:
            raise GraphValidationError("; ".join(problems), problems)
        return self

    @cached_property
    def a0(self) -> float:
        return float(self.a.min())

    @cached_property
    def b0(self) -> float:
        return float(self.b.min())

    @classmethod
    def constant(cls, n: int, a=1.0, b=1.0, f=1.0, g=1.0) -> "CoefficientFields":
        return cls(np.full(n, a), np.full(n, b), np.full(n, f), np.full(n, g))


@dataclass(frozen=True)
class Check:
    """One inequality ``lhs <relation> rhs`` with its raw sides."""

    name: str
    lhs: float
    rhs: float
    relation: str = "<="

    @property
    def slack(self) -> float:
        """Positive when the inequality holds with room to spare."""
        if self.relation in ("<=", "<"):
            return self.rhs - self.lhs
        return self.lhs - self.rhs

    @property
    def scale(self) -> float:
        return max(abs(self.lhs), abs(self.rhs), 1.0)

    def holds(self, rtol: float = 0.0) -> bool:
        tol = rtol * self.scale
        if self.relation in ("<", ">"):
            return self.slack > tol
        return self.slack >= -tol

    def to_dict(self, rtol: float = 0.0) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs,
                "relation": self.relation, "ok": self.holds(rtol)}


def lp_norm(g: WeightedGraph, psi, theta: float) -> float:
    """(sum mu |psi|^theta)^(1/theta) for theta >= 1."""
    if not theta >= 1:
        raise InvalidParameterError(f"L^theta norm needs theta >= 1, got {theta}")
    psi = as_function(g, psi)
    if theta == 1:
        return math.fsum((g.measure * np.abs(psi)).tolist())
    top = float(np.max(np.abs(psi)))
    if top == 0.0:
        return 0.0
    # factor out the maximum so large theta neither underflows nor overflows
    return top * math.fsum((g.measure * (np.abs(psi) / top) ** theta).tolist()) ** (1.0 / theta)


def linf_norm(psi) -> float:
    psi = np.asarray(psi, dtype=np.float64)
    return float(np.max(np.abs(psi))) if psi.size else 0.0


def grad_norm_power(g: WeightedGraph, psi, s: float) -> np.ndarray:
    """|grad psi|^s at every vertex, computed as Gamma(psi)^(s/2)."""
    return gamma(g, psi, psi) ** (s / 2.0)


def sobolev_power(g: WeightedGraph, psi, weight, s: float) -> float:
    """int (|grad psi|^s + weight |psi|^s) dmu, i.e. the s-th power of the norm."""
    if not s > 1:
        raise InvalidParameterError(f"Sobolev exponent must exceed 1, got {s}")
    psi = as_function(g, psi)
    weight = as_function(g, weight)
    grad_part = g.measure * grad_norm_power(g, psi, s)
    mass_part = g.measure * weight * np.abs(psi) ** s
    # one correctly rounded sum, so dropping the gradient part can only decrease it
    return math.fsum(grad_part.tolist() + mass_part.tolist())


def sobolev_norm(g: WeightedGraph, psi, weight, s: float) -> float:
    return sobolev_power(g, psi, weight, s) ** (1.0 / s)


def w_norm(g: WeightedGraph, psi, fields: CoefficientFields, exps: Exponents) -> float:
    return sobolev_norm(g, psi, fields.a, exps.p) + sobolev_norm(g, psi, fields.b, exps.q)


def embedding_checks(g: WeightedGraph, psi, fields: CoefficientFields, exps: Exponents,
                     theta: float) -> list[Check]:
    """Both sides of the L^inf, L^theta and singular-term embedding bounds.

    ``theta`` must be at least p; smaller values are refused because the bound
    is not claimed there.
    """
    p, q, gam = exps.p, exps.q, exps.gamma
    if theta < p:
        raise InvalidParameterError(f"L^theta embedding only holds for theta >= p = {p}, got {theta}")
    psi = as_function(g, psi)
    mu0, a0, b0 = g.mu0, fields.a0, fields.b0
    na = sobolev_norm(g, psi, fields.a, p)
    nb = sobolev_norm(g, psi, fields.b, q)
    sup = linf_norm(psi)
    lt = lp_norm(g, psi, theta)
    sing = math.fsum((g.measure * fields.f * np.abs(psi) ** (1 - gam)).tolist())
    fp = lp_norm(g, fields.f, exps.theta_p)
    fq = lp_norm(g, fields.f, exps.theta_q)
    return [
        Check("linf_a", sup, (a0 * mu0) ** (-1 / p) * na),
        Check("linf_b", sup, (b0 * mu0) ** (-1 / q) * nb),
        Check("ltheta_a", lt, mu0 ** ((p - theta) / (p * theta)) * a0 ** (-1 / p) * na),
        Check("ltheta_b", lt, mu0 ** ((q - theta) / (q * theta)) * b0 ** (-1 / q) * nb),
        Check("singular_a", sing, a0 ** (-(1 - gam) / p) * fp * na ** (1 - gam)),
        Check("singular_b", sing, b0 ** (-(1 - gam) / q) * fq * nb ** (1 - gam)),
    ]


def power_sum_bound(x, y, p: float, q: float) -> Check:
    """|x|^p + |y|^q >= (|x| + |y|)^min(p,q) / max(2^(q-1), 2^(p-1)) - 1."""
    nx = float(np.linalg.norm(np.atleast_1d(x)))
    ny = float(np.linalg.norm(np.atleast_1d(y)))
    lhs = nx ** p + ny ** q
    rhs = (nx + ny) ** min(p, q) / max(2.0 ** (q - 1), 2.0 ** (p - 1)) - 1.0
    return Check("power_sum", lhs, rhs, ">=")
