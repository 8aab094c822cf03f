"""Derivative-free scalar root finding on (0, inf) for the fibering map."""

from __future__ import annotations

import math
from typing import Callable


def bracket_down(func: Callable[[float], float], start: float, want_positive: bool,
                 max_halvings: int = 2000) -> float:
    """Halve ``start`` until ``func`` has the wanted sign; returns that point."""
    t = start
    for _ in range(max_halvings):
        v = func(t)
        if (v > 0) == want_positive and v != 0:
            return t
        t *= 0.5
        if t == 0.0:
            break
    raise ArithmeticError("could not bracket root towards 0")


def bracket_up(func: Callable[[float], float], start: float, want_positive: bool,
               max_doublings: int = 2000) -> float:
    t = start
    for _ in range(max_doublings):
        v = func(t)
        if (v > 0) == want_positive and v != 0:
            return t
        t *= 2.0
        if math.isinf(t):
            break
    raise ArithmeticError("could not bracket root towards infinity")


def bisect(func: Callable[[float], float], lo: float, hi: float, rtol: float = 0.0,
           max_iter: int = 4000) -> float:
    """Bisection on a sign change in [lo, hi] with 0 < lo < hi.

    Wide brackets are split geometrically, narrow ones arithmetically. With
    ``rtol=0`` the loop runs until the bracket cannot shrink any further. The
    end point with the smaller ``|func|`` is returned.
    """
    flo, fhi = func(lo), func(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ArithmeticError(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        if hi > 4.0 * lo:
            mid = math.sqrt(lo) * math.sqrt(hi)
        else:
            mid = lo + 0.5 * (hi - lo)
        if mid <= lo or mid >= hi:
            break
        fm = func(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
        if rtol > 0 and hi - lo <= rtol * hi:
            break
    return lo if abs(flo) <= abs(fhi) else hi
