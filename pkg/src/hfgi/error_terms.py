"""Leading-error multipliers of Hessian-free schemes, error norms and efficiency.

The additional multipliers gamma5 (order five) and zeta11..zeta13 (order
seven) are built by walking a symmetric scheme from its central exponential
outwards, one symmetric transformation at a time.  Two kinds of
transformation occur:

* momentum outermost, ``D(b,c) A(a) [...] A(a) D(b,c)``: the zeta12/zeta13
  updates use gamma5 *before* the transformation;
* drift outermost, ``A(a) D(b,c) [...] D(b,c) A(a)``: they use gamma5
  *after* it.

A scheme that does not close on a full pair is padded with a zero stage
(``B`` with ``b = 0`` or ``A`` with ``a = 0``), which leaves every
multiplier untouched.

The running sums ``nu`` and ``sigma`` are the total drift and kick weight of
the partially built scheme, including the transformation being added.  Only
the zeta values depend on that convention; gamma5 does not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .schemes import MP_DPS, Scheme, _mpf

__all__ = [
    "HfMultipliers",
    "hf_multipliers",
    "err_norm",
    "efficiency",
    "order3_terms_threestage",
]


@dataclass(frozen=True)
class HfMultipliers:
    gamma5: object
    zeta11: object
    zeta12: object
    zeta13: object
    nu_run: object
    sigma_run: object

    def as_floats(self) -> dict:
        return {k: float(getattr(self, k)) for k in
                ("gamma5", "zeta11", "zeta12", "zeta13", "nu_run", "sigma_run")}


def _coerce(scheme: Scheme):
    vals = [(s.kind, s.a, s.b, s.c) for s in scheme.stages]
    if any(isinstance(v, mpmath.mpf) for row in vals for v in row[1:]):
        vals = [(k, _mpf(a), _mpf(b), _mpf(c)) for k, a, b, c in vals]
        zero = mpmath.mpf(0)
    else:
        vals = [(k, Fraction(a), Fraction(b), Fraction(c)) for k, a, b, c in vals]
        zero = Fraction(0)
    return vals, zero


def hf_multipliers(scheme: Scheme) -> HfMultipliers:
    """gamma5, zeta11, zeta12, zeta13 of a symmetric scheme, in exact arithmetic.

    >>> from hfgi.schemes import get_scheme
    >>> hf_multipliers(get_scheme("BADAB")).gamma5
    Fraction(1, 1728)
    """
    stages, zero = _coerce(scheme)
    n = len(stages)
    if n % 2 == 0:
        raise ValueError("malformed scheme: even number of stages")
    m = n // 2
    kind, a_m, b_m, c_m = stages[m]

    with mpmath.workdps(MP_DPS):
        g5, z11, z12, z13 = zero, zero, zero, zero
        if kind == "A":
            nu, sigma = a_m, zero
            velocity_form = False
        else:
            nu, sigma = zero, b_m
            velocity_form = True
            if kind == "D":
                g5 = 2 * c_m**2 / b_m
                z11 = 4 * c_m**3 / (3 * b_m**2)

        outer = stages[:m][::-1]  # inner to outer
        if len(outer) % 2:
            pad = ("B", zero, zero, zero) if velocity_form else ("A", zero, zero, zero)
            outer.append(pad)
        for j in range(0, len(outer), 2):
            inner_st, outer_st = outer[j], outer[j + 1]
            if velocity_form:
                a, b, c = inner_st[1], outer_st[2], outer_st[3]
            else:
                a, b, c = outer_st[1], inner_st[2], inner_st[3]
            nu = nu + 2 * a
            sigma = sigma + 2 * b
            g_prev = g5
            if c != 0:
                g5 = g5 + 4 * c**2 / b
            g_use = g_prev if velocity_form else g5
            z12 = z12 + a**2 * g_use / 3
            z13 = z13 - a**2 * g_use / 6
            if c != 0:
                z11 = z11 + (8 * c**3 / b + 2 * sigma * nu * c**2) / (3 * b)
                z12 = z12 - 2 * nu**2 * c**2 / (3 * b)
                z13 = z13 + nu**2 * c**2 / (3 * b)
    return HfMultipliers(g5, z11, z12, z13, nu, sigma)


_WEIGHTS = {
    2: (1.0, 1.0),
    4: (1.0, 1.0, 1.0, 1.0, 0.25),
    6: (1.0,) * 10 + (1.0 / 8, 1.0 / 8, 7.0 / 24),
}


def err_norm(multipliers, order_p: int) -> float:
    """Weighted Euclidean norm of the leading multipliers of an order-p scheme.

    ``order_p = 2`` takes (alpha, beta); ``4`` takes (gamma1..gamma5) with
    gamma5 weighted 1/4; ``6`` takes (zeta1..zeta13) with zeta11, zeta12
    weighted 1/8 and zeta13 weighted 7/24.
    """
    if order_p not in _WEIGHTS:
        raise ValueError(f"order_p must be 2, 4 or 6, got {order_p}")
    w = _WEIGHTS[order_p]
    vals = list(multipliers.values()) if isinstance(multipliers, dict) else list(multipliers)
    if len(vals) != len(w) or any(v is None for v in vals):
        raise ValueError(f"order {order_p} needs {len(w)} multipliers, got {len(vals)}")
    with mpmath.workdps(MP_DPS):
        s = sum((_mpf(wi) * _mpf(v)) ** 2 for wi, v in zip(w, vals))
        return float(mpmath.sqrt(s))


def efficiency(n_f: int, order_p: int, err: float) -> float:
    """``1 / (n_f**p * err)``."""
    if n_f < 1:
        raise ValueError("n_f must be at least 1")
    if not err > 0:
        raise ValueError("err must be positive")
    return 1.0 / (n_f**order_p * err)


def order3_terms_threestage(scheme: Scheme):
    """(alpha, beta) of a three-stage scheme as exact values."""
    if scheme.n_stages != 3:
        raise ValueError("only three-stage schemes have closed-form alpha, beta here")
    c1 = scheme.stages[1].c if scheme.version == "position" else scheme.stages[0].c
    c1 = Fraction(c1)
    if scheme.version == "velocity":
        return Fraction(1, 12), Fraction(1, 24) + 2 * c1
    return Fraction(-1, 24), Fraction(-1, 12) + c1


def _isclose(x, y, tol):
    return math.isclose(float(x), float(y), rel_tol=tol, abs_tol=tol)
