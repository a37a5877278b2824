"""Independent ODE shooting reference for the 1-D r-Laplacian eigenvalue.

This module deliberately shares nothing with the mesh-based solvers: the
eigenvalue problem -(|u'|^{r-2}u')' = lam |u|^{r-2}u on (0,1) with zero
boundary values is integrated as a first-order system in (u, w) with
w = |u'|^{r-2}u', shooting from u(0)=0, u'(0)=1 and locating the first
return of u to zero.  The first eigenvalue is the lam whose first zero
lands at x = 1.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

__all__ = ["first_zero", "first_eigenvalue_shooting"]


def _rhs(r: float, lam: float):
    inv = 1.0 / (r - 1.0)

    def rhs(x, y):
        u, w = y
        return [
            np.sign(w) * np.abs(w) ** inv,
            -lam * np.sign(u) * np.abs(u) ** (r - 1.0),
        ]

    return rhs


def first_zero(lam: float, r: float, x_max: float = 16.0) -> float:
    """Location of the first falling zero of the solution shot from the origin."""
    if lam <= 0.0:
        raise ValueError("the first eigenvalue is positive; lam must be > 0")

    def falling_zero(x, y):
        return y[0] if x > 1e-9 else 1.0

    falling_zero.terminal = True
    falling_zero.direction = -1.0

    sol = solve_ivp(
        _rhs(r, lam),
        (0.0, x_max),
        [0.0, 1.0],
        events=falling_zero,
        rtol=1e-11,
        atol=1e-13,
        max_step=0.05,
    )
    if sol.t_events[0].size == 0:
        raise RuntimeError(f"no zero found up to x={x_max} for r={r}, lam={lam}")
    return float(sol.t_events[0][0])


def first_eigenvalue_shooting(r: float) -> float:
    """First Dirichlet eigenvalue on (0,1) by shooting and root finding.

    The zero location scales like lam^(-1/r), which supplies the bracket;
    the returned value is the root of first_zero(lam) = 1.
    """
    x1 = first_zero(1.0, r)
    lam_guess = x1**r
    lo, hi = 0.5 * lam_guess, 2.0 * lam_guess
    return float(brentq(lambda lam: first_zero(lam, r) - 1.0, lo, hi, xtol=1e-10, rtol=1e-12))
