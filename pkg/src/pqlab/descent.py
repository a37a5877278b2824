"""First-order descent machinery shared by the eigen and minimization solvers.

Descent directions are preconditioned with the inverse of the linear
Dirichlet stiffness matrix (an H1 Riesz map), which keeps the iteration
count essentially mesh-independent; steps use Armijo backtracking with an
adaptive initial trial step.  Iterates live on the product of unit spheres
of the gradient norms, i.e. they are renormalized so the p- and q-Dirichlet
energies equal one after every step.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .domain import Mesh
from .errors import ConvergenceError
from .functionals import Assembly

__all__ = ["h1_solve", "normalize_dirichlet", "descend_pair", "PairState"]


@lru_cache(maxsize=64)
def _h1_cholesky(n: int):
    # Stiffness of the 1-D Laplacian on interior nodes, upper banded form.
    h = 1.0 / n
    ab = np.zeros((2, n - 1))
    ab[0, 1:] = -1.0 / h
    ab[1, :] = 2.0 / h
    return cholesky_banded(ab, lower=False)


def h1_solve(mesh: Mesh, g: np.ndarray) -> np.ndarray:
    """Apply the inverse linear stiffness matrix to an interior nodal vector."""
    return cho_solve_banded((_h1_cholesky(mesh.n), False), g)


def normalize_dirichlet(asm: Assembly, padded: np.ndarray, r: float) -> np.ndarray:
    """Rescale so the r-Dirichlet energy equals one."""
    a = asm.dirichlet(padded, r)
    if a == 0.0:
        raise ValueError("cannot normalize the zero function")
    return padded / a ** (1.0 / r)


@dataclass
class PairState:
    """Outcome of a pair descent run."""

    u_pad: np.ndarray
    v_pad: np.ndarray
    value: float
    iters: int
    grad_sup: float
    converged: bool


def descend_pair(
    asm: Assembly,
    mesh: Mesh,
    u_pad: np.ndarray,
    v_pad: np.ndarray,
    p: float,
    q: float,
    value_fn,
    grads_fn,
    *,
    max_iters: int = 2000,
    gtol: float = 1e-9,
    ftol: float = 0.0,
    step0: float = 1.0,
    min_step: float = 1e-14,
    require_finite_start: bool = True,
) -> PairState:
    """Armijo descent for a pair functional on the normalized product sphere.

    ``value_fn(u_pad, v_pad) -> float`` may return ``inf`` outside the
    feasible region; ``grads_fn(u_pad, v_pad) -> (val, gu, gv)`` returns the
    value and the interior nodal gradients.  Gradients are projected onto
    the tangent space of the normalization constraints so the backtracking
    model stays consistent for objectives that are not scaling-invariant.
    """
    u = normalize_dirichlet(asm, u_pad, p)
    v = normalize_dirichlet(asm, v_pad, q)
    val, gu, gv = grads_fn(u, v)
    if require_finite_start and not np.isfinite(val):
        raise ConvergenceError("descent started outside the feasible region")

    step = step0
    grad_sup = np.inf
    for it in range(1, max_iters + 1):
        # Tangential projection: remove the component that renormalization
        # would cancel (a no-op for scaling-invariant objectives).
        su = asm.grad_dirichlet(u, p)
        sv = asm.grad_dirichlet(v, q)
        gu = gu - (np.dot(gu, u[1:-1]) / p) * su
        gv = gv - (np.dot(gv, v[1:-1]) / q) * sv
        grad_sup = max(np.max(np.abs(gu)), np.max(np.abs(gv)))
        if grad_sup <= gtol:
            return PairState(u, v, val, it, grad_sup, True)

        du = h1_solve(mesh, gu)
        dv = h1_solve(mesh, gv)
        slope = float(np.dot(gu, du) + np.dot(gv, dv))
        if slope <= 0.0:
            return PairState(u, v, val, it, grad_sup, True)

        t = step
        accepted = False
        while t >= min_step:
            u_t = u.copy()
            v_t = v.copy()
            u_t[1:-1] -= t * du
            v_t[1:-1] -= t * dv
            try:
                u_t = normalize_dirichlet(asm, u_t, p)
                v_t = normalize_dirichlet(asm, v_t, q)
            except ValueError:
                t *= 0.5
                continue
            val_t = value_fn(u_t, v_t)
            if np.isfinite(val_t) and val_t <= val - 1e-4 * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            return PairState(u, v, val, it, grad_sup, True)

        decrease = val - val_t
        u, v = u_t, v_t
        val, gu, gv = grads_fn(u, v)
        step = min(4.0 * t, 1e6)
        if ftol > 0.0 and decrease < ftol:
            return PairState(u, v, val, it, grad_sup, True)

    return PairState(u, v, val, max_iters, grad_sup, False)
