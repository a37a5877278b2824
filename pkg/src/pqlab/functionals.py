"""Discrete energies: gradient terms, masses, the coupling F and their gradients.

Gradient energies of piecewise-linear functions are evaluated exactly
(slopes are constant per element); mass terms and the coupling use 2-point
Gauss quadrature per element, which keeps the discrete functionals smooth
for non-integer exponents.  The total energy is

    Phi_sigma(u, v) = P_lambda(u)/p + Q_mu(v)/q - F(u, v),

whose critical points satisfy the two coupled Euler-Lagrange equations with
the weight appearing with a plus sign in both right-hand sides.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .domain import GridFunction, Mesh, ProblemSpec

__all__ = [
    "ParameterPair",
    "FunctionalValues",
    "dirichlet_energy",
    "lr_mass",
    "P",
    "Q",
    "F",
    "F_parts",
    "energy",
    "grad_energy",
    "rayleigh",
    "Assembly",
    "assembly",
]

# 2-point Gauss nodes on the reference element [0, 1] and weight per node.
_GAUSS_XI = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])


@dataclass(frozen=True)
class ParameterPair:
    """The spectral parameter pair sigma = (lam, mu)."""

    lam: float
    mu: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.lam) and np.isfinite(self.mu)):
            raise ValueError("parameters must be finite")

    def __le__(self, other: "ParameterPair") -> bool:
        return self.lam <= other.lam and self.mu <= other.mu


@dataclass(frozen=True)
class FunctionalValues:
    """Component values of the energy at one pair: P, Q, F and Phi."""

    P: float
    Q: float
    F: float
    Phi: float


class Assembly:
    """Precomputed mesh/weight data for fast array-level evaluation.

    Works on padded nodal vectors (length n+1, boundary entries zero).
    Shared by the functional API and the optimizers.
    """

    def __init__(self, mesh: Mesh, weight=None):
        self.mesh = mesh
        self.n = mesh.n
        self.h = mesh.h
        self.xi = _GAUSS_XI
        self.w_gauss = 0.5 * self.h
        # Gauss point coordinates per element, shape (n, 2)
        left = np.linspace(0.0, 1.0 - self.h, self.n)
        self.x_gauss = left[:, None] + self.h * self.xi[None, :]
        if weight is not None:
            self.f_elem = weight(self.x_gauss[:, 0])  # constant per element
        else:
            self.f_elem = None

    # -- evaluation at Gauss points -------------------------------------

    def at_gauss(self, padded: np.ndarray) -> np.ndarray:
        """Values of the piecewise-linear function at the Gauss points, (n, 2)."""
        return padded[:-1, None] * (1.0 - self.xi[None, :]) + padded[1:, None] * self.xi[None, :]

    def slopes(self, padded: np.ndarray) -> np.ndarray:
        return np.diff(padded) / self.h

    # -- functionals -----------------------------------------------------
    # The *_g variants take precomputed Gauss-point arrays so objective
    # closures can share one at_gauss evaluation per component.

    def dirichlet(self, padded: np.ndarray, r: float) -> float:
        s = self.slopes(padded)
        return float(self.h * np.sum(np.abs(s) ** r))

    def mass_g(self, g: np.ndarray, r: float) -> float:
        return float(self.w_gauss * np.sum(np.abs(g) ** r))

    def mass(self, padded: np.ndarray, r: float) -> float:
        return self.mass_g(self.at_gauss(padded), r)

    def coupling_g(self, ug: np.ndarray, vg: np.ndarray, alpha: float, beta: float) -> float:
        integrand = self.f_elem[:, None] * np.abs(ug) ** alpha * np.abs(vg) ** beta
        return float(self.w_gauss * np.sum(integrand))

    def coupling(self, u_pad: np.ndarray, v_pad: np.ndarray, alpha: float, beta: float) -> float:
        return self.coupling_g(self.at_gauss(u_pad), self.at_gauss(v_pad), alpha, beta)

    def coupling_parts(self, u_pad, v_pad, alpha, beta) -> tuple[float, float]:
        """Positive and negative contributions (both reported nonnegative)."""
        ug = self.at_gauss(u_pad)
        vg = self.at_gauss(v_pad)
        integrand = self.f_elem[:, None] * np.abs(ug) ** alpha * np.abs(vg) ** beta
        pos = self.w_gauss * np.sum(integrand[integrand > 0.0])
        neg = -self.w_gauss * np.sum(integrand[integrand < 0.0])
        return float(pos), float(neg)

    # -- gradients (with respect to interior nodal values) ---------------

    def _scatter(self, per_gauss: np.ndarray) -> np.ndarray:
        """Accumulate per-Gauss-point integrand derivatives into nodal slots."""
        grad = np.zeros(self.n + 1)
        grad[:-1] += per_gauss @ (1.0 - self.xi)
        grad[1:] += per_gauss @ self.xi
        return grad[1:-1]

    def grad_dirichlet(self, padded: np.ndarray, r: float) -> np.ndarray:
        s = self.slopes(padded)
        ge = r * np.abs(s) ** (r - 1.0) * np.sign(s)
        grad = np.zeros(self.n + 1)
        grad[:-1] -= ge
        grad[1:] += ge
        return grad[1:-1]

    def grad_mass_g(self, g: np.ndarray, r: float) -> np.ndarray:
        mg = self.w_gauss * r * np.abs(g) ** (r - 1.0) * np.sign(g)
        return self._scatter(mg)

    def grad_mass(self, padded: np.ndarray, r: float) -> np.ndarray:
        return self.grad_mass_g(self.at_gauss(padded), r)

    def grad_coupling_u_g(self, ug, vg, alpha, beta) -> np.ndarray:
        gu = (
            self.w_gauss
            * self.f_elem[:, None]
            * alpha
            * np.abs(ug) ** (alpha - 1.0)
            * np.sign(ug)
            * np.abs(vg) ** beta
        )
        return self._scatter(gu)

    def grad_coupling_u(self, u_pad, v_pad, alpha, beta) -> np.ndarray:
        return self.grad_coupling_u_g(self.at_gauss(u_pad), self.at_gauss(v_pad), alpha, beta)

    def grad_coupling_v_g(self, ug, vg, alpha, beta) -> np.ndarray:
        gv = (
            self.w_gauss
            * self.f_elem[:, None]
            * beta
            * np.abs(ug) ** alpha
            * np.abs(vg) ** (beta - 1.0)
            * np.sign(vg)
        )
        return self._scatter(gv)

    def grad_coupling_v(self, u_pad, v_pad, alpha, beta) -> np.ndarray:
        return self.grad_coupling_v_g(self.at_gauss(u_pad), self.at_gauss(v_pad), alpha, beta)


@lru_cache(maxsize=64)
def _assembly_cached(mesh: Mesh, weight) -> Assembly:
    return Assembly(mesh, weight)


def assembly(spec: ProblemSpec) -> Assembly:
    """Assembly for a problem's mesh and weight (cached per instance data)."""
    return _assembly_cached(spec.mesh, spec.weight)


def mesh_assembly(mesh: Mesh) -> Assembly:
    """Weight-free assembly (gradient energies and masses only)."""
    return _assembly_cached(mesh, None)


# ---------------------------------------------------------------------------
# GridFunction-level API
# ---------------------------------------------------------------------------


def dirichlet_energy(u: GridFunction, r: float) -> float:
    """Integral of |u'|^r, exact for piecewise-linear u."""
    if r <= 1.0:
        raise ValueError("exponent must exceed 1")
    return mesh_assembly(u.mesh).dirichlet(u.padded, r)


def lr_mass(u: GridFunction, r: float) -> float:
    """Integral of |u|^r by 2-point Gauss quadrature per element."""
    if r <= 1.0:
        raise ValueError("exponent must exceed 1")
    return mesh_assembly(u.mesh).mass(u.padded, r)


def P(u: GridFunction, lam: float, spec: ProblemSpec) -> float:
    """P_lambda(u) = int |u'|^p - lambda int |u|^p."""
    a = mesh_assembly(u.mesh)
    return a.dirichlet(u.padded, spec.p) - lam * a.mass(u.padded, spec.p)


def Q(v: GridFunction, mu: float, spec: ProblemSpec) -> float:
    """Q_mu(v) = int |v'|^q - mu int |v|^q."""
    a = mesh_assembly(v.mesh)
    return a.dirichlet(v.padded, spec.q) - mu * a.mass(v.padded, spec.q)


def F(u: GridFunction, v: GridFunction, spec: ProblemSpec) -> float:
    """Coupling term int f |u|^alpha |v|^beta (sign-indefinite)."""
    return assembly(spec).coupling(u.padded, v.padded, spec.alpha, spec.beta)


def F_parts(u: GridFunction, v: GridFunction, spec: ProblemSpec) -> tuple[float, float]:
    """Nonnegative sizes of the positive and negative contributions to F."""
    return assembly(spec).coupling_parts(u.padded, v.padded, spec.alpha, spec.beta)


def energy(u: GridFunction, v: GridFunction, sigma: ParameterPair, spec: ProblemSpec) -> FunctionalValues:
    """Energy components and Phi = P/p + Q/q - F at (u, v)."""
    p_val = P(u, sigma.lam, spec)
    q_val = Q(v, sigma.mu, spec)
    f_val = F(u, v, spec)
    phi = p_val / spec.p + q_val / spec.q - f_val
    return FunctionalValues(P=p_val, Q=q_val, F=f_val, Phi=phi)


def grad_energy(
    u: GridFunction, v: GridFunction, sigma: ParameterPair, spec: ProblemSpec
) -> tuple[GridFunction, GridFunction]:
    """Nodal gradient of Phi_sigma; entry i of each component is dPhi/d(node i)."""
    gu, gv = grad_energy_arrays(u.padded, v.padded, sigma.lam, sigma.mu, spec)
    return GridFunction(u.mesh, gu), GridFunction(v.mesh, gv)


def grad_energy_arrays(
    u_pad: np.ndarray, v_pad: np.ndarray, lam: float, mu: float, spec: ProblemSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Array-level gradient of Phi_sigma on padded nodal vectors."""
    a = assembly(spec)
    gu = (
        a.grad_dirichlet(u_pad, spec.p) / spec.p
        - (lam / spec.p) * a.grad_mass(u_pad, spec.p)
        - a.grad_coupling_u(u_pad, v_pad, spec.alpha, spec.beta)
    )
    gv = (
        a.grad_dirichlet(v_pad, spec.q) / spec.q
        - (mu / spec.q) * a.grad_mass(v_pad, spec.q)
        - a.grad_coupling_v(u_pad, v_pad, spec.alpha, spec.beta)
    )
    return gu, gv


def rayleigh(u: GridFunction, r: float) -> float:
    """Rayleigh quotient int|u'|^r / int|u|^r; undefined for u = 0."""
    a = mesh_assembly(u.mesh)
    num = a.dirichlet(u.padded, r)
    den = a.mass(u.padded, r)
    if den == 0.0:
        raise ValueError("rayleigh quotient of the zero function")
    return num / den
