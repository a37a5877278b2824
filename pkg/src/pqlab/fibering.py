"""Nehari decomposition, fibering scales and the reduced functional.

For pairs with P < 0, Q < 0 and F < 0, the fiber map
(t, s) -> Phi(t u, s v) has a unique stationary point (t, s) with both
scales positive; it satisfies

    t^p P = alpha t^alpha s^beta F,      s^q Q = beta t^alpha s^beta F,

and the reduced functional J(u, v) = Phi(t u, s v) admits the closed forms

    J = -C |P|^(alpha/(p d)) |Q|^(beta/(q d)) / |F|^(1/d),
    J = -(d/alpha) t^p |P|  =  -(d/beta) s^q |Q|,

with C = d * alpha^(-alpha/(p d)) * beta^(-beta/(q d)) and
d = alpha/p + beta/q - 1.  All scale formulas are evaluated in log space.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .domain import GridFunction, ProblemSpec
from .errors import DegenerateFiberError
from .functionals import F, P, Q, ParameterPair, energy

__all__ = [
    "DEGENERACY_GUARD",
    "FiberingScales",
    "NehariClass",
    "ThetaReport",
    "ConsistencyReport",
    "theta_membership",
    "fibering_scales",
    "reduced_functional",
    "reduced_constant",
    "nehari_classify",
    "fibering_consistency",
]

# Below this absolute size of |P|, |Q| or |F| the closed forms are refused.
DEGENERACY_GUARD = 1e-14


@dataclass(frozen=True)
class FiberingScales:
    t: float
    s: float

    def __post_init__(self) -> None:
        if not (self.t > 0.0 and math.isfinite(self.t) and self.s > 0.0 and math.isfinite(self.s)):
            raise ValueError(f"fibering scales must be positive finite, got t={self.t}, s={self.s}")


class NehariClass(enum.Enum):
    NPlus = "N+"
    NZero = "N0"
    NMinus = "N-"
    NotApplicable = "mixed"


@dataclass(frozen=True)
class ThetaReport:
    """Sign triple of (P, Q, F) and constraint-set membership."""

    sign_P: int
    sign_Q: int
    sign_F: int
    in_theta: bool
    P: float
    Q: float
    F: float


@dataclass(frozen=True)
class ConsistencyReport:
    """Agreement of the four evaluations of J plus the fiber stationarity residual."""

    stationarity_residual: float
    j_direct: float
    j_closed_form: float
    j2_value: float
    j3_value: float


def theta_membership(
    u: GridFunction, v: GridFunction, sigma: ParameterPair, spec: ProblemSpec
) -> ThetaReport:
    """Sign triple of (P, Q, F); membership needs all three strictly negative.

    The signs are invariant under positive rescaling of u and v, so the
    check applies equally to normalized and raw pairs.
    """
    if not np.any(u.values) or not np.any(v.values):
        raise ValueError("theta membership is undefined for the zero function")
    p_val = P(u, sigma.lam, spec)
    q_val = Q(v, sigma.mu, spec)
    f_val = F(u, v, spec)
    return ThetaReport(
        sign_P=int(np.sign(p_val)),
        sign_Q=int(np.sign(q_val)),
        sign_F=int(np.sign(f_val)),
        in_theta=(p_val < 0.0 and q_val < 0.0 and f_val < 0.0),
        P=p_val,
        Q=q_val,
        F=f_val,
    )


def _guard(p_val: float, q_val: float, f_val: float) -> None:
    if not (p_val < 0.0 and q_val < 0.0 and f_val < 0.0):
        raise ValueError(
            f"pair is outside the constraint set: P={p_val:.3e}, Q={q_val:.3e}, F={f_val:.3e}"
        )
    if min(abs(p_val), abs(q_val), abs(f_val)) < DEGENERACY_GUARD:
        raise DegenerateFiberError(
            f"|P|={abs(p_val):.3e}, |Q|={abs(q_val):.3e}, |F|={abs(f_val):.3e}: "
            f"below the {DEGENERACY_GUARD:g} guard"
        )


def scales_from_values(p_val: float, q_val: float, f_val: float, spec: ProblemSpec) -> FiberingScales:
    """Fibering scales from the raw values of (P, Q, F), all strictly negative."""
    _guard(p_val, q_val, f_val)
    a, b, p, q, d = spec.alpha, spec.beta, spec.p, spec.q, spec.d
    lp, lq, lf = math.log(-p_val), math.log(-q_val), math.log(-f_val)
    pqd = p * q * d
    log_t = ((b - q) * math.log(a) - b * math.log(b) + (q - b) * lp + b * lq - q * lf) / pqd
    log_s = ((a - p) * math.log(b) - a * math.log(a) + a * lp + (p - a) * lq - p * lf) / pqd
    return FiberingScales(t=math.exp(log_t), s=math.exp(log_s))


def fibering_scales(
    u: GridFunction, v: GridFunction, sigma: ParameterPair, spec: ProblemSpec
) -> FiberingScales:
    """The unique positive scales placing (t u, s v) on the Nehari constraint."""
    return scales_from_values(
        P(u, sigma.lam, spec), Q(v, sigma.mu, spec), F(u, v, spec), spec
    )


def reduced_constant(spec: ProblemSpec) -> float:
    """The constant C in the closed form of the reduced functional."""
    a, b, p, q, d = spec.alpha, spec.beta, spec.p, spec.q, spec.d
    return d * math.exp(-(a / (p * d)) * math.log(a) - (b / (q * d)) * math.log(b))


def reduced_from_values(p_val: float, q_val: float, f_val: float, spec: ProblemSpec) -> float:
    """Closed form of J from the raw values of (P, Q, F), all strictly negative."""
    _guard(p_val, q_val, f_val)
    a, b, p, q, d = spec.alpha, spec.beta, spec.p, spec.q, spec.d
    log_mag = (
        math.log(reduced_constant(spec))
        + (a / (p * d)) * math.log(-p_val)
        + (b / (q * d)) * math.log(-q_val)
        - (1.0 / d) * math.log(-f_val)
    )
    return -math.exp(log_mag)


def reduced_functional(
    u: GridFunction, v: GridFunction, sigma: ParameterPair, spec: ProblemSpec
) -> float:
    """J(u, v) = Phi(t u, s v) at the fibering scales, via the closed form."""
    return reduced_from_values(
        P(u, sigma.lam, spec), Q(v, sigma.mu, spec), F(u, v, spec), spec
    )


def nehari_classify(
    u: GridFunction,
    v: GridFunction,
    sigma: ParameterPair,
    spec: ProblemSpec,
    tol: float = 1e-6,
) -> NehariClass:
    """Classify by the sign triple, with a relative band of width tol around zero.

    Each quantity is compared against its natural size (energy plus
    parameter-weighted mass for P and Q; the split positive/negative parts
    for F), since discrete minimizers land near, never on, the zero set.
    """
    from .functionals import F_parts, dirichlet_energy, lr_mass

    p_val = P(u, sigma.lam, spec)
    q_val = Q(v, sigma.mu, spec)
    f_val = F(u, v, spec)
    scale_p = dirichlet_energy(u, spec.p) + abs(sigma.lam) * lr_mass(u, spec.p)
    scale_q = dirichlet_energy(v, spec.q) + abs(sigma.mu) * lr_mass(v, spec.q)
    f_pos, f_neg = F_parts(u, v, spec)
    scale_f = f_pos + f_neg
    small = (
        abs(p_val) <= tol * scale_p
        and abs(q_val) <= tol * scale_q
        and abs(f_val) <= tol * max(scale_f, 1e-300)
    )
    if small:
        return NehariClass.NZero
    if p_val < 0.0 and q_val < 0.0 and f_val < 0.0:
        return NehariClass.NPlus
    if p_val > 0.0 and q_val > 0.0 and f_val > 0.0:
        return NehariClass.NMinus
    return NehariClass.NotApplicable


def fibering_consistency(
    u: GridFunction, v: GridFunction, sigma: ParameterPair, spec: ProblemSpec
) -> ConsistencyReport:
    """Cross-check the four J evaluations and the fiber stationarity.

    j_direct evaluates Phi at the scaled pair; j_closed_form uses the
    |P|,|Q|,|F| formula; j2 and j3 use the single-term identities with
    constants d/alpha and d/beta.  The stationarity residual is a central
    difference of (t, s) -> Phi(t u, s v) at the computed scales, scaled
    relative to |J|.
    """
    p_val = P(u, sigma.lam, spec)
    q_val = Q(v, sigma.mu, spec)
    f_val = F(u, v, spec)
    scales = scales_from_values(p_val, q_val, f_val, spec)
    t, s = scales.t, scales.s
    d = spec.d

    def phi_scaled(tt: float, ss: float) -> float:
        su = GridFunction(u.mesh, tt * u.values)
        sv = GridFunction(v.mesh, ss * v.values)
        return energy(su, sv, sigma, spec).Phi

    j_direct = phi_scaled(t, s)
    j_closed = reduced_from_values(p_val, q_val, f_val, spec)
    j2 = -(d / spec.alpha) * t**spec.p * abs(p_val)
    j3 = -(d / spec.beta) * s**spec.q * abs(q_val)

    dt, ds = 1e-6 * t, 1e-6 * s
    dphi_dt = (phi_scaled(t + dt, s) - phi_scaled(t - dt, s)) / (2.0 * dt)
    dphi_ds = (phi_scaled(t, s + ds) - phi_scaled(t, s - ds)) / (2.0 * ds)
    residual = max(abs(dphi_dt) * t, abs(dphi_ds) * s) / abs(j_direct)

    return ConsistencyReport(
        stationarity_residual=residual,
        j_direct=j_direct,
        j_closed_form=j_closed,
        j2_value=j2,
        j3_value=j3,
    )
