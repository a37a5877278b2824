"""Extremal parameter, extremal-parameters curve, and parameter-plane regions.

The extremal parameter is the infimum of the larger normalized Rayleigh
quotient over pairs with nonnegative coupling; the curve is traced through
the two one-parameter families

    mu_ext(lam)  = inf { R_q(v) : P_lam(u) <= 0, F(u, v) >= 0 },
    lam_ext(mu)  = inf { R_p(u) : Q_mu(v) <= 0, F(u, v) >= 0 },

returned un-normalized so the ordinates are parameter values directly
(the extremal parameter itself stays normalized: lam* = sigma* lam1,
mu* = sigma* mu1).

All three quantities are infima of quotient caps subject to a sign
condition on the coupling, so they share one solver: bisection on the cap
of the monotone indicator

    M(c_u, c_v) = max { F(u, v) : R_p(u) <= c_u, R_q(v) <= c_v },

whose evaluations are multistart penalty-multiplier descents.  Every
"feasible" verdict is certified by an exactly-feasible pair with F >= 0,
so the upper end of each bracket is always backed by a witness; accepted
minimizers are finally projected onto their active constraints to machine
precision, giving curve samples with near-zero residuals.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, root

from .descent import descend_pair, h1_solve, normalize_dirichlet
from .domain import GridFunction, ProblemSpec
from .eigen import EigenPair
from .errors import ConvergenceError
from .functionals import Assembly, ParameterPair, assembly

__all__ = [
    "SigmaStarOptions",
    "CurveOptions",
    "SigmaStarResult",
    "CurveSample",
    "ExtremalCurve",
    "Region",
    "sigma_star",
    "mu_ext",
    "lambda_ext",
    "trace_curve",
    "classify_parameter",
    "interp_mu_ext",
    "interp_lambda_ext",
]


# ---------------------------------------------------------------------------
# Options and result types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SigmaStarOptions:
    seeds: int = 8
    master_seed: int = 0
    rounds: int = 6          # penalty/multiplier rounds per feasibility solve
    inner_iters: int = 150
    gtol: float = 1e-10
    f_tol: float = 1e-6      # |F| at the minimizer, relative to |F+| + |F-|
    gap_tol: float = 1e-4    # quotient gap, relative to sigma*
    rho0: float = 10.0
    bisect_rel_tol: float = 1e-5
    max_bisect: int = 60


@dataclass(frozen=True)
class CurveOptions:
    seeds: int = 4           # multistart width for cold feasibility solves
    master_seed: int = 0
    rounds: int = 5
    inner_iters: int = 120
    gtol: float = 1e-10
    rho0: float = 10.0
    bisect_rel_tol: float = 1e-5
    max_bisect: int = 50
    residual_tol: float = 1e-9   # constraint residual after final projection
    min_fraction: float = 0.02   # smallest (lam - lam1) fraction of the sampled range
    monotone_slack: float = 1e-6
    endpoint_tol: float = 1e-3


@dataclass(frozen=True)
class SigmaStarResult:
    """Extremal parameter with its minimizer and boundary diagnostics."""

    sigma_star: float
    lambda_star: float
    mu_star: float
    minimizer: tuple[GridFunction, GridFunction]
    f_residual: float
    quotient_gap: float
    seeds_used: int


@dataclass(frozen=True)
class CurveSample:
    """One point of the extremal curve with its minimizer and residuals.

    ``residual_P`` is the active quotient constraint at the minimizer:
    |P_lam(u)| on the mu branch, |Q_mu(v)| on the lambda branch.
    """

    lam: float
    mu: float
    minimizer: tuple[GridFunction, GridFunction]
    residual_P: float
    residual_F: float
    branch: str


@dataclass(frozen=True)
class ExtremalCurve:
    """Sampled curve: both branches, endpoints, and the eigenvalue origin."""

    mu_branch: tuple[CurveSample, ...]
    lambda_branch: tuple[CurveSample, ...]
    endpoints: tuple[float, float]
    lam1: float
    mu1: float
    sstar: SigmaStarResult


class Region(enum.Enum):
    FirstQuadrantBelowEigen = "below-eigenvalues"
    GammaMinus = "below-curve"
    OnGamma = "on-curve"
    GammaPlus = "above-curve"
    Indeterminate = "indeterminate"


# ---------------------------------------------------------------------------
# Shared numerical helpers
# ---------------------------------------------------------------------------


def _quotient(asm: Assembly, pad: np.ndarray, r: float) -> tuple[float, float, float]:
    a = asm.dirichlet(pad, r)
    b = asm.mass(pad, r)
    return a / b, a, b


def _quotient_grad(asm: Assembly, pad: np.ndarray, r: float) -> tuple[float, np.ndarray]:
    rq, _, b = _quotient(asm, pad, r)
    g = (asm.grad_dirichlet(pad, r) - rq * asm.grad_mass(pad, r)) / b
    return rq, g


def _al_value(g: float, eta: float, rho: float) -> float:
    """Augmented penalty for the inequality g <= 0 with multiplier eta."""
    t = eta + rho * g
    if t > 0.0:
        return (t * t - eta * eta) / (2.0 * rho)
    return -eta * eta / (2.0 * rho)


def _al_mult(g: float, eta: float, rho: float) -> float:
    return max(0.0, eta + rho * g)


def _smooth_field(rng: np.random.Generator, x: np.ndarray, modes: int = 6) -> np.ndarray:
    out = np.zeros_like(x)
    for k in range(2, modes + 2):
        out += rng.standard_normal() * np.sin(k * np.pi * x) / k
    return out


def _pad(mesh, interior: np.ndarray) -> np.ndarray:
    out = np.zeros(mesh.n + 1)
    out[1:-1] = interior
    return out


def _nonneg_band_pads(spec: ProblemSpec) -> list[np.ndarray]:
    """Bump profiles on the bands where the weight is positive or zero."""
    mesh = spec.mesh
    pads = []
    for sign in (1, 0):
        for lo, hi in spec.weight.bands(sign):
            pads.append(GridFunction.bump(mesh, lo, hi).padded)
    return pads


def _positive_band_pads(spec: ProblemSpec) -> list[np.ndarray]:
    return [GridFunction.bump(spec.mesh, lo, hi).padded for lo, hi in spec.weight.bands(1)]


# ---------------------------------------------------------------------------
# Exact feasibilization and boundary projection
# ---------------------------------------------------------------------------


def _contract_to_cap(asm: Assembly, pad: np.ndarray, eig_pad: np.ndarray, r: float, cap: float):
    """Mix toward the first eigenfunction until the quotient meets the cap."""
    quotient, _, _ = _quotient(asm, pad, r)
    if quotient <= cap:
        return pad

    def excess(tau: float) -> float:
        mix = (1.0 - tau) * pad + tau * eig_pad
        return _quotient(asm, mix, r)[0] - cap

    if excess(1.0) >= 0.0:
        return None
    tau = brentq(excess, 0.0, 1.0, xtol=1e-15, rtol=8.9e-16)
    mix = (1.0 - tau) * pad + tau * eig_pad
    return normalize_dirichlet(asm, mix, r)


def _project_active(
    asm: Assembly,
    w_pad: np.ndarray,
    z_pad: np.ndarray,
    r_w: float,
    par: float,
    a_w: float,
    a_z: float,
    tol: float,
):
    """Move w so both active constraints vanish: P_par(w) = 0 and F(w, z) = 0.

    Solves a 2x2 system along the steepest constraint directions in the H1
    metric.  Returns (w, |P|, |F|) scaled back to unit Dirichlet energy, or
    None when the solve fails or the residuals stay above tolerance.
    """
    mesh = asm.mesh
    s_p = asm.dirichlet(w_pad, r_w) + abs(par) * asm.mass(w_pad, r_w)
    f_pos, f_neg = asm.coupling_parts(w_pad, z_pad, a_w, a_z)
    s_f = f_pos + f_neg
    if s_f <= 0.0 or s_p <= 0.0:
        return None

    g_p = asm.grad_dirichlet(w_pad, r_w) - par * asm.grad_mass(w_pad, r_w)
    g_f = asm.grad_coupling_u(w_pad, z_pad, a_w, a_z)
    d1 = _pad(mesh, h1_solve(mesh, g_p))
    d2 = _pad(mesh, h1_solve(mesh, g_f))

    def residual(c):
        wp = w_pad + c[0] * d1 + c[1] * d2
        p_val = asm.dirichlet(wp, r_w) - par * asm.mass(wp, r_w)
        f_val = asm.coupling(wp, z_pad, a_w, a_z)
        return [p_val / s_p, f_val / s_f]

    sol = root(residual, [0.0, 0.0], method="hybr", options={"xtol": 1e-14})
    if not sol.success and np.max(np.abs(sol.fun)) > tol:
        return None
    w_new = w_pad + sol.x[0] * d1 + sol.x[1] * d2
    if asm.dirichlet(w_new, r_w) == 0.0:
        return None
    w_new = normalize_dirichlet(asm, w_new, r_w)
    p_res = abs(asm.dirichlet(w_new, r_w) - par * asm.mass(w_new, r_w))
    f_res = abs(asm.coupling(w_new, z_pad, a_w, a_z))
    if p_res > tol * s_p or f_res > tol * s_f:
        return None
    return w_new, p_res, f_res


def _zero_coupling_along_bump(
    asm: Assembly, u_pad: np.ndarray, v_pad: np.ndarray, a_w: float, a_z: float, spec: ProblemSpec
):
    """Move u along a positive-band bump until F(u, v) = 0 (bracketed root)."""
    pads = _positive_band_pads(spec)
    if not pads:
        return None
    levers = [
        abs(np.dot(asm.grad_coupling_u(u_pad, v_pad, a_w, a_z), d[1:-1])) for d in pads
    ]
    d = pads[int(np.argmax(levers))]

    def f_of(c: float) -> float:
        return asm.coupling(u_pad + c * d, v_pad, a_w, a_z)

    f0 = f_of(0.0)
    if f0 == 0.0:
        return u_pad
    # F grows along a positive-band bump; expand the bracket on the side
    # the sign of F demands.
    c = 1e-6 if f0 < 0.0 else -1e-6
    while f_of(c) * f0 > 0.0:
        c *= 4.0
        if abs(c) > 1e3:
            return None
    lo, hi = (0.0, c) if c > 0.0 else (c, 0.0)
    c_root = brentq(f_of, lo, hi, xtol=1e-15, rtol=8.9e-16)
    return u_pad + c_root * d


# ---------------------------------------------------------------------------
# The capped coupling maximization (shared feasibility engine)
# ---------------------------------------------------------------------------


def _cap_seeds(spec: ProblemSpec, eigenpairs, warm, master_seed: int, count: int):
    """Start pairs for the capped coupling maximization."""
    eig_p, eig_q = eigenpairs
    phi, psi = eig_p.fn.padded, eig_q.fn.padded
    x = spec.mesh.interior_nodes
    pads = _nonneg_band_pads(spec)
    seeds = []
    if warm is not None:
        seeds.append((warm[0].copy(), warm[1].copy()))
    seeds.append((phi.copy(), psi.copy()))
    k = 0
    while len(seeds) < count:
        rng = np.random.default_rng([master_seed, 3301, k])
        if pads and k % 2 == 0:
            u = phi + 0.8 * pads[k % len(pads)]
            v = psi + 0.8 * pads[(k // 2) % len(pads)]
        else:
            u = phi.copy()
            v = psi.copy()
            u[1:-1] *= 1.0 + 0.3 * _smooth_field(rng, x)
            v[1:-1] *= 1.0 + 0.3 * _smooth_field(rng, x)
        seeds.append((u, v))
        k += 1
    return seeds


def _descend_capped_coupling(
    asm, spec, u0, v0, cap_u, cap_v, s_f, phi, psi, rounds, inner_iters, gtol, rho0
):
    """Penalty-multiplier descent on -F with two quotient-cap constraints.

    After every round the iterate is contracted onto the caps and the sign
    of F is checked; the first certified pair (exactly feasible, F >= 0)
    short-circuits the remaining rounds, since the caller only needs a
    feasibility witness.  Returns (certified pair or None, best contracted
    F seen), the latter informing the caller's root update.
    """
    mesh = spec.mesh
    p, q, a_, b_ = spec.p, spec.q, spec.alpha, spec.beta
    u, v = u0, v0
    rho = rho0
    eta_u = eta_v = 0.0
    prev_viol = math.inf
    best_f = None

    for rnd in range(rounds):
        last = rnd == rounds - 1

        def value(up, vp, rho=rho, eta_u=eta_u, eta_v=eta_v):
            ug, vg = asm.at_gauss(up), asm.at_gauss(vp)
            g_u = (asm.dirichlet(up, p) / asm.mass_g(ug, p) - cap_u) / cap_u
            g_v = (asm.dirichlet(vp, q) / asm.mass_g(vg, q) - cap_v) / cap_v
            return (
                -asm.coupling_g(ug, vg, a_, b_) / s_f
                + _al_value(g_u, eta_u, rho)
                + _al_value(g_v, eta_v, rho)
            )

        def grads(up, vp, rho=rho, eta_u=eta_u, eta_v=eta_v):
            ug, vg = asm.at_gauss(up), asm.at_gauss(vp)
            bu, bv = asm.mass_g(ug, p), asm.mass_g(vg, q)
            ru = asm.dirichlet(up, p) / bu
            rv = asm.dirichlet(vp, q) / bv
            g_u = (ru - cap_u) / cap_u
            g_v = (rv - cap_v) / cap_v
            m_u = _al_mult(g_u, eta_u, rho)
            m_v = _al_mult(g_v, eta_v, rho)
            gu = -asm.grad_coupling_u_g(ug, vg, a_, b_) / s_f
            gv = -asm.grad_coupling_v_g(ug, vg, a_, b_) / s_f
            if m_u > 0.0:
                gu += (m_u / (cap_u * bu)) * (asm.grad_dirichlet(up, p) - ru * asm.grad_mass_g(ug, p))
            if m_v > 0.0:
                gv += (m_v / (cap_v * bv)) * (asm.grad_dirichlet(vp, q) - rv * asm.grad_mass_g(vg, q))
            val = (
                -asm.coupling_g(ug, vg, a_, b_) / s_f
                + _al_value(g_u, eta_u, rho)
                + _al_value(g_v, eta_v, rho)
            )
            return val, gu, gv

        state = descend_pair(
            asm, mesh, u, v, p, q, value, grads,
            max_iters=inner_iters,
            gtol=(gtol if last else 1e-8),
        )
        u, v = state.u_pad, state.v_pad

        u_c = _contract_to_cap(asm, u, phi, p, cap_u)
        v_c = _contract_to_cap(asm, v, psi, q, cap_v)
        if u_c is not None and v_c is not None:
            f_val = asm.coupling(u_c, v_c, a_, b_)
            if best_f is None or f_val > best_f:
                best_f = f_val
            if f_val >= 0.0:
                return (u_c, v_c), best_f

        ru, _, _ = _quotient(asm, u, p)
        rv, _, _ = _quotient(asm, v, q)
        g_u = (ru - cap_u) / cap_u
        g_v = (rv - cap_v) / cap_v
        eta_u = _al_mult(g_u, eta_u, rho)
        eta_v = _al_mult(g_v, eta_v, rho)
        viol = max(g_u, g_v, 0.0)
        if viol > 0.25 * prev_viol:
            rho *= 2.0
        prev_viol = max(viol, 1e-300)

    return None, best_f


def _max_coupling_under_caps(
    asm, spec, cap_u, cap_v, eigenpairs, warm, n_seeds,
    rounds, inner_iters, gtol, rho0, master_seed,
):
    """Maximize F under raw quotient caps.

    Returns (pair, best F): the pair is exactly feasible with F >= 0 when
    some start certifies feasibility, otherwise None; the F value is the
    best contracted coupling seen either way (None if nothing contracted).
    """
    a_, b_ = spec.alpha, spec.beta
    eig_p, eig_q = eigenpairs
    phi, psi = eig_p.fn.padded, eig_q.fn.padded
    f_pos0, f_neg0 = asm.coupling_parts(phi, psi, a_, b_)
    s_f = f_pos0 + f_neg0

    best_f = None
    for u0, v0 in _cap_seeds(spec, eigenpairs, warm, master_seed, n_seeds):
        try:
            certified, f_val = _descend_capped_coupling(
                asm, spec, u0, v0, cap_u, cap_v, s_f, phi, psi,
                rounds, inner_iters, gtol, rho0,
            )
        except (ConvergenceError, ValueError):
            continue
        if f_val is not None and (best_f is None or f_val > best_f):
            best_f = f_val
        if certified is not None:
            return certified, best_f
    return None, best_f


# ---------------------------------------------------------------------------
# The extremal parameter
# ---------------------------------------------------------------------------


def sigma_star(
    spec: ProblemSpec,
    eigenpairs: tuple[EigenPair, EigenPair],
    opts: SigmaStarOptions = SigmaStarOptions(),
) -> SigmaStarResult:
    """Minimize the larger normalized quotient subject to F(u, v) >= 0.

    When F(phi1, psi1) >= 0 the eigenpair itself is the minimizer and the
    extremal parameter is exactly one.  Otherwise sigma* is found by
    bisection on the cap sigma of the monotone indicator
    M(sigma lam1, sigma mu1); the high side of the bracket always carries
    a certified feasible pair.  The final pair is projected onto F = 0
    and its normalized quotients are reported; at the extremal parameter
    the two quotients agree, so their gap is a convergence diagnostic.
    """
    asm = assembly(spec)
    eig_p, eig_q = eigenpairs
    lam1, mu1 = eig_p.value, eig_q.value
    phi, psi = eig_p.fn.padded, eig_q.fn.padded
    a_, b_ = spec.alpha, spec.beta
    mesh = spec.mesh

    f_eigen = asm.coupling(phi, psi, a_, b_)
    if f_eigen >= 0.0:
        return SigmaStarResult(
            sigma_star=1.0,
            lambda_star=lam1,
            mu_star=mu1,
            minimizer=(eig_p.fn, eig_q.fn),
            f_residual=abs(f_eigen),
            quotient_gap=0.0,
            seeds_used=0,
        )

    # Bracket: a bump pair inside one positive band is feasible once the cap
    # reaches its larger normalized quotient.
    hi = math.inf
    hi_pair = None
    for d in _positive_band_pads(spec):
        du = normalize_dirichlet(asm, d, spec.p)
        dv = normalize_dirichlet(asm, d, spec.q)
        if asm.coupling(du, dv, a_, b_) <= 0.0:
            continue
        cap = max(_quotient(asm, du, spec.p)[0] / lam1, _quotient(asm, dv, spec.q)[0] / mu1)
        if cap < hi:
            hi, hi_pair = cap, (du, dv)
    if hi_pair is None:
        raise ConvergenceError("sigma_star: no positive band supplies a feasible pair")

    lo = 1.0
    best_pair = hi_pair
    warm = hi_pair
    m_lo = f_eigen
    m_hi = asm.coupling(hi_pair[0], hi_pair[1], a_, b_)
    for step in range(opts.max_bisect):
        if hi - lo <= opts.bisect_rel_tol * hi:
            break
        mid = _root_proposal(lo, hi, m_lo, m_hi)
        rounds, iters, n_seeds = _effort((hi - lo) / hi, step, opts.seeds, opts.rounds, opts.inner_iters)
        found, f_val = _max_coupling_under_caps(
            asm, spec, mid * lam1, mid * mu1, eigenpairs, warm,
            n_seeds=n_seeds, rounds=rounds, inner_iters=iters,
            gtol=opts.gtol, rho0=opts.rho0, master_seed=opts.master_seed,
        )
        if found is not None:
            hi, m_hi = mid, f_val
            best_pair = found
            warm = found
        else:
            lo, m_lo = mid, f_val

    u, v = best_pair
    u_proj = _zero_coupling_along_bump(asm, u, v, a_, b_, spec)
    if u_proj is not None:
        u = normalize_dirichlet(asm, u_proj, spec.p)
    na = _quotient(asm, u, spec.p)[0] / lam1
    nb = _quotient(asm, v, spec.q)[0] / mu1
    sig = max(na, nb)
    f_res = abs(asm.coupling(u, v, a_, b_))

    return SigmaStarResult(
        sigma_star=sig,
        lambda_star=sig * lam1,
        mu_star=sig * mu1,
        minimizer=(GridFunction(mesh, u[1:-1]), GridFunction(mesh, v[1:-1])),
        f_residual=f_res,
        quotient_gap=abs(na - nb),
        seeds_used=opts.seeds,
    )


# ---------------------------------------------------------------------------
# Curve samples
# ---------------------------------------------------------------------------


def _curve_ordinate(
    spec: ProblemSpec,
    eigenpairs: tuple[EigenPair, EigenPair],
    fixed_cap_u: float | None,
    fixed_cap_v: float | None,
    hi_init: float,
    hi_pair: tuple[np.ndarray, np.ndarray],
    lo_init: float,
    opts: CurveOptions,
):
    """Bisect the free quotient cap of M(c_u, c_v) with one cap held fixed.

    Exactly one of ``fixed_cap_u``/``fixed_cap_v`` must be given; the other
    side's cap is bisected downward from ``hi_init`` (which must carry the
    certified feasible ``hi_pair``).  Returns the certified pair at the
    final cap together with the cap value.
    """
    asm = assembly(spec)
    lo, hi = lo_init, hi_init
    best_pair = hi_pair
    warm = hi_pair
    m_lo = None
    m_hi = asm.coupling(hi_pair[0], hi_pair[1], spec.alpha, spec.beta)
    for step in range(opts.max_bisect):
        if hi - lo <= opts.bisect_rel_tol * hi:
            break
        mid = _root_proposal(lo, hi, m_lo, m_hi)
        cap_u = fixed_cap_u if fixed_cap_u is not None else mid
        cap_v = fixed_cap_v if fixed_cap_v is not None else mid
        rounds, iters, n_seeds = _effort((hi - lo) / hi, step, opts.seeds, opts.rounds, opts.inner_iters)
        found, f_val = _max_coupling_under_caps(
            asm, spec, cap_u, cap_v, eigenpairs, warm,
            n_seeds=n_seeds, rounds=rounds, inner_iters=iters,
            gtol=opts.gtol, rho0=opts.rho0, master_seed=opts.master_seed,
        )
        if found is not None:
            hi, m_hi = mid, f_val
            best_pair = found
            warm = found
        else:
            lo, m_lo = mid, f_val
    return hi, best_pair


def _root_proposal(lo: float, hi: float, m_lo: float | None, m_hi: float | None) -> float:
    """Next cap to test: secant through the bracketing indicator values when
    both are informative, clipped into the middle of the bracket; plain
    midpoint otherwise."""
    width = hi - lo
    if m_lo is not None and m_hi is not None and m_lo < 0.0 < m_hi:
        c = hi - m_hi * width / (m_hi - m_lo)
        return min(max(c, lo + 0.1 * width), hi - 0.1 * width)
    return lo + 0.5 * width


def _effort(width: float, step: int, seeds: int, rounds: int, inner_iters: int):
    """Solver effort per bisection step: light while the bracket is wide,
    full near the threshold where verdicts are delicate."""
    if width > 2e-2:
        return 3, 60, (seeds if step < 2 else 2)
    if width > 2e-3:
        return 3, 80, 1
    return rounds, inner_iters, 1


def _first_sample_bracket(asm, spec, eigenpairs, fix_u_side: bool, fixed_cap: float):
    """Certified feasible start for a branch: the fixed-side eigenfunction
    against the cheapest positive-band bump on the free side."""
    eig_p, eig_q = eigenpairs
    a_, b_ = spec.alpha, spec.beta
    best = None
    best_cap = math.inf
    for d in _positive_band_pads(spec):
        if fix_u_side:
            u = eig_p.fn.padded
            v = normalize_dirichlet(asm, d, spec.q)
            cap = _quotient(asm, v, spec.q)[0]
            pair = (u.copy(), v)
        else:
            u = normalize_dirichlet(asm, d, spec.p)
            v = eig_q.fn.padded
            cap = _quotient(asm, u, spec.p)[0]
            pair = (u, v.copy())
        if asm.coupling(pair[0], pair[1], a_, b_) > 0.0 and cap < best_cap:
            best, best_cap = pair, cap
    if best is None:
        raise ConvergenceError("no positive-band bump certifies the branch bracket")
    return best_cap, best


def mu_ext(
    lam: float,
    spec: ProblemSpec,
    eigenpairs: tuple[EigenPair, EigenPair],
    sstar: SigmaStarResult,
    opts: CurveOptions = CurveOptions(),
    warm: tuple[np.ndarray, np.ndarray] | None = None,
    lo_floor: float | None = None,
) -> CurveSample:
    """Curve ordinate mu_ext(lam) with its minimizer, for lam in (lam1, lam*].

    The ordinate is the bisected v-side quotient cap; the returned
    minimizer is projected so P_lam(u) and F(u, v) vanish to machine
    precision, which leaves the ordinate R_q(v) untouched.  ``lo_floor``
    optionally raises the lower end of the bisection bracket; any pair
    feasible here is feasible for the extremal parameter, so mu* is a
    valid floor for lam < lam*.
    """
    asm = assembly(spec)
    eig_p, eig_q = eigenpairs
    if not (eig_p.value < lam <= sstar.lambda_star * (1.0 + 1e-12)):
        raise ValueError(
            f"lam={lam} outside (lam1, lam*] = ({eig_p.value}, {sstar.lambda_star}]"
        )

    candidates: list[tuple[float, tuple[np.ndarray, np.ndarray]]] = []
    if warm is not None:
        candidates.append((_quotient(asm, warm[1], spec.q)[0], warm))
    su, sv = sstar.minimizer[0].padded, sstar.minimizer[1].padded
    f_pos, f_neg = asm.coupling_parts(su, sv, spec.alpha, spec.beta)
    near_feasible = asm.coupling(su, sv, spec.alpha, spec.beta) >= -1e-9 * (f_pos + f_neg)
    if near_feasible and _quotient(asm, su, spec.p)[0] <= lam * (1.0 + 1e-12):
        candidates.append((_quotient(asm, sv, spec.q)[0], (su, sv)))
    cap0, pair0 = _first_sample_bracket(asm, spec, eigenpairs, fix_u_side=True, fixed_cap=lam)
    candidates.append((cap0, pair0))
    hi_init, hi_pair = min(candidates, key=lambda c: c[0])

    ordinate_cap, (u, v) = _curve_ordinate(
        spec, eigenpairs, fixed_cap_u=lam, fixed_cap_v=None,
        hi_init=hi_init, hi_pair=hi_pair,
        lo_init=(lo_floor if lo_floor is not None else eig_q.value),
        opts=opts,
    )
    proj = _project_active(asm, u, v, spec.p, lam, spec.alpha, spec.beta, opts.residual_tol)
    if proj is None:
        raise ConvergenceError(f"mu_ext({lam}): minimizer failed the boundary projection")
    u, p_res, f_res = proj
    mesh = spec.mesh
    return CurveSample(
        lam=lam, mu=_quotient(asm, v, spec.q)[0],
        minimizer=(GridFunction(mesh, u[1:-1]), GridFunction(mesh, v[1:-1])),
        residual_P=p_res, residual_F=f_res, branch="mu",
    )


def lambda_ext(
    mu: float,
    spec: ProblemSpec,
    eigenpairs: tuple[EigenPair, EigenPair],
    sstar: SigmaStarResult,
    opts: CurveOptions = CurveOptions(),
    warm: tuple[np.ndarray, np.ndarray] | None = None,
    lo_floor: float | None = None,
) -> CurveSample:
    """Curve ordinate lam_ext(mu); mirror of mu_ext with the roles swapped."""
    asm = assembly(spec)
    eig_p, eig_q = eigenpairs
    if not (eig_q.value < mu <= sstar.mu_star * (1.0 + 1e-12)):
        raise ValueError(
            f"mu={mu} outside (mu1, mu*] = ({eig_q.value}, {sstar.mu_star}]"
        )

    candidates: list[tuple[float, tuple[np.ndarray, np.ndarray]]] = []
    if warm is not None:
        candidates.append((_quotient(asm, warm[0], spec.p)[0], warm))
    su, sv = sstar.minimizer[0].padded, sstar.minimizer[1].padded
    f_pos, f_neg = asm.coupling_parts(su, sv, spec.alpha, spec.beta)
    near_feasible = asm.coupling(su, sv, spec.alpha, spec.beta) >= -1e-9 * (f_pos + f_neg)
    if near_feasible and _quotient(asm, sv, spec.q)[0] <= mu * (1.0 + 1e-12):
        candidates.append((_quotient(asm, su, spec.p)[0], (su, sv)))
    cap0, pair0 = _first_sample_bracket(asm, spec, eigenpairs, fix_u_side=False, fixed_cap=mu)
    candidates.append((cap0, pair0))
    hi_init, hi_pair = min(candidates, key=lambda c: c[0])

    ordinate_cap, (u, v) = _curve_ordinate(
        spec, eigenpairs, fixed_cap_u=None, fixed_cap_v=mu,
        hi_init=hi_init, hi_pair=hi_pair,
        lo_init=(lo_floor if lo_floor is not None else eig_p.value),
        opts=opts,
    )
    # Mirror projection: v carries the active Q and F constraints.
    proj = _project_active(asm, v, u, spec.q, mu, spec.beta, spec.alpha, opts.residual_tol)
    if proj is None:
        raise ConvergenceError(f"lambda_ext({mu}): minimizer failed the boundary projection")
    v, q_res, f_res = proj
    mesh = spec.mesh
    return CurveSample(
        lam=_quotient(asm, u, spec.p)[0], mu=mu,
        minimizer=(GridFunction(mesh, u[1:-1]), GridFunction(mesh, v[1:-1])),
        residual_P=q_res, residual_F=f_res, branch="lambda",
    )


# ---------------------------------------------------------------------------
# Curve tracing and classification
# ---------------------------------------------------------------------------


def _geometric_grid(lo: float, hi: float, count: int, min_fraction: float) -> np.ndarray:
    """Ascending grid on (lo, hi], geometrically refined toward lo."""
    if count < 2:
        raise ValueError("need at least 2 samples per branch")
    ratio = min_fraction ** (1.0 / (count - 1))
    fractions = ratio ** np.arange(count - 1, -1, -1)
    return lo + (hi - lo) * fractions


def trace_curve(
    spec: ProblemSpec,
    n_samples: int,
    opts: CurveOptions = CurveOptions(),
    eigenpairs: tuple[EigenPair, EigenPair] | None = None,
    sstar: SigmaStarResult | None = None,
    sstar_opts: SigmaStarOptions = SigmaStarOptions(),
) -> ExtremalCurve:
    """Trace both branches of the extremal curve on geometric parameter grids.

    Branches run from the eigenvalue end toward the shared endpoint; each
    sample is warm-started from its predecessor, whose minimizer stays
    feasible as the parameter grows, so sampled ordinates are non-increasing
    by construction.  Monotonicity and the endpoint identities are verified
    before returning.
    """
    from .eigen import first_eigenpair

    if eigenpairs is None:
        eigenpairs = (first_eigenpair(spec.p, spec.mesh), first_eigenpair(spec.q, spec.mesh))
    eig_p, eig_q = eigenpairs
    if sstar is None:
        sstar = sigma_star(spec, eigenpairs, sstar_opts)
    if sstar.sigma_star <= 1.0 + 1e-9:
        raise ValueError(
            "the extremal curve degenerates to the eigenvalue corner when "
            "F(phi1, psi1) >= 0; tracing needs sigma* > 1"
        )

    lam1, mu1 = eig_p.value, eig_q.value
    lam_grid = _geometric_grid(lam1, sstar.lambda_star, n_samples, opts.min_fraction)
    mu_grid = _geometric_grid(mu1, sstar.mu_star, n_samples, opts.min_fraction)

    # Interior samples may use mu* (resp. lam*) as a bisection floor: any
    # pair feasible below the endpoint cap would also be feasible for the
    # extremal parameter.  The first and last samples run the full bracket
    # so the branch still validates sigma* independently.
    mu_branch: list[CurveSample] = []
    warm = None
    for k, lam in enumerate(lam_grid):
        floor = sstar.mu_star * (1.0 - 3.0 * opts.bisect_rel_tol) if 0 < k < len(lam_grid) - 1 else None
        sample = mu_ext(float(lam), spec, eigenpairs, sstar, opts, warm=warm, lo_floor=floor)
        warm = (sample.minimizer[0].padded, sample.minimizer[1].padded)
        mu_branch.append(sample)

    lambda_branch: list[CurveSample] = []
    warm = None
    for k, mu in enumerate(mu_grid):
        floor = sstar.lambda_star * (1.0 - 3.0 * opts.bisect_rel_tol) if 0 < k < len(mu_grid) - 1 else None
        sample = lambda_ext(float(mu), spec, eigenpairs, sstar, opts, warm=warm, lo_floor=floor)
        warm = (sample.minimizer[0].padded, sample.minimizer[1].padded)
        lambda_branch.append(sample)

    _check_branch([s.mu for s in mu_branch], "mu", opts.monotone_slack)
    _check_branch([s.lam for s in lambda_branch], "lambda", opts.monotone_slack)
    end_mu = mu_branch[-1].mu
    end_lam = lambda_branch[-1].lam
    if abs(end_mu - sstar.mu_star) > opts.endpoint_tol * sstar.mu_star:
        raise ConvergenceError(
            f"mu branch endpoint {end_mu} disagrees with mu* = {sstar.mu_star}"
        )
    if abs(end_lam - sstar.lambda_star) > opts.endpoint_tol * sstar.lambda_star:
        raise ConvergenceError(
            f"lambda branch endpoint {end_lam} disagrees with lam* = {sstar.lambda_star}"
        )

    return ExtremalCurve(
        mu_branch=tuple(mu_branch),
        lambda_branch=tuple(lambda_branch),
        endpoints=(sstar.lambda_star, sstar.mu_star),
        lam1=lam1,
        mu1=mu1,
        sstar=sstar,
    )


def _check_branch(ordinates: list[float], name: str, slack: float) -> None:
    arr = np.asarray(ordinates)
    rises = np.diff(arr) / np.maximum(arr[:-1], 1e-300)
    if np.any(rises > slack):
        raise ConvergenceError(f"{name} branch ordinates are not non-increasing")


def interp_mu_ext(curve: ExtremalCurve, lam: float) -> float | None:
    """Interpolated mu branch ordinate, None left of the sampled range."""
    lams = np.array([s.lam for s in curve.mu_branch])
    mus = np.array([s.mu for s in curve.mu_branch])
    if lam < lams[0]:
        return None
    return float(np.interp(lam, lams, mus))


def interp_lambda_ext(curve: ExtremalCurve, mu: float) -> float | None:
    """Interpolated lambda branch ordinate, None left of the sampled range."""
    mus = np.array([s.mu for s in curve.lambda_branch])
    lams = np.array([s.lam for s in curve.lambda_branch])
    if mu < mus[0]:
        return None
    return float(np.interp(mu, mus, lams))


def classify_parameter(sigma: ParameterPair, curve: ExtremalCurve, tol: float = 1e-3) -> Region:
    """Locate sigma relative to the curve, with a relative band for on-curve.

    Points left of a branch's sampled range are classified below the curve
    only when monotonicity already decides it; otherwise they land in the
    indeterminate strips together with parameters outside the quadrant of
    the eigenvalue corner.
    """
    lam, mu = sigma.lam, sigma.mu
    lam1, mu1 = curve.lam1, curve.mu1
    lam_s, mu_s = curve.endpoints

    if lam < lam1 and mu < mu1:
        return Region.FirstQuadrantBelowEigen
    if lam <= lam1 or (mu <= mu1 and lam > lam_s):
        return Region.Indeterminate
    if abs(lam - lam_s) <= tol * lam_s and abs(mu - mu_s) <= tol * mu_s:
        return Region.OnGamma

    votes: set[Region] = set()
    if lam1 < lam <= lam_s:
        m = interp_mu_ext(curve, lam)
        if m is not None:
            if abs(mu - m) <= tol * m:
                votes.add(Region.OnGamma)
            elif mu > m:
                votes.add(Region.GammaPlus)
            else:
                votes.add(Region.GammaMinus)
        elif mu <= curve.mu_branch[0].mu:
            votes.add(Region.GammaMinus)
    if mu1 < mu <= mu_s:
        lam_c = interp_lambda_ext(curve, mu)
        if lam_c is not None:
            if abs(lam - lam_c) <= tol * lam_c:
                votes.add(Region.OnGamma)
            elif lam > lam_c:
                votes.add(Region.GammaPlus)
            else:
                votes.add(Region.GammaMinus)
        elif lam <= curve.lambda_branch[0].lam:
            votes.add(Region.GammaMinus)
    if lam > lam_s and mu > mu_s:
        votes.add(Region.GammaPlus)

    if Region.OnGamma in votes:
        return Region.OnGamma
    if Region.GammaPlus in votes:
        return Region.GammaPlus
    if Region.GammaMinus in votes:
        return Region.GammaMinus
    return Region.Indeterminate
