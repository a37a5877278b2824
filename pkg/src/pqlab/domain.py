"""Meshes, grid functions, indefinite weights and admissibility checks.

The computational domain is the unit interval with homogeneous Dirichlet
conditions.  Functions are piecewise linear on a uniform mesh, weights are
piecewise constant, and problem data is collected in :class:`ProblemSpec`.
All types are immutable after construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

__all__ = [
    "Mesh",
    "GridFunction",
    "WeightFunction",
    "ExponentReport",
    "ProblemSpec",
    "build_mesh",
    "build_weight",
    "validate_exponents",
    "build_problem",
    "load_problem",
    "align_elements",
]

# Largest uniform mesh accepted when refining so that weight breakpoints
# land on mesh nodes.
_MAX_ALIGNED_N = 200_000


@dataclass(frozen=True)
class Mesh:
    """Uniform mesh of the unit interval with ``n`` elements of width ``h = 1/n``."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 4:
            raise ValueError(f"mesh needs at least 4 elements, got n={self.n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def nodes(self) -> np.ndarray:
        """All node coordinates including the endpoints (length n+1)."""
        return np.linspace(0.0, 1.0, self.n + 1)

    @property
    def interior_nodes(self) -> np.ndarray:
        return self.nodes[1:-1]


@dataclass(frozen=True)
class GridFunction:
    """Piecewise-linear function vanishing at both endpoints.

    ``values`` holds the n-1 interior nodal values; the boundary values are
    implicitly zero, so every GridFunction lies in the discrete analogue of
    the zero-trace Sobolev space.
    """

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.mesh.n - 1,):
            raise ValueError(
                f"expected {self.mesh.n - 1} interior values, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def padded(self) -> np.ndarray:
        """Nodal values including the zero boundary values (length n+1)."""
        out = np.zeros(self.mesh.n + 1)
        out[1:-1] = self.values
        return out

    @classmethod
    def from_callable(cls, mesh: Mesh, fn) -> "GridFunction":
        """Interpolate ``fn`` at the interior nodes (no boundary correction)."""
        return cls(mesh, np.asarray(fn(mesh.interior_nodes), dtype=float))

    @classmethod
    def zero(cls, mesh: Mesh) -> "GridFunction":
        return cls(mesh, np.zeros(mesh.n - 1))

    @classmethod
    def bump(cls, mesh: Mesh, lo: float, hi: float) -> "GridFunction":
        """Nonnegative squared-sine bump supported on [lo, hi]."""
        if not (0.0 <= lo < hi <= 1.0):
            raise ValueError("bump support must be a subinterval of [0, 1]")
        x = mesh.interior_nodes
        vals = np.where(
            (x > lo) & (x < hi),
            np.sin(np.pi * (x - lo) / (hi - lo)) ** 2,
            0.0,
        )
        return cls(mesh, vals)


@dataclass(frozen=True)
class WeightFunction:
    """Piecewise-constant sign-changing weight on [0, 1].

    ``breakpoints`` is the sorted partition 0 = b_0 < ... < b_m = 1 and
    ``values`` holds one constant per subinterval.  The weight must take
    both signs.  ``hypothesis`` records which standing assumption the
    zero set satisfies:

    * ``"F1"`` -- the zero set has measure zero (no zero-valued band);
    * ``"F2"`` -- there is a zero-valued band, and some maximal run of
      consecutive nonnegative bands contains both a zero band and a
      positive band.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]
    hypothesis: str

    def __post_init__(self) -> None:
        bp = tuple(float(b) for b in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        if len(bp) < 2 or bp[0] != 0.0 or bp[-1] != 1.0:
            raise ValueError("breakpoints must start at 0 and end at 1")
        if any(b1 <= b0 for b0, b1 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if len(vals) != len(bp) - 1:
            raise ValueError("need one value per subinterval")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("weight values must be finite")
        if not any(v > 0.0 for v in vals):
            raise ValueError("weight has no positive part (f+ vanishes)")
        if not any(v < 0.0 for v in vals):
            raise ValueError("weight has no negative part (f- vanishes)")
        observed = _classify_zero_set(vals)
        if self.hypothesis not in ("F1", "F2"):
            raise ValueError(f"hypothesis must be 'F1' or 'F2', got {self.hypothesis!r}")
        if self.hypothesis != observed:
            raise ValueError(
                f"declared hypothesis {self.hypothesis} inconsistent with the "
                f"partition (data satisfies {observed})"
            )
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Evaluate at points in [0, 1]; breakpoints evaluate to the right band."""
        idx = np.clip(np.searchsorted(self.breakpoints, x, side="right") - 1, 0, len(self.values) - 1)
        return np.asarray(self.values, dtype=float)[idx]

    def exact_integral(self) -> float:
        """Exact integral of the piecewise-constant weight over [0, 1]."""
        widths = np.diff(self.breakpoints)
        return float(np.dot(widths, self.values))

    def bands(self, sign: int) -> list[tuple[float, float]]:
        """Subintervals where the weight has the given sign (-1, 0 or +1)."""
        out = []
        for lo, hi, v in zip(self.breakpoints, self.breakpoints[1:], self.values):
            if np.sign(v) == sign:
                out.append((lo, hi))
        return out


def _classify_zero_set(values: tuple[float, ...]) -> str:
    """Return which standing hypothesis the band pattern satisfies."""
    if all(v != 0.0 for v in values):
        return "F1"
    # Maximal runs of consecutive nonnegative bands; F2 needs one run
    # containing both a zero band and a positive band.
    run: list[float] = []
    for v in values:
        if v >= 0.0:
            run.append(v)
        else:
            if _run_meets_zero_and_positive(run):
                return "F2"
            run = []
    if _run_meets_zero_and_positive(run):
        return "F2"
    raise ValueError(
        "weight has a zero band but no nonnegative run joining a zero band "
        "to a positive band (neither F1 nor F2 holds)"
    )


def _run_meets_zero_and_positive(run: list[float]) -> bool:
    return any(v == 0.0 for v in run) and any(v > 0.0 for v in run)


@dataclass(frozen=True)
class ExponentReport:
    """Clause-by-clause admissibility report for the coupling exponents.

    In one space dimension the Sobolev embedding is into continuous
    functions, so the subcritical clause holds automatically; it is
    recorded as satisfied with a note rather than checked against a
    finite critical exponent.
    """

    p: float
    q: float
    alpha: float
    beta: float
    superlinear: bool          # alpha/p + beta/q > 1
    exceeds_one_exponent: bool  # alpha > p or beta > q
    subcritical: bool = True
    subcritical_note: str = "automatic in one dimension (critical exponents are infinite)"
    d: float = field(default=0.0)

    @property
    def admissible(self) -> bool:
        return self.superlinear and self.exceeds_one_exponent and self.subcritical


def validate_exponents(p: float, q: float, alpha: float, beta: float) -> ExponentReport:
    """Check the admissibility condition on (p, q, alpha, beta).

    Requires alpha/p + beta/q > 1 together with alpha > p or beta > q;
    failures are reported, not raised.  ``d = alpha/p + beta/q - 1`` is the
    scaling exponent used throughout the fibering formulas.
    """
    if min(p, q, alpha, beta) <= 0.0:
        raise ValueError("exponents must be positive")
    if p <= 1.0 or q <= 1.0:
        raise ValueError("p and q must exceed 1")
    d = alpha / p + beta / q - 1.0
    return ExponentReport(
        p=p,
        q=q,
        alpha=alpha,
        beta=beta,
        superlinear=d > 0.0,
        exceeds_one_exponent=(alpha > p) or (beta > q),
        d=d,
    )


@dataclass(frozen=True)
class ProblemSpec:
    """Exponents, weight and mesh for one problem instance.

    The mesh is aligned with the weight: every weight breakpoint is a mesh
    node, so the coupling quadrature sees a constant weight on each element.
    Use :func:`build_problem` to construct instances with alignment applied.
    """

    p: float
    q: float
    alpha: float
    beta: float
    weight: WeightFunction
    mesh: Mesh

    def __post_init__(self) -> None:
        report = validate_exponents(self.p, self.q, self.alpha, self.beta)
        if not report.admissible:
            raise ValueError(
                "inadmissible exponents: need alpha/p + beta/q > 1 and "
                f"(alpha > p or beta > q); got p={self.p}, q={self.q}, "
                f"alpha={self.alpha}, beta={self.beta}"
            )
        for b in self.weight.breakpoints[1:-1]:
            if not _is_mesh_node(b, self.mesh.n):
                raise ValueError(
                    f"weight breakpoint {b} is not a node of the n={self.mesh.n} mesh; "
                    "use build_problem() to align the mesh"
                )

    @property
    def d(self) -> float:
        return self.alpha / self.p + self.beta / self.q - 1.0


def _is_mesh_node(b: float, n: int) -> bool:
    k = round(b * n)
    return abs(b * n - k) <= 1e-9 * n


def build_mesh(n: int) -> Mesh:
    """Uniform mesh of [0, 1] with ``n >= 4`` elements."""
    return Mesh(int(n))


def build_weight(breakpoints, values, hypothesis_flag: str) -> WeightFunction:
    """Validated piecewise-constant weight; the declared hypothesis is checked."""
    return WeightFunction(tuple(breakpoints), tuple(values), hypothesis_flag)


def align_elements(n_request: int, breakpoints) -> int:
    """Smallest element count >= ``n_request`` putting every breakpoint on a node.

    Breakpoints are interpreted as decimals (rationalized with a bounded
    denominator); the result is the least multiple of their common
    denominator that is at least ``n_request``.
    """
    denom = 1
    for b in breakpoints:
        if b in (0.0, 1.0):
            continue
        frac = Fraction(b).limit_denominator(10**6)
        if abs(float(frac) - b) > 1e-9:
            raise ValueError(f"breakpoint {b} is not a simple decimal; cannot align mesh")
        denom = denom * frac.denominator // math.gcd(denom, frac.denominator)
    n = max(4, int(n_request))
    n_aligned = ((n + denom - 1) // denom) * denom
    if n_aligned > _MAX_ALIGNED_N:
        raise ValueError(
            f"aligning breakpoints {tuple(breakpoints)} needs n={n_aligned} elements"
        )
    return n_aligned


def build_problem(
    p: float,
    q: float,
    alpha: float,
    beta: float,
    n: int,
    weight: WeightFunction,
) -> ProblemSpec:
    """Assemble a ProblemSpec, refining the mesh so breakpoints are nodes."""
    n_aligned = align_elements(n, weight.breakpoints)
    return ProblemSpec(
        p=float(p), q=float(q), alpha=float(alpha), beta=float(beta),
        weight=weight, mesh=build_mesh(n_aligned),
    )


def load_problem(source: str | Path | dict) -> ProblemSpec:
    """Load a ProblemSpec from a JSON file (or an already-parsed mapping).

    Expected keys: ``p, q, alpha, beta, n`` and a ``weight`` object with
    ``breakpoints``, ``values`` and ``hypothesis``.
    """
    if isinstance(source, dict):
        cfg = source
    else:
        cfg = json.loads(Path(source).read_text())
    try:
        wcfg = cfg["weight"]
        weight = build_weight(wcfg["breakpoints"], wcfg["values"], wcfg["hypothesis"])
        return build_problem(
            cfg["p"], cfg["q"], cfg["alpha"], cfg["beta"], cfg["n"], weight
        )
    except KeyError as exc:
        raise ValueError(f"problem config is missing key {exc}") from exc


def problem_to_dict(spec: ProblemSpec) -> dict:
    """JSON-serializable description of a ProblemSpec (round-trips via load_problem)."""
    return {
        "p": spec.p,
        "q": spec.q,
        "alpha": spec.alpha,
        "beta": spec.beta,
        "n": spec.mesh.n,
        "weight": {
            "breakpoints": list(spec.weight.breakpoints),
            "values": list(spec.weight.values),
            "hypothesis": spec.weight.hypothesis,
        },
    }
