"""Numerical convex analysis on sampled grids.

Everything here works on raw secant slopes of the native grid: secants of a
convex sample are themselves monotone, while smoothing could fabricate
convexity that is not in the data.  liminf/limsup statements about function
families are replaced by explicit tail-min/tail-max proxies over the last few
family members and are labeled as proxies in the reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SampledFunction:
    """Function values on a strictly ascending grid."""

    xs: np.ndarray
    ys: np.ndarray
    label: str = ""

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape:
            raise ValueError("xs and ys must be 1-d arrays of equal length")
        if xs.size < 2:
            raise ValueError("need at least two samples")
        if not np.all(np.diff(xs) > 0):
            raise ValueError(f"grid of {self.label!r} is not strictly ascending")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.xs)

    def node_index(self, x: float) -> int:
        scale = max(1.0, float(np.abs(self.xs).max()))
        i = int(np.argmin(np.abs(self.xs - x)))
        if abs(self.xs[i] - x) > 1e-9 * scale:
            raise ValueError(f"x={x} is not a node of the grid of {self.label!r}")
        return i


@dataclass(frozen=True)
class DerivativeEstimate:
    """One-sided secant slopes at a grid node."""

    left: float
    right: float
    step: float
    error_estimate: float

    @property
    def kink_detected(self) -> bool:
        """Slope jump clearly above the local discretization error."""
        return self.right - self.left > 10.0 * self.error_estimate


def one_sided_derivative(f: SampledFunction, x: float) -> DerivativeEstimate:
    """Left/right secant slopes from the two grid intervals adjacent to x."""
    i = f.node_index(x)
    if i == 0 or i == f.xs.size - 1:
        raise ValueError(f"x={x} must be interior to the grid of {f.label!r}")
    xs, ys = f.xs, f.ys
    left = (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1])
    right = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
    # slope change across the next-outer intervals bounds the secant error
    errors = []
    if i >= 2:
        outer_left = (ys[i - 1] - ys[i - 2]) / (xs[i - 1] - xs[i - 2])
        errors.append(abs(left - outer_left))
    if i + 2 < xs.size:
        outer_right = (ys[i + 2] - ys[i + 1]) / (xs[i + 2] - xs[i + 1])
        errors.append(abs(right - outer_right))
    if not errors:
        errors.append(abs(right - left))
    return DerivativeEstimate(
        left=float(left), right=float(right),
        step=float(max(xs[i] - xs[i - 1], xs[i + 1] - xs[i])),
        error_estimate=float(max(errors)),
    )


@dataclass(frozen=True)
class GriffithsReport:
    """Finite-family check of the convex-derivative sandwich.

    The liminf/limsup of the family derivatives are replaced by the min/max
    over the last ``tail_members`` family members (honest finite proxies).
    """

    x: float
    f_prime_left: float
    f_prime_right: float
    family_derivatives: tuple
    liminf_proxy: float
    limsup_proxy: float
    tail_members: int
    tol: float
    passed: bool


def griffiths_check(family: list, f: SampledFunction, x: float,
                    tol: float | None = None) -> GriffithsReport:
    """Check f'(x-) <= liminf-proxy <= limsup-proxy <= f'(x+) on a family.

    ``family`` is ordered by the convergence parameter (largest last); all
    members must share f's grid exactly.
    """
    if len(family) < 1:
        raise ValueError("family must not be empty")
    for member in family:
        if not np.array_equal(member.xs, f.xs):
            raise ValueError(
                f"family member {member.label!r} is not on the grid of {f.label!r}")
    limit_est = one_sided_derivative(f, x)
    per_member = tuple(one_sided_derivative(m, x) for m in family)
    k = min(3, len(per_member))
    tail = per_member[-k:]
    liminf_proxy = min(d.left for d in tail)
    limsup_proxy = max(d.right for d in tail)
    if tol is None:
        tol = max([limit_est.error_estimate] + [d.error_estimate for d in tail])
        tol += 1e-12
    passed = (limit_est.left - tol <= liminf_proxy
              and liminf_proxy <= limsup_proxy + tol
              and limsup_proxy <= limit_est.right + tol)
    return GriffithsReport(
        x=float(x),
        f_prime_left=limit_est.left, f_prime_right=limit_est.right,
        family_derivatives=tuple((d.left, d.right) for d in per_member),
        liminf_proxy=float(liminf_proxy), limsup_proxy=float(limsup_proxy),
        tail_members=k, tol=float(tol), passed=bool(passed),
    )


@dataclass(frozen=True)
class ConvexityReport:
    convex: bool
    parity_ok: bool
    min_slope_increment: float
    max_parity_gap: float
    violations: tuple = ()


def convexity_and_parity_audit(f: SampledFunction,
                               even: bool = False,
                               convexity_tol: float = 1e-9,
                               parity_tol: float = 1e-10) -> ConvexityReport:
    """Report-only audit: slope monotonicity and (optionally) evenness.

    Tolerances scale with max(1, max|y|).  Violating triples are listed so a
    failed audit shows where the data bends the wrong way.
    """
    xs, ys = f.xs, f.ys
    if xs.size < 3:
        raise ValueError("convexity audit needs at least three samples")
    scale = max(1.0, float(np.abs(ys).max()))
    slopes = np.diff(ys) / np.diff(xs)
    increments = np.diff(slopes)
    violations = []
    for j in np.nonzero(increments < -convexity_tol * scale)[0]:
        violations.append((float(xs[j]), float(xs[j + 1]), float(xs[j + 2])))
    max_gap = 0.0
    parity_ok = True
    if even:
        for i, x in enumerate(xs):
            target = -x
            j = int(np.argmin(np.abs(xs - target)))
            if abs(xs[j] - target) <= 1e-12 * max(1.0, abs(x)):
                gap = abs(ys[i] - ys[j])
                max_gap = max(max_gap, gap)
        parity_ok = max_gap <= parity_tol * scale
    return ConvexityReport(
        convex=len(violations) == 0,
        parity_ok=parity_ok,
        min_slope_increment=float(increments.min()) if increments.size else 0.0,
        max_parity_gap=float(max_gap),
        violations=tuple(violations),
    )


@dataclass(frozen=True)
class SampledSurface:
    """Values on a rectangular (mu0, nu) grid; rows index mu0, columns nu."""

    mu0s: np.ndarray
    nus: np.ndarray
    values: np.ndarray = field(repr=False)
    label: str = ""

    def __post_init__(self):
        mu0s = np.asarray(self.mu0s, dtype=float)
        nus = np.asarray(self.nus, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.shape != (mu0s.size, nus.size):
            raise ValueError("values shape must be (len(mu0s), len(nus))")
        if not (np.all(np.diff(mu0s) > 0) and np.all(np.diff(nus) > 0)):
            raise ValueError("surface grids must be strictly ascending")
        object.__setattr__(self, "mu0s", mu0s)
        object.__setattr__(self, "nus", nus)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class PdeResidualReport:
    max_abs_residual: float
    argmax_node: tuple
    residuals: np.ndarray = field(repr=False)   # NaN on the boundary frame
    mask: np.ndarray = field(repr=False)


def _central_difference(values: np.ndarray, grid: np.ndarray,
                        axis: int) -> np.ndarray:
    """Interior central differences on a possibly non-uniform grid."""
    v = np.moveaxis(values, axis, 0)
    g = grid
    out = np.full_like(v, np.nan)
    for i in range(1, g.size - 1):
        h_m = g[i] - g[i - 1]
        h_p = g[i + 1] - g[i]
        out[i] = (h_m ** 2 * v[i + 1] - (h_m ** 2 - h_p ** 2) * v[i]
                  - h_p ** 2 * v[i - 1]) / (h_m * h_p * (h_m + h_p))
    return np.moveaxis(out, 0, axis)


def pde_residual(surface: SampledSurface,
                 mask: np.ndarray | None = None) -> PdeResidualReport:
    """Residual of dp/dmu0 = (1/4) (dp/dnu)^2 at interior grid nodes.

    ``mask`` (same shape as the surface) excludes nodes from the max, e.g.
    nodes where the underlying maximizer was not interior or unique.
    """
    if surface.mu0s.size < 3 or surface.nus.size < 3:
        raise ValueError("pde residual needs at least a 3x3 grid")
    dp_dmu0 = _central_difference(surface.values, surface.mu0s, axis=0)
    dp_dnu = _central_difference(surface.values, surface.nus, axis=1)
    residuals = dp_dmu0 - 0.25 * dp_dnu ** 2
    usable = np.isfinite(residuals)
    if mask is not None:
        usable &= np.asarray(mask, dtype=bool)
    if not usable.any():
        raise ValueError("no usable interior nodes for the pde residual")
    abs_res = np.where(usable, np.abs(residuals), -np.inf)
    flat = int(np.argmax(abs_res))
    node = np.unravel_index(flat, residuals.shape)
    return PdeResidualReport(
        max_abs_residual=float(abs_res[node]),
        argmax_node=(int(node[0]), int(node[1])),
        residuals=residuals,
        mask=usable,
    )
