"""Cone barrier, bump functions, and numerical subsolution certificates.

The barrier is the positive part of a cone-adapted linear-minus-angular
expression raised to the power 2s - epsilon.  For small epsilon the inf
over admissible kernels of its nonlocal evaluation is nonnegative inside
the cone: the positive contribution of the far field along rays where the
barrier grows scales like 1/epsilon and eventually beats the bounded
negative part.  verify_subsolution certifies this numerically on a sample
set, evaluating the barrier analytically everywhere (its boundary behavior
is below grid resolution, so interpolation would be meaningless): the near
field reuses the quadrature table's cells, the middle range integrates
per-angle in log-radius, and beyond a cutoff the integral is done in
closed form using homogeneity.

find_epsilon turns the existence statement into a number: bisection for
the largest exponent shift epsilon whose sampled minimum clears the
reported quadrature error bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .grids import Formula, Grid, GridFunction, cone_aperture_cosine
from .kernels import EllipticityBounds, FractionalOrder
from .operators import QuadratureTable, build_quadrature

__all__ = [
    "ConeSpec",
    "BarrierParams",
    "BumpSpec",
    "SubsolutionReport",
    "barrier_value",
    "cone_contains",
    "verify_subsolution",
    "find_epsilon",
    "default_cone_samples",
    "homogeneity_check",
    "smooth_bump",
    "composite_supersolution",
    "touching_level",
]


@dataclass(frozen=True)
class ConeSpec:
    e: tuple = (1.0, 0.0)
    eta: float = 1.0

    def __post_init__(self):
        e = np.asarray(self.e, dtype=float)
        if abs(np.linalg.norm(e) - 1.0) > 1e-12:
            raise ValueError("e must be a unit vector")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        object.__setattr__(self, "e", tuple(float(c) for c in e))

    @property
    def dim(self) -> int:
        return len(self.e)

    @property
    def aperture_cosine(self) -> float:
        return cone_aperture_cosine(self.eta)

    @property
    def half_angle(self) -> float:
        return float(np.arccos(self.aperture_cosine))

    def direction_cosine(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = np.sqrt(np.sum(x * x, axis=-1))
        return np.divide(x @ np.asarray(self.e), r, out=np.zeros_like(r), where=r > 0)

    def boundary_distance(self, x: np.ndarray) -> np.ndarray:
        """Distance from points inside the cone to its boundary (0 outside)."""
        x = np.asarray(x, dtype=float)
        r = np.sqrt(np.sum(x * x, axis=-1))
        gap = self.half_angle - np.arccos(np.clip(self.direction_cosine(x), -1, 1))
        d = np.where(gap >= np.pi / 2, r, r * np.sin(np.maximum(gap, 0.0)))
        return np.where(gap > 0, d, 0.0)


def cone_contains(cone: ConeSpec, x: np.ndarray):
    """Strict membership; the apex x = 0 is rejected, not classified."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    if np.any(r2 == 0.0):
        raise ValueError("cone membership is undefined at the apex x = 0")
    return cone.direction_cosine(x) > cone.aperture_cosine


@dataclass(frozen=True)
class BarrierParams:
    cone: ConeSpec
    epsilon: float
    order: FractionalOrder

    def __post_init__(self):
        if not 0.0 < self.epsilon < self.order.two_s:
            raise ValueError(
                f"epsilon must lie in (0, {self.order.two_s}), got {self.epsilon}"
            )

    @property
    def exponent(self) -> float:
        return self.order.two_s - self.epsilon


def barrier_value(params: BarrierParams, x: np.ndarray):
    """(e.x - eta |x| (1 - (e.x/|x|)^2))_+ ^ (2s - epsilon); 0 at the apex."""
    x = np.asarray(x, dtype=float)
    e = np.asarray(params.cone.e)
    u = x @ e
    r = np.sqrt(np.sum(x * x, axis=-1))
    with np.errstate(invalid="ignore", divide="ignore"):
        ang = np.where(r > 0, 1.0 - (u / np.where(r > 0, r, 1.0)) ** 2, 0.0)
    arg = np.maximum(u - params.cone.eta * r * ang, 0.0)
    return arg ** params.exponent


# ---------------------------------------------------------------------------
# extremal evaluation of the barrier: near field from the table, per-angle
# log-radius middle field, closed-form far field

def _mid_angles(dim: int, n: int):
    if dim == 1:
        dirs = np.array([[1.0], [-1.0]])
        return dirs, np.ones(2), np.array([1.0, 1.0])
    th = (np.arange(n) + 0.5) * (2 * np.pi / n)
    dirs = np.stack([np.cos(th), np.sin(th)], axis=-1)
    return dirs, np.full(n, 2 * np.pi / n), np.maximum(np.abs(dirs[:, 0]),
                                                       np.abs(dirs[:, 1]))


def _extremal_barrier_values(params: BarrierParams, bounds: EllipticityBounds,
                             X: np.ndarray, table: QuadratureTable,
                             far_cutoff: float, n_angles: int,
                             n_radial: int) -> np.ndarray:
    """inf over admissible kernels of the barrier's nonlocal evaluation.

    The infimum picks lambda where the paired second difference is positive
    and Lambda where it is negative, offset by offset; pairing y with -y
    keeps the selected kernel even.
    """
    lam, Lam = bounds.lam, bounds.Lam
    two_s = params.order.two_s
    p = params.exponent
    X = np.atleast_2d(np.asarray(X, dtype=float))
    phi_x = barrier_value(params, X)

    # near field: table offsets, barrier evaluated analytically
    d2 = 0.5 * (barrier_value(params, X[:, None, :] + table.offsets[None, :, :])
                + barrier_value(params, X[:, None, :] - table.offsets[None, :, :])) \
        - phi_x[:, None]
    out = np.sum(np.where(d2 > 0, lam, Lam) * d2 * table.weights[None, :], axis=1)

    # middle field: per-angle Gauss rule in log radius on [rho(theta), cutoff]
    dirs, ang_w, denom = _mid_angles(params.cone.dim, n_angles)
    rho = table.square_radius / denom
    gl, glw = leggauss(n_radial)
    lo = np.log(rho)
    hi = np.full_like(lo, np.log(far_cutoff))
    t = 0.5 * (gl[None, :] + 1.0) * (hi - lo)[:, None] + lo[:, None]
    radii = np.exp(t)                                   # (J, M)
    jac = 0.5 * (hi - lo)[:, None] * glw[None, :] * radii
    pts = radii[..., None] * dirs[:, None, :]           # (J, M, dim)
    gmid = 0.5 * (barrier_value(params, X[:, None, None, :] + pts[None])
                  + barrier_value(params, X[:, None, None, :] - pts[None])) \
        - phi_x[:, None, None]
    wmid = (ang_w[:, None] * jac * radii ** (-1.0 - two_s))[None]
    out += np.sum(np.where(gmid > 0, lam, Lam) * gmid * wmid, axis=(1, 2))

    # far field: (Q(theta) r^p - phi(x)) r^(-1-2s), integrated in closed form
    # from the cutoff; Q averages the two ray profiles so the pair stays even
    prof = barrier_value(params, dirs)
    if params.cone.dim == 1:
        Q = np.full(2, 0.5 * (prof[0] + prof[1]))
    else:
        Q = 0.5 * (prof + np.roll(prof, n_angles // 2))
    R = far_cutoff
    for i in range(X.shape[0]):
        fx = phi_x[i]
        pos_q = Q > 0
        # crossing radius where Q r^p = phi(x); inf is fine, the closed
        # forms below have the right limits
        with np.errstate(divide="ignore", over="ignore"):
            rstar = np.where(pos_q, (fx / np.where(pos_q, Q, 1.0)) ** (1.0 / p), np.inf)
        a0 = np.maximum(R, rstar)
        pos = lam * np.where(
            pos_q,
            Q * a0 ** (p - two_s) / (two_s - p) - fx * a0 ** (-two_s) / two_s,
            0.0,
        )
        neg_band = pos_q & (rstar > R)
        neg = Lam * np.where(
            neg_band,
            Q * (R ** (p - two_s) - np.where(neg_band, a0, R) ** (p - two_s))
            / (two_s - p)
            - fx * (R ** (-two_s) - np.where(neg_band, a0, R) ** (-two_s)) / two_s,
            0.0,
        )
        pure_neg = ~pos_q
        neg += Lam * np.where(pure_neg, -fx * R ** (-two_s) / two_s, 0.0)
        out[i] += float(np.sum(ang_w * (pos + neg)))
    return out


@dataclass
class SubsolutionReport:
    params: BarrierParams
    bounds: EllipticityBounds
    min_value: float
    tolerance: float
    n_samples: int
    values: np.ndarray
    failing: np.ndarray

    @property
    def ok(self) -> bool:
        return self.min_value >= -self.tolerance

    def to_dict(self) -> dict:
        return {
            "eta": self.params.cone.eta,
            "s": self.params.order.s,
            "lambda": self.bounds.lam,
            "Lambda": self.bounds.Lam,
            "epsilon": self.params.epsilon,
            "min_value": float(self.min_value),
            "tolerance": float(self.tolerance),
            "samples": int(self.n_samples),
        }


def verify_subsolution(params: BarrierParams, bounds: EllipticityBounds,
                       sample_points: np.ndarray, table: QuadratureTable,
                       far_cutoff: float = 64.0, n_angles: int = 256,
                       n_radial: int = 32,
                       error_probes: int = 3) -> SubsolutionReport:
    """Sampled check of the extremal inequality for the cone barrier.

    Samples must lie in the cone at distance >= 4h from its boundary (the
    evaluation needs second differences resolved against the boundary decay).
    The reported tolerance is an empirical quadrature bound: spacing halved,
    cutoff doubled, and angular/radial resolution doubled at a few probe
    points, summed and doubled for safety.
    """
    X = np.atleast_2d(np.asarray(sample_points, dtype=float))
    h = table.grid.spacing
    inside = cone_contains(params.cone, X)
    if not np.all(inside):
        bad = X[~inside][0]
        raise ValueError(f"sample {bad} lies outside the cone")
    bd = params.cone.boundary_distance(X)
    if np.any(bd < 4 * h - 1e-12):
        bad = X[np.argmin(bd)]
        raise ValueError(
            f"sample {bad} is closer than 4h = {4 * h:g} to the cone boundary"
        )

    values = _extremal_barrier_values(params, bounds, X, table, far_cutoff,
                                      n_angles, n_radial)

    probes = X[:: max(1, X.shape[0] // error_probes)][:error_probes]
    base = _extremal_barrier_values(params, bounds, probes, table, far_cutoff,
                                    n_angles, n_radial)
    fine_grid = Grid(table.grid.dim, table.grid.half_width, h / 2)
    fine_table = build_quadrature(fine_grid, params.order.s, table.tail_radius)
    d_h = _extremal_barrier_values(params, bounds, probes, fine_table, far_cutoff,
                                   n_angles, n_radial) - base
    d_far = _extremal_barrier_values(params, bounds, probes, table, 2 * far_cutoff,
                                     n_angles, n_radial) - base
    d_ang = _extremal_barrier_values(params, bounds, probes, table, far_cutoff,
                                     2 * n_angles, 2 * n_radial) - base
    tol = 2.0 * float(np.max(np.abs(d_h) + np.abs(d_far) + np.abs(d_ang))) + 1e-9

    failing = X[values < -tol]
    return SubsolutionReport(params=params, bounds=bounds,
                             min_value=float(np.min(values)), tolerance=tol,
                             n_samples=X.shape[0], values=values, failing=failing)


def default_cone_samples(cone: ConeSpec, h: float, radii=(0.5, 1.0, 2.0),
                         per_radius: int = 70) -> np.ndarray:
    """Sample fan inside the cone respecting the 4h boundary margin."""
    if cone.dim == 1:
        return np.asarray(radii, dtype=float)[:, None] * np.asarray(cone.e)
    theta_e = np.arctan2(cone.e[1], cone.e[0])
    pts = []
    for r in radii:
        margin = np.arcsin(min(1.0, 4 * h / r))
        span = cone.half_angle - margin
        if span <= 0:
            continue
        ang = theta_e + np.linspace(-span, span, per_radius) * 0.999
        pts.append(r * np.stack([np.cos(ang), np.sin(ang)], axis=-1))
    if not pts:
        raise ValueError("cone too narrow to place samples at 4h from its boundary")
    return np.concatenate(pts, axis=0)


def find_epsilon(cone: ConeSpec, order: FractionalOrder, bounds: EllipticityBounds,
                 table: QuadratureTable, coarse_spacing: float = 2.0 ** -5,
                 eps_tol: float = 5e-4, n_final_samples: int = 210,
                 far_cutoff: float = 64.0) -> SubsolutionReport:
    """Bisection for the largest exponent shift certified by sampling.

    The sampled minimum decreases as epsilon grows (the stabilizing far
    field scales like 1/epsilon), so feasibility is monotone: bisect on a
    coarse, cheap sample fan, then certify the result on the full fan with
    the caller's table.
    """
    two_s = order.two_s
    coarse_grid = Grid(cone.dim, table.grid.half_width, coarse_spacing)
    coarse = build_quadrature(coarse_grid, order.s, table.tail_radius)
    fan = default_cone_samples(cone, coarse_spacing, per_radius=8)

    def feasible(eps: float) -> bool:
        params = BarrierParams(cone, eps, order)
        rep = verify_subsolution(params, bounds, fan, coarse, far_cutoff=far_cutoff,
                                 n_angles=128, n_radial=24, error_probes=2)
        return float(np.min(rep.values)) >= rep.tolerance

    lo = None
    for seed in (0.25, 0.1, 0.04, 0.015, 0.005, 0.002):
        eps = seed * two_s
        if feasible(eps):
            lo = eps
            break
    if lo is None:
        raise RuntimeError(
            f"no feasible epsilon found down to {0.002 * two_s:g} for eta={cone.eta}, "
            f"s={order.s}, bounds=({bounds.lam}, {bounds.Lam})"
        )
    hi = two_s * (1.0 - 1e-6)
    if feasible(hi):
        lo = hi
    else:
        while hi - lo > eps_tol:
            mid = 0.5 * (lo + hi)
            if feasible(mid):
                lo = mid
            else:
                hi = mid

    h = table.grid.spacing
    per_radius = max(8, int(np.ceil(n_final_samples / 3)))
    final_fan = default_cone_samples(cone, h, per_radius=per_radius)
    eps = lo
    for _ in range(4):
        params = BarrierParams(cone, eps, order)
        rep = verify_subsolution(params, bounds, final_fan, table,
                                 far_cutoff=far_cutoff)
        if rep.ok:
            return rep
        eps *= 0.5  # coarse screen was optimistic; back off and recertify
    return rep


def homogeneity_check(params: BarrierParams, bounds: EllipticityBounds,
                      samples: np.ndarray, table: QuadratureTable,
                      far_cutoff: float = 64.0) -> np.ndarray:
    """Relative defect of the scaling identity at doubled sample points.

    The barrier is homogeneous of degree 2s - epsilon under an operator of
    order 2s, so its evaluation at 2x equals 2^(-epsilon) times the value
    at x; the defect measures the quadrature's scale consistency.
    """
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    v1 = _extremal_barrier_values(params, bounds, X, table, far_cutoff, 256, 32)
    v2 = _extremal_barrier_values(params, bounds, 2 * X, table, far_cutoff, 256, 32)
    scale = 2.0 ** (-params.epsilon)
    return np.abs(v2 - scale * v1) / np.maximum(np.abs(v1), 1e-12)


# ---------------------------------------------------------------------------
# bumps and the composite supersolution

@dataclass(frozen=True)
class BumpSpec:
    center: tuple
    r_inner: float
    r_outer: float

    def __post_init__(self):
        if not 0 < self.r_inner < self.r_outer:
            raise ValueError("need 0 < r_inner < r_outer")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))


def smooth_bump(spec: BumpSpec) -> Formula:
    """Radial bump: 1 inside r_inner, 0 outside r_outer, quintic in between.

    The transition q(t) = 1 - t^3 (10 - 15 t + 6 t^2) matches value and two
    derivatives at both ends, so second differences stay uniformly bounded;
    that is all the nonlocal evaluations need.
    """
    c = np.asarray(spec.center, dtype=float)

    def fn(p):
        d = np.sqrt(np.sum((np.asarray(p, dtype=float) - c) ** 2, axis=-1))
        t = np.clip((d - spec.r_inner) / (spec.r_outer - spec.r_inner), 0.0, 1.0)
        return 1.0 - t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)

    return Formula(fn, name="bump",
                   params=(*spec.center, spec.r_inner, spec.r_outer))


def composite_supersolution(u1: GridFunction, b, eta_bump, C1: float,
                            C2: float) -> GridFunction:
    """w = u1 * indicator(B_{3/4}) + C1 (b - 1) + C2 eta_bump.

    Touching this from below against a solution turns a pointwise bound
    into a comparison-principle argument; C1 controls the sign outside the
    half ball, C2 pays for the bump's curvature near the contact set.
    """
    if C1 <= 0 or C2 < 0:
        raise ValueError("need C1 > 0 and C2 >= 0")
    if np.min(u1.values) < 0:
        raise ValueError("u1 must be nonnegative")
    grid = u1.grid
    nodes = grid.nodes()
    chi = np.sqrt(np.sum(nodes * nodes, axis=-1)) < 0.75
    vals = u1.values * chi + C1 * (np.asarray(b(nodes)) - 1.0) \
        + C2 * np.asarray(eta_bump(nodes))

    def ext(p):
        # the indicator kills u1 beyond 3/4, well inside the box
        return C1 * (np.asarray(b(p)) - 1.0) + C2 * np.asarray(eta_bump(p))

    return GridFunction(grid, vals, Formula(ext, name="composite_w",
                                            params=(float(C1), float(C2))))


def touching_level(u: GridFunction, b) -> tuple:
    """Largest t with u >= t b on the grid, and a node where they touch."""
    if np.min(u.values) < 0:
        raise ValueError("u must be nonnegative")
    nodes = u.grid.nodes()
    bv = np.asarray(b(nodes), dtype=float)
    pos = bv > 0
    if not np.any(pos):
        raise ValueError("bump vanishes at every grid node")
    ratios = u.values[pos] / bv[pos]
    k = int(np.argmin(ratios))
    t = float(ratios[k])
    x0 = nodes[np.flatnonzero(pos)[k]]
    return t, x0
