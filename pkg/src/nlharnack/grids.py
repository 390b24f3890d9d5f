"""Uniform Cartesian grids, domain geometry, and the weighted mass integral.

The unit ball B1 where the inequalities live is embedded in a larger
computational box (half width >= 2) so that exterior data is representable
partly on grid nodes and partly by an analytic formula beyond the box.
Nodes are labeled interior (Omega within B1), zero (B1 minus Omega, where
solutions are pinned to 0), or data (outside B1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

__all__ = [
    "Grid",
    "GridFunction",
    "Zero",
    "Formula",
    "HalfSpace",
    "LipschitzGraph",
    "Cone",
    "Slit",
    "Annulus",
    "Custom",
    "DomainMask",
    "InteriorBallError",
    "DivergentMassError",
    "build_grid",
    "build_domain",
    "weighted_mass",
    "normalize",
    "dist_to_complement",
    "grid_function",
    "indicator_interval",
    "indicator_shell",
    "indicator_ball",
    "sawtooth_profile",
    "vee_profile",
    "cone_aperture_cosine",
]

INTERIOR, ZERO, DATA = 0, 1, 2
_LABEL_NAMES = {INTERIOR: "interior", ZERO: "zero", DATA: "data"}


class InteriorBallError(RuntimeError):
    """No interior ball of positive radius exists at a requested scale."""

    def __init__(self, scale: float, shape_name: str):
        self.scale = scale
        super().__init__(f"{shape_name}: no interior ball at scale r={scale:g}")


class DivergentMassError(RuntimeError):
    """Exterior formula grows too fast for the weighted mass to converge."""

    def __init__(self, exponent: float, limit: float):
        self.exponent = exponent
        self.limit = limit
        super().__init__(
            f"exterior data grows like |x|^{exponent:.3f}, weighted mass needs "
            f"growth below |x|^{limit:.3f}"
        )


@dataclass(frozen=True)
class Grid:
    """Lattice {k*h : |k*h|_inf <= half_width} with lexicographic ordering."""

    dim: int
    half_width: float
    spacing: float
    m: int = field(init=False)  # steps per half axis

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.spacing <= 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        ratio = self.half_width / self.spacing
        m = int(round(ratio))
        if abs(ratio - m) > 1e-9 * max(1.0, ratio) or m < 1:
            raise ValueError(
                f"spacing {self.spacing} does not divide half_width {self.half_width}"
            )
        object.__setattr__(self, "m", m)

    @property
    def n_side(self) -> int:
        return 2 * self.m + 1

    @property
    def n_nodes(self) -> int:
        return self.n_side**self.dim

    @property
    def shape(self) -> tuple:
        return (self.n_side,) * self.dim

    def axis_coords(self) -> np.ndarray:
        return np.arange(-self.m, self.m + 1) * self.spacing

    def lattice(self) -> np.ndarray:
        """Integer lattice coordinates of all nodes, shape (N, dim)."""
        ax = np.arange(-self.m, self.m + 1)
        if self.dim == 1:
            return ax[:, None]
        gx, gy = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([gx.ravel(), gy.ravel()], axis=-1)

    def nodes(self) -> np.ndarray:
        return self.lattice() * self.spacing

    def flat_index(self, latt: np.ndarray) -> np.ndarray:
        """Flat node index for integer lattice points; caller checks bounds."""
        latt = np.asarray(latt)
        if self.dim == 1:
            return latt[..., 0] + self.m
        return (latt[..., 0] + self.m) * self.n_side + (latt[..., 1] + self.m)

    def in_box_lattice(self, latt: np.ndarray) -> np.ndarray:
        return np.all(np.abs(latt) <= self.m, axis=-1)

    def node_index(self, x: np.ndarray) -> int:
        """Flat index of a single node given by coordinates; must be on lattice."""
        latt = np.asarray(x, dtype=float) / self.spacing
        k = np.rint(latt).astype(np.int64)
        if np.max(np.abs(latt - k)) > 1e-8 or not self.in_box_lattice(k):
            raise ValueError(f"{x} is not a grid node")
        return int(self.flat_index(k))


def build_grid(dim: int, half_width: float, spacing: float) -> Grid:
    # the box must contain the unit ball where labels live; experiment
    # configs additionally require half_width >= 2 so exterior data is
    # partly on-grid (enforced at config validation, not here)
    if half_width < 1.0 - 1e-12:
        raise ValueError(f"half_width must be >= 1, got {half_width}")
    return Grid(dim, float(half_width), float(spacing))


# ---------------------------------------------------------------------------
# grid functions and exterior extension rules

@dataclass(frozen=True)
class Zero:
    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return np.zeros(np.shape(pts)[:-1])


@dataclass(frozen=True, eq=False)
class Formula:
    fn: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"
    params: tuple = ()

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(pts, dtype=float)), dtype=float)


class GridFunction:
    """Node values plus an extension rule for points beyond the box."""

    def __init__(self, grid: Grid, values: np.ndarray, exterior=None):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n_nodes,):
            raise ValueError(f"expected {grid.n_nodes} node values, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function values must be finite")
        self.grid = grid
        self.values = values
        self.exterior = exterior if exterior is not None else Zero()

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy(), self.exterior)

    def eval_lattice(self, latt: np.ndarray) -> np.ndarray:
        """Values at integer lattice points, using the exterior rule off-box."""
        latt = np.asarray(latt)
        inside = self.grid.in_box_lattice(latt)
        out = np.empty(latt.shape[:-1])
        if np.any(inside):
            idx = self.grid.flat_index(latt[inside])
            out[inside] = self.values[idx]
        if np.any(~inside):
            out[~inside] = self.exterior(latt[~inside] * self.grid.spacing)
        return out

    def sample(self, pts: np.ndarray) -> np.ndarray:
        """Multilinear interpolation inside the box, exterior rule outside."""
        pts = np.asarray(pts, dtype=float)
        h, m = self.grid.spacing, self.grid.m
        t = pts / h
        inside = np.all(np.abs(t) <= m, axis=-1)
        out = np.empty(pts.shape[:-1])
        if np.any(~inside):
            out[~inside] = self.exterior(pts[~inside])
        if not np.any(inside):
            return out
        ti = t[inside]
        lo = np.clip(np.floor(ti).astype(np.int64), -m, m - 1)
        frac = ti - lo
        if self.grid.dim == 1:
            v0 = self.values[self.grid.flat_index(lo)]
            v1 = self.values[self.grid.flat_index(lo + 1)]
            out[inside] = v0 * (1 - frac[..., 0]) + v1 * frac[..., 0]
        else:
            fx, fy = frac[..., 0], frac[..., 1]
            ex = np.array([1, 0])
            ey = np.array([0, 1])
            v00 = self.values[self.grid.flat_index(lo)]
            v10 = self.values[self.grid.flat_index(lo + ex)]
            v01 = self.values[self.grid.flat_index(lo + ey)]
            v11 = self.values[self.grid.flat_index(lo + ex + ey)]
            out[inside] = (
                v00 * (1 - fx) * (1 - fy)
                + v10 * fx * (1 - fy)
                + v01 * (1 - fx) * fy
                + v11 * fx * fy
            )
        return out


def grid_function(grid: Grid, fn: Callable[[np.ndarray], np.ndarray] | float,
                  exterior: str = "zero", name: str = "custom",
                  params: tuple = ()) -> GridFunction:
    """Fill node values from a callable (or constant) and attach an exterior rule.

    exterior="formula" reuses the callable beyond the box; "zero" truncates.
    """
    if callable(fn):
        values = np.asarray(fn(grid.nodes()), dtype=float)
        ext = Formula(fn, name=name, params=params) if exterior == "formula" else Zero()
    else:
        values = np.full(grid.n_nodes, float(fn))
        ext = Formula(lambda p, c=float(fn): np.full(p.shape[:-1], c),
                      name="constant", params=(float(fn),)) if exterior == "formula" else Zero()
    return GridFunction(grid, values, ext)


# ---------------------------------------------------------------------------
# built-in exterior data (named so configs can reference them)

def indicator_interval(a: float, b: float) -> Formula:
    def fn(p):
        x = p[..., 0]
        return np.where((x > a) & (x < b), 1.0, 0.0)

    return Formula(fn, name="indicator_interval", params=(float(a), float(b)))


def indicator_ball(center, radius: float) -> Formula:
    c = np.asarray(center, dtype=float)

    def fn(p):
        d = np.sqrt(np.sum((p - c) ** 2, axis=-1))
        return np.where(d < radius, 1.0, 0.0)

    return Formula(fn, name="indicator_ball", params=(*(float(v) for v in c), float(radius)))


def indicator_shell(r0: float, r1: float, theta0: Optional[float] = None,
                    theta1: Optional[float] = None) -> Formula:
    """Indicator of {r0 < |x| < r1}, optionally cut to an angular sector (2D)."""

    def fn(p):
        r = np.sqrt(np.sum(p * p, axis=-1))
        ind = (r > r0) & (r < r1)
        if theta0 is not None:
            th = np.arctan2(p[..., 1], p[..., 0])
            ind &= (th >= theta0) & (th <= theta1)
        return np.where(ind, 1.0, 0.0)

    params = (float(r0), float(r1)) + (() if theta0 is None else (float(theta0), float(theta1)))
    return Formula(fn, name="indicator_shell", params=params)


# ---------------------------------------------------------------------------
# domain shapes

@dataclass(frozen=True)
class HalfSpace:
    """Omega = {x : e.x > 0}."""

    e: tuple = (1.0,)

    def __post_init__(self):
        e = np.asarray(self.e, dtype=float)
        if abs(np.linalg.norm(e) - 1.0) > 1e-12:
            raise ValueError("e must be a unit vector")
        object.__setattr__(self, "e", tuple(float(c) for c in e))

    @property
    def name(self):
        return "half_space"

    def inside(self, pts):
        return pts @ np.asarray(self.e) > 0

    def dist_analytic(self, pts):
        return np.maximum(pts @ np.asarray(self.e), 0.0)


@dataclass(frozen=True, eq=False)
class LipschitzGraph:
    """Omega = {(t, z) : z > profile(t)} in 2D; profile(0) = 0 so 0 lies on the boundary."""

    profile: Callable[[np.ndarray], np.ndarray]
    M: float
    name: str = "graph"
    params: tuple = ()

    def inside(self, pts):
        return pts[..., 1] > self.profile(pts[..., 0])

    def dist_analytic(self, pts, resolution: float = 1.0 / 512):
        # distance to the hypograph boundary via a dense polyline; exact for
        # piecewise-linear profiles with vertices on the sample lattice
        ts = np.arange(-4.0, 4.0 + resolution / 2, resolution)
        poly = np.stack([ts, self.profile(ts)], axis=-1)
        a, b = poly[:-1], poly[1:]
        ab = b - a
        denom = np.sum(ab * ab, axis=-1)
        flat = np.atleast_2d(pts.reshape(-1, 2))
        out = np.empty(flat.shape[0])
        for start in range(0, flat.shape[0], 2048):  # keep memory flat
            blk = flat[start:start + 2048]
            p = blk[:, None, :] - a
            t = np.clip(np.sum(p * ab, axis=-1) / denom, 0.0, 1.0)
            proj = a + t[..., None] * ab
            d = np.sqrt(np.sum((blk[:, None, :] - proj) ** 2, axis=-1))
            out[start:start + 2048] = d.min(axis=-1)
        return out.reshape(pts.shape[:-1])


def vee_profile(M: float = 1.0) -> LipschitzGraph:
    def fn(t):
        return M * np.abs(t)

    return LipschitzGraph(fn, M=M, name="vee", params=(float(M),))


def sawtooth_profile(M: float = 1.0, period: float = 0.5) -> LipschitzGraph:
    """Zigzag of slope +-M and period p with a vertex at the origin, value 0 there."""

    def fn(t, p=float(period), M=float(M)):
        return M * (np.abs(np.mod(t - p / 4, p) - p / 2) - p / 4)

    return LipschitzGraph(fn, M=M, name="sawtooth", params=(float(M), float(period)))


def cone_aperture_cosine(eta: float) -> float:
    """Smallest direction cosine c with c > eta*(1 - c^2); the cone is {cos > c}."""
    if eta == 0.0:
        return 0.0
    return (-1.0 + np.sqrt(1.0 + 4.0 * eta * eta)) / (2.0 * eta)


@dataclass(frozen=True)
class Cone:
    """Omega = {x : e.x/|x| > eta*(1 - (e.x/|x|)^2)}, apex at the origin."""

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
    def name(self):
        return "cone"

    @property
    def half_angle(self) -> float:
        return float(np.arccos(cone_aperture_cosine(self.eta)))

    def inside(self, pts):
        r = np.sqrt(np.sum(pts * pts, axis=-1))
        c = np.divide(pts @ np.asarray(self.e), r, out=np.zeros_like(r), where=r > 0)
        return (r > 0) & (c > cone_aperture_cosine(self.eta))

    def dist_analytic(self, pts):
        r = np.sqrt(np.sum(pts * pts, axis=-1))
        c = np.divide(pts @ np.asarray(self.e), r, out=np.zeros_like(r), where=r > 0)
        beta = np.arccos(np.clip(c, -1.0, 1.0))
        gap = self.half_angle - beta
        d = np.where(gap >= np.pi / 2, r, r * np.sin(np.maximum(gap, 0.0)))
        return np.where(gap > 0, d, 0.0)


@dataclass(frozen=True)
class Slit:
    """Omega = R^2 minus a closed segment; the complement has empty interior."""

    a: tuple = (0.0, 0.0)
    b: tuple = (0.9, 0.0)

    @property
    def name(self):
        return "slit"

    def _segment_dist(self, pts):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        ab = b - a
        t = np.clip(((pts - a) @ ab) / (ab @ ab), 0.0, 1.0)
        proj = a + t[..., None] * ab
        return np.sqrt(np.sum((pts - proj) ** 2, axis=-1))

    def inside(self, pts):
        return self._segment_dist(pts) > 1e-9

    def dist_analytic(self, pts):
        return self._segment_dist(pts)


@dataclass(frozen=True)
class Annulus:
    """Omega = {r_inner < |x| < r_outer} with r_outer >= 1, so B1 minus Omega is a ball."""

    r_inner: float = 0.25
    r_outer: float = 2.0

    def __post_init__(self):
        if not (0 < self.r_inner < 1 <= self.r_outer):
            raise ValueError("need 0 < r_inner < 1 <= r_outer")

    @property
    def name(self):
        return "annulus"

    def inside(self, pts):
        r = np.sqrt(np.sum(pts * pts, axis=-1))
        return (r > self.r_inner) & (r < self.r_outer)

    def dist_analytic(self, pts):
        r = np.sqrt(np.sum(pts * pts, axis=-1))
        return np.maximum(r - self.r_inner, 0.0)


@dataclass(frozen=True, eq=False)
class Custom:
    """Arbitrary open set given by a node indicator, interpreted at grid resolution."""

    indicator: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"

    def inside(self, pts):
        return np.asarray(self.indicator(pts), dtype=bool)

    dist_analytic = None


# ---------------------------------------------------------------------------
# domain masks

@dataclass(eq=False)
class DomainMask:
    grid: Grid
    shape: object
    labels: np.ndarray  # int8 per node
    dist: np.ndarray  # distance to B1 \ Omega per node
    interior_balls: dict  # scale r -> (center, rho) with B_{2 rho r}(center) in Omega cap B_{r/2}

    def interior_idx(self) -> np.ndarray:
        return np.flatnonzero(self.labels == INTERIOR)

    def zero_idx(self) -> np.ndarray:
        return np.flatnonzero(self.labels == ZERO)

    def data_idx(self) -> np.ndarray:
        return np.flatnonzero(self.labels == DATA)

    def to_csv(self, path) -> None:
        nodes = self.grid.nodes()
        with open(path, "w") as fh:
            cols = ",".join(f"x{i}" for i in range(self.grid.dim))
            fh.write(f"{cols},label,dist\n")
            for p, lab, d in zip(nodes, self.labels, self.dist):
                coords = ",".join(repr(float(c)) for c in p)
                fh.write(f"{coords},{_LABEL_NAMES[int(lab)]},{repr(float(d))}\n")


def _check_origin_on_boundary(shape, dim: int) -> None:
    origin = np.zeros((1, dim))
    if shape.inside(origin)[0]:
        raise ValueError(f"{shape.name}: the origin must lie on the boundary, not inside")
    if isinstance(shape, LipschitzGraph):
        if abs(float(np.asarray(shape.profile(np.array([0.0]))).ravel()[0])) > 1e-12:
            raise ValueError("graph profile must vanish at 0 so that 0 lies on the boundary")


def build_domain(grid: Grid, shape, ball_scales=None) -> DomainMask:
    """Label nodes and certify interior balls at dyadic scales.

    The certificate at scale r is the node x_r and radius fraction rho
    maximizing min(dist to the complement, r/2 - |x_r|); the ball
    B_{2 rho r}(x_r) is re-checked against the node labels.
    """
    if isinstance(shape, (LipschitzGraph, Cone, Slit)) and grid.dim != 2:
        raise ValueError(f"{shape.name} domains require dim=2")
    if isinstance(shape, (LipschitzGraph, Cone)):
        _check_origin_on_boundary(shape, grid.dim)

    nodes = grid.nodes()
    r = np.sqrt(np.sum(nodes * nodes, axis=-1))
    inside = shape.inside(nodes)
    labels = np.full(grid.n_nodes, DATA, dtype=np.int8)
    in_b1 = r < 1.0 - 1e-12
    labels[in_b1 & inside] = INTERIOR
    labels[in_b1 & ~inside] = ZERO

    # d(x) = dist(x, B1 \ Omega): the analytic distance to the complement
    # where the shape provides one (a lower bound, since B1 \ Omega is a
    # subset of the complement, so certificates stay safe); otherwise the
    # distance to zero-labeled nodes, chunked to keep memory flat
    if getattr(shape, "dist_analytic", None) is not None:
        dist = np.asarray(shape.dist_analytic(nodes), dtype=float)
    else:
        dist = np.full(grid.n_nodes, np.inf)
        zidx = np.flatnonzero(labels == ZERO)
        znodes = nodes[zidx]
        for start in range(0, grid.n_nodes, 4096):
            blk = nodes[start:start + 4096]
            if zidx.size:
                d2 = np.sum((blk[:, None, :] - znodes[None, :, :]) ** 2, axis=-1)
                dist[start:start + 4096] = np.sqrt(d2.min(axis=1))
    dist[labels == ZERO] = 0.0

    # interior-ball certificates by exhaustive node search
    balls = {}
    if ball_scales is None:
        ball_scales = []
        scale = 1.0
        while scale >= 8 * grid.spacing - 1e-12:
            ball_scales.append(scale)
            scale /= 2
    for scale in ball_scales:
        cand = np.flatnonzero((labels == INTERIOR) & (r <= scale / 2))
        if cand.size == 0:
            raise InteriorBallError(scale, shape.name)
        radius = np.minimum(dist[cand], scale / 2 - r[cand])
        best = int(np.argmax(radius))
        if radius[best] <= 0:
            raise InteriorBallError(scale, shape.name)
        center = nodes[cand[best]]
        rho = float(radius[best]) / (2 * scale)
        covered = np.sqrt(np.sum((nodes - center) ** 2, axis=-1)) < 2 * rho * scale
        if not np.all(labels[covered] == INTERIOR):
            raise InteriorBallError(scale, shape.name)
        balls[scale] = (center.copy(), rho)

    return DomainMask(grid=grid, shape=shape, labels=labels, dist=dist,
                      interior_balls=balls)


def dist_to_complement(mask: DomainMask, x) -> float:
    return float(mask.dist[mask.grid.node_index(np.asarray(x, dtype=float))])


# ---------------------------------------------------------------------------
# weighted mass against 1/(1 + |x|^(n+2s))

def _mass_weight(pts: np.ndarray, two_s: float) -> np.ndarray:
    n = pts.shape[-1]
    r = np.sqrt(np.sum(pts * pts, axis=-1))
    return 1.0 / (1.0 + r ** (n + two_s))

def _probe_growth(exterior: Formula, dim: int, box_edge: float) -> float:
    """Empirical growth exponent of the exterior formula along sample rays."""
    if dim == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        th = np.linspace(0, 2 * np.pi, 16, endpoint=False)
        dirs = np.stack([np.cos(th), np.sin(th)], axis=-1)
    radii = box_edge * 2.0 ** np.arange(1, 7)
    peaks = np.array([np.max(np.abs(exterior(rr * dirs))) for rr in radii])
    if np.all(peaks < 1e-300):
        return -np.inf
    good = peaks > 1e-300
    if good.sum() < 2:
        return 0.0
    slope = np.polyfit(np.log(radii[good]), np.log(peaks[good]), 1)[0]
    return float(slope)


def weighted_mass(grid: Grid, u: GridFunction, s: float, absolute: bool = False) -> float:
    """Midpoint-rule integral of u against 1/(1+|x|^(n+2s)), plus the exterior tail.

    The box part covers the node cells, a square of half width
    half_width + h/2; a Formula exterior is integrated beyond that square by
    adaptive quadrature along rays (exactly, for the radial direction).
    """
    two_s = 2.0 * s
    nodes = grid.nodes()
    vals = np.abs(u.values) if absolute else u.values
    box = grid.spacing**grid.dim * float(np.sum(vals * _mass_weight(nodes, two_s)))

    if isinstance(u.exterior, Zero):
        return box
    edge = grid.half_width + grid.spacing / 2
    growth = _probe_growth(u.exterior, grid.dim, edge)
    if growth >= two_s - 0.01:
        raise DivergentMassError(growth, two_s)

    g = u.exterior
    if grid.dim == 1:
        def integrand(t, sgn):
            p = np.array([[sgn * t]])
            v = float(g(p)[0])
            if absolute:
                v = abs(v)
            return v / (1.0 + t ** (1 + two_s))

        tail = 0.0
        for sgn in (1.0, -1.0):
            val, _ = integrate.quad(integrand, edge, np.inf, args=(sgn,), limit=200)
            tail += val
        return box + tail

    # 2D: trapezoid in angle, adaptive quadrature along each ray beyond the square
    J = 256
    th = (np.arange(J) + 0.5) * (2 * np.pi / J)
    tail = 0.0
    for t in th:
        d = np.array([np.cos(t), np.sin(t)])
        rho = edge / max(abs(d[0]), abs(d[1]))

        def integrand(rr):
            v = float(g(np.array([rr * d]))[0])
            if absolute:
                v = abs(v)
            return v * rr / (1.0 + rr ** (2 + two_s))

        val, _ = integrate.quad(integrand, rho, np.inf, limit=200)
        tail += val * (2 * np.pi / J)
    return box + tail


def normalize(grid: Grid, u: GridFunction, s: float) -> GridFunction:
    """Scale u so its weighted mass is exactly 1; exterior formula scales too."""
    mass = weighted_mass(grid, u, s)
    if not mass > 0:
        raise ValueError(f"cannot normalize: weighted mass is {mass!r}")
    if isinstance(u.exterior, Zero):
        ext = Zero()
    else:
        base = u.exterior
        ext = Formula(lambda p, b=base, m=mass: b(p) / m,
                      name=base.name + "_normalized", params=base.params + (mass,))
    return GridFunction(grid, u.values / mass, ext)
