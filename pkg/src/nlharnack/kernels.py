"""Jump kernels comparable to |y|^(-n-2s) and their ellipticity classes.

A kernel is specified by a fractional order s, a pair of ellipticity
bounds 0 < lambda <= Lambda, and a multiplier a with
lambda <= a <= Lambda, so that the density is

    K(x, y) = a(x, y) / |y|^(n + 2s),        K(x, y) = K(x, -y).

The fractional Laplacian here means a == 1 (no normalizing prefactor in
front of the integral; this convention is stated once in the README).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "FractionalOrder",
    "EllipticityBounds",
    "FractionalLaplacian",
    "SymmetricMultiplier",
    "XDependentMultiplier",
    "KernelSpec",
    "DriftSpec",
    "DriftValidity",
    "kernel_density",
    "validate_drift",
    "constant_multiplier",
    "radial_step_multiplier",
    "angular_step_multiplier",
    "checkerboard_multiplier",
    "kernel_to_config",
    "kernel_from_config",
]


@dataclass(frozen=True)
class FractionalOrder:
    """Order s of the operator; the kernel singularity is |y|^(-n-2s)."""

    s: float

    def __post_init__(self):
        if not (0.0 < self.s < 1.0):
            raise ValueError(f"fractional order must lie in (0,1), got s={self.s}")

    @property
    def two_s(self) -> float:
        return 2.0 * self.s


@dataclass(frozen=True)
class EllipticityBounds:
    lam: float
    Lam: float

    def __post_init__(self):
        if not (0.0 < self.lam <= self.Lam):
            raise ValueError(
                f"need 0 < lambda <= Lambda, got lambda={self.lam}, Lambda={self.Lam}"
            )


@dataclass(frozen=True)
class FractionalLaplacian:
    """Multiplier a == 1.  Admissible only when lambda <= 1 <= Lambda."""


@dataclass(frozen=True, eq=False)
class SymmetricMultiplier:
    """x-independent multiplier a(y), even in y, valued in [lambda, Lambda]."""

    fn: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"
    params: tuple = ()


@dataclass(frozen=True, eq=False)
class XDependentMultiplier:
    """Multiplier a(x, y), even in y for each x, valued in [lambda, Lambda].

    x_only marks multipliers that ignore y entirely; solvers exploit this
    (a(x) only rescales equation rows).
    """

    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    name: str = "custom"
    params: tuple = ()
    x_only: bool = False


@dataclass(frozen=True)
class KernelSpec:
    order: FractionalOrder
    bounds: EllipticityBounds
    variant: FractionalLaplacian | SymmetricMultiplier | XDependentMultiplier = field(
        default_factory=FractionalLaplacian
    )

    def __post_init__(self):
        if isinstance(self.variant, FractionalLaplacian):
            if not (self.bounds.lam <= 1.0 <= self.bounds.Lam):
                raise ValueError(
                    "a == 1 violates the ellipticity sandwich unless "
                    f"lambda <= 1 <= Lambda (got {self.bounds})"
                )

    @property
    def translation_invariant(self) -> bool:
        return not isinstance(self.variant, XDependentMultiplier)

    def multiplier(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Evaluate a(x, y); x and y broadcast over their leading axes.

        Both arguments carry the spatial dimension on the last axis.  The
        result has the broadcast shape of the leading axes.
        """
        y = np.asarray(y, dtype=float)
        if isinstance(self.variant, FractionalLaplacian):
            shape = np.broadcast_shapes(np.shape(x)[:-1], y.shape[:-1])
            return np.ones(shape)
        if isinstance(self.variant, SymmetricMultiplier):
            vals = np.asarray(self.variant.fn(y), dtype=float)
            shape = np.broadcast_shapes(np.shape(x)[:-1], y.shape[:-1])
            return np.broadcast_to(vals, shape)
        vals = np.asarray(self.variant.fn(np.asarray(x, dtype=float), y), dtype=float)
        return vals

    def validate(self, dim: int, n_samples: int = 10_000, seed: int = 0) -> None:
        """Sample (x, y) pairs and verify the sandwich and evenness in y.

        Multipliers are arbitrary callables, so admissibility can only be
        checked by sampling; raises ValueError on the first violation.
        """
        rng = np.random.default_rng(seed)
        x = rng.uniform(-2.0, 2.0, size=(n_samples, dim))
        y = rng.uniform(-3.0, 3.0, size=(n_samples, dim))
        y[np.all(y == 0.0, axis=-1)] = 1.0
        a = self.multiplier(x, y)
        lam, Lam = self.bounds.lam, self.bounds.Lam
        if np.any(a < lam - 1e-12) or np.any(a > Lam + 1e-12):
            bad = int(np.argmax((a < lam - 1e-12) | (a > Lam + 1e-12)))
            raise ValueError(
                f"multiplier leaves [{lam}, {Lam}] at x={x[bad]}, y={y[bad]}: a={a[bad]}"
            )
        a_neg = self.multiplier(x, -y)
        if not np.array_equal(a, a_neg):
            bad = int(np.argmax(a != a_neg))
            raise ValueError(f"multiplier not even in y at x={x[bad]}, y={y[bad]}")


def kernel_density(spec: KernelSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Density K(x, y) = a(x, y) / |y|^(n+2s); y must be nonzero.

    The spatial dimension n is read off the last axis of y.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    n = y.shape[-1]
    r2 = np.sum(y * y, axis=-1)
    if np.any(r2 == 0.0):
        raise ValueError("kernel density is undefined at the zero offset")
    a = spec.multiplier(np.asarray(x, dtype=float), y)
    return a * r2 ** (-0.5 * (n + spec.order.two_s))


# ---------------------------------------------------------------------------
# built-in multipliers (named, so kernel specs round-trip through configs)

def constant_multiplier(c: float) -> SymmetricMultiplier:
    def fn(y):
        return np.full(y.shape[:-1], float(c))

    return SymmetricMultiplier(fn, name="constant", params=(float(c),))


def radial_step_multiplier(inner: float, outer: float, radius: float = 1.0) -> SymmetricMultiplier:
    """a(y) = inner for |y| <= radius, outer beyond."""

    def fn(y):
        r = np.sqrt(np.sum(y * y, axis=-1))
        return np.where(r <= radius, float(inner), float(outer))

    return SymmetricMultiplier(fn, name="radial_step", params=(float(inner), float(outer), float(radius)))


def angular_step_multiplier(lo: float, hi: float, axis: int = 0, threshold: float = 0.5) -> SymmetricMultiplier:
    """a(y) = hi where (y_axis / |y|)^2 > threshold, lo elsewhere.

    Even in y because only the squared direction cosine enters.
    """

    def fn(y):
        r2 = np.sum(y * y, axis=-1)
        c2 = np.where(r2 > 0, y[..., axis] ** 2 / np.where(r2 > 0, r2, 1.0), 0.0)
        return np.where(c2 > threshold, float(hi), float(lo))

    return SymmetricMultiplier(fn, name="angular_step", params=(float(lo), float(hi), int(axis), float(threshold)))


def checkerboard_multiplier(lo: float, hi: float, period: float = 0.25) -> XDependentMultiplier:
    """a(x, y) = lo or hi by the parity of the cell of x; independent of y."""

    def fn(x, y):
        cells = np.floor(np.asarray(x, dtype=float) / period).astype(np.int64)
        parity = np.sum(cells, axis=-1) % 2
        vals = np.where(parity == 0, float(lo), float(hi))
        shape = np.broadcast_shapes(vals.shape, np.shape(y)[:-1])
        return np.broadcast_to(vals, shape)

    return XDependentMultiplier(fn, name="checkerboard",
                                params=(float(lo), float(hi), float(period)), x_only=True)


_MULTIPLIER_BUILDERS = {
    "constant": constant_multiplier,
    "radial_step": radial_step_multiplier,
    "angular_step": angular_step_multiplier,
    "checkerboard": checkerboard_multiplier,
}


def kernel_to_config(spec: KernelSpec) -> dict:
    d = {"s": spec.order.s, "lambda": spec.bounds.lam, "Lambda": spec.bounds.Lam}
    v = spec.variant
    if isinstance(v, FractionalLaplacian):
        d["variant"] = "fractional_laplacian"
    else:
        d["variant"] = v.name
        d["params"] = list(v.params)
        if v.name == "custom":
            raise ValueError("custom multipliers are not serializable; use a named builder")
    return d


def kernel_from_config(d: dict) -> KernelSpec:
    order = FractionalOrder(float(d["s"]))
    bounds = EllipticityBounds(float(d.get("lambda", 1.0)), float(d.get("Lambda", 1.0)))
    name = d.get("variant", "fractional_laplacian")
    if name == "fractional_laplacian":
        variant = FractionalLaplacian()
    else:
        try:
            builder = _MULTIPLIER_BUILDERS[name]
        except KeyError:
            raise ValueError(f"unknown kernel variant {name!r}") from None
        variant = builder(*d.get("params", ()))
    return KernelSpec(order, bounds, variant)


# ---------------------------------------------------------------------------
# drift class (symmetric kernels plus a bounded drift vector; the
# compensator integral of a symmetric kernel vanishes identically, so the
# admissibility condition reduces to |b| <= beta and s >= 1/2)

@dataclass(frozen=True)
class DriftSpec:
    base: KernelSpec
    b: tuple
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "b", tuple(float(c) for c in self.b))


@dataclass(frozen=True)
class DriftValidity:
    valid: bool
    violations: tuple


def validate_drift(spec: DriftSpec) -> DriftValidity:
    """Check the drift-class membership conditions, reporting all failures."""
    violations = []
    if spec.base.order.s < 0.5:
        violations.append("order below 1/2")
    if isinstance(spec.base.variant, XDependentMultiplier):
        violations.append("drift requires a symmetric (x-independent) kernel")
    if spec.beta < 0:
        violations.append("beta must be nonnegative")
    bnorm = float(np.linalg.norm(spec.b))
    if bnorm > spec.beta:
        violations.append(f"drift bound: |b|={bnorm:g} exceeds beta={spec.beta:g}")
    return DriftValidity(valid=not violations, violations=tuple(violations))
