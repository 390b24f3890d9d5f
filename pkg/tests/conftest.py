"""Shared helpers: tiny domains, kernels, and data-field construction."""
import numpy as np
import pytest

from nlharnack import (
    Custom,
    DATA,
    EllipticityBounds,
    FractionalLaplacian,
    FractionalOrder,
    GridFunction,
    KernelSpec,
    build_domain,
    build_grid,
    build_quadrature,
)


def line_shape():
    """All-true indicator; intersected with B1 it yields Omega = (-1, 1)."""
    return Custom(lambda p: np.ones(p.shape[:-1], dtype=bool), name="line")


def frac_kernel(s, lam=1.0, Lam=None):
    if Lam is None:
        Lam = lam
    return KernelSpec(FractionalOrder(s), EllipticityBounds(lam, Lam),
                      FractionalLaplacian())


def data_field(grid, mask, formula):
    """Grid function carrying `formula` on data nodes and zero elsewhere."""
    vals = np.asarray(formula(grid.nodes()), dtype=float)
    vals[mask.labels != DATA] = 0.0
    return GridFunction(grid, vals, formula)


@pytest.fixture(scope="session")
def line6():
    """1D interval domain at h = 2^-6 with an s = 1/2 table."""
    grid = build_grid(1, 2.0, 2.0 ** -6)
    mask = build_domain(grid, line_shape())
    table = build_quadrature(grid, 0.5, 2.0)
    return grid, mask, table
