"""Grids, node labels, interior-ball certificates, weighted mass, distances."""
import numpy as np
import pytest

from nlharnack import (
    Annulus,
    Cone,
    Custom,
    DATA,
    DivergentMassError,
    GridFunction,
    HalfSpace,
    INTERIOR,
    InteriorBallError,
    Slit,
    ZERO,
    build_domain,
    build_grid,
    dist_to_complement,
    grid_function,
    indicator_interval,
    normalize,
    sawtooth_profile,
    vee_profile,
    weighted_mass,
)
from conftest import line_shape


# ---------------------------------------------------------------------------
# grid construction


def test_node_counts():
    assert build_grid(1, 2.0, 0.5).n_nodes == 9
    assert build_grid(2, 1.0, 0.5).n_nodes == 25
    g = build_grid(2, 2.0, 2.0 ** -4)
    assert g.n_nodes == (2 * 32 + 1) ** 2


def test_bad_grid_parameters():
    with pytest.raises(ValueError):
        build_grid(1, 2.0, -0.1)
    with pytest.raises(ValueError):
        build_grid(3, 2.0, 0.5)
    with pytest.raises(ValueError):
        build_grid(1, 0.5, 0.1)


def test_origin_is_a_node_and_order_deterministic():
    g = build_grid(2, 2.0, 0.5)
    nodes = g.nodes()
    assert np.any(np.all(nodes == 0.0, axis=-1))
    again = build_grid(2, 2.0, 0.5).nodes()
    assert np.array_equal(nodes, again)


def test_grid_function_rejects_non_finite_values():
    g = build_grid(1, 2.0, 0.5)
    vals = np.zeros(g.n_nodes)
    vals[3] = np.nan
    with pytest.raises(ValueError):
        GridFunction(g, vals)


# ---------------------------------------------------------------------------
# labels


def test_halfspace_labels_1d():
    g = build_grid(1, 2.0, 0.25)
    m = build_domain(g, HalfSpace((1.0,)))
    x = g.nodes()[:, 0]
    assert np.array_equal(m.labels == INTERIOR, (x > 0) & (x < 1))
    assert np.array_equal(m.labels == ZERO, (x > -1) & (x <= 0))
    assert np.array_equal(m.labels == DATA, np.abs(x) >= 1)


def test_labels_partition_the_grid():
    g = build_grid(2, 2.0, 2.0 ** -4)
    for shape in (HalfSpace((0.0, 1.0)), sawtooth_profile(1.0, 0.5), Slit(),
                  Cone((0.0, 1.0), 0.5)):
        m = build_domain(g, shape)
        assert np.all(np.isin(m.labels, (INTERIOR, ZERO, DATA)))
        r = np.sqrt(np.sum(g.nodes() ** 2, axis=-1))
        assert np.all(r[m.labels == INTERIOR] < 1.0)
        assert np.all(r[m.labels == ZERO] < 1.0)
        assert np.all(r[m.labels == DATA] >= 1.0)


def test_cone_eta_zero_is_a_half_plane():
    g = build_grid(2, 2.0, 2.0 ** -4)
    mc = build_domain(g, Cone((0.0, 1.0), 0.0))
    mh = build_domain(g, HalfSpace((0.0, 1.0)))
    assert np.array_equal(mc.labels, mh.labels)


def test_annulus_has_a_hole():
    g = build_grid(1, 2.0, 2.0 ** -5)
    # scales below 2 * r_inner have no interior candidates near the origin,
    # so certificates are only requested at the unit scale
    m = build_domain(g, Annulus(0.25, 1.5), ball_scales=[1.0])
    x = np.abs(g.nodes()[:, 0])
    assert np.all(m.labels[(x < 0.25 - 1e-12)] == ZERO)
    assert np.all(m.labels[(x > 0.25 + 1e-12) & (x < 1.0 - 1e-12)] == INTERIOR)
    with pytest.raises(InteriorBallError):
        build_domain(g, Annulus(0.25, 1.5), ball_scales=[0.5])


# ---------------------------------------------------------------------------
# interior-ball certificates


def test_vee_profile_has_unit_scale_ball():
    g = build_grid(2, 2.0, 2.0 ** -5)
    m = build_domain(g, vee_profile(1.0))
    center, rho = m.interior_balls[1.0]
    assert rho >= 0.09


@pytest.mark.parametrize("shape_fn", [lambda: HalfSpace((0.0, 1.0)),
                                      lambda: sawtooth_profile(1.0, 0.5),
                                      lambda: vee_profile(1.0)])
def test_ball_certificates_validate_against_labels(shape_fn):
    g = build_grid(2, 2.0, 2.0 ** -5)
    m = build_domain(g, shape_fn())
    nodes = g.nodes()
    r = np.sqrt(np.sum(nodes ** 2, axis=-1))
    assert m.interior_balls, "no certificates computed"
    for scale, (center, rho) in m.interior_balls.items():
        if scale < 8 * g.spacing:
            continue
        # the certificate is an open ball: nodes exactly on the touching
        # sphere may carry other labels
        inside = np.sqrt(np.sum((nodes - center) ** 2, axis=-1)) < 2 * rho * scale
        assert np.all(m.labels[inside] == INTERIOR), f"ball at scale {scale}"
        assert np.all(r[inside] <= scale / 2 + 1e-12), f"ball at scale {scale}"


# ---------------------------------------------------------------------------
# weighted mass and normalization


def test_mass_of_zero_is_zero(line6):
    grid, _, _ = line6
    assert weighted_mass(grid, grid_function(grid, 0.0), 0.5) == 0.0


def test_mass_of_global_one_is_pi(line6):
    grid, _, _ = line6
    u = grid_function(grid, 1.0, exterior="formula")
    assert weighted_mass(grid, u, 0.5) == pytest.approx(np.pi, abs=1e-4)


def test_mass_of_window_indicator(line6):
    grid, _, _ = line6
    gf = indicator_interval(1.0, 2.0)
    u = GridFunction(grid, np.asarray(gf(grid.nodes()), dtype=float), gf)
    exact = np.arctan(2.0) - np.arctan(1.0)
    assert weighted_mass(grid, u, 0.5) == pytest.approx(exact, abs=0.02)


def test_mass_is_linear(line6):
    grid, _, _ = line6
    rng = np.random.default_rng(3)
    for _ in range(5):
        va = rng.uniform(0, 1, grid.n_nodes)
        vb = rng.uniform(0, 1, grid.n_nodes)
        a, b = rng.uniform(0.1, 3, size=2)
        ma = weighted_mass(grid, GridFunction(grid, va), 0.5)
        mb = weighted_mass(grid, GridFunction(grid, vb), 0.5)
        mab = weighted_mass(grid, GridFunction(grid, a * va + b * vb), 0.5)
        assert mab == pytest.approx(a * ma + b * mb, rel=1e-12)


def test_normalize_unit_mass_and_idempotence(line6):
    grid, _, _ = line6
    u = grid_function(grid, lambda p: np.exp(-p[..., 0] ** 2))
    n1 = normalize(grid, u, 0.5)
    assert weighted_mass(grid, n1, 0.5) == pytest.approx(1.0, rel=1e-12)
    n2 = normalize(grid, n1, 0.5)
    assert np.max(np.abs(n2.values - n1.values)) <= 1e-12 * np.max(n1.values)


def test_normalize_halves_mass_two(line6):
    grid, _, _ = line6
    u = grid_function(grid, lambda p: np.exp(-p[..., 0] ** 2))
    m = weighted_mass(grid, u, 0.5)
    doubled = GridFunction(grid, (2.0 / m) * u.values)
    n = normalize(grid, doubled, 0.5)
    assert np.allclose(n.values, doubled.values / 2.0, rtol=1e-12)


def test_normalize_zero_rejected(line6):
    grid, _, _ = line6
    with pytest.raises(ValueError):
        normalize(grid, grid_function(grid, 0.0), 0.5)


def test_fast_growing_exterior_rejected(line6):
    grid, _, _ = line6
    u = grid_function(grid, lambda p: (1 + np.abs(p[..., 0])) ** 2,
                      exterior="formula")
    with pytest.raises(DivergentMassError):
        weighted_mass(grid, u, 0.5)


# ---------------------------------------------------------------------------
# distance to the complement


def test_dist_halfspace_examples():
    g = build_grid(1, 2.0, 0.1)
    m = build_domain(g, HalfSpace((1.0,)))
    assert dist_to_complement(m, np.array([0.3])) == pytest.approx(0.3)
    assert dist_to_complement(m, np.array([-0.5])) == 0.0
    assert np.all(m.dist[m.labels == ZERO] == 0.0)
    assert np.all(m.dist[m.labels == INTERIOR] > 0.0)


def test_cone_dist_matches_node_search():
    g = build_grid(2, 2.0, 2.0 ** -5)
    m = build_domain(g, Cone((0.0, 1.0), 2.0))
    nodes = g.nodes()
    zero_nodes = nodes[m.labels == ZERO]
    interior = np.flatnonzero(m.labels == INTERIOR)
    rng = np.random.default_rng(1)
    for i in rng.choice(interior, size=25, replace=False):
        brute = np.min(np.sqrt(np.sum((zero_nodes - nodes[i]) ** 2, axis=-1)))
        assert m.dist[i] <= brute + 1e-12
        assert m.dist[i] >= brute - np.sqrt(2) * g.spacing
