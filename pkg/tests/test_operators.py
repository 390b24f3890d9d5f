"""Quadrature weights, pointwise evaluation against oracles, extremal algebra.

The x = 0.125 reference values are adaptive-quadrature integrals of
L u for u(t) = (1 - t^2)_+^5, computed independently of the package
(scipy.integrate.quad on the singular integral split at the kinks) and
frozen here.
"""
import numpy as np
import pytest

from nlharnack import (
    DriftSpec,
    EllipticityBounds,
    FractionalLaplacian,
    FractionalOrder,
    GridFunction,
    KernelSpec,
    build_grid,
    build_quadrature,
    constant_multiplier,
    eval_drift_pucci,
    eval_linear,
    eval_pucci_minus,
    eval_pucci_plus,
    grid_function,
)
from conftest import frac_kernel

BOUNDS = EllipticityBounds(1.0, 2.0)

# independently computed: L u4(0.125) for u4 = (1 - t^2)_+^5, kernel |y|^(-1-2s)
X125_REFS = {0.25: -6.662733509935, 0.5: -7.025146961193, 0.75: -13.842156778535}


def u4(p):
    return np.maximum(1.0 - p[..., 0] ** 2, 0.0) ** 5


# ---------------------------------------------------------------------------
# table construction


def test_first_cell_weight_closed_form():
    # 1D, s = 1/2: w for the offset y = h integrates y^-2 over [h/2, 3h/2]
    g = build_grid(1, 2.0, 2.0 ** -4)
    t = build_quadrature(g, 0.5, 2.0)
    k1 = np.flatnonzero(t.off_latt[:, 0] == 1)[0]
    assert t.weights[k1] == pytest.approx(4.0 / (3.0 * g.spacing), rel=1e-13)


def test_weights_positive_and_paired_2d():
    g = build_grid(2, 2.0, 1.0 / 32.0)
    t = build_quadrature(g, 0.75, 1.0)
    assert np.all(t.weights > 0.0)
    # offsets come in +- pairs carrying equal weight
    order = np.lexsort(t.off_latt.T)
    neg_order = np.lexsort((-t.off_latt).T)
    assert np.array_equal(t.off_latt[order], -t.off_latt[neg_order])
    assert np.allclose(t.weights[order], t.weights[neg_order], rtol=1e-14)


def test_second_moment_converges_to_integral():
    # sum w_k |y_k|^2 over |y_k| <= 1 approximates int_{-1}^{1} |y|^{1-2s} dy
    tolerances = {0.25: 0.02, 0.5: 0.02, 0.75: 0.05}
    for s, rtol in tolerances.items():
        g = build_grid(1, 2.0, 2.0 ** -7)
        t = build_quadrature(g, s, 2.0)
        assert t.second_moment == pytest.approx(2.0 / (2.0 - 2.0 * s), rel=rtol)


def test_consistency_magnitudes_frozen():
    # |second moment at h - at h/2|, regression-pinned from the build machine
    expected = {
        (0.25, 6): 0.008329, (0.5, 6): 0.007722, (0.75, 6): 0.051347,
        (0.25, 7): 0.004099, (0.5, 7): 0.003883, (0.75, 7): 0.037879,
    }
    for (s, lh), val in expected.items():
        t = build_quadrature(build_grid(1, 2.0, 2.0 ** -lh), s, 2.0)
        assert t.consistency == pytest.approx(val, abs=5e-5), (s, lh)
    # grid convergence: the gap shrinks under refinement
    for s in (0.25, 0.5, 0.75):
        assert expected[(s, 7)] < expected[(s, 6)]


def test_tail_radius_too_small_rejected():
    g = build_grid(1, 2.0, 2.0 ** -4)
    with pytest.raises(ValueError):
        build_quadrature(g, 0.5, 0.5)


# ---------------------------------------------------------------------------
# linear evaluation


def test_constant_field_evaluates_to_zero():
    g = build_grid(1, 2.0, 2.0 ** -5)
    t = build_quadrature(g, 0.5, 2.0)
    u = grid_function(g, 1.0, exterior="formula")
    X = g.nodes()[np.abs(g.nodes()[:, 0]) < 1]
    vals = eval_linear(t, frac_kernel(0.5), u, X)
    assert np.max(np.abs(vals)) == 0.0


def test_affine_field_evaluates_to_zero():
    g = build_grid(1, 2.0, 2.0 ** -5)
    t = build_quadrature(g, 0.5, 2.0)
    u = grid_function(g, lambda p: 3.0 * p[..., 0], exterior="formula")
    val = eval_linear(t, frac_kernel(0.5), u, np.array([0.25]))
    assert abs(val) <= 1e-9


def test_frozen_point_oracle_and_rates():
    for s, ref in X125_REFS.items():
        errs = []
        for lh in (6, 7, 8):
            g = build_grid(1, 2.0, 2.0 ** -lh)
            t = build_quadrature(g, s, 2.0)
            u = grid_function(g, u4)
            val = eval_linear(t, frac_kernel(s), u, np.array([0.125]))
            errs.append(abs(val - ref))
        assert errs[0] > errs[1] > errs[2], f"s={s}: no refinement gain"
        rate = np.log2(errs[1] / errs[2])
        # measured rates: 1.4 (s=.25, approaching 1.5), 2.0 (s=.5,
        # superconvergent at a dyadic point), 0.5 (s=.75, = 2-2s)
        lo, hi = {0.25: (1.0, 1.8), 0.5: (1.5, 2.5), 0.75: (0.3, 0.7)}[s]
        assert lo <= rate <= hi, f"s={s}: rate {rate}"
    # absolute accuracy at the finest grid tried
    finals = {0.25: 1e-3, 0.5: 3e-4, 0.75: 0.6}
    for s, tol in finals.items():
        g = build_grid(1, 2.0, 2.0 ** -8)
        t = build_quadrature(g, s, 2.0)
        val = eval_linear(t, frac_kernel(s), grid_function(g, u4), np.array([0.125]))
        assert abs(val - X125_REFS[s]) <= tol


def test_sqrt_profile_is_flat_inside():
    # L of (1 - x^2)_+^(1/2) at s = 1/2 is constant (= -pi for the bare kernel)
    g = build_grid(1, 2.0, 0.025)
    t = build_quadrature(g, 0.5, 2.0)
    u = grid_function(g, lambda p: np.sqrt(np.maximum(1 - p[..., 0] ** 2, 0.0)))
    v0 = eval_linear(t, frac_kernel(0.5), u, np.array([0.0]))
    v3 = eval_linear(t, frac_kernel(0.5), u, np.array([0.3]))
    assert abs(v0 - v3) / abs(v0) <= 1e-2
    assert v0 == pytest.approx(-np.pi, abs=0.01)


def test_translation_covariance():
    g = build_grid(1, 2.0, 2.0 ** -6)
    t = build_quadrature(g, 0.6, 1.0)
    k = frac_kernel(0.6)
    ua = grid_function(g, lambda p: np.exp(-4 * p[..., 0] ** 2), exterior="formula")
    ub = grid_function(g, lambda p: np.exp(-4 * (p[..., 0] - 0.25) ** 2),
                       exterior="formula")
    va = eval_linear(t, k, ua, np.array([0.125]))
    vb = eval_linear(t, k, ub, np.array([0.375]))
    assert abs(va - vb) <= 1e-6


def test_off_lattice_point_rejected():
    g = build_grid(1, 2.0, 2.0 ** -5)
    t = build_quadrature(g, 0.5, 2.0)
    u = grid_function(g, u4)
    with pytest.raises(ValueError):
        eval_linear(t, frac_kernel(0.5), u, np.array([0.1234]))


def test_order_mismatch_rejected():
    g = build_grid(1, 2.0, 2.0 ** -5)
    t = build_quadrature(g, 0.5, 2.0)
    u = grid_function(g, u4)
    with pytest.raises(ValueError):
        eval_linear(t, frac_kernel(0.6), u, np.array([0.25]))


def test_single_point_returns_float():
    g = build_grid(1, 2.0, 2.0 ** -5)
    t = build_quadrature(g, 0.5, 2.0)
    val = eval_linear(t, frac_kernel(0.5), grid_function(g, u4), np.array([0.125]))
    assert isinstance(val, float)


# ---------------------------------------------------------------------------
# extremal operators


def _random_setup(seed=0):
    rng = np.random.default_rng(seed)
    g = build_grid(1, 2.0, 2.0 ** -6)
    t = build_quadrature(g, 0.6, 2.0)
    u = GridFunction(g, rng.standard_normal(g.n_nodes))
    X = g.nodes()[np.abs(g.nodes()[:, 0]) < 1]
    return g, t, u, X


def test_extremal_ordering_exact():
    g, t, u, X = _random_setup()
    mp = eval_pucci_plus(t, BOUNDS, u, X)
    mm = eval_pucci_minus(t, BOUNDS, u, X)
    mid = KernelSpec(FractionalOrder(0.6), BOUNDS, constant_multiplier(1.3))
    lv = eval_linear(t, mid, u, X)
    assert np.all(mm <= lv)
    assert np.all(lv <= mp)


def test_negation_swaps_the_extremals_bit_exactly():
    g, t, u, X = _random_setup(1)
    mm = eval_pucci_minus(t, BOUNDS, u, X)
    mp_neg = eval_pucci_plus(t, BOUNDS, GridFunction(g, -u.values), X)
    assert np.array_equal(mp_neg, -mm)


def test_collapsed_bounds_reduce_to_linear():
    g, t, u, X = _random_setup(2)
    tight = EllipticityBounds(1.3, 1.3)
    mp = eval_pucci_plus(t, tight, u, X)
    mm = eval_pucci_minus(t, tight, u, X)
    lin = KernelSpec(FractionalOrder(0.6), BOUNDS, constant_multiplier(1.3))
    lv = eval_linear(t, lin, u, X)
    assert np.max(np.abs(mp - lv)) <= 1e-12
    assert np.max(np.abs(mm - lv)) <= 1e-12


def test_uniform_sign_selects_lambda():
    # u = |x|^2 has nonnegative second differences at 0 for every offset, so
    # the minimal operator uses the lower bound everywhere and matches the
    # a == lambda linear evaluation
    g = build_grid(1, 2.0, 2.0 ** -6)
    t = build_quadrature(g, 0.6, 2.0)
    u = grid_function(g, lambda p: p[..., 0] ** 2)
    lam_one = EllipticityBounds(1.0, 2.0)
    mm = eval_pucci_minus(t, lam_one, u, np.array([0.0]))
    lv = eval_linear(t, frac_kernel(0.6), u, np.array([0.0]))
    assert mm == pytest.approx(lv, rel=1e-14)
    assert mm > 0


def test_subadditivity():
    g, t, u, X = _random_setup(3)
    rng = np.random.default_rng(4)
    v = GridFunction(g, rng.standard_normal(g.n_nodes))
    w = GridFunction(g, u.values + v.values)
    assert np.all(eval_pucci_plus(t, BOUNDS, w, X)
                  <= eval_pucci_plus(t, BOUNDS, u, X)
                  + eval_pucci_plus(t, BOUNDS, v, X) + 1e-9)
    assert np.all(eval_pucci_minus(t, BOUNDS, w, X)
                  >= eval_pucci_minus(t, BOUNDS, u, X)
                  + eval_pucci_minus(t, BOUNDS, v, X) - 1e-9)


def test_positive_homogeneity():
    g, t, u, X = _random_setup(5)
    c = 3.7
    scaled = GridFunction(g, c * u.values)
    mp = eval_pucci_plus(t, BOUNDS, u, X)
    mp_c = eval_pucci_plus(t, BOUNDS, scaled, X)
    assert np.allclose(mp_c, c * mp, rtol=1e-10, atol=1e-12)


# ---------------------------------------------------------------------------
# drift variants


def test_drift_beta_zero_matches_pucci():
    g, t, u, X = _random_setup(6)
    base = KernelSpec(FractionalOrder(0.6), BOUNDS, constant_multiplier(1.0))
    spec = DriftSpec(base, (0.0,), 0.0)
    dv = eval_drift_pucci(t, spec, u, X, sign="plus")
    mp = eval_pucci_plus(t, BOUNDS, u, X)
    assert np.array_equal(dv, mp)


def test_drift_constant_field_is_zero():
    g = build_grid(1, 2.0, 2.0 ** -5)
    t = build_quadrature(g, 0.75, 2.0)
    base = KernelSpec(FractionalOrder(0.75), BOUNDS, constant_multiplier(1.0))
    u = grid_function(g, 1.0, exterior="formula")
    val = eval_drift_pucci(t, DriftSpec(base, (1.0,), 1.0), u,
                           np.array([0.25]), sign="plus")
    assert val == pytest.approx(0.0, abs=1e-12)


def test_drift_gradient_term_isolates():
    # for u(x) = x near 0 the drift adds exactly beta * |u'| = 1
    g = build_grid(1, 2.0, 2.0 ** -5)
    t = build_quadrature(g, 0.75, 2.0)
    base = KernelSpec(FractionalOrder(0.75), BOUNDS, constant_multiplier(1.0))
    u = grid_function(g, lambda p: np.clip(p[..., 0], -1.5, 1.5))
    x = np.array([0.0])
    with_drift = eval_drift_pucci(t, DriftSpec(base, (1.0,), 1.0), u, x, sign="plus")
    without = eval_pucci_plus(t, BOUNDS, u, x)
    assert with_drift - without == pytest.approx(1.0, abs=1e-10)


def test_drift_low_order_rejected():
    g = build_grid(1, 2.0, 2.0 ** -5)
    t = build_quadrature(g, 0.4, 2.0)
    base = KernelSpec(FractionalOrder(0.4), BOUNDS, constant_multiplier(1.0))
    u = grid_function(g, u4)
    with pytest.raises(ValueError):
        eval_drift_pucci(t, DriftSpec(base, (0.1,), 1.0), u,
                         np.array([0.0]), sign="plus")
