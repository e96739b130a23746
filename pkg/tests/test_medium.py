import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinhall.errors import ConfigError
from spinhall.medium import (CallableMedium, MediumModel, eval_eps_mu_jet, eval_log_index_jet,
                             medium_from_dict, near_homogeneity_defect)

from conftest import builtin_media


def fd_log_jet(medium, x, h=1e-4):
    """4th-order central differences of ln n, nested for the higher orders."""
    f = lambda y: math.log(medium.index(y))

    def d1(fn, y):
        out = np.zeros(3)
        for a in range(3):
            e = np.zeros(3)
            e[a] = h
            out[a] = (-fn(y + 2 * e) + 8 * fn(y + e) - 8 * fn(y - e) + fn(y - 2 * e)) / (12 * h)
        return out

    g = d1(f, x)
    jet = eval_log_index_jet(medium, x)
    # differentiate the analytic lower order to get the next one
    H = np.array([d1(lambda y, b=b: eval_log_index_jet(medium, y).grad[b], x) for b in range(3)])
    T = np.array([[d1(lambda y, b=b, c=c: eval_log_index_jet(medium, y).hess[b, c], x)
                   for c in range(3)] for b in range(3)])
    return jet, g, H, T


def _rel(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-3)


def test_homogeneous_jet_is_trivial():
    m = MediumModel("homogeneous")
    jet = eval_log_index_jet(m, np.array([3.0, -1.0, 2.0]))
    assert jet.n == 1.0
    assert not np.any(jet.grad) and not np.any(jet.hess) and not np.any(jet.third)
    em = eval_eps_mu_jet(m, np.zeros(3))
    assert (em.eps, em.mu) == (1.0, 1.0)
    assert not np.any(em.grad_ln_eps) and not np.any(em.grad_ln_mu)


def test_exp_gradient_jet():
    m = MediumModel("exp_gradient", n_left=1.0, alpha=0.1, axis=(0.0, 1.0, 0.0))
    jet = eval_log_index_jet(m, np.zeros(3))
    np.testing.assert_array_equal(jet.grad, [0.0, 0.1, 0.0])
    assert not np.any(jet.hess) and not np.any(jet.third)


def test_tanh_slab_gradient_matches_finite_differences():
    m = MediumModel("tanh_slab", n_left=1.0, n_right=1.5, axis=(0.0, 1.0, 0.0), center=0.0, width=1.0)
    jet, g, _, _ = fd_log_jet(m, np.zeros(3))
    assert np.max(np.abs(jet.grad - g)) < 1e-6 * np.linalg.norm(g)
    assert jet.grad[1] > 0 and jet.grad[0] == 0.0


def test_eps_gradient_is_twice_log_index_gradient():
    m = MediumModel("tanh_slab", axis=(0.0, 0.6, 0.8), center=0.2)
    x = np.array([0.4, -0.3, 1.1])
    em = eval_eps_mu_jet(m, x)
    assert np.max(np.abs(em.grad_ln_eps - 2 * eval_log_index_jet(m, x).grad)) < 1e-12
    assert not np.any(em.grad_ln_mu)


def test_near_homogeneity_defect():
    assert near_homogeneity_defect(MediumModel("homogeneous"), np.zeros(3)) == 0.0
    slab = MediumModel("tanh_slab", center=0.0, width=2.0)
    assert near_homogeneity_defect(slab, np.zeros(3)) > 0
    # 10 widths out; the width-1 slab misses 1e-8 (see the decisions ledger)
    assert near_homogeneity_defect(slab, np.array([-20.0, 0, 0])) < 1e-8
    narrow = MediumModel("tanh_slab", center=0.0, width=1.0)
    assert 1e-8 < near_homogeneity_defect(narrow, np.array([-10.0, 0, 0])) < 2e-8


@pytest.mark.parametrize("medium", builtin_media(), ids=lambda m: m.kind)
def test_analytic_jet_matches_finite_differences(medium):
    pts = np.random.default_rng(7).uniform(-2, 2, size=(100, 3))
    for x in pts:
        jet, g, H, T = fd_log_jet(medium, x)
        assert _rel(jet.grad, g) < 1e-6
        assert _rel(jet.hess, H) < 1e-6
        assert _rel(jet.third, T) < 1e-6


@pytest.mark.parametrize("medium", builtin_media(), ids=lambda m: m.kind)
def test_third_derivative_fully_symmetric(medium):
    t = eval_log_index_jet(medium, np.array([0.3, -0.7, 0.2])).third
    for perm in ((0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)):
        assert np.max(np.abs(t - t.transpose(perm))) <= 1e-15 * max(1.0, np.max(np.abs(t)))


def test_callable_medium_matches_closed_form():
    ref = MediumModel("gaussian_lens", n_left=1.1, amplitude=0.3, sigma=1.3)
    cm = CallableMedium(ref.index)
    for x in np.random.default_rng(3).uniform(-1.5, 1.5, size=(10, 3)):
        a, b = ref.log_index_jet(x), cm.log_index_jet(x)
        assert abs(a.n - b.n) < 1e-14
        assert _rel(b.grad, a.grad) < 1e-8
        assert _rel(b.hess, a.hess) < 1e-6
        assert _rel(b.third, a.third) < 1e-6


@pytest.mark.parametrize("kw, key", [
    ({"kind": "glass"}, "kind"),
    ({"kind": "tanh_slab", "axis": (1.0, 1.0, 0.0)}, "axis"),
    ({"kind": "tanh_slab", "width": -1.0}, "width"),
    ({"kind": "tanh_slab", "n_left": 0.8}, "n >= 1"),
    ({"kind": "homogeneous", "n_left": float("nan")}, "finite"),
])
def test_invalid_media_rejected(kw, key):
    with pytest.raises(ConfigError, match=key):
        medium_from_dict(kw)


def test_bad_evaluation_point():
    with pytest.raises(ConfigError):
        eval_log_index_jet(MediumModel(), np.array([np.inf, 0, 0]))


def test_vectorised_index_agrees_with_pointwise():
    pts = np.random.default_rng(1).normal(size=(20, 3))
    for m in builtin_media():
        np.testing.assert_allclose(m.index_values(pts), [m.index(x) for x in pts], rtol=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.floats(-30, 30), st.floats(0.2, 3.0), st.floats(1.0, 2.5), st.floats(1.0, 2.5))
def test_tanh_slab_bounded_between_plateaus(xi, w, nl, nr):
    m = MediumModel("tanh_slab", n_left=nl, n_right=nr, width=w, center=0.0)
    n = m.index(np.array([xi, 0.0, 0.0]))
    assert min(nl, nr) - 1e-12 <= n <= max(nl, nr) + 1e-12
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        jet = m.log_index_jet(np.array([xi, 0.0, 0.0]))
    assert np.all(np.isfinite(jet.third))
