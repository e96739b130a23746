import os
import subprocess
import sys
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinhall import _kernels
from spinhall.beam_transport import h0_from_e0, sqrt_det_a_over_2pi_i
from spinhall.errors import ConfigError
from spinhall.moment_state import MomentState
from spinhall.moments_oracle import (GridSpec, compare_report, density_at, fields_from_sample,
                                     quadrature_moments)
from spinhall.spin_hall_dynamics import initial_augmented_state, integrate_beam
from spinhall.verification import check_moments

from conftest import slab_medium, slab_spec
from spinhall.medium import MediumModel

HOM = MediumModel("homogeneous", n_left=1.2)


def _launch(w=300.0, medium=HOM):
    aug, _ = initial_augmented_state(slab_spec(w), medium)
    return aug


def _u_v(aug, medium):
    e0 = aug.e0
    h0 = h0_from_e0(e0, aug.ray, medium, aug.c_gamma)
    n = medium.index(aug.ray.x)
    eps, mu = n**2 / medium.mu, medium.mu
    u = 0.25 * (eps * np.vdot(e0, e0).real + mu * np.vdot(h0, h0).real)
    v = 0.5 * n**2 * np.real(np.cross(e0, np.conj(h0)))
    return u, v, e0, h0, eps, mu


def test_density_at_centre_and_tail():
    w = 300.0
    aug = _launch(w)
    u, v, e0, h0, eps, mu = _u_v(aug, HOM)
    ed, sd = density_at(aug.ray.x, aug, w, medium=HOM)
    assert ed == w**1.5 * u
    np.testing.assert_array_equal(sd, w**1.5 * v)
    lam, U = np.linalg.eigh(aug.M.imag)
    x = aug.ray.x + 6.0 / np.sqrt(2 * w * lam[0]) * U[:, 0]
    assert density_at(x, aug, w, medium=HOM)[0] < np.exp(-36 / 2) * ed
    assert abs(eps * np.vdot(e0, e0) - mu * np.vdot(h0, h0)) < 1e-10 * abs(eps * np.vdot(e0, e0))


def test_quadrature_against_gaussian_closed_forms():
    # degree-0 densities at launch: every moment is a closed-form Gaussian integral
    for w in (100.0, 800.0):
        aug = _launch(w)
        u, v, *_ = _u_v(aug, HOM)
        A = 2j * aug.M.imag
        r = sqrt_det_a_over_2pi_i(A)
        E = u / r
        pred = MomentState(E, aug.ray.x, v / r, np.zeros(3), np.real(1j / w * E * np.linalg.inv(A)))
        orc = quadrature_moments(fields_from_sample(aug, HOM), w)
        rep = compare_report(pred, orc)
        for k in "EXPJQ":
            assert rep[k]["abs"] < 1e-6, (k, rep[k])
        assert rep["E"]["rel"] < 1e-6
        assert np.max(np.abs(orc.Q - pred.Q)) < 1e-6 * np.max(np.abs(orc.Q))
        assert np.linalg.norm(orc.X - aug.ray.x) < 1e-10


def test_oracle_along_trajectory():
    for c in check_moments(omegas=(200.0, 400.0), t_end=20.0, n_samples=4):
        assert c.passed, (c.name, c.values)


def test_compare_report_split():
    aug = _launch(400.0)
    orc = quadrature_moments(fields_from_sample(aug, HOM, amplitude_order=1), 400.0)
    rep = compare_report(aug.moments, orc, direction=slab_spec(400.0).direction)
    assert rep["J_split"]["s_from_J"] == 1.0
    assert rep["J"]["cos_angle"] > 0.99
    par = rep["J_split"]["parallel"]
    assert np.linalg.norm(rep["J_split"]["perpendicular"]) < 0.05 * abs(par)


def test_grid_spec_validation():
    with pytest.raises(ConfigError):
        GridSpec(points_per_axis=20)
    with pytest.raises(ConfigError):
        GridSpec(points_per_axis=22)
    with pytest.raises(ConfigError):
        GridSpec(half_width_sigmas=3.0)


def test_small_box_warns():
    aug = _launch(300.0)
    with pytest.warns(RuntimeWarning, match="tail"):
        quadrature_moments(fields_from_sample(aug, HOM), 300.0, GridSpec(4.0, 21))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 20000), st.integers(0, 10**6))
def test_reduction_kernels_agree(n, seed):
    rng = np.random.default_rng(seed)
    y, w, u, v = rng.normal(size=(n, 3)), rng.uniform(size=n), rng.uniform(size=n), rng.normal(size=(n, 3))
    a = _kernels.reduce_moments_numpy(y, w, u, v)
    b = _kernels.reduce_moments(y, w, u, v, workers=3)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12 * np.sum(w))


def test_numba_can_be_disabled():
    code = "from spinhall import _kernels; print(_kernels.HAVE_NUMBA)"
    env = dict(os.environ, SPINHALL_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False"
