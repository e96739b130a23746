import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinhall.errors import ConfigError, IntegrationError
from spinhall.integrate import Tolerances, integrate, sample_times
from spinhall.medium import MediumModel
from spinhall.optical_geometry import RayState, geodesic_rhs, integrate_geodesic, ray_from_beam

from conftest import builtin_media

E1 = np.array([1.0, 0.0, 0.0])


def test_ray_from_beam_examples():
    r = ray_from_beam(np.zeros(3), E1, MediumModel("homogeneous"))
    np.testing.assert_array_equal(r.p, E1)
    assert r.hamiltonian(MediumModel("homogeneous")) == 0.5
    m = MediumModel("homogeneous", n_left=1.5)
    np.testing.assert_allclose(ray_from_beam(np.zeros(3), E1, m).p, 1.5 * E1, rtol=0, atol=1e-15)
    with pytest.raises(ConfigError):
        ray_from_beam(np.zeros(3), np.array([1.0, 1.0, 0.0]), m)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3),
       st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 0.1))
def test_launched_hamiltonian_is_half(x0, d):
    d = np.array(d) / np.linalg.norm(d)
    for m in builtin_media()[:3]:
        r = ray_from_beam(np.array(x0), d, m)
        assert abs(r.hamiltonian(m) - 0.5) < 1e-14


def test_geodesic_rhs_examples():
    dx, dp = geodesic_rhs(RayState(np.zeros(3), E1), MediumModel("homogeneous"))
    np.testing.assert_array_equal(dx, E1)
    assert not np.any(dp)
    m = MediumModel("exp_gradient", alpha=0.1, axis=(0.0, 1.0, 0.0))
    _, dp = geodesic_rhs(RayState(np.zeros(3), E1), m)
    np.testing.assert_allclose(dp, [0, 0.1, 0], atol=1e-16)
    slab = MediumModel("tanh_slab", axis=(0.0, 0.6, 0.8), center=0.0)
    _, dp = geodesic_rhs(RayState(np.zeros(3), E1), slab)
    assert np.linalg.norm(np.cross(dp, slab.axis)) < 1e-15 * np.linalg.norm(dp)


def test_homogeneous_straight_line():
    tr = integrate_geodesic(RayState(np.zeros(3), E1), MediumModel("homogeneous"), 10.0, stride=0.5)
    assert np.max(np.abs(tr.x[-1] - [10, 0, 0])) < 1e-9


def test_exp_gradient_momentum_linear():
    m = MediumModel("exp_gradient", alpha=0.1, axis=(0.0, 1.0, 0.0))
    init = ray_from_beam(np.zeros(3), np.array([0.6, 0.0, 0.8]), m)
    tr = integrate_geodesic(init, m, 10.0, stride=0.5)
    pred = init.p + np.outer(tr.t, [0.0, 0.1, 0.0])
    assert np.max(np.abs(tr.p - pred)) < 1e-9


def test_slab_transverse_momentum_conserved():
    m = MediumModel("tanh_slab", center=4.0)
    d = np.array([np.cos(0.5), np.sin(0.5), 0.0])
    tr = integrate_geodesic(ray_from_beam(np.zeros(3), d, m), m, 10.0, stride=0.1)
    assert np.max(np.abs(tr.p[:, 1:] - tr.p[0, 1:])) < 1e-9
    # the ray actually crosses the slab and bends towards its normal
    assert tr.x[-1, 0] > 4.0 and tr.p[-1, 0] > tr.p[0, 0] + 0.3


@pytest.mark.parametrize("medium", builtin_media(), ids=lambda m: m.kind)
def test_hamiltonian_conserved(medium):
    d = np.array([0.48, 0.6, 0.64])
    tr = integrate_geodesic(ray_from_beam(np.array([0.1, -0.5, 0.2]), d, medium), medium, 10.0, stride=0.05)
    assert np.max(np.abs(tr.H - 0.5)) < 1e-8


@pytest.mark.parametrize("medium", builtin_media(), ids=lambda m: m.kind)
def test_time_reversal(medium):
    init = ray_from_beam(np.array([0.1, -0.5, 0.2]), np.array([0.48, 0.6, 0.64]), medium)
    fwd = integrate_geodesic(init, medium, 6.0)
    back = integrate_geodesic(RayState(fwd.x[-1], -fwd.p[-1]), medium, 6.0)
    assert np.max(np.abs(back.x[-1] - init.x)) < 1e-7
    assert np.max(np.abs(-back.p[-1] - init.p)) < 1e-7


def test_fixed_step_mode_is_reproducible_and_accurate():
    m = MediumModel("tanh_slab", center=4.0)
    init = ray_from_beam(np.zeros(3), np.array([0.8, 0.6, 0.0]), m)
    a = integrate_geodesic(init, m, 10.0, stride=0.1, fixed_step=0.01)
    b = integrate_geodesic(init, m, 10.0, stride=0.1, fixed_step=0.01)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.p, b.p)
    ref = integrate_geodesic(init, m, 10.0, stride=0.1)
    assert np.max(np.abs(a.x - ref.x)) < 1e-7


def test_sample_times():
    t = sample_times(1.0, 0.3)
    np.testing.assert_allclose(t, [0, 0.3, 0.6, 0.9, 1.0])
    assert sample_times(2.0, None)[-1] == 2.0


def test_dense_output_matches_samples():
    sol = integrate(lambda t, y: np.array([y[1], -y[0]]), np.array([0.0, 1.0]), 3.0,
                    t_eval=[0.0, 1.0, 2.0, 3.0])
    np.testing.assert_allclose(sol.y[:, 0], np.sin(sol.t), atol=1e-9)
    assert abs(sol.dense(1.5)[0] - np.sin(1.5)) < 1e-7


def test_integration_failure_reports_last_time():
    def rhs(t, y):
        return np.array([np.nan]) if t > 0.5 else np.array([1.0])
    with pytest.raises(IntegrationError, match="last valid t"):
        integrate(rhs, np.array([0.0]), 1.0)


def test_tolerances_validated():
    with pytest.raises(ConfigError):
        Tolerances(rtol=0.0)
