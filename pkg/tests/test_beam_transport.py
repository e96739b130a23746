import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinhall.beam_transport import (circular_e0, conserved_densities, h0_from_e0, polarization_s,
                                     transport_rhs_e0)
from spinhall.errors import DegenerateAmplitudeError, HessianDegeneracyError
from spinhall.initial_data import frame_from_direction
from spinhall.medium import MediumModel
from spinhall.optical_geometry import RayState, ray_from_beam

E1, E2, E3 = np.eye(3)
HOM = MediumModel("homogeneous")


def test_h0_examples():
    c = 0.7
    ray = RayState(np.zeros(3), E3)
    np.testing.assert_allclose(h0_from_e0(E1.astype(complex), ray, HOM, c), E2, atol=1e-16)
    assert not np.any(h0_from_e0(E3.astype(complex), ray, HOM, c))


def test_circular_h0_magnitude():
    n = 1.5
    m = MediumModel("homogeneous", n_left=n)
    ray = RayState(np.zeros(3), n * E3)
    e0 = (E1 - 1j * E2) / np.sqrt(2)
    h0 = h0_from_e0(e0, ray, m, 1.0 / n)
    assert abs(np.linalg.norm(h0) - n * np.linalg.norm(e0) / m.mu) < 1e-12
    # mu h0.conj(h0) = eps e0.conj(e0)
    assert abs(m.mu * np.vdot(h0, h0) - n**2 * np.vdot(e0, e0)) < 1e-12


def test_homogeneous_transport_does_not_rotate():
    rng = np.random.default_rng(2)
    a = rng.normal(size=(3, 3))
    M = 0.5 * (a + a.T) + 1j * (a @ a.T + np.eye(3))
    ray = RayState(np.zeros(3), E3)
    e0 = np.array([1.0, 0.3 - 0.4j, 0.0])
    de = transport_rhs_e0(e0, ray, M, HOM, 1.0)
    assert np.linalg.norm(np.cross(de, e0)) < 1e-14 * np.linalg.norm(de)
    assert not np.any(transport_rhs_e0(np.zeros(3, dtype=complex), ray, M, HOM, 1.0))


def test_polarization_examples():
    n = 1.3
    m = MediumModel("homogeneous", n_left=n)
    d = np.array([0.0, 0.6, 0.8])
    ray = ray_from_beam(np.zeros(3), d, m)
    c = 1.0 / n
    X, Y = frame_from_direction(d)

    def s_of(e0):
        return polarization_s(e0, h0_from_e0(e0, ray, m, c), n, n**2)

    assert abs(s_of((0.3 * X + 1.2 * Y).astype(complex))) < 1e-15
    assert abs(s_of(circular_e0(1.0, 1.0, X, Y)) - 1.0) < 1e-14
    assert abs(s_of(circular_e0(1.0, -1.0, X, Y)) + 1.0) < 1e-14
    # (X - iY)/sqrt 2 is the s = +1 state
    assert abs(s_of((X - 1j * Y) / np.sqrt(2)) - 1.0) < 1e-14
    assert abs(s_of(circular_e0(2.0, 0.5, X, Y)) - 0.5) < 1e-10
    with pytest.raises(DegenerateAmplitudeError):
        s_of(np.zeros(3, dtype=complex))


@settings(max_examples=100, deadline=None)
@given(st.floats(-1, 1), st.floats(0.1, 5), st.floats(0, 2 * np.pi))
def test_polarization_in_range_and_roundtrip(s, a, phase):
    d = np.array([0.48, 0.6, 0.64])
    ray = ray_from_beam(np.zeros(3), d, HOM)
    X, Y = frame_from_direction(d)
    e0 = np.exp(1j * phase) * circular_e0(a, s, X, Y)
    val = polarization_s(e0, h0_from_e0(e0, ray, HOM, 1.0), 1.0, 1.0)
    assert -1.0 <= val <= 1.0
    assert abs(val - s) < 1e-10


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_conserved_densities_identity(seed):
    rng = np.random.default_rng(seed)
    n = 1.0 + rng.uniform()
    m = MediumModel("homogeneous", n_left=n)
    d = rng.normal(size=3)
    d /= np.linalg.norm(d)
    ray = ray_from_beam(np.zeros(3), d, m)
    X, Y = frame_from_direction(d)
    e0 = (rng.normal() + 1j * rng.normal()) * X + (rng.normal() + 1j * rng.normal()) * Y
    h0 = h0_from_e0(e0, ray, m, 1.0 / n)
    a = rng.normal(size=(3, 3))
    A = 2j * (a @ a.T + 0.1 * np.eye(3))
    ce, ch, _ = conserved_densities(e0, h0, A, n, n**2, 1.0)
    assert abs(ce.imag) < 1e-14 * abs(ce) and ce.real > 0
    assert abs(ch.imag) < 1e-14 * abs(ch) and ch.real > 0
    assert abs(ce - ch) < 1e-10 * abs(ce)


def test_conserved_densities_reject_bad_a():
    with pytest.raises(HessianDegeneracyError):
        conserved_densities(E1, E2, 2j * np.diag([1.0, -1.0, 1.0]), 1.0, 1.0, 1.0)
    with pytest.raises(HessianDegeneracyError):
        conserved_densities(E1, E2, np.eye(3) + 2j * np.eye(3), 1.0, 1.0, 1.0)
