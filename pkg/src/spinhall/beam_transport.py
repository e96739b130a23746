"""Leading-order polarisation amplitude carried along the ray.

Along the ray the phase data are fixed by (p, M, c_gamma): grad phi = c p,
phi_t = -c, Laplacian phi = tr M.  The time derivatives of the phase that
enter the transport equation follow from the eikonal equation.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DegenerateAmplitudeError, HessianDegeneracyError


def h0_from_e0(e0, ray, medium, c_gamma):
    """h0 = -(grad phi x e0) / (mu phi_t) evaluated on the ray."""
    mu = medium.eps_mu_jet(ray.x).mu
    grad_phi = c_gamma * ray.p
    phi_t = -c_gamma
    return -np.cross(grad_phi, e0) / (mu * phi_t)


def phase_time_derivatives(p, M, jet, c_gamma):
    """(grad phi, phi_t, grad phi_t, phi_tt) on the ray."""
    n2 = jet.n**2
    grad_phi = c_gamma * p
    phi_t = -c_gamma
    grad_phi_t = M @ grad_phi / (n2 * phi_t) - phi_t * jet.grad
    phi_tt = grad_phi @ grad_phi_t / (n2 * phi_t)
    return grad_phi, phi_t, grad_phi_t, phi_tt


def transport_rhs_from_jet(e0, p, M, jet, c_gamma, mu=1.0):
    n2 = jet.n**2
    eps = n2 / mu
    grad_ln_eps = 2.0 * jet.grad
    grad_ln_n2 = 2.0 * jet.grad
    grad_phi, phi_t, _, phi_tt = phase_time_derivatives(p, M, jet, c_gamma)
    w = np.sqrt(eps) * e0
    dw = (w * (np.trace(M) - n2 * phi_tt) / (2.0 * n2 * phi_t)
          - 0.5 * (w * (grad_phi @ grad_ln_n2) - grad_phi * (w @ grad_ln_n2)) / (n2 * phi_t))
    # convert d(sqrt(eps) e0)/dt into de0/dt along the ray velocity p / n^2
    return dw / np.sqrt(eps) - 0.5 * (grad_ln_eps @ p / n2) * e0


def transport_rhs_e0(e0, ray, M, medium, c_gamma):
    """de0/dt along the ray for the degree-0 transport equation."""
    jet = medium.log_index_jet(ray.x)
    mu = medium.eps_mu_jet(ray.x).mu
    return transport_rhs_from_jet(np.asarray(e0, dtype=complex), ray.p, M, jet, c_gamma, mu)


def polarization_s(e0, h0, n, eps, check: bool = True) -> float:
    """s = i n e0.conj(h0) / (eps e0.conj(e0)), a real number in [-1, 1]."""
    e0 = np.asarray(e0, dtype=complex)
    norm2 = float(np.real(e0 @ np.conj(e0)))
    if np.sqrt(norm2) < 1e-14:
        raise DegenerateAmplitudeError("polarisation amplitude e0 is numerically zero")
    s = 1j * n * (e0 @ np.conj(h0)) / (eps * norm2)
    if check and abs(s.imag) > 1e-8 * max(1.0, abs(s)):
        raise ValueError(f"polarisation parameter has imaginary part {s.imag:.3g}")
    return float(np.clip(s.real, -1.0, 1.0))


class ConservedDensities(NamedTuple):
    c_e: complex
    c_h: complex
    c_x: complex


def sqrt_det_a_over_2pi_i(A) -> float:
    """Principal sqrt of det(A / 2 pi i); requires A = 2i S with S SPD."""
    S = np.asarray(A).imag / 2.0
    if np.max(np.abs(np.asarray(A).real)) > 1e-12 * max(1.0, np.max(np.abs(S))):
        raise HessianDegeneracyError("A must be purely imaginary")
    lam = np.linalg.eigvalsh(0.5 * (S + S.T))
    if lam[0] <= 0:
        raise HessianDegeneracyError(f"det(A / 2 pi i) not positive (min eig of Im A / 2 = {lam[0]:.3g})")
    return float(np.sqrt(np.prod(lam / np.pi)))


def conserved_densities(e0, h0, A, n, eps, mu) -> ConservedDensities:
    r = sqrt_det_a_over_2pi_i(A)
    e0 = np.asarray(e0, dtype=complex)
    h0 = np.asarray(h0, dtype=complex)
    return ConservedDensities(eps * (e0 @ np.conj(e0)) / r, mu * (h0 @ np.conj(h0)) / r,
                              n * (e0 @ np.conj(h0)) / r)


def circular_e0(amplitude, s, X, Y):
    """a (z1 m + z2 conj(m)), m = (X - iY)/sqrt 2; s = |z1|^2 - |z2|^2."""
    m = (np.asarray(X) - 1j * np.asarray(Y)) / np.sqrt(2.0)
    z1 = np.sqrt((1.0 + s) / 2.0)
    z2 = np.sqrt((1.0 - s) / 2.0)
    return amplitude * (z1 * m + z2 * np.conj(m))
