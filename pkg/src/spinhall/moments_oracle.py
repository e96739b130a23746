"""Independent quadrature oracle for the averaged quantities.

The oracle builds explicit Gaussian energy and momentum densities from beam
fields and integrates them on a tensor-product Gauss-Legendre grid aligned
with the principal axes of Im grad grad phi.  Nothing here uses the
stationary-phase operators: moments come from brute-force sums only.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._kernels import reduce_moments
from .beam_transport import h0_from_e0
from .errors import ConfigError
from .initial_data import BeamSpec, circular_amplitude_jets, constraint_completed_e0_derivatives
from .moment_state import MomentState
from .stationary_phase import QuadGrid, gaussian_tail_fraction, tensor_grid

TAIL_TOLERANCE = 1e-8


@dataclass(frozen=True)
class GridSpec:
    half_width_sigmas: float = 6.0
    points_per_axis: int = 61
    include_oscillatory: bool = False

    def __post_init__(self):
        if self.points_per_axis < 21 or self.points_per_axis % 2 == 0:
            raise ConfigError("grid points_per_axis must be odd and at least 21")
        if self.half_width_sigmas < 4:
            raise ConfigError("grid half_width_sigmas must be at least 4")


@dataclass
class BeamFields:
    """Complex amplitudes and phase of a beam as functions of position.

    ``e0``, ``h0``, ``phi``, ``eps`` and ``n`` act on arrays of points with
    trailing dimension 3.  ``e1`` and ``h1`` are constant vectors.  ``S`` is
    Im grad grad phi at ``center`` and sets the quadrature box.
    """

    center: np.ndarray
    S: np.ndarray
    phi: Callable
    e0: Callable
    h0: Callable
    eps: Callable
    n: Callable
    mu: float = 1.0
    e1: np.ndarray = field(default_factory=lambda: np.zeros(3, dtype=complex))
    h1: np.ndarray = field(default_factory=lambda: np.zeros(3, dtype=complex))


def _const(value, shape_tail=()):
    value = np.asarray(value)

    def f(X):
        X = np.asarray(X)
        return np.broadcast_to(value, X.shape[:-1] + shape_tail).copy()
    return f


def _dot(a, b):
    return np.sum(a * b, axis=-1)


def densities(fields: BeamFields, X, omega: float, include_oscillatory: bool = False):
    """Energy amplitude u, momentum amplitude v and the Gaussian factor at points X.

    The physical densities are omega^{3/2} u g and omega^{3/2} v g, where
    g = exp(-2 omega Im phi).
    """
    X = np.asarray(X, dtype=float)
    e0, h0 = fields.e0(X), fields.h0(X)
    eps, n, mu = fields.eps(X), fields.n(X), fields.mu
    e1, h1 = fields.e1, fields.h1
    wi = 1.0 / omega
    u = (0.25 * (eps * _dot(e0, np.conj(e0)).real + mu * _dot(h0, np.conj(h0)).real)
         + 0.5 * wi * np.real(eps * _dot(e0, np.conj(e1)) + mu * _dot(h0, np.conj(h1))))
    n2 = (n * n)[..., None]
    v = 0.5 * n2 * np.real(np.cross(e0, np.conj(h0))
                           + wi * (np.cross(e0, np.conj(h1)) + np.cross(e1, np.conj(h0))))
    phi = fields.phi(X)
    if include_oscillatory:
        e = e0 + wi * e1
        h = h0 + wi * h1
        osc = np.exp(2j * omega * phi.real)
        u = u + 0.25 * np.real((eps * _dot(e, e) + mu * _dot(h, h)) * osc)
        v = v + 0.5 * n2 * np.real(np.cross(e, h) * osc[..., None])
    g = np.exp(-2.0 * omega * phi.imag)
    return u, v, g


def density_at(x, sample, omega: float, include_oscillatory: bool = False, medium=None):
    """Energy and momentum densities at a point for a propagated beam sample."""
    fields = fields_from_sample(sample, medium)
    u, v, g = densities(fields, np.asarray(x, dtype=float)[None, :], omega, include_oscillatory)
    scale = omega**1.5 * g[0]
    return float(scale * u[0]), scale * v[0]


@dataclass
class OracleMoments:
    E: float
    X: np.ndarray
    P: np.ndarray
    Jang: np.ndarray
    Q: np.ndarray
    tail_estimate: float
    warning: str | None = None

    def as_state(self) -> MomentState:
        return MomentState(self.E, self.X, self.P, self.Jang, self.Q)


def quadrature_moments(fields: BeamFields, omega: float, grid: GridSpec | None = None,
                       workers: int | None = None) -> OracleMoments:
    """E, X, P, J and Q of the densities by tensor-product quadrature."""
    grid = grid or GridSpec()
    S = 0.5 * (fields.S + fields.S.T)
    lam, U = np.linalg.eigh(S)
    if lam[0] <= 0:
        raise ConfigError("Im of the phase Hessian must be positive definite")
    half = grid.half_width_sigmas / np.sqrt(2.0 * omega * lam)
    X, W = tensor_grid(fields.center, U, half, QuadGrid(grid.half_width_sigmas, grid.points_per_axis))
    u, v, g = densities(fields, X, omega, grid.include_oscillatory)
    y = X - fields.center
    sums = reduce_moments(y, W * g * omega**1.5, u, v, workers=workers)
    E = sums[0]
    d = sums[1:4] / E
    P = sums[4:7]
    m2 = np.empty((3, 3))
    for val, (i, j) in zip(sums[7:13], ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))):
        m2[i, j] = m2[j, i] = val
    Q = m2 - E * np.outer(d, d)
    J = sums[13:16] - np.cross(d, P)
    tail = gaussian_tail_fraction(lam, omega, half)
    msg = None
    if tail > TAIL_TOLERANCE:
        msg = f"quadrature box too small: estimated tail mass {tail:.3g}"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return OracleMoments(float(E), fields.center + d, P, J, Q, tail, msg)


# -- field builders -------------------------------------------------------------
def _fd_grad(fn, x0, h=1e-4):
    """Fourth-order central differences of a vector field; returns [i, a] = d_a f^i."""
    cols = []
    for a in range(3):
        e = np.zeros(3)
        e[a] = h
        pts = np.array([x0 + 2 * e, x0 + e, x0 - e, x0 - 2 * e])
        f = fn(pts)
        cols.append((-f[0] + 8 * f[1] - 8 * f[2] + f[3]) / (12 * h))
    return np.stack(cols, axis=-1)


def _pointwise_h0(grad_phi, e0_fn, n_fn, mu):
    """h0 = -(grad phi x e0) / (mu phi_t) with phi_t = -sqrt(grad phi . grad phi) / n."""
    def h0(X):
        gp = grad_phi(X)
        phi_t = -np.sqrt(_dot(gp, gp).astype(complex)) / n_fn(X)
        return -np.cross(gp, e0_fn(X)) / (mu * phi_t)[..., None]
    return h0


def initial_fields(spec: BeamSpec, medium) -> BeamFields:
    """Explicit circular (or elliptic) beam fields at t = 0.

    e0 is the quadratic polynomial fixed by its jet at x0, phi is exactly
    quadratic, h0 follows pointwise from e0 and phi, and e1, h1 are their
    values at x0.  h1 uses finite differences of the field functions, so it
    is independent of the jet arithmetic of the initial-data module.
    """
    x0, k, d = spec.x0, spec.k, spec.direction
    M0 = spec.M0()
    jets = circular_amplitude_jets(spec, medium)
    e0_c = np.array([j.value() for j in jets.e0_jet])
    De = np.array([j.grad() for j in jets.e0_jet])            # [i, a]
    D2e = np.array([j.hess() for j in jets.e0_jet])           # [i, a, b]
    mu = medium.mu

    def e0(X):
        Y = np.asarray(X) - x0
        return (e0_c + np.einsum("ia,...a->...i", De, Y)
                + 0.5 * np.einsum("iab,...a,...b->...i", D2e, Y, Y))

    def phi(X):
        Y = np.asarray(X) - x0
        return k * (Y @ d) + 0.5 * np.einsum("...a,ab,...b->...", Y, M0, Y)

    def grad_phi(X):
        Y = np.asarray(X) - x0
        return k * d + Y @ M0.T

    n_fn = medium.index_values
    h0 = _pointwise_h0(grad_phi, e0, n_fn, mu)

    # h1 at x0 from finite differences of the fields
    n0 = float(n_fn(x0[None, :])[0])
    n2 = n0**2
    gp = k * d
    pt = -k / n0
    Dh0 = _fd_grad(h0, x0)
    Dn = _fd_grad(lambda P: n_fn(P)[..., None], x0)[0]
    grad_ln_n = Dn / n0
    De_fd = _fd_grad(e0, x0)
    curl_e0 = np.array([De_fd[2, 1] - De_fd[1, 2], De_fd[0, 2] - De_fd[2, 0], De_fd[1, 0] - De_fd[0, 1]])
    root_over_n = lambda P: (np.sqrt(_dot(grad_phi(P), grad_phi(P)).astype(complex)) / n_fn(P))[..., None]
    phi_tt = (gp / (n0 * k)) @ _fd_grad(root_over_n, x0)[0]
    h0c = h0(x0[None, :])[0]
    e1 = jets.e1_value
    h1 = (-np.cross(gp, e1) / (mu * pt) + 1j * curl_e0 / (mu * pt)
          + 1j * (Dh0 @ gp) / (n2 * pt**2)
          + 0.5j / (n2 * pt**2) * (h0c * np.trace(M0) - n2 * h0c * phi_tt
                                   + gp * (h0c @ (2.0 * grad_ln_n)) - h0c * (gp @ (2.0 * grad_ln_n))))
    return BeamFields(x0.copy(), spec.S0.copy(), phi, e0, h0, medium.eps_values, n_fn, mu, e1, h1)


def fields_from_sample(sample, medium, amplitude_order: int = 0) -> BeamFields:
    """Degree-2 phase and degree-0 (or constraint-completed degree-1) amplitudes on a ray sample.

    ``sample`` needs ``ray`` (x, p), ``M``, ``e0`` and ``c_gamma``.
    """
    xg, p = np.asarray(sample.ray.x), np.asarray(sample.ray.p)
    M, e0c, c = sample.M, np.asarray(sample.e0, dtype=complex), sample.c_gamma
    n0 = medium.index(xg)
    mu = medium.mu
    eps0 = n0**2 / mu
    gp0 = c * p

    def phi(X):
        Y = np.asarray(X) - xg
        return Y @ gp0 + 0.5 * np.einsum("...a,ab,...b->...", Y, M, Y)

    if amplitude_order == 0:
        e0 = _const(e0c, (3,))
        h0 = _const(h0_from_e0(e0c, sample.ray, medium, c), (3,))
    elif amplitude_order == 1:
        k = float(np.linalg.norm(gp0))
        De, _ = constraint_completed_e0_derivatives(e0c, M, k, gp0 / k)

        def e0(X):
            return e0c + (np.asarray(X) - xg) @ De

        def grad_phi(X):
            return gp0 + (np.asarray(X) - xg) @ M.T

        h0 = _pointwise_h0(grad_phi, e0, _const(n0), mu)
    else:
        raise ConfigError("amplitude_order must be 0 or 1")
    return BeamFields(xg.copy(), M.imag.copy(), phi, e0, h0, _const(eps0), _const(n0), mu)


# -- comparison -------------------------------------------------------------------
def _rel(a, b):
    nb = float(np.linalg.norm(b))
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b))) / nb if nb > 0 else math.inf


def compare_report(ode: MomentState, oracle: OracleMoments, predictions: dict | None = None,
                   direction=None, length_scale: float = 1.0) -> dict:
    """Per-quantity deltas between ODE/closed-form moments and the oracle.

    Relative errors use E for E, |P| for P, ||Q|| for Q, |J| for J and the
    supplied ``length_scale`` (a wavelength-type scale, e.g. 1/k) for X.
    """
    rep = {}
    for name, a, b in (("E", ode.E, oracle.E), ("X", ode.X, oracle.X), ("P", ode.P, oracle.P),
                       ("J", ode.Jang, oracle.Jang), ("Q", ode.Q, oracle.Q)):
        delta = float(np.linalg.norm(np.asarray(a) - np.asarray(b)))
        rel = delta / length_scale if name == "X" else _rel(a, b)
        rep[name] = {"abs": delta, "rel": rel}
    if direction is not None:
        dhat = np.asarray(direction, dtype=float)
        dhat = dhat / np.linalg.norm(dhat)
        j_par = float(oracle.Jang @ dhat)
        rep["J_split"] = {"parallel": j_par,
                          "perpendicular": (oracle.Jang - j_par * dhat).tolist(),
                          "s_from_J": float(-np.sign(j_par))}
        nj = np.linalg.norm(oracle.Jang) * np.linalg.norm(ode.Jang)
        rep["J"]["cos_angle"] = float(oracle.Jang @ ode.Jang / nj) if nj > 0 else float("nan")
    if predictions:
        for key, val in predictions.items():
            ref = getattr(oracle, key if key != "J" else "Jang")
            rep.setdefault("predictions", {})[key] = {
                "abs": float(np.linalg.norm(np.asarray(val) - ref)), "rel": _rel(val, ref)}
    rep["tail_estimate"] = oracle.tail_estimate
    return rep
