"""Complex phase Hessian along the ray.

The Hessian M = grad grad phi restricted to the ray solves a matrix Riccati
equation.  It is propagated through the linear system

    J' = N^T J + L V,    V' = -N V - R J,    J(0) = I,  V(0) = M(0),

and recovered as M = V J^{-1} only when needed, which stays regular at
focal points where M itself would blow up.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, PropagationError
from .integrate import Tolerances, integrate, sample_times
from .optical_geometry import RayState

COND_LIMIT = 1e12


@dataclass
class HessianPropagator:
    J: np.ndarray
    V: np.ndarray
    c_gamma: float


class LNR(NamedTuple):
    L: np.ndarray
    N: np.ndarray
    R: np.ndarray


class HessianData(NamedTuple):
    M: np.ndarray
    A: np.ndarray
    B: np.ndarray
    dA_inv_dt: np.ndarray
    dM: np.ndarray


def lnr_from_jet(jet, p, c_gamma) -> LNR:
    n2 = jet.n**2
    v = p / n2
    L = -(n2 * np.outer(v, v) - np.eye(3)) / (n2 * c_gamma)
    N = -np.outer(jet.grad, v)
    R = -c_gamma * (jet.hess - np.outer(jet.grad, jet.grad))
    return LNR(L, N, R)


def lnr_matrices(ray: RayState, medium, c_gamma: float) -> LNR:
    return lnr_from_jet(medium.log_index_jet(ray.x), ray.p, c_gamma)


def riccati_rhs(prop: HessianPropagator, L, N, R):
    dJ = N.T @ prop.J + L @ prop.V
    dV = -N @ prop.V - R @ prop.J
    return dJ, dV


def symplectic_pairing(J, V, v) -> complex:
    """(J v).conj(V v) - (V v).conj(J v); purely imaginary and constant in t."""
    a, b = J @ v, V @ v
    return complex(a @ np.conj(b) - b @ np.conj(a))


def pairing_matrix(J, V) -> np.ndarray:
    """J^T conj(V) - V^T conj(J): the pairing on all real basis pairs, conserved by the flow."""
    return J.T @ np.conj(V) - V.T @ np.conj(J)


def pairing_drift(Js, Vs) -> float:
    """Largest relative change of the pairing matrix along a sequence of (J, V)."""
    W0 = pairing_matrix(Js[0], Vs[0])
    scale = float(np.max(np.abs(W0)))
    return max(float(np.max(np.abs(pairing_matrix(J, V) - W0))) for J, V in zip(Js, Vs)) / scale


def hessian_from_jv(J, V, t: float | None = None) -> np.ndarray:
    cond = np.linalg.cond(J)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        where = "" if t is None else f" at t = {t:.17g}"
        raise PropagationError(f"propagator J singular or ill-conditioned{where} (cond = {cond:.3g})",
                               last_time=t)
    M = np.linalg.solve(J.T, V.T).T
    return 0.5 * (M + M.T)


def hessian_from_m(M, L, N, R) -> HessianData:
    dM = -(M @ L @ M + N @ M + M @ N.T + R)
    S = M.imag
    Sinv = np.linalg.inv(S)
    Sinv = 0.5 * (Sinv + Sinv.T)
    # A = 2iS, so A^{-1} = -(i/2) S^{-1} and dA^{-1}/dt = (i/2) S^{-1} S' S^{-1}
    dAinv = 0.5j * (Sinv @ dM.imag @ Sinv)
    return HessianData(M, 2j * S, M.real.copy(), 0.5 * (dAinv + dAinv.T), dM)


def hessian_and_a(prop: HessianPropagator, L=None, N=None, R=None, t: float | None = None) -> HessianData:
    """M, A = 2i Im M, B = Re M and dA^{-1}/dt.

    The time derivative needs L, N, R at the current ray point; if they are
    omitted it is returned as NaN.
    """
    M = hessian_from_jv(prop.J, prop.V, t)
    if L is None:
        S = M.imag
        nan = np.full((3, 3), np.nan + 0j)
        return HessianData(M, 2j * S, M.real.copy(), nan, nan)
    return hessian_from_m(M, L, N, R)


def _as_sym(name, m):
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise ConfigError(f"{name} must be a finite 3x3 matrix")
    if np.max(np.abs(m - m.T)) > 1e-12 * max(1.0, np.max(np.abs(m))):
        raise ConfigError(f"{name} must be symmetric")
    return 0.5 * (m + m.T)


def check_spd(name, S0):
    S0 = _as_sym(name, S0)
    lam = np.linalg.eigvalsh(S0)
    if lam[0] <= 0:
        raise ConfigError(f"{name} must be positive definite (min eigenvalue {lam[0]:.6g})")
    return S0


def init_propagator(S0, B0, c_gamma: float) -> HessianPropagator:
    S0 = check_spd("S0", S0)
    B0 = _as_sym("B0", np.zeros((3, 3)) if B0 is None else B0)
    if not c_gamma > 0:
        raise ConfigError("c_gamma must be positive")
    return HessianPropagator(np.eye(3, dtype=complex), B0 + 1j * S0, float(c_gamma))


def homogeneous_closed_form(M0, L, t) -> np.ndarray:
    """(M0^{-1} + t L)^{-1}: exact M(t) when N = R = 0 and L is constant."""
    return np.linalg.inv(np.linalg.inv(M0) + t * L)


# -- standalone ray + J/V integration ------------------------------------
def pack_jv(J, V):
    return np.concatenate([J.real.ravel(), J.imag.ravel(), V.real.ravel(), V.imag.ravel()])


def unpack_jv(y):
    J = (y[0:9] + 1j * y[9:18]).reshape(3, 3)
    V = (y[18:27] + 1j * y[27:36]).reshape(3, 3)
    return J, V


def ray_jv_rhs(y, medium, c_gamma):
    """Derivative of the 42-vector (x, p, J, V)."""
    x, p = y[:3], y[3:6]
    jet = medium.log_index_jet(x)
    dx, dp = p / jet.n**2, jet.grad
    L, N, R = lnr_from_jet(jet, p, c_gamma)
    J, V = unpack_jv(y[6:42])
    dJ, dV = riccati_rhs(HessianPropagator(J, V, c_gamma), L, N, R)
    return np.concatenate([dx, dp, pack_jv(dJ, dV)])


@dataclass
class RiccatiTrajectory:
    t: np.ndarray
    x: np.ndarray
    p: np.ndarray
    J: np.ndarray
    V: np.ndarray
    M: np.ndarray
    c_gamma: float

    @property
    def min_eig_im_m(self):
        return np.array([np.linalg.eigvalsh(m.imag)[0] for m in self.M])

    @property
    def abs_det_j(self):
        return np.abs(np.linalg.det(self.J))


def integrate_riccati(ray: RayState, prop: HessianPropagator, medium, t_end: float,
                      tol: Tolerances | None = None, stride: float | None = None,
                      t_eval=None, fixed_step: float | None = None) -> RiccatiTrajectory:
    if t_eval is None:
        t_eval = sample_times(t_end, stride)
    c = prop.c_gamma
    y0 = np.concatenate([ray.x, ray.p, pack_jv(prop.J, prop.V)])
    sol = integrate(lambda t, y: ray_jv_rhs(y, medium, c), y0, t_end, t_eval, tol, fixed_step)
    Js, Vs, Ms = [], [], []
    for ti, yi in zip(sol.t, sol.y):
        J, V = unpack_jv(yi[6:42])
        Js.append(J)
        Vs.append(V)
        Ms.append(hessian_from_jv(J, V, float(ti)))
    return RiccatiTrajectory(sol.t, sol.y[:, :3], sol.y[:, 3:6], np.array(Js), np.array(Vs),
                             np.array(Ms), c)


__all__ = [
    "HessianPropagator", "LNR", "HessianData", "lnr_matrices", "lnr_from_jet", "riccati_rhs",
    "hessian_and_a", "hessian_from_jv", "hessian_from_m", "init_propagator", "symplectic_pairing",
    "pairing_matrix", "pairing_drift",
    "homogeneous_closed_form", "integrate_riccati", "RiccatiTrajectory", "check_spd",
]
