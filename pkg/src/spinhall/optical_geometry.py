"""Rays of geometric optics as geodesics of the metric n(x)**2 delta."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .integrate import Solution, Tolerances, integrate, sample_times


@dataclass(frozen=True)
class RayState:
    x: np.ndarray
    p: np.ndarray

    def hamiltonian(self, medium) -> float:
        n = medium.index(self.x)
        return 0.5 * float(self.p @ self.p) / n**2


def ray_from_beam(x0, direction, medium) -> RayState:
    """Launch point on the H = 1/2 shell: p = n(x0) * direction."""
    x0 = np.asarray(x0, dtype=float)
    d = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(d) - 1.0) > 1e-12:
        raise ConfigError(f"beam direction must be a unit vector (|d| = {np.linalg.norm(d)!r})")
    return RayState(x0.copy(), medium.index(x0) * d)


def geodesic_rhs(state: RayState, medium):
    """(dx, dp) = (p / n**2, grad ln n), valid on the H = 1/2 shell."""
    jet = medium.log_index_jet(state.x)
    return state.p / jet.n**2, jet.grad.copy()


def _rhs(medium):
    def f(t, y):
        dx, dp = geodesic_rhs(RayState(y[:3], y[3:6]), medium)
        return np.concatenate([dx, dp])
    return f


@dataclass
class GeodesicTrajectory:
    t: np.ndarray
    x: np.ndarray
    p: np.ndarray
    H: np.ndarray
    solution: Solution

    def state(self, i) -> RayState:
        return RayState(self.x[i], self.p[i])


def integrate_geodesic(init: RayState, medium, t_end: float, tol: Tolerances | None = None,
                       stride: float | None = None, t_eval=None,
                       fixed_step: float | None = None) -> GeodesicTrajectory:
    if t_eval is None:
        t_eval = sample_times(t_end, stride)
    y0 = np.concatenate([init.x, init.p])
    sol = integrate(_rhs(medium), y0, t_end, t_eval, tol, fixed_step)
    x, p = sol.y[:, :3], sol.y[:, 3:6]
    n = medium.index_values(x)
    H = 0.5 * np.sum(p * p, axis=1) / n**2
    return GeodesicTrajectory(sol.t, x, p, H, sol)
