"""ODE integration back end shared by every propagator in the package.

Adaptive mode delegates to scipy's Dormand-Prince 5(4) pair with dense
output.  Fixed-step mode is a classical RK4 loop with a cubic Hermite
interpolant, so that identical inputs give bit-identical samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .errors import ConfigError, IntegrationError

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12


@dataclass(frozen=True)
class Tolerances:
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ConfigError("integration tolerances must be positive")


@dataclass
class Solution:
    t: np.ndarray          # sample times, shape (m,)
    y: np.ndarray          # samples, shape (m, dim)
    dense: Callable        # dense(t) -> state, shape (dim,) or (dim, k)
    nfev: int


def sample_times(t_end: float, stride: float | None) -> np.ndarray:
    if stride is None or stride <= 0 or stride >= t_end:
        return np.array([0.0, t_end])
    m = int(np.floor(t_end / stride + 1e-9))
    t = np.arange(m + 1) * stride
    if t_end - t[-1] > 1e-12 * t_end:
        t = np.append(t, t_end)
    else:
        t[-1] = t_end
    return t


def _rk4(rhs, y0, t_end, dt):
    nsteps = max(1, int(np.ceil(t_end / dt - 1e-12)))
    h = t_end / nsteps
    ts = np.empty(nsteps + 1)
    ys = np.empty((nsteps + 1, y0.size))
    fs = np.empty_like(ys)
    y = y0.copy()
    t = 0.0
    ts[0], ys[0] = 0.0, y
    try:
        k1 = rhs(t, y)
        fs[0] = k1
        for i in range(nsteps):
            k2 = rhs(t + h / 2, y + h / 2 * k1)
            k3 = rhs(t + h / 2, y + h / 2 * k2)
            k4 = rhs(t + h, y + h * k3)
            y_new = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(y_new)):
                raise IntegrationError("non-finite state in fixed-step integration", last_time=t)
            t = (i + 1) * h
            y = y_new
            k1 = rhs(t, y)
            ts[i + 1], ys[i + 1], fs[i + 1] = t, y, k1
    except IntegrationError:
        raise
    except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
        raise IntegrationError(f"fixed-step integration failed: {exc}", last_time=t) from exc
    spline = CubicHermiteSpline(ts, ys, fs, axis=0)
    return spline, nsteps * 4 + 1


def integrate(rhs, y0, t_end: float, t_eval=None, tol: Tolerances | None = None,
              fixed_step: float | None = None) -> Solution:
    """Integrate y' = rhs(t, y) on [0, t_end] and sample at ``t_eval``."""
    tol = tol or Tolerances()
    if not t_end > 0:
        raise ConfigError("t_end must be positive")
    y0 = np.asarray(y0, dtype=float)
    t_eval = np.array([0.0, t_end]) if t_eval is None else np.asarray(t_eval, dtype=float)
    if fixed_step is not None:
        if not fixed_step > 0:
            raise ConfigError("--fixed-step must be positive")
        spline, nfev = _rk4(rhs, y0, t_end, fixed_step)
        ys = spline(t_eval)
        # nodes are returned exactly, free of interpolation round-off
        return Solution(t_eval, ys, lambda t: spline(t).T, nfev)

    last = [0.0]

    def wrapped(t, y):
        out = rhs(t, y)
        last[0] = max(last[0], t)
        return out

    # Each sample time is made a step endpoint: the 4th-order dense
    # interpolant is noticeably less accurate than the 5th-order steps.
    knots = np.union1d(t_eval, [0.0, t_end])
    pieces, ys_knots = [], [y0]
    y, nfev, h = y0, 0, None
    for a, b in zip(knots[:-1], knots[1:]):
        kw = {} if h is None else {"first_step": min(h, b - a)}
        try:
            res = solve_ivp(wrapped, (a, b), y, method="RK45", rtol=tol.rtol,
                            atol=tol.atol, dense_output=True, **kw)
        except IntegrationError:
            raise
        except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
            raise IntegrationError(f"adaptive integration failed: {exc}", last_time=last[0]) from exc
        nfev += int(res.nfev)
        if res.status != 0:
            raise IntegrationError(f"adaptive integration failed: {res.message}",
                                   last_time=float(res.t[-1]))
        if not np.all(np.isfinite(res.y)):
            raise IntegrationError("non-finite state in adaptive integration", last_time=float(a))
        if len(res.t) > 2:
            h = float(res.t[-2] - res.t[-3]) if len(res.t) > 3 else float(res.t[-1] - res.t[-2])
        y = res.y[:, -1]
        pieces.append(res.sol)
        ys_knots.append(y)
    ys_knots = np.array(ys_knots)
    dense = _Piecewise(knots, pieces)
    idx = np.searchsorted(knots, t_eval)
    return Solution(t_eval, ys_knots[idx], dense, nfev)


class _Piecewise:
    """Dense output stitched from per-segment interpolants."""

    def __init__(self, knots, pieces):
        self.knots = knots
        self.pieces = pieces

    def __call__(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        seg = np.clip(np.searchsorted(self.knots, t_arr, side="right") - 1, 0, len(self.pieces) - 1)
        out = np.empty((self.pieces[0](self.knots[0]).shape[0], t_arr.size))
        for j in np.unique(seg):
            m = seg == j
            out[:, m] = self.pieces[j](t_arr[m])
        return out[:, 0] if np.ndim(t) == 0 else out
