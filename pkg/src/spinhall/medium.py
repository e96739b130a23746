"""Inhomogeneous isotropic media and their derivative jets.

A medium is described by its refractive index n(x) = sqrt(eps(x) mu(x)).
Built-in kinds provide closed-form derivatives of n up to third order; the
log-index jets consumed by the dynamics are derived from those.  The
permeability is a positive constant (default 1), so eps = n**2 / mu.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import ConfigError

KINDS = ("homogeneous", "tanh_slab", "gaussian_lens", "exp_gradient")

_DEBUG = os.environ.get("SPINHALL_DEBUG", "") not in ("", "0")


class LogIndexJet(NamedTuple):
    n: float
    grad: np.ndarray
    hess: np.ndarray
    third: np.ndarray


class EpsMuJet(NamedTuple):
    eps: float
    mu: float
    grad_ln_eps: np.ndarray
    grad_ln_mu: np.ndarray


def _sym3(a, b):
    """a_ij b_k + a_ik b_j + a_jk b_i for symmetric a."""
    return (np.einsum("ij,k->ijk", a, b) + np.einsum("ik,j->ijk", a, b)
            + np.einsum("jk,i->ijk", a, b))


def log_jet_from_index_jet(n, dn, d2n, d3n) -> LogIndexJet:
    """Convert derivatives of n into derivatives of ln n."""
    g = dn / n
    h = d2n / n - np.outer(g, g)
    t = (d3n / n - _sym3(d2n, dn) / n**2
         + 2.0 * np.einsum("i,j,k->ijk", g, g, g))
    return LogIndexJet(float(n), g, h, t)


def eps_jet_from_index_jet(n, dn, d2n, d3n, mu=1.0):
    """Derivatives of eps = n**2 / mu up to third order."""
    e1 = 2.0 * n * dn / mu
    e2 = 2.0 * (np.outer(dn, dn) + n * d2n) / mu
    e3 = 2.0 * (_sym3(d2n, dn) + n * d3n) / mu
    return e1, e2, e3


@dataclass(frozen=True)
class MediumModel:
    """Immutable description of a built-in medium.

    Parameters follow the configuration keys: ``n_left`` is the background
    index (``n_right`` is used by ``tanh_slab`` only), ``axis`` is a unit
    vector, ``center`` a scalar offset along it.  ``gaussian_lens`` adds a
    bump of height ``amplitude`` and width ``sigma`` centred at
    ``center * axis``; ``exp_gradient`` is n_left * exp(alpha (x.axis - center)).
    """

    kind: str = "homogeneous"
    n_left: float = 1.0
    n_right: float = 1.5
    axis: tuple = (1.0, 0.0, 0.0)
    center: float = 0.0
    width: float = 1.0
    alpha: float = 0.1
    amplitude: float = 0.2
    sigma: float = 1.0
    mu: float = 1.0
    _a: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown medium kind {self.kind!r}; expected one of {KINDS}")
        scalars = dict(n_left=self.n_left, n_right=self.n_right, center=self.center,
                       width=self.width, alpha=self.alpha, amplitude=self.amplitude,
                       sigma=self.sigma, mu=self.mu)
        for name, val in scalars.items():
            if not math.isfinite(float(val)):
                raise ConfigError(f"medium.{name} must be finite, got {val!r}")
        a = np.asarray(self.axis, dtype=float)
        if a.shape != (3,) or not np.all(np.isfinite(a)):
            raise ConfigError("medium.axis must be a finite 3-vector")
        na = np.linalg.norm(a)
        if abs(na - 1.0) > 1e-12:
            raise ConfigError(f"medium.axis must be a unit vector (|axis| = {na!r})")
        if self.width <= 0 or self.sigma <= 0 or self.mu <= 0:
            raise ConfigError("medium.width, medium.sigma and mu must be positive")
        if self.n_left <= 0:
            raise ConfigError("medium.n_left must be positive")
        if self.kind in ("homogeneous", "tanh_slab", "gaussian_lens"):
            lo = self.n_left
            if self.kind == "tanh_slab":
                lo = min(self.n_left, self.n_right)
            elif self.kind == "gaussian_lens":
                lo = self.n_left + min(self.amplitude, 0.0)
            if lo < 1.0:
                raise ConfigError(f"medium index must satisfy n >= 1 (minimum {lo!r})")
        object.__setattr__(self, "axis", tuple(float(v) for v in a))
        object.__setattr__(self, "_a", a / na)

    # -- index and its derivatives -------------------------------------
    def index_jet(self, x):
        """Return (n, dn, d2n, d3n) at x."""
        x = np.asarray(x, dtype=float)
        a = self._a
        k = self.kind
        if k == "homogeneous":
            return (float(self.n_left), np.zeros(3), np.zeros((3, 3)), np.zeros((3, 3, 3)))
        if k == "tanh_slab":
            w = self.width
            xi = (x @ a - self.center) / w
            t = math.tanh(xi)
            e = math.exp(-2.0 * abs(xi))
            sech2 = 4.0 * e / (1.0 + e) ** 2
            d = 0.5 * (self.n_right - self.n_left)
            n = self.n_left + d * (1.0 + t)
            f1 = d * sech2 / w
            f2 = -2.0 * d * t * sech2 / w**2
            f3 = d * sech2 * (6.0 * t * t - 2.0) / w**3
            aa = np.outer(a, a)
            return (n, f1 * a, f2 * aa, f3 * np.einsum("ij,k->ijk", aa, a))
        if k == "gaussian_lens":
            r = x - self.center * a
            s2 = self.sigma**2
            g = self.amplitude * math.exp(-0.5 * (r @ r) / s2)
            eye = np.eye(3)
            dn = -r / s2 * g
            d2n = (np.outer(r, r) / s2**2 - eye / s2) * g
            d3n = (-np.einsum("i,j,k->ijk", r, r, r) / s2**3 + _sym3(eye, r) / s2**2) * g
            return (self.n_left + g, dn, d2n, d3n)
        # exp_gradient
        n = self.n_left * math.exp(self.alpha * (x @ a - self.center))
        al = self.alpha
        aa = np.outer(a, a)
        return (n, n * al * a, n * al**2 * aa, n * al**3 * np.einsum("ij,k->ijk", aa, a))

    def index(self, x) -> float:
        return float(self.index_jet(x)[0])

    def index_values(self, pts) -> np.ndarray:
        """Vectorised n at an array of points with trailing dimension 3."""
        pts = np.asarray(pts, dtype=float)
        a = self._a
        k = self.kind
        if k == "homogeneous":
            return np.full(pts.shape[:-1], float(self.n_left))
        if k == "tanh_slab":
            xi = (pts @ a - self.center) / self.width
            return self.n_left + 0.5 * (self.n_right - self.n_left) * (1.0 + np.tanh(xi))
        if k == "gaussian_lens":
            r = pts - self.center * a
            return self.n_left + self.amplitude * np.exp(-0.5 * np.sum(r * r, axis=-1) / self.sigma**2)
        return self.n_left * np.exp(self.alpha * (pts @ a - self.center))

    def eps_values(self, pts) -> np.ndarray:
        return self.index_values(pts) ** 2 / self.mu

    def log_index_jet(self, x) -> LogIndexJet:
        if self.kind == "exp_gradient":
            x = np.asarray(x, dtype=float)
            n = self.n_left * math.exp(self.alpha * (x @ self._a - self.center))
            out = LogIndexJet(n, self.alpha * self._a, np.zeros((3, 3)), np.zeros((3, 3, 3)))
        else:
            out = log_jet_from_index_jet(*self.index_jet(x))
        if _DEBUG:
            assert out.n >= 1.0, f"refractive index {out.n} < 1 at {x}"
        return out

    def eps_mu_jet(self, x) -> EpsMuJet:
        j = self.log_index_jet(x)
        return EpsMuJet(j.n**2 / self.mu, float(self.mu), 2.0 * j.grad, np.zeros(3))

    def eps_bounds(self):
        """(c_m, C_m) over all space; the upper bound is inf for exp_gradient."""
        if self.kind == "homogeneous":
            lo = hi = self.n_left
        elif self.kind == "tanh_slab":
            lo, hi = sorted((self.n_left, self.n_right))
        elif self.kind == "gaussian_lens":
            lo, hi = sorted((self.n_left, self.n_left + self.amplitude))
        else:
            return (0.0, math.inf)
        return (min(lo**2 / self.mu, self.mu), max(hi**2 / self.mu, self.mu))


class CallableMedium:
    """Medium given by a user function n(x), differentiated numerically.

    Directional derivatives use central stencils with two levels of
    Richardson extrapolation; Hessian and third-derivative tensors are
    recovered by polarisation.  Base steps grow with the derivative order
    to keep round-off (which scales like machine epsilon / h**k) in check.
    """

    kind = "callable"
    steps = (1e-4, 1e-3, 1e-2)

    def __init__(self, index_fn: Callable[[np.ndarray], float], mu: float = 1.0):
        self._fn = index_fn
        self.mu = float(mu)

    def _lnn(self, x):
        return math.log(self._fn(x))

    def _richardson(self, stencil, h):
        d0, d1, d2 = stencil(h), stencil(h / 2), stencil(h / 4)
        r0 = (4 * d1 - d0) / 3
        r1 = (4 * d2 - d1) / 3
        return (16 * r1 - r0) / 15

    def _dir1(self, x, v):
        f = self._lnn
        return self._richardson(lambda h: (f(x + h * v) - f(x - h * v)) / (2 * h), self.steps[0])

    def _dir2(self, x, v):
        f = self._lnn
        f0 = f(x)
        return self._richardson(lambda h: (f(x + h * v) - 2 * f0 + f(x - h * v)) / h**2, self.steps[1])

    def _dir3(self, x, v):
        f = self._lnn
        return self._richardson(
            lambda h: (f(x + 2 * h * v) - 2 * f(x + h * v) + 2 * f(x - h * v) - f(x - 2 * h * v)) / (2 * h**3),
            self.steps[2])

    def log_index_jet(self, x) -> LogIndexJet:
        x = np.asarray(x, dtype=float)
        e = np.eye(3)
        g = np.array([self._dir1(x, e[i]) for i in range(3)])
        h = np.empty((3, 3))
        for i in range(3):
            for j in range(i, 3):
                if i == j:
                    h[i, i] = self._dir2(x, e[i])
                else:
                    h[i, j] = h[j, i] = 0.25 * (self._dir2(x, e[i] + e[j]) - self._dir2(x, e[i] - e[j]))
        t = np.empty((3, 3, 3))
        cache = {}

        def c3(v):
            key = tuple(v)
            if key not in cache:
                cache[key] = self._dir3(x, v)
            return cache[key]

        for i in range(3):
            for j in range(i, 3):
                for k in range(j, 3):
                    a, b, c = e[i], e[j], e[k]
                    val = (c3(a + b + c) - c3(a + b - c) - c3(a - b + c) - c3(-a + b + c)) / 24.0
                    for p in {(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)}:
                        t[p] = val
        return LogIndexJet(float(self._fn(x)), g, h, t)

    def index(self, x) -> float:
        return float(self._fn(np.asarray(x, dtype=float)))

    def index_values(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        flat = pts.reshape(-1, 3)
        return np.array([self._fn(p) for p in flat]).reshape(pts.shape[:-1])

    def eps_values(self, pts) -> np.ndarray:
        return self.index_values(pts) ** 2 / self.mu

    def eps_mu_jet(self, x) -> EpsMuJet:
        j = self.log_index_jet(x)
        return EpsMuJet(j.n**2 / self.mu, self.mu, 2.0 * j.grad, np.zeros(3))

    def index_jet(self, x):
        j = self.log_index_jet(x)
        n = j.n
        dn = n * j.grad
        d2n = n * (j.hess + np.outer(j.grad, j.grad))
        d3n = n * (j.third + _sym3(j.hess, j.grad) + np.einsum("i,j,k->ijk", j.grad, j.grad, j.grad))
        return n, dn, d2n, d3n


def eval_log_index_jet(medium, x) -> LogIndexJet:
    """n, grad ln n, Hessian of ln n and third derivative of ln n at x."""
    x = np.asarray(x, dtype=float)
    if x.shape != (3,) or not np.all(np.isfinite(x)):
        raise ConfigError("evaluation point must be a finite 3-vector")
    return medium.log_index_jet(x)


def eval_eps_mu_jet(medium, x) -> EpsMuJet:
    x = np.asarray(x, dtype=float)
    if x.shape != (3,) or not np.all(np.isfinite(x)):
        raise ConfigError("evaluation point must be a finite 3-vector")
    return medium.eps_mu_jet(x)


def near_homogeneity_defect(medium, x0) -> float:
    """Largest absolute derivative of eps or mu of order 1 to 3 at x0."""
    n, dn, d2n, d3n = medium.index_jet(np.asarray(x0, dtype=float))
    e1, e2, e3 = eps_jet_from_index_jet(n, dn, d2n, d3n, medium.mu)
    # mu is constant, so its derivatives contribute nothing
    return float(max(np.max(np.abs(e1)), np.max(np.abs(e2)), np.max(np.abs(e3))))


def medium_from_dict(d: dict) -> MediumModel:
    return MediumModel(**d)
