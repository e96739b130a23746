"""Stationary-phase expansion of Gaussian-type integrals in three dimensions.

For I(omega) = integral of q(x) exp(i omega f(x)) dx with a non-degenerate
stationary point x_s and Im f >= 0,

    I ~ exp(i omega f(x_s)) / sqrt(det(omega A / 2 pi i)) * (L0 q + L1 q / omega + ...),

with A the Hessian of f at x_s.  Only the case A = 2i S, S real symmetric
positive definite, is supported; the determinant is then real and positive
and no branch choice is involved.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, HessianDegeneracyError

MAX_ORDER = 4


def _multi_indices(order):
    out = []
    for total in range(order + 1):
        for a in range(total, -1, -1):
            for b in range(total - a, -1, -1):
                out.append((a, b, total - a - b))
    return out


def _mi_of(indices):
    c = [0, 0, 0]
    for i in indices:
        c[i] += 1
    return tuple(c)


def _fact(alpha):
    return math.factorial(alpha[0]) * math.factorial(alpha[1]) * math.factorial(alpha[2])


class TaylorJet3:
    """Truncated Taylor polynomial sum_alpha c_alpha (x - center)^alpha in 3 variables.

    Coefficients are stored for every multi-index with |alpha| <= order;
    products are truncated at the smaller of the two orders.
    """

    __slots__ = ("center", "order", "coeffs")

    def __init__(self, center, order: int, coeffs: dict | None = None):
        if not 0 <= order <= MAX_ORDER:
            raise ConfigError(f"jet order must lie in [0, {MAX_ORDER}], got {order}")
        self.center = np.asarray(center, dtype=float)
        self.order = int(order)
        self.coeffs = {a: 0j for a in _multi_indices(order)}
        if coeffs:
            for a, v in coeffs.items():
                if sum(a) <= order:
                    self.coeffs[tuple(a)] = complex(v)

    # -- construction -------------------------------------------------------
    @classmethod
    def constant(cls, center, value, order=MAX_ORDER):
        return cls(center, order, {(0, 0, 0): value})

    @classmethod
    def coordinate(cls, center, i, order=MAX_ORDER):
        """The jet of x_i (not x_i - center_i)."""
        e = [0, 0, 0]
        e[i] = 1
        return cls(center, order, {(0, 0, 0): center[i], tuple(e): 1.0})

    @classmethod
    def from_derivatives(cls, center, derivs):
        """Jet from [f, grad f, hess f, third, fourth] at the center."""
        order = len(derivs) - 1
        jet = cls(center, order)
        for a in jet.coeffs:
            k = sum(a)
            idx = tuple(i for i in range(3) for _ in range(a[i]))
            val = np.asarray(derivs[k], dtype=complex)[idx] if k else complex(derivs[0])
            jet.coeffs[a] = complex(val) / _fact(a)
        return jet

    @classmethod
    def from_function(cls, center, fn: Callable, order=MAX_ORDER):
        """Jet of a polynomial-valued callable evaluated on jets (duck typing)."""
        xs = [cls.coordinate(center, i, order) for i in range(3)]
        return fn(*xs)

    # -- access ---------------------------------------------------------------
    def value(self) -> complex:
        return self.coeffs[(0, 0, 0)]

    def derivative(self, indices) -> complex:
        a = _mi_of(indices)
        if sum(a) > self.order:
            raise ConfigError(f"jet of order {self.order} lacks derivatives of order {sum(a)}")
        return self.coeffs[a] * _fact(a)

    def tensor(self, k: int) -> np.ndarray:
        if k > self.order:
            raise ConfigError(f"jet of order {self.order} lacks derivatives of order {k}")
        if k == 0:
            return np.array(self.value())
        out = np.empty((3,) * k, dtype=complex)
        for idx in itertools.product(range(3), repeat=k):
            out[idx] = self.derivative(idx)
        return out

    def grad(self) -> np.ndarray:
        return self.tensor(1)

    def hess(self) -> np.ndarray:
        return self.tensor(2)

    def evaluate(self, x) -> complex | np.ndarray:
        """Evaluate the polynomial at points x with trailing dimension 3."""
        d = np.asarray(x, dtype=float) - self.center
        out = 0j
        for a, c in self.coeffs.items():
            if c != 0:
                out = out + c * d[..., 0] ** a[0] * d[..., 1] ** a[1] * d[..., 2] ** a[2]
        return out

    def partial(self, i: int) -> "TaylorJet3":
        """d/dx_i as a jet of one lower order."""
        if self.order == 0:
            raise ConfigError("cannot differentiate an order-0 jet")
        out = TaylorJet3(self.center, self.order - 1)
        for a in out.coeffs:
            b = list(a)
            b[i] += 1
            out.coeffs[a] = self.coeffs[tuple(b)] * b[i]
        return out

    # -- arithmetic -----------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, TaylorJet3):
            if not np.array_equal(other.center, self.center):
                raise ConfigError("jets have different centers")
            return other
        return TaylorJet3.constant(self.center, other, self.order)

    def __add__(self, other):
        o = self._coerce(other)
        order = min(self.order, o.order)
        return TaylorJet3(self.center, order, {a: self.coeffs[a] + o.coeffs[a]
                                               for a in _multi_indices(order)})

    __radd__ = __add__

    def __neg__(self):
        return TaylorJet3(self.center, self.order, {a: -c for a, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, TaylorJet3):
            return TaylorJet3(self.center, self.order,
                              {a: c * complex(other) for a, c in self.coeffs.items()})
        o = self._coerce(other)
        order = min(self.order, o.order)
        out = TaylorJet3(self.center, order)
        items_a = [(a, c) for a, c in self.coeffs.items() if c != 0 and sum(a) <= order]
        items_b = [(b, c) for b, c in o.coeffs.items() if c != 0 and sum(b) <= order]
        for a, ca in items_a:
            for b, cb in items_b:
                s = (a[0] + b[0], a[1] + b[1], a[2] + b[2])
                if sum(s) <= order:
                    out.coeffs[s] += ca * cb
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TaylorJet3):
            return self * other.reciprocal()
        return self * (1.0 / complex(other))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ConfigError("only non-negative integer powers are supported")
        out = TaylorJet3.constant(self.center, 1.0, self.order)
        for _ in range(k):
            out = out * self
        return out

    def conj(self):
        return TaylorJet3(self.center, self.order, {a: np.conj(c) for a, c in self.coeffs.items()})

    @property
    def real(self):
        return TaylorJet3(self.center, self.order, {a: c.real for a, c in self.coeffs.items()})

    @property
    def imag(self):
        return TaylorJet3(self.center, self.order, {a: c.imag for a, c in self.coeffs.items()})

    def compose(self, derivs) -> "TaylorJet3":
        """F(self) given derivs[m] = F^(m)(self.value()) for m = 0..order."""
        u0 = self.value()
        du = self - u0
        out = TaylorJet3.constant(self.center, derivs[0], self.order)
        power = TaylorJet3.constant(self.center, 1.0, self.order)
        for m in range(1, self.order + 1):
            power = power * du
            out = out + power * (derivs[m] / math.factorial(m))
        return out

    def reciprocal(self):
        u0 = self.value()
        if u0 == 0:
            raise ZeroDivisionError("reciprocal of a jet with zero value")
        return self.compose([(-1) ** m * math.factorial(m) / u0 ** (m + 1) for m in range(self.order + 1)])

    def sqrt(self):
        """Principal branch square root."""
        u0 = self.value()
        r = np.sqrt(complex(u0))
        if r == 0:
            raise ZeroDivisionError("sqrt of a jet with zero value is not smooth")
        derivs, coef = [], 1.0
        for m in range(self.order + 1):
            derivs.append(coef * r / u0**m)
            coef *= 0.5 - m
        return self.compose(derivs)


def vector_jet(center, derivs_per_component):
    return [TaylorJet3.from_derivatives(center, d) for d in derivs_per_component]


# -- phase data and operators -------------------------------------------------
def _admissible_s(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    S = A.imag / 2.0
    scale = max(1.0, float(np.max(np.abs(S))))
    if np.max(np.abs(A.real)) > 1e-12 * scale or np.max(np.abs(S - S.T)) > 1e-12 * scale:
        raise HessianDegeneracyError("phase Hessian must be of the form 2i S with S real symmetric")
    S = 0.5 * (S + S.T)
    if np.linalg.eigvalsh(S)[0] <= 0:
        raise HessianDegeneracyError("Im of the phase Hessian must be positive definite")
    return S


@dataclass
class PhaseData:
    A: np.ndarray
    f_jet: TaylorJet3
    f_value: complex = 0j
    S: np.ndarray = field(init=False)

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=complex)
        self.S = _admissible_s(self.A)

    @classmethod
    def from_jet(cls, f_jet: TaylorJet3):
        if f_jet.order < 4:
            raise ConfigError(f"phase jet needs order 4, got {f_jet.order}")
        if np.max(np.abs(f_jet.grad())) > 1e-12:
            raise ConfigError("phase jet center is not a stationary point")
        return cls(f_jet.hess(), f_jet, f_jet.value())

    @property
    def A_inv(self):
        return np.linalg.inv(self.A)


def gauss_prefactor(A, omega: float) -> float:
    """1 / sqrt(det(omega A / 2 pi i)) = (pi / omega)^{3/2} / sqrt(det S)."""
    S = _admissible_s(A)
    return float((np.pi / omega) ** 1.5 / np.sqrt(np.linalg.det(S)))


_PAIR_LETTERS = "abcdef"


def sixth_g_squared_contraction(g3, Ainv) -> complex:
    """A^{ab} A^{cd} A^{ef} grad^6(g^2)_{abcdef} at a point where g vanishes to order 2.

    grad^6(g^2) is the sum over the 20 ways to split six index slots into two
    triples, each triple carrying one copy of grad^3 g.
    """
    total = 0j
    for sub in itertools.combinations(range(6), 3):
        comp = tuple(i for i in range(6) if i not in sub)
        s1 = "".join(_PAIR_LETTERS[i] for i in sub)
        s2 = "".join(_PAIR_LETTERS[i] for i in comp)
        total += np.einsum(f"{s1},{s2},ab,cd,ef->", g3, g3, Ainv, Ainv, Ainv)
    return complex(total)


def l1_from_tensors(q, dq, d2q, g3, g4, Ainv) -> complex:
    t1 = 0.5j * np.einsum("ab,ab->", Ainv, d2q)
    t2 = -0.5j * np.einsum("ab,cd,a,bcd->", Ainv, Ainv, dq, g3)
    t3 = -0.125j * q * np.einsum("ab,cd,abcd->", Ainv, Ainv, g4)
    t4 = 1j / 96.0 * q * sixth_g_squared_contraction(g3, Ainv)
    return complex(t1 + t2 + t3 + t4)


def l1_apply(q_jet: TaylorJet3, phase: PhaseData) -> complex:
    """First-order stationary-phase operator L1 applied to q at the stationary point."""
    if q_jet.order < 2:
        raise ConfigError(f"L1 needs the amplitude jet to order 2, got order {q_jet.order}")
    if phase.f_jet.order < 4:
        raise ConfigError(f"L1 needs the phase jet to order 4, got order {phase.f_jet.order}")
    # g = f - f(x_s) - (1/2) A (x - x_s)^2 shares the third and fourth derivatives of f
    return l1_from_tensors(q_jet.value(), q_jet.tensor(1), q_jet.tensor(2),
                           phase.f_jet.tensor(3), phase.f_jet.tensor(4), phase.A_inv)


def expand_integral(q_jet: TaylorJet3, phase: PhaseData, omega: float, max_order: int = 1) -> complex:
    if max_order not in (0, 1):
        raise ConfigError("max_order must be 0 or 1")
    total = q_jet.value()
    if max_order == 1:
        total = total + l1_apply(q_jet, phase) / omega
    return complex(np.exp(1j * omega * phase.f_value) * gauss_prefactor(phase.A, omega) * total)


# -- brute-force quadrature oracle -----------------------------------------------
@dataclass(frozen=True)
class QuadGrid:
    half_width_sigmas: float = 6.0
    points_per_axis: int = 61
    rule: str = "gauss-legendre"

    def __post_init__(self):
        if self.points_per_axis < 3:
            raise ConfigError("points_per_axis must be at least 3")
        if self.rule not in ("gauss-legendre", "midpoint"):
            raise ConfigError(f"unknown quadrature rule {self.rule!r}")

    def nodes(self):
        """Nodes and weights on [-1, 1]."""
        n = self.points_per_axis
        if self.rule == "gauss-legendre":
            return np.polynomial.legendre.leggauss(n)
        x = -1.0 + (2.0 * np.arange(n) + 1.0) / n
        return x, np.full(n, 2.0 / n)


@dataclass
class QuadResult:
    value: complex
    tail_estimate: float
    warning: str | None = None


def principal_box(S, omega, half_width_sigmas, sigma_scale=1.0):
    """Eigenframe of S and half-widths half_width_sigmas * sigma_i, sigma_i = sigma_scale / sqrt(omega lam_i)."""
    lam, U = np.linalg.eigh(0.5 * (S + S.T))
    sig = sigma_scale / np.sqrt(omega * lam)
    return lam, U, half_width_sigmas * sig


def tensor_grid(center, U, half, grid: QuadGrid):
    """Physical points (n, n, n, 3) and weights (n, n, n) of the rotated box."""
    xi, wi = grid.nodes()
    y = [half[k] * xi for k in range(3)]
    Y = np.stack(np.meshgrid(*y, indexing="ij"), axis=-1)
    W = np.einsum("i,j,k->ijk", wi * half[0], wi * half[1], wi * half[2])
    X = np.asarray(center, dtype=float) + Y @ U.T
    return X, W


def gaussian_tail_fraction(lam, omega, half) -> float:
    """Mass of exp(-omega lam y^2) outside |y| < half, summed over the three axes."""
    return float(sum(math.erfc(math.sqrt(omega * l) * h) for l, h in zip(lam, half)))


def brute_force_integral(q: Callable, f: Callable, omega: float, grid: QuadGrid | None = None,
                         center=(0.0, 0.0, 0.0), S=None) -> QuadResult:
    """Tensor-product quadrature of q(x) exp(i omega f(x)) over a box aligned with S.

    ``q`` and ``f`` act on arrays of points with trailing dimension 3.  The
    box extends ``half_width_sigmas`` e-fold lengths 1 / sqrt(omega lam_i) of
    exp(-omega x.S x) along each eigenvector of S = Im Hess f / 2.
    """
    grid = grid or QuadGrid()
    if S is None:
        S = np.eye(3)
    lam, U, half = principal_box(np.asarray(S, dtype=float), omega, grid.half_width_sigmas)
    X, W = tensor_grid(center, U, half, grid)
    val = np.sum(W * q(X) * np.exp(1j * omega * f(X)))
    tail = gaussian_tail_fraction(lam, omega, half)
    msg = None
    if tail > 1e-10:
        msg = f"quadrature box too small: estimated tail mass {tail:.3g}"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return QuadResult(complex(val), tail, msg)
