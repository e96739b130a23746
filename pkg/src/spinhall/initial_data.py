"""Initial averaged quantities of Gaussian beam initial data.

Two routes are provided.  The closed form for circularly polarised data
evaluates explicit expressions in (a, s, S0, k, X, Y).  The general route
builds Taylor jets of the energy and momentum densities at x0 and applies
the first-order stationary-phase operator to them.  Fed with the jets of
circular data, both routes agree to round-off.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .beam_transport import circular_e0
from .errors import ConfigError
from .medium import near_homogeneity_defect
from .moment_state import MomentState
from .phase_riccati import check_spd
from .stationary_phase import TaylorJet3, gauss_prefactor, l1_from_tensors

log = logging.getLogger(__name__)

DEFECT_THRESHOLD = 1e-6


@dataclass(frozen=True)
class BeamSpec:
    """Gaussian beam data at x0.

    ``S0`` and ``B0`` are the imaginary and real Hessians of the phase at x0,
    ``k`` = |grad phi| and ``direction`` its unit vector.  ``s`` in {-1, +1}
    selects circular polarisation; other values in [-1, 1] give the
    elliptic family a (z1 m + z2 conj m) with |z1|^2 - |z2|^2 = s.
    """

    x0: np.ndarray = field(default_factory=lambda: np.zeros(3))
    direction: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    k: float = 1.0
    S0: np.ndarray = field(default_factory=lambda: np.eye(3))
    B0: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    amplitude: float = 1.0
    s: float = 1.0
    omega: float = 400.0
    normalize_energy: bool = False

    def __post_init__(self):
        for name in ("x0", "direction"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,) or not np.all(np.isfinite(v)):
                raise ConfigError(f"beam.{name} must be a finite 3-vector")
            object.__setattr__(self, name, v)
        if abs(np.linalg.norm(self.direction) - 1.0) > 1e-12:
            raise ConfigError(f"beam.direction must be a unit vector (|d| = {np.linalg.norm(self.direction)!r})")
        S0 = np.asarray(self.S0, dtype=float)
        if S0.ndim == 0:
            S0 = float(S0) * np.eye(3)
        try:
            object.__setattr__(self, "S0", check_spd("S0", S0))
        except ConfigError as exc:
            raise ConfigError(f"beam.{exc}") from None
        B0 = np.asarray(self.B0, dtype=float)
        if B0.ndim == 0:
            B0 = float(B0) * np.eye(3)
        if B0.shape != (3, 3) or np.max(np.abs(B0 - B0.T)) > 1e-12 * max(1.0, np.max(np.abs(B0))):
            raise ConfigError("beam.B0 must be a symmetric 3x3 matrix")
        object.__setattr__(self, "B0", 0.5 * (B0 + B0.T))
        if not (np.isfinite(self.k) and self.k > 0):
            raise ConfigError("beam.k must be positive")
        if not (np.isfinite(self.amplitude) and self.amplitude > 0):
            raise ConfigError("beam.amplitude must be positive")
        if not (np.isfinite(self.s) and -1.0 <= self.s <= 1.0):
            raise ConfigError("beam.s must lie in [-1, 1]")
        if not (np.isfinite(self.omega) and self.omega > 1.0):
            raise ConfigError(f"beam.omega must exceed 1, got {self.omega!r}")

    @property
    def is_circular(self) -> bool:
        return abs(abs(self.s) - 1.0) == 0.0 and not np.any(self.B0)

    def with_(self, **kw) -> "BeamSpec":
        return replace(self, **kw)

    def M0(self) -> np.ndarray:
        return self.B0 + 1j * self.S0


def frame_from_direction(direction):
    """(X, Y) with (direction, X, Y) a positively oriented orthonormal frame."""
    d = np.asarray(direction, dtype=float)
    seed = np.zeros(3)
    seed[int(np.argmin(np.abs(d)))] = 1.0
    X = seed - (seed @ d) * d
    X /= np.linalg.norm(X)
    Y = np.cross(d, X)
    return X, Y


def initial_e0(spec: BeamSpec) -> np.ndarray:
    X, Y = frame_from_direction(spec.direction)
    return circular_e0(spec.amplitude, spec.s, X, Y)


def _warn_defect(spec, medium):
    defect = near_homogeneity_defect(medium, spec.x0)
    if defect >= DEFECT_THRESHOLD:
        msg = f"medium not nearly homogeneous at x0: derivative defect {defect:.3g}"
        log.warning(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=3)
    return defect


def circular_initial_moments(spec: BeamSpec, medium) -> MomentState:
    """Closed-form initial moments for circularly polarised data (s = +-1, B0 = 0)."""
    if np.any(spec.B0):
        raise ConfigError("beam.B0 must vanish for circularly polarised data; use the general path")
    if abs(spec.s) != 1.0:
        raise ConfigError("circular data need s = +1 or -1; use the general path")
    _warn_defect(spec, medium)
    n = medium.index(spec.x0)
    eps = n**2 / medium.mu
    k, a, w, S0, d = spec.k, spec.amplitude, spec.omega, spec.S0, spec.direction
    X, Y = frame_from_direction(d)
    sqrt_det = np.sqrt(np.linalg.det(S0 / np.pi))
    E0 = eps * a**2 / (2.0 * sqrt_det)
    E = E0 * (1.0 + (X @ S0 @ X + Y @ S0 @ Y) / (4.0 * w * k**2))
    proj = np.outer(X, X) + np.outer(Y, Y)
    P = n * E0 * (d - proj @ S0 @ d / (2.0 * w * k**2))
    # J is antiparallel to grad phi for s = +1 (see the decisions ledger)
    J = -spec.s * n * E0 * d / (w * k)
    Q = E * np.linalg.inv(2.0 * S0) / w
    return MomentState(float(E), spec.x0.copy(), P, J, 0.5 * (Q + Q.T))


# -- general path -------------------------------------------------------------
def _cross(a, b):
    return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def _conj(a):
    return [c.conj() for c in a]


@dataclass
class AmplitudeJets:
    """Order-2 jets of e0 (one TaylorJet3 per component) and the value of e1 at x0."""

    e0_jet: list
    e1_value: np.ndarray

    def __post_init__(self):
        if len(self.e0_jet) != 3 or any(j.order < 2 for j in self.e0_jet):
            raise ConfigError("e0 jet needs three components of order >= 2")
        self.e1_value = np.asarray(self.e1_value, dtype=complex)


def constraint_completed_e0_derivatives(e0, M0, k, d):
    """grad e0 and grad grad e0 at x0 with only the constrained components nonzero.

    Returns (De0[a, i], D2e0[a, b, i]) for grad phi = k d and Hessian M0.
    """
    Me = M0 @ e0
    Md = M0 @ d
    De = -np.einsum("a,i->ai", Me, d) / k
    D2e = (np.einsum("a,b,i->abi", Me, Md, d) + np.einsum("b,a,i->abi", Me, Md, d)) / k**2
    return De, D2e


def circular_amplitude_jets(spec: BeamSpec, medium=None) -> AmplitudeJets:
    """e0 jet and e1 value of the circular (or elliptic) data class at x0."""
    e0 = initial_e0(spec)
    d, k = spec.direction, spec.k
    De, D2e = constraint_completed_e0_derivatives(e0, spec.M0(), k, d)
    jets = [TaylorJet3.from_derivatives(spec.x0, [e0[i], De[:, i], D2e[:, :, i]]) for i in range(3)]
    div_e0 = np.trace(De)
    # e1 . grad phi = i div e0 + i e0 . grad ln eps; the medium term vanishes where eps is flat
    grad_ln_eps = 2.0 * medium.log_index_jet(spec.x0).grad if medium is not None else np.zeros(3)
    e1 = 1j * (div_e0 + e0 @ grad_ln_eps) * d / k
    return AmplitudeJets(jets, e1)


@dataclass
class DensityJets:
    """Jets at x0 of the leading energy / momentum densities and their omega^-1 values."""

    u0: TaylorJet3
    v0: list
    u1: float
    v1: np.ndarray
    h0: np.ndarray
    h1: np.ndarray
    constraint_residual: float


def density_jets(spec: BeamSpec, jets: AmplitudeJets, phi_jet3, medium) -> DensityJets:
    x0, k, d = spec.x0, spec.k, spec.direction
    M0 = spec.M0()
    T = 1j * np.asarray(phi_jet3, dtype=float)
    mu = medium.mu
    n_val, dn, d2n, _ = medium.index_jet(x0)
    n = TaylorJet3.from_derivatives(x0, [n_val, dn, d2n])
    eps = n * n / mu
    # grad phi to order 2 about x0
    gphi = [TaylorJet3.from_derivatives(x0, [k * d[i], M0[i], T[i]]) for i in range(3)]
    phi_t = -(_dot(gphi, gphi)).sqrt() / n
    e0 = jets.e0_jet
    h0 = [c * (-1.0 / mu) / phi_t for c in _cross(gphi, e0)]
    u0 = 0.25 * (eps * _dot(e0, _conj(e0)) + mu * _dot(h0, _conj(h0)))
    v0 = [0.5 * n * n * c for c in _cross(e0, _conj(h0))]
    v0 = [c.real for c in v0]
    u0 = u0.real

    # values at x0 needed for h1
    e1 = jets.e1_value
    gp = np.array([g.value() for g in gphi])
    pt = phi_t.value()
    n2 = n_val**2
    eps0 = n2 / mu
    e0v = np.array([c.value() for c in e0])
    De0 = np.array([c.grad() for c in e0])         # [i, a] = d_a e0^i
    h0v = np.array([c.value() for c in h0])
    Dh0 = np.array([c.grad() for c in h0])
    curl_e0 = np.array([De0[2, 1] - De0[1, 2], De0[0, 2] - De0[2, 0], De0[1, 0] - De0[0, 1]])
    grad_ln_n = dn / n_val
    grad_ln_eps = 2.0 * grad_ln_n
    lap_phi = np.trace(M0)
    grad_phi_t = M0 @ gp / (n2 * pt) - pt * grad_ln_n
    phi_tt = gp @ grad_phi_t / (n2 * pt)
    h1 = (-np.cross(gp, e1) / (mu * pt) + 1j * curl_e0 / (mu * pt)
          + 1j * (Dh0 @ gp) / (n2 * pt**2)
          + 0.5j / (n2 * pt**2) * (h0v * lap_phi - n2 * h0v * phi_tt
                                   + gp * (h0v @ (2.0 * grad_ln_n)) - h0v * (gp @ grad_ln_eps)))
    u1 = 0.5 * float(np.real(eps0 * (e0v @ np.conj(e1)) + mu * (h0v @ np.conj(h1))))
    v1 = 0.5 * n2 * np.real(np.cross(e0v, np.conj(h1)) + np.cross(e1, np.conj(h0v)))

    # constraint residuals at x0
    c0 = _dot(e0, gphi)
    res0 = max(abs(c) for c in c0.coeffs.values())
    div_e0 = np.trace(De0)
    res1 = abs(e1 @ gp - 1j * div_e0 - 1j * (e0v @ grad_ln_eps))
    return DensityJets(u0, v0, u1, v1, h0v, h1, float(max(res0, res1)))


def general_initial_moments(spec: BeamSpec, jets: AmplitudeJets, phi_jet3, medium,
                            check_constraints: bool = True) -> MomentState:
    """Initial moments from amplitude jets via the order-1 stationary-phase formulas."""
    dj = density_jets(spec, jets, phi_jet3, medium)
    if check_constraints and dj.constraint_residual > 1e-10 * max(1.0, spec.amplitude * spec.k):
        raise ConfigError(f"amplitude jets violate the constraints at x0 (residual {dj.constraint_residual:.3g})")
    w = spec.omega
    A = 2j * spec.S0
    Ainv = np.linalg.inv(A)
    T = np.asarray(phi_jet3, dtype=float)
    # phase of the averaged densities is f = 2i Im phi
    g3 = 2j * T
    g4 = np.zeros((3, 3, 3, 3))
    pref = gauss_prefactor(A, 1.0)      # 1 / sqrt(det(A / 2 pi i))

    def moment(q_jet, q1):
        l1 = l1_from_tensors(q_jet.value(), q_jet.tensor(1), q_jet.tensor(2), g3, g4, Ainv)
        return (q_jet.value() + (q1 + l1) / w) * pref

    E = moment(dj.u0, dj.u1).real
    P = np.array([moment(dj.v0[i], dj.v1[i]).real for i in range(3)])
    AT = np.einsum("bc,abc->a", Ainv, T)
    gu = dj.u0.tensor(1)
    X = spec.x0 + np.real(1j / w * pref / E * Ainv @ (gu - 1j * dj.u0.value() * AT))
    r = spec.x0 - X
    Dv = np.array([dj.v0[kk].tensor(1) for kk in range(3)])       # [k, a]
    vv = np.array([dj.v0[kk].value() for kk in range(3)])
    inner = Dv - 1j * np.outer(vv, AT)                          # [k, a]
    B = Ainv @ inner.T                                          # [j, k]
    Jcorr = np.array([B[1, 2] - B[2, 1], B[2, 0] - B[0, 2], B[0, 1] - B[1, 0]])
    J = np.cross(r, P) + np.real(1j / w * pref * Jcorr)
    Q = np.real(1j / w * E * Ainv)
    return MomentState(float(E), X, P, J, 0.5 * (Q + Q.T))


def initial_moments(spec: BeamSpec, medium) -> tuple[MomentState, BeamSpec]:
    """Initial moments for a beam spec, applying energy normalisation if requested.

    Returns the state together with the (possibly rescaled) spec.
    """
    def compute(sp):
        if sp.is_circular:
            return circular_initial_moments(sp, medium)
        _warn_defect(sp, medium)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return general_initial_moments(sp, circular_amplitude_jets(sp, medium), np.zeros((3, 3, 3)), medium)

    m = compute(spec)
    if spec.normalize_energy:
        spec = spec.with_(amplitude=spec.amplitude / np.sqrt(m.E), normalize_energy=False)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            m = compute(spec)
        spec = spec.with_(normalize_energy=True)
    return m, spec
