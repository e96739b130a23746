"""Co-integration of ray, phase Hessian, polarisation and the moment system.

The augmented state is a 63-vector:

    [0:3]   ray position x          [3:6]   ray momentum p
    [6:24]  J (re, im)              [24:42] V (re, im)
    [42:48] e0 (re, im)
    [48:51] X   [51:54] P   [54:57] angular momentum   [57:63] Q (upper triangle)

The energy E is a constant parameter of the right-hand side.  Medium jets
for the moment equations are taken at X(t); L, N, R and the transport
coefficients at the ray point.  The quadrupole forcing in dX/dt uses the
explicit derivative of i E A^{-1} / omega rather than the Q equation, which
keeps the system explicit.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .beam_transport import conserved_densities, h0_from_e0, polarization_s, transport_rhs_from_jet
from .errors import IntegrationError
from .initial_data import BeamSpec, initial_e0, initial_moments
from .integrate import Tolerances, integrate, sample_times
from .moment_state import MomentState, sym_to_vec6, vec6_to_sym
from .optical_geometry import RayState, ray_from_beam
from .phase_riccati import (HessianPropagator, hessian_from_jv, hessian_from_m, init_propagator,
                            lnr_from_jet, pack_jv, pairing_drift, riccati_rhs, unpack_jv)

DIM = 63


@dataclass
class AugmentedState:
    t: float
    ray: RayState
    prop: HessianPropagator
    e0: np.ndarray
    moments: MomentState

    @property
    def c_gamma(self) -> float:
        return self.prop.c_gamma

    @property
    def M(self) -> np.ndarray:
        return hessian_from_jv(self.prop.J, self.prop.V, self.t)

    def pack(self) -> np.ndarray:
        m = self.moments
        return np.concatenate([self.ray.x, self.ray.p, pack_jv(self.prop.J, self.prop.V),
                               self.e0.real, self.e0.imag, m.X, m.P, m.Jang, sym_to_vec6(m.Q)])

    @classmethod
    def unpack(cls, y, t, E, c_gamma) -> "AugmentedState":
        J, V = unpack_jv(y[6:42])
        return cls(float(t), RayState(y[0:3].copy(), y[3:6].copy()), HessianPropagator(J, V, c_gamma),
                   y[42:45] + 1j * y[45:48],
                   MomentState(E, y[48:51].copy(), y[51:54].copy(), y[54:57].copy(), vec6_to_sym(y[57:63])))


def moment_rhs(X, P, Jang, Q, E, dQ, jet):
    """(dX, dP, dJ) of the moment system for medium jet ``jet`` at X and forcing dQ/dt."""
    n2 = jet.n**2
    g, H2, T3 = jet.grad, jet.hess, jet.third
    dX = (P / (E * n2) - np.cross(Jang, g) / (E * n2) - dQ @ g / E
          - (P * np.sum(Q * H2) + 2.0 * (P @ g) * (Q @ g)) / (E**2 * n2))
    dP = E * g + np.einsum("jk,ijk->i", Q, T3)
    QH = Q @ H2
    dJ = np.cross(P, dX) + np.array([QH[1, 2] - QH[2, 1], QH[2, 0] - QH[0, 2], QH[0, 1] - QH[1, 0]])
    return dX, dP, dJ


def dynamics_rhs(t, y, medium, omega, E, c_gamma):
    """Derivative of the 63-component augmented state."""
    x, p = y[0:3], y[3:6]
    jet_ray = medium.log_index_jet(x)
    L, N, R = lnr_from_jet(jet_ray, p, c_gamma)
    J, V = unpack_jv(y[6:42])
    dJm, dVm = riccati_rhs(HessianPropagator(J, V, c_gamma), L, N, R)
    M = hessian_from_jv(J, V, t)
    hd = hessian_from_m(M, L, N, R)
    e0 = y[42:45] + 1j * y[45:48]
    de0 = transport_rhs_from_jet(e0, p, M, jet_ray, c_gamma, medium.mu)
    dQ = np.real(1j * E / omega * hd.dA_inv_dt)
    Q = vec6_to_sym(y[57:63])
    jet_x = medium.log_index_jet(y[48:51])
    dX, dP, dJ = moment_rhs(y[48:51], y[51:54], y[54:57], Q, E, dQ, jet_x)
    out = np.empty(DIM)
    out[0:3] = p / jet_ray.n**2
    out[3:6] = jet_ray.grad
    out[6:42] = pack_jv(dJm, dVm)
    out[42:45], out[45:48] = de0.real, de0.imag
    out[48:51], out[51:54], out[54:57] = dX, dP, dJ
    out[57:63] = sym_to_vec6(dQ)
    return out


@dataclass
class BeamTrajectory:
    """Samples of an integrated beam; arrays are indexed by sample first."""

    spec: BeamSpec
    E: float
    c_gamma: float
    omega: float
    t: np.ndarray
    y: np.ndarray
    medium: object = field(repr=False)
    dense: object = field(repr=False, default=None)

    @property
    def X(self):
        return self.y[:, 48:51]

    @property
    def P(self):
        return self.y[:, 51:54]

    @property
    def Jang(self):
        return self.y[:, 54:57]

    @property
    def Q6(self):
        return self.y[:, 57:63]

    @property
    def Q(self):
        return np.array([vec6_to_sym(q) for q in self.Q6])

    @property
    def gx(self):
        return self.y[:, 0:3]

    @property
    def gp(self):
        return self.y[:, 3:6]

    @property
    def e0(self):
        return self.y[:, 42:45] + 1j * self.y[:, 45:48]

    def sample(self, i) -> AugmentedState:
        return AugmentedState.unpack(self.y[i], self.t[i], self.E, self.c_gamma)

    def state_at(self, t) -> AugmentedState:
        return AugmentedState.unpack(self.dense(t), t, self.E, self.c_gamma)

    @property
    def M(self):
        return np.array([self.sample(i).M for i in range(len(self.t))])

    @property
    def H(self):
        n = self.medium.index_values(self.gx)
        return 0.5 * np.sum(self.gp**2, axis=1) / n**2

    @property
    def min_eig_im_m(self):
        return np.array([np.linalg.eigvalsh(m.imag)[0] for m in self.M])

    def polarization(self):
        out = []
        for i in range(len(self.t)):
            smp = self.sample(i)
            h0 = h0_from_e0(smp.e0, smp.ray, self.medium, self.c_gamma)
            n = self.medium.index(smp.ray.x)
            out.append(polarization_s(smp.e0, h0, n, n**2 / self.medium.mu))
        return np.array(out)

    def conserved(self):
        """(c_e, c_h, c_x) at every sample."""
        rows = []
        for i in range(len(self.t)):
            smp = self.sample(i)
            h0 = h0_from_e0(smp.e0, smp.ray, self.medium, self.c_gamma)
            n = self.medium.index(smp.ray.x)
            rows.append(conserved_densities(smp.e0, h0, 2j * smp.M.imag, n, n**2 / self.medium.mu,
                                            self.medium.mu))
        return np.array(rows)

    def dstate(self, i):
        return dynamics_rhs(self.t[i], self.y[i], self.medium, self.omega, self.E, self.c_gamma)


def initial_augmented_state(spec: BeamSpec, medium):
    """Initial 63-vector, energy, c_gamma and the (possibly rescaled) spec."""
    moments, spec = initial_moments(spec, medium)
    ray = ray_from_beam(spec.x0, spec.direction, medium)
    c_gamma = spec.k / medium.index(spec.x0)
    prop = init_propagator(spec.S0, spec.B0, c_gamma)
    aug = AugmentedState(0.0, ray, prop, initial_e0(spec).astype(complex), moments)
    return aug, spec


def integrate_beam(spec: BeamSpec, medium, t_end: float, tol: Tolerances | None = None,
                   stride: float | None = None, t_eval=None, fixed_step: float | None = None,
                   debug: bool = False) -> BeamTrajectory:
    """Integrate the augmented system from the beam's initial data."""
    aug, spec = initial_augmented_state(spec, medium)
    E, c = aug.moments.E, aug.c_gamma
    if t_eval is None:
        t_eval = sample_times(t_end, stride)
    sol = integrate(lambda t, y: dynamics_rhs(t, y, medium, spec.omega, E, c), aug.pack(),
                    t_end, t_eval, tol, fixed_step)
    traj = BeamTrajectory(spec, E, c, spec.omega, sol.t, sol.y, medium, sol.dense)
    q_min = np.array([np.linalg.eigvalsh(vec6_to_sym(q))[0] for q in traj.Q6])
    if np.any(q_min <= 0):
        i = int(np.argmax(q_min <= 0))
        msg = f"quadrupole lost positive definiteness at t = {traj.t[i]:.6g}"
        if debug:
            raise IntegrationError(msg, last_time=float(traj.t[max(i - 1, 0)]))
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return traj


def closed_form_JQ(sample: AugmentedState, spec: BeamSpec, medium, s: float | None = None,
                   literal: bool = False):
    """Late-time closed forms of J and Q in terms of A^{-1}(t), B(t) and P(t).

    The term carrying grad ln n enters with a plus sign inside the bracket;
    ``literal=True`` evaluates it with the opposite sign instead, which
    disagrees with both the moment ODE and the quadrature oracle at O(1/omega).
    """
    m = sample.moments
    E, w = m.E, spec.omega
    s = spec.s if s is None else s
    M = sample.M
    Ainv = np.linalg.inv(2j * M.imag)
    B = M.real
    phi_t = -sample.c_gamma
    Pn = float(np.linalg.norm(m.P))
    Ph = m.P / Pn
    g = medium.log_index_jet(m.X).grad
    AB = Ainv @ B
    eps3 = _LEVI_CIVITA
    lead = s - 1j * np.einsum("abc,a,bc->", eps3, Ph, AB)
    sign = -1.0 if literal else 1.0
    inner = Ph @ AB + sign * (phi_t / E) * Pn * (Ainv @ g)
    J = E / (w * phi_t) * (lead * Ph + 1j * np.einsum("iab,a,b->i", eps3, inner, Ph))
    Q = 1j * E / w * Ainv
    return np.real(J), np.real(Q)


_LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _LEVI_CIVITA[_i, _j, _k] = 1.0
    _LEVI_CIVITA[_i, _k, _j] = -1.0


def invariant_report(traj: BeamTrajectory) -> dict:
    """Worst-case drifts of the quantities the flow should conserve or preserve."""
    JV = [unpack_jv(y[6:42]) for y in traj.y]
    Ms = traj.M
    q_rel = 0.0
    for Q, M in zip(traj.Q, Ms):
        pred = np.real(1j * traj.E / traj.omega * np.linalg.inv(2j * M.imag))
        q_rel = max(q_rel, float(np.linalg.norm(Q - pred) / np.linalg.norm(Q)))
    s = traj.polarization()
    cons = traj.conserved()
    # relative per density; a density that vanishes initially is measured against c_e
    scale = np.maximum(np.abs(cons[0]), 1e-12 * np.max(np.abs(cons[0])))
    cons_drift = float(np.max(np.abs(cons - cons[0]) / scale))
    return {
        "H_dev_max": float(np.max(np.abs(traj.H - 0.5))),
        "min_eig_im_m": float(min(np.linalg.eigvalsh(m.imag)[0] for m in Ms)),
        "pairing_drift": pairing_drift([j for j, _ in JV], [v for _, v in JV]),
        "q_identity_rel_max": q_rel,
        "s_drift": float(np.max(np.abs(s - s[0])) / (abs(s[0]) if s[0] != 0 else 1.0)),
        "conserved_rel_drift": cons_drift,
    }


# -- helicity pair ------------------------------------------------------------
@dataclass
class PairResult:
    t: np.ndarray
    plus: BeamTrajectory
    minus: BeamTrajectory
    sep: np.ndarray
    geo_dev: np.ndarray
    report: dict


def mid_slab_time(traj: BeamTrajectory, medium) -> float:
    """Time at which the ray crosses the slab centre, or of maximal |grad ln n| otherwise."""
    if getattr(medium, "kind", None) == "tanh_slab":
        a = np.asarray(medium.axis)
        f = traj.gx @ a - medium.center
        idx = np.nonzero(np.sign(f[:-1]) != np.sign(f[1:]))[0]
        if idx.size:
            i = int(idx[0])
            t0, t1 = traj.t[i], traj.t[i + 1]
            lo, hi = t0, t1
            flo = f[i]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                fm = traj.dense(mid)[0:3] @ a - medium.center
                if np.sign(fm) == np.sign(flo):
                    lo, flo = mid, fm
                else:
                    hi = mid
            return 0.5 * (lo + hi)
    grads = [np.linalg.norm(medium.log_index_jet(x).grad) for x in traj.gx]
    return float(traj.t[int(np.argmax(grads))])


def spin_hall_pair(spec: BeamSpec, medium, t_end: float, tol: Tolerances | None = None,
                   stride: float | None = None, fixed_step: float | None = None,
                   runner=None) -> PairResult:
    """Run s = +1 and s = -1 twins and measure the centroid separation."""
    spec_p = spec.with_(s=abs(spec.s) if spec.s != 0 else 1.0)
    spec_m = spec_p.with_(s=-spec_p.s)
    t_eval = sample_times(t_end, stride)
    run = runner or (lambda sp: integrate_beam(sp, medium, t_end, tol, t_eval=t_eval, fixed_step=fixed_step))
    plus, minus = run(spec_p), run(spec_m)
    sep = plus.X - minus.X
    geo_dev = np.linalg.norm(0.5 * (plus.X + minus.X) - plus.gx, axis=1)
    report = {"omega": spec.omega, "sep_final": sep[-1].tolist(),
              "sep_norm_final": float(np.linalg.norm(sep[-1])),
              "sep_norm_max": float(np.max(np.linalg.norm(sep, axis=1))),
              "geo_dev_max": float(np.max(geo_dev))}
    tm = mid_slab_time(plus, medium)
    dsep = (dynamics_rhs(tm, plus.dense(tm), medium, plus.omega, plus.E, plus.c_gamma)[48:51]
            - dynamics_rhs(tm, minus.dense(tm), medium, minus.omega, minus.E, minus.c_gamma)[48:51])
    st = plus.state_at(tm)
    drift = np.cross(st.moments.P, medium.log_index_jet(st.moments.X).grad)
    nd = np.linalg.norm(dsep) * np.linalg.norm(drift)
    cosang = float(dsep @ drift / nd) if nd > 0 else float("nan")
    report.update({"t_mid": float(tm), "dsep_dt_mid": dsep.tolist(), "drift_dir_mid": drift.tolist(),
                   "cos_angle_mid": cosang,
                   "angle_deg_mid": float(np.degrees(np.arccos(np.clip(cosang, -1, 1)))) if nd > 0 else None})
    return PairResult(plus.t, plus, minus, sep, geo_dev, report)
