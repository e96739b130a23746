"""Self-checks behind the ``verify`` subcommand.

Each check compares a library result with an independent route (closed
form, brute-force quadrature or a conserved quantity) and records the
measured error next to its tolerance.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .initial_data import BeamSpec, initial_moments
from .integrate import Tolerances
from .medium import MediumModel
from .moments_oracle import GridSpec, compare_report, fields_from_sample, initial_fields, quadrature_moments
from .optical_geometry import ray_from_beam
from .phase_riccati import (homogeneous_closed_form, init_propagator, integrate_riccati, lnr_matrices,
                            pairing_drift)
from .scaling import fit_power_law
from .spin_hall_dynamics import integrate_beam
from .stationary_phase import PhaseData, QuadGrid, TaylorJet3, brute_force_integral, expand_integral

CHECKS = ("stationary", "riccati", "initial", "moments")
DEFAULT_SWEEP = (100.0, 200.0, 400.0, 800.0)

# fixed SPD test matrices, so that no check depends on a random generator
FIXED_S0 = (
    np.array([[1.0, 0.2, 0.1], [0.2, 1.5, 0.3], [0.1, 0.3, 0.8]]),
    np.array([[2.0, -0.4, 0.0], [-0.4, 0.7, 0.25], [0.0, 0.25, 1.2]]),
    np.array([[0.6, 0.1, -0.2], [0.1, 0.9, 0.05], [-0.2, 0.05, 1.7]]),
)
FIXED_B0 = np.array([[0.3, -0.1, 0.05], [-0.1, 0.0, 0.2], [0.05, 0.2, -0.25]])


@dataclass
class Check:
    name: str
    passed: bool
    tolerance: str
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        self.passed = bool(self.passed)


def slab_medium(center=9.0):
    return MediumModel("tanh_slab", n_left=1.0, n_right=1.5, axis=(1.0, 0.0, 0.0), center=center, width=1.0)


def slab_beam(omega=400.0, s=1.0):
    d = np.array([np.cos(np.pi / 6), np.sin(np.pi / 6), 0.0])
    return BeamSpec(direction=d, k=1.0, S0=FIXED_S0[0], amplitude=1.0, s=s, omega=omega)


# -- stationary phase -------------------------------------------------------------
def _poly_amplitude():
    c = np.zeros(3)
    x = [TaylorJet3.coordinate(c, i) for i in range(3)]
    jet = 1.0 + 0.3 * x[0] - (0.2 + 0.1j) * x[1] * x[2] + 0.5 * x[0] * x[0] + 0.25j * x[2]

    def q(X):
        return (1.0 + 0.3 * X[..., 0] - (0.2 + 0.1j) * X[..., 1] * X[..., 2]
                + 0.5 * X[..., 0] ** 2 + 0.25j * X[..., 2])
    return jet, q


def _quadratic_phase(S):
    c = np.zeros(3)
    x = [TaylorJet3.coordinate(c, i) for i in range(3)]
    f = 0 * x[0]
    for a in range(3):
        for b in range(3):
            f = f + 1j * S[a, b] * x[a] * x[b]
    return f, (lambda X: 1j * np.einsum("...a,ab,...b->...", X, S, X))


def _generic_problem(S):
    c = np.zeros(3)
    x = [TaylorJet3.coordinate(c, i) for i in range(3)]
    f_jet, f_quad = _quadratic_phase(S)
    f_jet = f_jet + 1j * (0.7 * x[0] * x[1] * x[2] + 0.5 * x[0] ** 4)
    q_jet = x[0].compose([1.0] * 5) * x[1].compose([1.0, 0.0, -1.0, 0.0, 1.0])

    def f(X):
        return f_quad(X) + 1j * (0.7 * X[..., 0] * X[..., 1] * X[..., 2] + 0.5 * X[..., 0] ** 4)

    def q(X):
        return np.exp(X[..., 0]) * np.cos(X[..., 1])
    return q_jet, f_jet, q, f


def exact_gaussian_integral(q_value, q_hess, S, omega):
    """Exact integral of a degree-2 polynomial times exp(-omega x.Sx)."""
    pref = (np.pi / omega) ** 1.5 / np.sqrt(np.linalg.det(S))
    return pref * (q_value + np.trace(np.linalg.solve(S, q_hess)) / (4.0 * omega))


def check_stationary(omegas=(50.0, 100.0, 200.0, 400.0), grid_points: int = 61) -> list[Check]:
    S = FIXED_S0[0]
    grid = QuadGrid(points_per_axis=grid_points)
    out = []

    q_jet, q = _poly_amplitude()
    f_jet, f = _quadratic_phase(S)
    phase = PhaseData.from_jet(f_jet)
    worst = 0.0
    for w in omegas:
        exact = exact_gaussian_integral(q_jet.value(), q_jet.hess(), S, w)
        series = expand_integral(q_jet, phase, w, 1)
        brute = brute_force_integral(q, f, w, grid, S=S).value
        worst = max(worst, abs(series - exact) / abs(exact), abs(brute - exact) / abs(exact))
    out.append(Check("stationary.polynomial_exact", worst < 1e-8, "rel < 1e-8", {"max_rel_error": worst}))

    q_jet, f_jet, q, f = _generic_problem(S)
    phase = PhaseData.from_jet(f_jet)
    res1, res0 = [], []
    for w in omegas:
        brute = brute_force_integral(q, f, w, grid, S=S).value
        res1.append(abs(expand_integral(q_jet, phase, w, 1) - brute) / abs(brute))
        res0.append(abs(expand_integral(q_jet, phase, w, 0) - brute) / abs(brute))
    fit1, fit0 = fit_power_law(omegas, res1), fit_power_law(omegas, res0)
    out.append(Check("stationary.generic_residual_exponent", fit1.exponent <= -1.8, "exponent <= -1.8",
                     {"omegas": list(omegas), "residual_order1": res1, "fit_order1": fit1.as_dict(),
                      "residual_order0": res0, "fit_order0": fit0.as_dict()}))
    return out


# -- Riccati ---------------------------------------------------------------------------
def check_riccati(t_end: float = 5.0, stride: float = 0.05) -> list[Check]:
    out = []
    hom = MediumModel("homogeneous", n_left=1.3)
    d = np.array([0.6, 0.0, 0.8])
    worst, drift = 0.0, 0.0
    for S0 in FIXED_S0:
        ray = ray_from_beam(np.zeros(3), d, hom)
        c = 1.0 / hom.index(ray.x)
        prop = init_propagator(S0, FIXED_B0, c)
        tr = integrate_riccati(ray, prop, hom, t_end, stride=stride)
        L = lnr_matrices(ray, hom, c).L
        M0 = FIXED_B0 + 1j * S0
        for ti, Mi in zip(tr.t, tr.M):
            worst = max(worst, float(np.max(np.abs(Mi - homogeneous_closed_form(M0, L, ti)))))
        drift = max(drift, pairing_drift(tr.J, tr.V))
    out.append(Check("riccati.homogeneous_closed_form", worst < 1e-8, "max-norm < 1e-8", {"max_error": worst}))

    med = slab_medium(4.0)
    spec = slab_beam()
    ray = ray_from_beam(spec.x0, spec.direction, med)
    c = spec.k / med.index(spec.x0)
    tr = integrate_riccati(ray, init_propagator(spec.S0, FIXED_B0, c), med, 10.0, stride=0.1)
    slab_drift = pairing_drift(tr.J, tr.V)
    min_eig = float(np.min(tr.min_eig_im_m))
    out.append(Check("riccati.symplectic_and_positivity", max(drift, slab_drift) < 1e-8 and min_eig > 0,
                     "pairing drift < 1e-8, min eig Im M > 0",
                     {"drift_homogeneous": drift, "drift_slab": slab_drift, "min_eig_im_m": min_eig}))
    return out


# -- initial data ---------------------------------------------------------------------
def check_initial(omegas=DEFAULT_SWEEP, grid_points: int = 61, medium=None, spec=None) -> list[Check]:
    medium = medium or slab_medium()
    spec = spec or slab_beam()
    grid = GridSpec(points_per_axis=grid_points)
    deltas = {k: [] for k in "EXPJQ"}
    reports = []
    for w in omegas:
        ode, sp = initial_moments(spec.with_(omega=w), medium)
        orc = quadrature_moments(initial_fields(sp, medium), w, grid)
        rep = compare_report(ode, orc, direction=sp.direction, length_scale=1.0 / sp.k)
        reports.append({"omega": w, **rep})
        for k in deltas:
            deltas[k].append(rep[k]["abs"])
    out = []
    at = [r for r in reports if r["omega"] == 200.0] or reports[:1]
    r = at[0]
    rel = {k: r[k]["rel"] for k in "EXPQ"}
    ok_dir = r["J"]["cos_angle"] > 0.99 and r["J_split"]["s_from_J"] == np.sign(spec.s)
    out.append(Check("initial.oracle_match", max(rel.values()) < 1e-2 and ok_dir,
                     "rel < 1e-2 on E, X, P, Q; J direction and sign",
                     {"omega": r["omega"], "rel": rel, "J_cos_angle": r["J"]["cos_angle"],
                      "s_from_J": r["J_split"]["s_from_J"]}))
    if len(omegas) >= 2:
        fits = {k: fit_power_law(omegas, v).as_dict() for k, v in deltas.items()}
        ok = all(f["exponent"] <= -1.8 for f in fits.values())
        out.append(Check("initial.delta_exponents", ok, "exponent <= -1.8",
                         {"omegas": list(omegas), "deltas": deltas, "fits": fits}))
    return out


# -- moments along a propagated beam ------------------------------------------------------
def check_moments(omegas=DEFAULT_SWEEP, grid_points: int = 61, t_end: float = 20.0,
                  n_samples: int = 6) -> list[Check]:
    medium = slab_medium()
    grid = GridSpec(points_per_axis=grid_points)
    cov, e_drift, xg, osc, signs = 0.0, 0.0, 0.0, 0.0, []
    dx, dp = [], []
    for w in omegas:
        traj = integrate_beam(slab_beam(w), medium, t_end, stride=0.1)
        idx = np.unique(np.linspace(0, len(traj.t) - 1, n_samples).astype(int))
        e_vals, dxw, dpw = [], 0.0, 0.0
        for i in idx:
            smp = traj.sample(i)
            orc = quadrature_moments(fields_from_sample(smp, medium), w, grid)
            Ainv = np.linalg.inv(2j * smp.M.imag)
            pred = np.real(1j / w * orc.E * Ainv)
            cov = max(cov, float(np.linalg.norm(orc.Q - pred) / np.linalg.norm(orc.Q)))
            xg = max(xg, float(np.linalg.norm(orc.X - smp.ray.x)))
            e_vals.append(orc.E)
            dxw = max(dxw, float(np.linalg.norm(smp.moments.X - orc.X)))
            dpw = max(dpw, float(np.linalg.norm(smp.moments.P - orc.P)))
            orc1 = quadrature_moments(fields_from_sample(smp, medium, amplitude_order=1), w, grid)
            signs.append(float(-np.sign(orc1.Jang @ smp.ray.p)))
            if w >= 400 and i == idx[len(idx) // 2]:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)
                    on = quadrature_moments(fields_from_sample(smp, medium),
                                            w, GridSpec(grid.half_width_sigmas, grid.points_per_axis, True))
                osc = max(osc, abs(on.E - orc.E) / orc.E)
        e_drift = max(e_drift, (max(e_vals) - min(e_vals)) / np.mean(e_vals))
        dx.append(dxw)
        dp.append(dpw)
    out = [
        Check("moments.covariance_identity", cov < 1e-5, "rel < 1e-5", {"max_rel": cov}),
        Check("moments.centroid_on_ray", xg < 1e-10, "|X_quad - gamma| < 1e-10", {"max_abs": xg}),
        Check("moments.energy_constant", e_drift < 1e-5, "rel spread < 1e-5", {"max_rel_spread": e_drift}),
        Check("moments.oscillatory_negligible", osc < 1e-4, "rel < 1e-4 at omega >= 400", {"max_rel": osc}),
        Check("moments.helicity_sign_consistent", len(set(signs)) == 1 and signs[0] == 1.0,
              "s from J_parallel constant and equal to s", {"signs": sorted(set(signs))}),
    ]
    if len(omegas) >= 2:
        fx, fp = fit_power_law(omegas, dx), fit_power_law(omegas, dp)
        out.append(Check("moments.ode_vs_oracle_exponent", fx.exponent <= -0.9 and fp.exponent <= -0.9,
                         "exponent <= -0.9 for X and P",
                         {"omegas": list(omegas), "dX": dx, "dP": dp, "fit_X": fx.as_dict(),
                          "fit_P": fp.as_dict()}))
    return out


def run_verification(what: str = "all", omegas=None, grid_points: int = 61) -> dict:
    if what not in CHECKS + ("all",):
        raise ValueError(f"unknown verification target {what!r}")
    targets = CHECKS if what == "all" else (what,)
    results, timings = [], {}
    for name in targets:
        t0 = time.perf_counter()
        if name == "stationary":
            results += check_stationary(grid_points=grid_points)
        elif name == "riccati":
            results += check_riccati()
        elif name == "initial":
            results += check_initial(tuple(omegas or DEFAULT_SWEEP), grid_points)
        else:
            results += check_moments(tuple(omegas or DEFAULT_SWEEP), grid_points)
        timings[name] = time.perf_counter() - t0
    return {"passed": all(c.passed for c in results),
            "checks": [asdict(c) for c in results],
            "runtime_s": timings}


def parse_sweep(text: str) -> tuple:
    """'lo:hi:n' -> n geometrically spaced omegas from lo to hi."""
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise ValueError(f"omega sweep must look like lo:hi:n, got {text!r}") from None
    if not (1.0 < lo <= hi) or n < 1 or (n == 1 and lo != hi):
        raise ValueError(f"omega sweep needs 1 < lo <= hi and n >= 1, got {text!r}")
    return tuple(float(x) for x in np.geomspace(lo, hi, n))


__all__ = ["Check", "run_verification", "check_stationary", "check_riccati", "check_initial",
           "check_moments", "parse_sweep", "slab_medium", "slab_beam", "exact_gaussian_integral",
           "FIXED_S0", "FIXED_B0", "Tolerances"]
