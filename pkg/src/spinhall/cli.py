"""Command line entry point: ``spinhall <subcommand> [--config PATH] [--out DIR] ...``.

Exit codes: 0 success, 2 configuration error, 3 integration failure,
4 verification failure.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, build_config, defaults_json, load_document
from .errors import ConfigError, IntegrationError, VerificationFailure
from .integrate import sample_times
from .optical_geometry import integrate_geodesic, ray_from_beam
from .phase_riccati import init_propagator, integrate_riccati
from .scaling import doubling_ratios, fit_power_law
from .spin_hall_dynamics import integrate_beam, invariant_report, spin_hall_pair
from .verification import CHECKS, parse_sweep, run_verification

log = logging.getLogger("spinhall")

TRAJECTORY_COLUMNS = ("t", "X1", "X2", "X3", "P1", "P2", "P3", "J1", "J2", "J3",
                      "Q11", "Q12", "Q13", "Q22", "Q23", "Q33",
                      "gx1", "gx2", "gx3", "gp1", "gp2", "gp3", "s", "H", "minEigImM")
GEODESIC_COLUMNS = ("t", "x1", "x2", "x3", "p1", "p2", "p3", "H")
RICCATI_COLUMNS = ("t", "ReM11", "ReM12", "ReM13", "ReM22", "ReM23", "ReM33",
                   "ImM11", "ImM12", "ImM13", "ImM22", "ImM23", "ImM33", "min_eig_ImM", "abs_det_J")
POLARIZATION_COLUMNS = ("t", "Re_e1", "Re_e2", "Re_e3", "Im_e1", "Im_e2", "Im_e3", "s")
SEP_COLUMNS = ("t", "sep1", "sep2", "sep3", "sep_norm", "geo_dev")
_UPPER = ([0, 0, 0, 1, 1, 2], [0, 1, 2, 1, 2, 2])


# -- output -----------------------------------------------------------------------
def write_table(path: Path, columns, rows, cfg: ScenarioConfig):
    rows = np.asarray(rows, dtype=float)
    try:
        if cfg.out_format == "json":
            path = path.with_suffix(".json")
            data = {c: [float(cfg.fmt(v)) for v in rows[:, i]] for i, c in enumerate(columns)}
            path.write_text(json.dumps(data, indent=1) + "\n")
        else:
            with open(path, "w", newline="\n") as fh:
                fh.write(",".join(columns) + "\n")
                for row in rows:
                    fh.write(",".join(cfg.fmt(v) for v in row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def write_json(path: Path, obj):
    try:
        path.write_text(json.dumps(obj, indent=2, default=_json_default) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def trajectory_rows(traj):
    s = traj.polarization()
    Q6 = traj.Q6
    return np.column_stack([traj.t, traj.X, traj.P, traj.Jang, Q6, traj.gx, traj.gp, s, traj.H,
                            traj.min_eig_im_m])


def polarization_rows(traj):
    e0 = traj.e0
    return np.column_stack([traj.t, e0.real, e0.imag, traj.polarization()])


# -- subcommands --------------------------------------------------------------------
def cmd_geodesic(cfg, out, fixed_step):
    b = cfg.beam
    tr = integrate_geodesic(ray_from_beam(b.x0, b.direction, cfg.medium), cfg.medium, cfg.t_end,
                            cfg.tol, cfg.sample_stride, fixed_step=fixed_step)
    rows = np.column_stack([tr.t, tr.x, tr.p, tr.H])
    return [write_table(out / "geodesic.csv", GEODESIC_COLUMNS, rows, cfg)]


def cmd_riccati(cfg, out, fixed_step):
    b = cfg.beam
    ray = ray_from_beam(b.x0, b.direction, cfg.medium)
    c = b.k / cfg.medium.index(b.x0)
    tr = integrate_riccati(ray, init_propagator(b.S0, b.B0, c), cfg.medium, cfg.t_end, cfg.tol,
                           cfg.sample_stride, fixed_step=fixed_step)
    Mu = tr.M[:, _UPPER[0], _UPPER[1]]
    rows = np.column_stack([tr.t, Mu.real, Mu.imag, tr.min_eig_im_m, tr.abs_det_j])
    return [write_table(out / "riccati.csv", RICCATI_COLUMNS, rows, cfg)]


def cmd_run(cfg, out, fixed_step):
    traj = integrate_beam(cfg.beam, cfg.medium, cfg.t_end, cfg.tol, cfg.sample_stride, fixed_step=fixed_step)
    files = [write_table(out / "trajectory.csv", TRAJECTORY_COLUMNS, trajectory_rows(traj), cfg),
             write_table(out / "polarization.csv", POLARIZATION_COLUMNS, polarization_rows(traj), cfg)]
    files.append(write_json(out / "invariants.json", invariant_report(traj)))
    return files


def _pair_outputs(cfg, pair, out, tag=""):
    rows = np.column_stack([pair.t, pair.sep, np.linalg.norm(pair.sep, axis=1), pair.geo_dev])
    files = [write_table(out / f"sep{tag}.csv", SEP_COLUMNS, rows, cfg)]
    for name, traj in (("plus", pair.plus), ("minus", pair.minus)):
        files.append(write_table(out / f"trajectory_{name}{tag}.csv", TRAJECTORY_COLUMNS,
                                 trajectory_rows(traj), cfg))
    return files


def _pair_summary(pair) -> dict:
    rep = dict(pair.report)
    rep["sup_dev_from_ray"] = max(float(np.max(np.linalg.norm(tr.X - tr.gx, axis=1)))
                                  for tr in (pair.plus, pair.minus))
    inv = [invariant_report(tr) for tr in (pair.plus, pair.minus)]
    rep["invariants"] = {k: max(d[k] for d in inv) if k != "min_eig_im_m" else min(d[k] for d in inv)
                         for k in inv[0]}
    return rep


def cmd_spinhall(cfg, out, fixed_step):
    pair = spin_hall_pair(cfg.beam, cfg.medium, cfg.t_end, cfg.tol, cfg.sample_stride, fixed_step)
    files = _pair_outputs(cfg, pair, out)
    files.append(write_json(out / "report.json", _pair_summary(pair)))
    return files


def _sweep_job(args):
    cfg_raw, omega, fixed_step = args
    cfg = build_config(cfg_raw)
    pair = spin_hall_pair(cfg.beam.with_(omega=omega), cfg.medium, cfg.t_end, cfg.tol, cfg.sample_stride,
                          fixed_step)
    return omega, pair, _pair_summary(pair)


def cmd_sweep(cfg, out, fixed_step, workers=None):
    omegas = sorted(cfg.omega_list)
    raw = {k: v for k, v in cfg.raw.items()}
    jobs = [(raw, w, fixed_step) for w in omegas]
    workers = workers or min(len(jobs), os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(j) for j in jobs]
    files, per = [], []
    for omega, pair, summary in results:
        files += _pair_outputs(cfg, pair, out, tag=f"_w{omega:g}")
        per.append(summary)
    sep = [p["sep_norm_final"] for p in per]
    dev = [p["sup_dev_from_ray"] for p in per]
    report = {"omegas": omegas, "helicities": list(cfg.helicities), "runs": per}
    if len(omegas) >= 2:
        fs, fd = fit_power_law(omegas, sep), fit_power_law(omegas, dev)
        report["fits"] = {"separation": fs.as_dict(), "dev_from_ray": fd.as_dict(),
                          "dev_doubling_ratios": doubling_ratios(dev)}
        report["pass"] = {"separation_exponent_in_[-1.1,-0.9]": -1.1 <= fs.exponent <= -0.9,
                          "dev_exponent_in_[-1.1,-0.9]": -1.1 <= fd.exponent <= -0.9}
    files.append(write_json(out / "report.json", report))
    return files


def cmd_verify(args, out):
    omegas = parse_sweep(args.omega_sweep) if args.omega_sweep else None
    report = run_verification(args.what, omegas, args.grid_points)
    path = write_json(out / "verify_report.json", report)
    for c in report["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}  ({c['tolerance']})")
    if not report["passed"]:
        raise VerificationFailure(f"verification failed; see {path}")
    return [path]


# -- RNG guard ---------------------------------------------------------------------------
@contextlib.contextmanager
def forbid_rng():
    """Make any call into numpy's or the stdlib's random generators raise."""
    def refuse(*_a, **_k):
        raise AssertionError("random number generator used in --seedless mode")
    saved = []
    targets = [(np.random, n) for n in ("default_rng", "seed", "rand", "randn", "random", "normal",
                                        "uniform", "RandomState", "Generator")]
    targets += [(random, n) for n in ("random", "seed", "uniform", "gauss", "randint", "choice", "shuffle")]
    for mod, name in targets:
        saved.append((mod, name, getattr(mod, name)))
        setattr(mod, name, refuse)
    try:
        yield
    finally:
        for mod, name, fn in saved:
            setattr(mod, name, fn)


# -- argument parsing ----------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON scenario file (defaults apply to omitted keys)")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")
    common.add_argument("--fixed-step", metavar="DT", type=float, default=None,
                        help="use classical RK4 with step DT instead of adaptive RK45")
    common.add_argument("--seedless", action="store_true",
                        help="assert that no random number generator is used")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="spinhall", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("geodesic", parents=[common], help="integrate the central ray")
    sub.add_parser("riccati", parents=[common], help="integrate ray and phase Hessian")
    sub.add_parser("run", parents=[common], help="integrate one beam with its moments")
    sub.add_parser("spinhall", parents=[common], help="helicity pair and centroid separation")
    sw = sub.add_parser("sweep", parents=[common], help="helicity pairs over sweep.omega_list")
    sw.add_argument("--workers", type=int, default=None)
    v = sub.add_parser("verify", parents=[common], help="run the self-checks")
    v.add_argument("--what", choices=CHECKS + ("all",), default="all")
    v.add_argument("--omega-sweep", metavar="LO:HI:N", default=None)
    v.add_argument("--grid-points", type=int, default=61)
    sub.add_parser("print-defaults", help="print the default configuration")
    return p


def _load(args) -> ScenarioConfig:
    doc = {}
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror or exc}") from None
        doc = load_document(text)
    return build_config(doc)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "print-defaults":
        print(defaults_json())
        return 0
    guard = forbid_rng() if args.seedless else contextlib.nullcontext()
    try:
        with guard:
            cfg = _load(args)
            if args.fixed_step is not None and not args.fixed_step > 0:
                raise ConfigError("--fixed-step must be positive")
            if args.command == "verify" and args.grid_points < 21:
                raise ConfigError("--grid-points must be at least 21")
            out = Path(args.out or cfg.out_dir)
            try:
                out.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from None
            if args.command == "verify":
                try:
                    files = cmd_verify(args, out)
                except ValueError as exc:
                    if isinstance(exc, ConfigError):
                        raise
                    raise ConfigError(str(exc)) from None
            elif args.command == "sweep":
                files = cmd_sweep(cfg, out, args.fixed_step, args.workers)
            else:
                files = {"geodesic": cmd_geodesic, "riccati": cmd_riccati, "run": cmd_run,
                         "spinhall": cmd_spinhall}[args.command](cfg, out, args.fixed_step)
    except ConfigError as exc:
        print(f"spinhall: config error: {exc}", file=sys.stderr)
        return 2
    except IntegrationError as exc:
        print(f"spinhall: integration failed: {exc}", file=sys.stderr)
        return 3
    except VerificationFailure as exc:
        print(f"spinhall: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"spinhall: {exc}", file=sys.stderr)
        return 1
    for f in files:
        log.info("wrote %s", f)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
