"""Log-log power-law fits, y ~ C * omega^p, by ordinary least squares."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class PowerFit:
    exponent: float
    prefactor: float
    residual: float    # RMS of the log residuals
    n: int

    def as_dict(self):
        return asdict(self)


def fit_power_law(omegas, values) -> PowerFit:
    x = np.log(np.asarray(omegas, dtype=float))
    y = np.asarray(values, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("need at least two (omega, value) pairs of equal length")
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise ValueError("power-law fit needs positive finite values")
    ly = np.log(y)
    slope, icpt = np.polyfit(x, ly, 1)
    res = ly - (slope * x + icpt)
    return PowerFit(float(slope), float(np.exp(icpt)), float(np.sqrt(np.mean(res**2))), int(x.size))


def doubling_ratios(values) -> list[float]:
    v = np.asarray(values, dtype=float)
    return (v[:-1] / v[1:]).tolist()
