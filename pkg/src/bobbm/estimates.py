"""Monte Carlo estimates and small fitting helpers."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    samples: int

    def to_dict(self) -> dict:
        return asdict(self)


def mean_estimate(values: np.ndarray) -> Estimate:
    """Sample mean with its standard error (ddof=1)."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if n == 0:
        raise ValueError("no samples")
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return Estimate(mean, stderr, n)


def fit_loglog(x, y) -> tuple[float, float, float]:
    """Least-squares fit log y = slope * log x + intercept.

    Returns ``(slope, intercept, rms_residual)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[0] < 2:
        raise ValueError("need at least two points for a fit")
    return fit_line(np.log(x), np.log(y))


def fit_line(x, y) -> tuple[float, float, float]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[0] < 2:
        raise ValueError("need at least two points for a fit")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))
