"""Linear noise-temperature calibration of receiver variance against known
load temperatures, and receiver gain extraction."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateFitError, DomainError, ParseError

# Calibration line reported for the bench receiver.
BENCH_SLOPE = 0.000159
BENCH_INTERCEPT = 0.0212


@dataclass(frozen=True)
class CalibrationPoint:
    temp: float
    measured_msv: float

    def __post_init__(self):
        if not self.temp > 0:
            raise DomainError("calibration temperature must be > 0")


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    residuals: tuple[float, ...] = field(default=(), compare=False)

    def predict(self, temp):
        return self.slope * np.asarray(temp) + self.intercept

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "residuals": list(self.residuals)}


BENCH_FIT = LinearFit(BENCH_SLOPE, BENCH_INTERCEPT)


def _ols_weights(temps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Linear weights w, a with slope = w @ y and intercept = a @ y."""
    n = temps.size
    centred = temps - temps.mean()
    sxx = float(centred @ centred)
    w = centred / sxx
    a = 1.0 / n - temps.mean() * w
    return w, a


def fit_line(points) -> LinearFit:
    """Unweighted least-squares fit of measured variance against temperature."""
    points = list(points)
    if len(points) < 2:
        raise DegenerateFitError("need at least two calibration points")
    t = np.array([p.temp for p in points], dtype=float)
    y = np.array([p.measured_msv for p in points], dtype=float)
    if np.ptp(t) == 0:
        raise DegenerateFitError("calibration temperatures are all equal")
    w, a = _ols_weights(t)
    slope = float(w @ y)
    intercept = float(a @ y)
    resid = y - (slope * t + intercept)
    return LinearFit(slope, intercept, tuple(float(r) for r in resid))


def fit_std(temps, point_variances) -> tuple[float, float]:
    """Standard deviations of the OLS slope and intercept when each point's
    measurement has the given (independent) variance."""
    t = np.asarray(temps, dtype=float)
    v = np.asarray(point_variances, dtype=float)
    w, a = _ols_weights(t)
    return float(np.sqrt(w**2 @ v)), float(np.sqrt(a**2 @ v))


def extract_noise_temp(measured_msv: float, fit: LinearFit) -> float:
    """Invert the calibration line: T_N = (msv - intercept) / slope."""
    if fit.slope == 0:
        raise DomainError("calibration slope is zero")
    return (measured_msv - fit.intercept) / fit.slope


def receiver_gain(measured_msv: float, offset: float, physical_msv: float) -> float:
    """G_RX = (measured - offset) / physical mean-squared voltage."""
    if not physical_msv > 0:
        raise DomainError("physical_msv must be > 0")
    return (measured_msv - offset) / physical_msv


def read_points_csv(path) -> list[CalibrationPoint]:
    """Read calibration points from a CSV with ``temp_k,msv_sdr`` columns."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"temp_k", "msv_sdr"} <= set(reader.fieldnames):
            raise ParseError(f"{path}: expected columns temp_k, msv_sdr")
        points = []
        for lineno, row in enumerate(reader, start=2):
            try:
                points.append(CalibrationPoint(float(row["temp_k"]), float(row["msv_sdr"])))
            except (TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    return points


def write_fit_json(fit: LinearFit, path) -> None:
    Path(path).write_text(json.dumps(fit.to_dict(), indent=2, sort_keys=True) + "\n")
