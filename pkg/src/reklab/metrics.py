"""Trajectory diagnostics: alignment of the error with a singular direction and
the Rayleigh-type quotient ``||A e|| / ||e||``."""

from __future__ import annotations

import numpy as np

UNDEFINED_BELOW = 1e-12


class MetricUndefined(ArithmeticError):
    """The error vector vanished (converged); direction-based metrics are undefined."""


def _error(x, x_star) -> tuple[np.ndarray, float]:
    e = np.asarray(x, dtype=np.float64) - np.asarray(x_star, dtype=np.float64)
    norm = float(np.linalg.norm(e))
    if norm <= UNDEFINED_BELOW:
        raise MetricUndefined("converged, metric undefined")
    return e, norm


def metric_alignment(x, x_star, v) -> float:
    """``|<(x - x*) / ||x - x*||, v>|`` for a unit vector ``v``; lies in [0, 1]."""
    e, norm = _error(x, x_star)
    value = abs(float(np.dot(e, v))) / norm
    return min(value, 1.0)


def metric_rayleigh(a, x, x_star) -> float:
    e, norm = _error(x, x_star)
    return float(np.linalg.norm(np.asarray(a) @ e)) / norm
