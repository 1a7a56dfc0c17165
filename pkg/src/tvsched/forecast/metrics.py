from __future__ import annotations

import numpy as np


def _pair(predicted, actual) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(predicted, dtype=float)
    a = np.asarray(actual, dtype=float)
    if p.shape != a.shape or p.ndim != 1:
        raise ValueError("predicted and actual must be 1-D sequences of equal length")
    return p, a


def rms_relative_error(predicted, actual) -> float:
    """sqrt(mean(((pred - actual) / actual)^2))."""
    p, a = _pair(predicted, actual)
    if p.size == 0:
        raise ValueError("empty input")
    if (a <= 0).any():
        raise ValueError("actual values must be positive")
    rel = (p - a) / a
    return float(np.sqrt(np.mean(rel * rel)))


def rrse(predicted, actual) -> float:
    """Root relative squared error; 1.0 matches always predicting the mean of ``actual``."""
    p, a = _pair(predicted, actual)
    if p.size < 2:
        raise ValueError("need at least 2 points")
    denom = np.sum((a.mean() - a) ** 2)
    if denom == 0:
        raise ValueError("actual values are constant; RRSE undefined")
    return float(np.sqrt(np.sum((p - a) ** 2) / denom))
