import math

import numpy as np
from scipy.special import ndtri

from utils.errors import DomainError


def stable_sum(values):
    """Correctly rounded sum; the result does not depend on summation order."""
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


def stable_mean(values):
    values = np.asarray(values, dtype=float).ravel()
    return stable_sum(values) / len(values)


def normal_critical_value(level):
    """Two-sided standard normal critical value z_{(1+level)/2}."""
    level = float(level)
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must lie in (0,1), got {level}")
    return float(ndtri(0.5 * (1.0 + level)))


def calculate_coverage(ci_low, ci_high, truth):
    """
    Coverage and width summary of a batch of confidence intervals.
    ci_low, ci_high: per-replication interval endpoints (replication order)
    truth: the value every interval is meant to cover
    """
    ci_low = np.asarray(ci_low, dtype=float)
    ci_high = np.asarray(ci_high, dtype=float)
    covered = (ci_low <= truth) & (truth <= ci_high)

    return {
        "coverage": int(covered.sum()) / len(covered),
        "mean_width": stable_mean(ci_high - ci_low),
        "covered": covered,
    }


def median_abs(values):
    return float(np.median(np.abs(np.asarray(values, dtype=float))))
