"""Reductions, standard errors and exponential tail fits shared by the estimators."""

from __future__ import annotations

import logging
from typing import Sequence, Tuple

import numpy as np
from scipy import stats

from .exceptions import InsufficientDataError
from .models import TailFit

logger = logging.getLogger(__name__)

MIN_TAIL_POINTS = 4


def mean_and_std_error(x: np.ndarray, axis: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Sample mean and ``std(ddof=1) / sqrt(n)`` along *axis*.

    ``np.mean`` reduces contiguous data pairwise, so for a fixed sample order
    the result does not depend on how the samples were produced.
    """
    x = np.asarray(x)
    n = x.shape[axis]
    if n == 0:
        raise InsufficientDataError("cannot average an empty sample")
    mean = np.mean(x, axis=axis)
    if n == 1:
        return mean, np.zeros_like(np.abs(mean), dtype=float)
    std = np.std(x, axis=axis, ddof=1)
    return mean, std / np.sqrt(n)


def proportion(hits: np.ndarray) -> Tuple[float, float]:
    hits = np.asarray(hits, dtype=float)
    mean, se = mean_and_std_error(hits)
    return float(mean), float(se)


def fit_log_tail(
    lambdas: Sequence[float],
    measures: Sequence[float],
    *,
    min_points: int = MIN_TAIL_POINTS,
) -> TailFit:
    """Fit ``log(measure) = intercept + slope * lambda`` over nonzero measures.

    The fit is flagged ``bounded`` when some level of the grid already has
    zero measure, i.e. the data stop before the tail does.
    """
    lam = np.asarray(lambdas, dtype=float)
    meas = np.asarray(measures, dtype=float)
    if lam.shape != meas.shape:
        raise ValueError("lambdas and measures must have the same length")
    usable = meas > 0.0
    n_used = int(usable.sum())
    if n_used < min_points:
        raise InsufficientDataError(
            f"only {n_used} levels with nonzero measure; need at least {min_points}"
        )
    x = lam[usable]
    y = np.log(meas[usable])
    if np.ptp(y) == 0.0:
        slope, intercept, r2 = 0.0, float(y[0]), 1.0
    else:
        res = stats.linregress(x, y)
        slope, intercept, r2 = float(res.slope), float(res.intercept), float(res.rvalue ** 2)
    bounded = bool(n_used < lam.size)
    if bounded:
        logger.warning("tail vanishes above lambda=%.4g; fit restricted to %d levels", x[-1], n_used)
    return TailFit(
        lambdas=x.tolist(),
        log_measures=y.tolist(),
        slope=slope,
        intercept=intercept,
        r2=r2,
        n_used=n_used,
        bounded=bounded,
    )
