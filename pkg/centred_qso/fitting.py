#!/usr/bin/env python
# coding: utf-8

"""Least-squares power-law fits of distribution tails."""

import logging
from typing import Optional

import lmfit as lf  # type: ignore
import numpy as np
from lmfit.model import ModelResult  # type: ignore
from numpy.typing import ArrayLike

from centred_qso.distributions import DistributionSpec, tail_mass
from centred_qso.errors import DomainError


def fit_callback(
    params: lf.Parameters, iter: int, resid: np.ndarray, *args, **kwargs
) -> bool:
    """
    iter_cb for tail fits: logs the current log C, exponent and the sum of
    squared log-tail residuals. Never aborts the fit.
    """
    logging.debug(
        "Tail fit step %d: log_C=%.6g exponent=%.6g ssr=%.3e",
        iter,
        params["log_C"].value,
        params["exponent"].value,
        float(np.dot(resid, resid)),
    )
    return False


def log_power_law(log_x: np.ndarray, log_C: float, exponent: float) -> np.ndarray:
    """log P(X >= x) = log C - exponent * log x."""
    return log_C - exponent * log_x


def fit_tail_power_law(
    spec: DistributionSpec,
    x_grid: ArrayLike,
    exponent: Optional[float] = None,
) -> ModelResult:
    """
    Fit the right tail of ``spec`` to C x^-exponent on a grid of thresholds.

    Parameters:
        spec (DistributionSpec): Law whose tail is fitted.
        x_grid (ArrayLike): Positive thresholds, ideally far in the tail.
        exponent (Optional[float]): Fixes the tail exponent 1 + eps when given.

    Returns:
        ModelResult: lmfit result; ``best_values["log_C"]`` and ``best_values["exponent"]``.
    """
    xs = np.asarray(x_grid, dtype=float)
    if xs.size < 2 or np.any(xs <= 0):
        logging.error("Tail fit needs at least two positive thresholds")
        raise DomainError("tail fit needs at least two positive thresholds")
    upper = np.array([tail_mass(spec, float(x))[1] for x in xs])
    valid = upper > 0
    if valid.sum() < 2:
        raise DomainError("tail mass vanishes on the fit grid")
    log_x = np.log(xs[valid])
    log_tail = np.log(upper[valid])

    model = lf.Model(log_power_law, independent_vars=["log_x"])
    params = model.make_params()
    slope = -(log_tail[-1] - log_tail[0]) / (log_x[-1] - log_x[0])
    params["exponent"].set(
        value=slope if exponent is None else exponent, min=0.0, vary=exponent is None
    )
    params["log_C"].set(value=float(np.mean(log_tail + params["exponent"].value * log_x)))

    result = model.fit(log_tail, params, log_x=log_x, iter_cb=fit_callback, max_nfev=1000)
    logging.info(
        "Tail fit for %s: C=%.6g, exponent=%.6g",
        type(spec).__name__,
        np.exp(result.best_values["log_C"]),
        result.best_values["exponent"],
    )
    return result


def fitted_tail_constant(result: ModelResult) -> float:
    return float(np.exp(result.best_values["log_C"]))
