#!/usr/bin/env python
# coding: utf-8

"""
Statistical checks of sampled values: empirical characteristic functions,
moment summaries, two-sample Kolmogorov-Smirnov distances and histograms.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, Literal, Optional, Tuple

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray
from scipy import special  # type: ignore

from centred_qso.cf_engine import CFGrid
from centred_qso.distributions import MomentSummary
from centred_qso.errors import InvalidSpecError, QSOValidationError

# Asymptotic two-sample KS coefficient at the 1% level.
KS_COEFFICIENT_1PCT = 1.628
# Upper bound on len(points) * len(values) evaluated at once.
ECF_CHUNK = 2**22


def _nonempty(values: ArrayLike, what: str) -> NDArray[np.float64]:
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        logging.error("%s needs at least one value", what)
        raise QSOValidationError(f"{what} needs at least one value")
    return x


def empirical_cf(values: ArrayLike, points: ArrayLike) -> CFGrid:
    """
    Empirical characteristic function (1/K) sum_k exp(i s x_k) on a grid.

    Parameters:
        values (ArrayLike): Sample x_1..x_K.
        points (ArrayLike): Strictly increasing frequency points.

    Returns:
        CFGrid: Empirical CF values.
    """
    x = _nonempty(values, "empirical_cf")
    s = np.asarray(points, dtype=float)
    re = np.empty(s.size)
    im = np.empty(s.size)
    rows = max(1, ECF_CHUNK // x.size)
    for start in range(0, s.size, rows):
        phase = np.outer(s[start : start + rows], x)
        re[start : start + rows] = np.cos(phase).sum(axis=1) / x.size
        im[start : start + rows] = np.sin(phase).sum(axis=1) / x.size
    return CFGrid(s, re + 1j * im)


def summarize(values: ArrayLike) -> MomentSummary:
    """Sample mean and unbiased variance; a single value has variance 0 and is flagged."""
    x = _nonempty(values, "summarize")
    mean = float(x.sum() / x.size)
    if x.size == 1:
        return MomentSummary(mean, 0.0, degenerate=True)
    variance = float(((x - mean) ** 2).sum() / (x.size - 1))
    return MomentSummary(mean, variance, degenerate=variance == 0.0)


@dataclass(frozen=True)
class KSResult:
    statistic: float
    critical_value_1pct: float
    sample_sizes: Tuple[int, int]
    p_value: float

    @property
    def rejects_1pct(self) -> bool:
        return self.statistic > self.critical_value_1pct

    def to_dict(self) -> Dict[str, Any]:
        return {
            "statistic": self.statistic,
            "critical_value_1pct": self.critical_value_1pct,
            "sample_sizes": list(self.sample_sizes),
            "p_value": self.p_value,
            "rejects_1pct": self.rejects_1pct,
        }


def ks_two_sample(a: ArrayLike, b: ArrayLike) -> KSResult:
    """
    Two-sample Kolmogorov-Smirnov distance over the pooled sample points.

    Parameters:
        a (ArrayLike): First sample.
        b (ArrayLike): Second sample.

    Returns:
        KSResult: Statistic, asymptotic 1% critical value and p-value.
    """
    xa = np.sort(_nonempty(a, "ks_two_sample"))
    xb = np.sort(_nonempty(b, "ks_two_sample"))
    na, nb = xa.size, xb.size
    pooled = np.concatenate([xa, xb])
    cdf_a = np.searchsorted(xa, pooled, side="right") / na
    cdf_b = np.searchsorted(xb, pooled, side="right") / nb
    statistic = float(np.max(np.abs(cdf_a - cdf_b)))
    critical = KS_COEFFICIENT_1PCT * math.sqrt((na + nb) / (na * nb))
    effective = math.sqrt(na * nb / (na + nb))
    p_value = float(special.kolmogorov(effective * statistic))
    logging.info("KS statistic %.5f (1%% critical value %.5f)", statistic, critical)
    return KSResult(statistic, critical, (na, nb), p_value)


@dataclass(frozen=True)
class HistogramSpec:
    bin_count: int
    range: Optional[Tuple[float, float]] = None
    normalization: Literal["counts", "density"] = "counts"

    def __post_init__(self) -> None:
        if self.bin_count < 1:
            logging.error("Histogram needs at least one bin, got %s", self.bin_count)
            raise InvalidSpecError(f"bin_count must be positive, got {self.bin_count}")
        if self.range is not None and not self.range[0] < self.range[1]:
            raise InvalidSpecError(f"histogram range needs lo < hi, got {self.range}")
        if self.normalization not in ("counts", "density"):
            raise InvalidSpecError(f"unknown normalization {self.normalization!r}")


@dataclass
class Histogram:
    table: pd.DataFrame
    underflow: int
    overflow: int
    total: int
    normalization: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "underflow": self.underflow,
            "overflow": self.overflow,
            "total": self.total,
            "normalization": self.normalization,
        }


def histogram(values: ArrayLike, spec: HistogramSpec) -> Histogram:
    """
    Bin values into half-open bins [lo + k w, lo + (k + 1) w).

    Values outside [lo, hi) are counted as underflow or overflow. The automatic
    range runs from the minimum to just above the maximum.
    """
    x = _nonempty(values, "histogram")
    if spec.range is None:
        lo = float(x.min())
        hi = float(np.nextafter(x.max(), np.inf))
    else:
        lo, hi = spec.range
    n = spec.bin_count
    width = (hi - lo) / n
    underflow = int(np.count_nonzero(x < lo))
    overflow = int(np.count_nonzero(x >= hi))
    inside = x[(x >= lo) & (x < hi)]
    index = np.clip(np.floor((inside - lo) / width).astype(np.int64), 0, n - 1)
    counts = np.bincount(index, minlength=n)
    edges = lo + width * np.arange(n + 1)
    edges[-1] = hi
    if spec.normalization == "density":
        value = counts / (x.size * width)
    else:
        value = counts.astype(float)
    table = pd.DataFrame({"bin_lo": edges[:-1], "bin_hi": edges[1:], "value": value})
    return Histogram(table, underflow, overflow, int(x.size), spec.normalization)


def density_bin_error(hist: Histogram, pdf: Callable[[NDArray[np.float64]], NDArray[np.float64]]) -> float:
    """Largest |histogram density - pdf(bin centre)| over the bins."""
    if hist.normalization != "density":
        raise InvalidSpecError("density_bin_error needs a density-normalized histogram")
    centres = 0.5 * (hist.table["bin_lo"].to_numpy() + hist.table["bin_hi"].to_numpy())
    return float(np.max(np.abs(hist.table["value"].to_numpy() - pdf(centres))))
