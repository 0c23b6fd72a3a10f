#!/usr/bin/env python
# coding: utf-8

"""
Characteristic functions of centred QSO iterates, their limits and the
residual checks of the convergence and fixed-point theory.

All products of CF factors are evaluated as sums of principal logarithms. Each
factor is raised to an integer power 2^j, so the product never depends on the
branch chosen for a factor; branch flags are diagnostics only.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray
from scipy import special  # type: ignore

from centred_qso.distributions import (
    DistributionSpec,
    analytic_cf,
    log_cf,
    moments,
)
from centred_qso.errors import DomainError, InvalidGridError, NonConvergenceError

# Factors below this modulus are treated as exact zeros.
UNDERFLOW_MODULUS = 1e-300
_LOG_UNDERFLOW = math.log(UNDERFLOW_MODULUS)
BRANCH_LIMIT = math.pi / 2.0


@dataclass
class CFGrid:
    points: NDArray[np.float64]
    values: NDArray[np.complex128]
    zero_mask: Optional[NDArray[np.bool_]] = None
    branch_mask: Optional[NDArray[np.bool_]] = None
    depth: Optional[int] = None
    truncation_bound: Optional[NDArray[np.float64]] = None

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.points.ndim != 1 or self.points.shape != self.values.shape:
            raise InvalidGridError("CF grid points and values must be 1-D arrays of equal length")
        if np.any(np.diff(self.points) <= 0):
            raise InvalidGridError("CF grid points must be strictly increasing")
        if self.zero_mask is None:
            self.zero_mask = np.zeros(self.points.size, dtype=bool)
        if self.branch_mask is None:
            self.branch_mask = np.zeros(self.points.size, dtype=bool)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"s": self.points, "re": self.values.real, "im": self.values.imag})

    @classmethod
    def from_frame(cls, df: pd.DataFrame) -> "CFGrid":
        missing = {"s", "re", "im"} - set(df.columns)
        if missing:
            logging.error("Missing CF grid columns: %s", missing)
            raise InvalidGridError(f"Missing CF grid columns: {missing}")
        ordered = df.sort_values("s")
        return cls(
            ordered["s"].to_numpy(dtype=float),
            ordered["re"].to_numpy(dtype=float) + 1j * ordered["im"].to_numpy(dtype=float),
        )


@dataclass(frozen=True)
class IterateSpec:
    seed: DistributionSpec
    kernel: DistributionSpec
    n: int

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 0:
            logging.error("Iteration count must be a nonnegative integer, got %s", self.n)
            raise DomainError(f"iteration count must be a nonnegative integer, got {self.n}")


@dataclass(frozen=True)
class TailBoundParams:
    A: float
    p: float
    s0: float
    C: Optional[float] = None
    epsilon: Optional[float] = None

    def __post_init__(self) -> None:
        if not (self.A > 0 and self.p > 1 and self.s0 > 0):
            raise DomainError(f"tail bound needs A > 0, p > 1, s0 > 0; got {self}")
        if self.C is not None and not self.C > 0:
            raise DomainError(f"tail constant C must be > 0, got {self.C}")
        if self.epsilon is not None and not 0 < self.epsilon < 1:
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon}")


@dataclass(frozen=True)
class ResidualReport:
    sup_residual: float
    argmax_s: float
    points_used: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sup_residual": self.sup_residual,
            "argmax_s": self.argmax_s,
            "points_used": self.points_used,
        }


@dataclass(frozen=True)
class TailBoundReport:
    holds: bool
    worst_ratio: float
    worst_s: float
    holds_minus_one: bool
    worst_ratio_minus_one: float
    sandwich_holds: bool
    sandwich_points: int
    points_used: int
    sandwich_failures: list = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "holds": self.holds,
            "worst_ratio": self.worst_ratio,
            "worst_s": self.worst_s,
            "holds_minus_one": self.holds_minus_one,
            "worst_ratio_minus_one": self.worst_ratio_minus_one,
            "sandwich_holds": self.sandwich_holds,
            "sandwich_points": self.sandwich_points,
            "points_used": self.points_used,
            "sandwich_failures": self.sandwich_failures,
        }


def symmetric_grid(delta: float, half_count: int) -> NDArray[np.float64]:
    """Grid {k * delta : |k| <= half_count}; s/2 is a grid point for every even k."""
    if not delta > 0 or half_count < 1:
        raise InvalidGridError(f"grid needs delta > 0 and K_grid >= 1, got {delta}, {half_count}")
    return np.arange(-half_count, half_count + 1, dtype=float) * delta


def analytic_grid(spec: DistributionSpec, points: ArrayLike) -> CFGrid:
    s = np.asarray(points, dtype=float)
    return CFGrid(s, np.asarray(analytic_cf(spec, s), dtype=complex))


class _LogAccumulator:
    """Running sum of weighted log-factors with underflow and branch bookkeeping."""

    def __init__(self, size: int) -> None:
        self.total = np.zeros(size, dtype=complex)
        self.zero = np.zeros(size, dtype=bool)
        self.branch = np.zeros(size, dtype=bool)

    def add(self, log_factor: NDArray[np.complex128], weight: float) -> NDArray[np.complex128]:
        log_factor = np.asarray(log_factor, dtype=complex)
        finite = np.isfinite(log_factor)
        dead = ~finite | (log_factor.real < _LOG_UNDERFLOW)
        self.zero |= dead
        self.branch |= finite & (np.abs(log_factor.imag) > BRANCH_LIMIT)
        increment = np.where(dead, 0.0, weight * log_factor)
        self.total += increment
        return increment

    def grid(self, points: NDArray[np.float64], **extra: Any) -> CFGrid:
        dead = self.zero | (self.total.real < _LOG_UNDERFLOW)
        values = np.where(dead, 0.0 + 0j, np.exp(self.total))
        return CFGrid(points, values, zero_mask=dead, branch_mask=self.branch.copy(), **extra)


def iterate_cf(spec: IterateSpec, points: ArrayLike) -> CFGrid:
    """
    CF of the n-th iterate H(n) = Q_G^n(F) on a grid.

    phi_H(n)(s) = phi_F(s/2^n)^(2^n) * prod_{j<n} phi_G(s/2^j)^(2^j), summed in
    the log domain. n = 0 returns phi_F.

    Parameters:
        spec (IterateSpec): Seed, kernel and iteration count.
        points (ArrayLike): Sorted frequency points.

    Returns:
        CFGrid: Values with zero and branch flags.
    """
    s = np.asarray(points, dtype=float)
    acc = _LogAccumulator(s.size)
    scale = 2.0**spec.n
    acc.add(log_cf(spec.seed, s / scale), scale)
    for j in range(spec.n):
        acc.add(log_cf(spec.kernel, s / 2.0**j), 2.0**j)
    result = acc.grid(s)
    if result.branch_mask.any():
        logging.warning(
            "%d grid points have a factor with |Im Log| > pi/2", int(result.branch_mask.sum())
        )
    logging.debug("Evaluated iterate CF n=%d on %d points", spec.n, s.size)
    return result


def truncation_bound(params: TailBoundParams, points: ArrayLike, depth: int) -> NDArray[np.float64]:
    """Tail of the kernel-limit log series after ``depth`` factors, per grid point."""
    s = np.abs(np.asarray(points, dtype=float))
    ratio = 2.0 ** (-(params.p - 1.0))
    return params.A * s**params.p * 2.0 ** (-depth * (params.p - 1.0)) / (1.0 - ratio)


def kernel_limit_cf(
    kernel: DistributionSpec,
    points: ArrayLike,
    depth_cap: int = 200,
    tol: float = 1e-12,
    tail_params: Optional[TailBoundParams] = None,
) -> CFGrid:
    """
    Limit CF of the perturbation component, prod_{j>=0} phi_G(s/2^j)^(2^j).

    The product is truncated after J factors once the largest weighted
    log-increment on the grid drops below ``tol``, or at ``depth_cap``.

    Parameters:
        kernel (DistributionSpec): Perturbation law G.
        points (ArrayLike): Sorted frequency points.
        depth_cap (int): Maximum number of factors.
        tol (float): Increment threshold, uniform over the grid.
        tail_params (Optional[TailBoundParams]): Enables the truncation bound.

    Returns:
        CFGrid: Values, the depth J used and the truncation bound when known.

    Raises:
        NonConvergenceError: depth_cap reached and no tail bound is known.
    """
    if depth_cap < 1 or not tol > 0:
        raise DomainError(f"kernel limit needs depth_cap >= 1 and tol > 0, got {depth_cap}, {tol}")
    s = np.asarray(points, dtype=float)
    acc = _LogAccumulator(s.size)
    last = math.inf
    depth = depth_cap
    for j in range(depth_cap):
        increment = acc.add(log_cf(kernel, s / 2.0**j), 2.0**j)
        last = float(np.max(np.abs(increment))) if s.size else 0.0
        if last < tol:
            depth = j + 1
            break
    else:
        if tail_params is None:
            logging.error("Kernel limit did not converge by depth %d (last increment %g)", depth_cap, last)
            raise NonConvergenceError(
                f"kernel limit product did not converge within {depth_cap} factors",
                last_increment=last,
                depth=depth_cap,
            )
        logging.warning(
            "Kernel limit stopped at depth cap %d with increment %g; tail bound reported",
            depth_cap,
            last,
        )
    bound = truncation_bound(tail_params, s, depth) if tail_params is not None else None
    logging.info("Kernel limit CF truncated after %d factors (last increment %.3e)", depth, last)
    return acc.grid(s, depth=depth, truncation_bound=bound)


def _dyadic_partner(points: NDArray[np.float64], factor: float) -> NDArray[np.int64]:
    """Index of factor * s for every grid point s, or -1 where it is not on the grid."""
    target = points * factor
    idx = np.clip(np.searchsorted(points, target), 0, points.size - 1)
    scale = max(1.0, float(np.max(np.abs(points)))) if points.size else 1.0
    hit = np.abs(points[idx] - target) <= 1e-12 * scale
    return np.where(hit, idx, -1)


def _residual_report(points: NDArray[np.float64], residual: NDArray[np.float64], used: NDArray[np.bool_]) -> ResidualReport:
    count = int(used.sum())
    if count < 3:
        logging.error("Only %d usable dyadic grid points", count)
        raise InvalidGridError(f"need at least 3 dyadically closed grid points, got {count}")
    masked = np.where(used, residual, -np.inf)
    worst = int(np.argmax(masked))
    return ResidualReport(float(masked[worst]), float(points[worst]), count)


def fixed_point_residual(candidate: CFGrid, kernel: DistributionSpec) -> ResidualReport:
    """
    sup_s |phi(s) - phi(s/2)^2 phi_G(s)| over grid points whose half is on the grid.
    """
    half = _dyadic_partner(candidate.points, 0.5)
    used = half >= 0
    phi_half = candidate.values[np.where(used, half, 0)]
    phi_g = np.asarray(analytic_cf(kernel, candidate.points), dtype=complex)
    residual = np.abs(candidate.values - phi_half**2 * phi_g)
    report = _residual_report(candidate.points, residual, used)
    logging.info("Fixed-point residual %.3e at s=%g", report.sup_residual, report.argmax_s)
    return report


def dyadic_stability_residual(candidate: CFGrid) -> ResidualReport:
    """sup_s |phi(2s) - phi(s)^2| over grid points whose double is on the grid."""
    double = _dyadic_partner(candidate.points, 2.0)
    used = double >= 0
    phi_double = candidate.values[np.where(used, double, 0)]
    residual = np.abs(phi_double - candidate.values**2)
    report = _residual_report(candidate.points, residual, used)
    logging.info("Dyadic stability residual %.3e at s=%g", report.sup_residual, report.argmax_s)
    return report


def verify_tail_bound(
    kernel: DistributionSpec, params: TailBoundParams, points: ArrayLike
) -> TailBoundReport:
    """
    Check |ln phi_G(s)| <= A |s|^p on the grid inside [-s0, s0], the same bound
    for phi_G - 1, and the logarithm sandwich
    |a|(1 - |a|) <= |ln(1 + a)| <= |a|(1 + |a|) for a = phi_G(s) - 1, |a| < 1/2.
    """
    s = np.asarray(points, dtype=float)
    outside = np.abs(s) > params.s0
    if outside.any():
        logging.warning("Dropping %d grid points outside |s| <= %g", int(outside.sum()), params.s0)
    s = s[(s != 0) & ~outside]
    if s.size == 0:
        raise InvalidGridError("no nonzero grid points inside the tail-bound window")
    log_phi = np.asarray(log_cf(kernel, s), dtype=complex)
    envelope = params.A * np.abs(s) ** params.p
    ratio = np.abs(log_phi) / envelope
    a = np.expm1(log_phi)
    ratio_minus_one = np.abs(a) / envelope
    worst = int(np.argmax(ratio))

    size = np.abs(a)
    in_range = size < 0.5
    log_one_plus = np.abs(np.log1p(a[in_range]))
    lower_ok = size[in_range] * (1.0 - size[in_range]) <= log_one_plus
    upper_ok = log_one_plus <= size[in_range] * (1.0 + size[in_range])
    failed = s[in_range][~(lower_ok & upper_ok)]
    if failed.size:
        logging.warning("Logarithm sandwich failed at %d points", failed.size)

    report = TailBoundReport(
        holds=bool(ratio.max() <= 1.0),
        worst_ratio=float(ratio[worst]),
        worst_s=float(s[worst]),
        holds_minus_one=bool(ratio_minus_one.max() <= 1.0),
        worst_ratio_minus_one=float(ratio_minus_one.max()),
        sandwich_holds=bool(failed.size == 0),
        sandwich_points=int(in_range.sum()),
        points_used=int(s.size),
        sandwich_failures=[float(x) for x in failed],
    )
    logging.info(
        "Tail bound A=%g p=%g: worst ratio %.6g at s=%g", params.A, params.p, report.worst_ratio, report.worst_s
    )
    return report


def stable_limit_check(
    dist: DistributionSpec, C: float, n_values: Iterable[int], points: ArrayLike
) -> pd.DataFrame:
    """
    Sup-grid distance between phi(s/n)^n and exp(-C pi |s|) for each n.

    Returns:
        pd.DataFrame: Columns n, sup_error, argmax_s.
    """
    if not C > 0:
        raise DomainError(f"tail constant C must be > 0, got {C}")
    s = np.asarray(points, dtype=float)
    target = np.exp(-C * math.pi * np.abs(s))
    rows = []
    for n in n_values:
        if int(n) < 1:
            raise DomainError(f"n values must be positive integers, got {n}")
        power = np.exp(int(n) * np.asarray(log_cf(dist, s / int(n)), dtype=complex))
        error = np.abs(power - target)
        worst = int(np.argmax(error))
        rows.append({"n": int(n), "sup_error": float(error[worst]), "argmax_s": float(s[worst])})
        logging.debug("Stable limit n=%d: sup error %.3e", n, error[worst])
    return pd.DataFrame(rows, columns=["n", "sup_error", "argmax_s"])


def is_non_increasing(errors: Sequence[float], slack: float = 0.0) -> bool:
    """True when every error is at most its predecessor plus ``slack``."""
    values = list(errors)
    return all(b <= a + slack for a, b in zip(values, values[1:]))


def levy_constant(epsilon: float) -> float:
    """c(eps) = (1 + eps) Gamma(1 - eps) sin(eps pi / 2) / eps for eps in (0, 1)."""
    if not 0.0 < epsilon < 1.0:
        logging.error("levy_constant needs epsilon in (0, 1), got %s", epsilon)
        raise DomainError(f"epsilon must lie strictly inside (0, 1), got {epsilon}")
    return float(
        (1.0 + epsilon) * special.gamma(1.0 - epsilon) * math.sin(epsilon * math.pi / 2.0) / epsilon
    )


def proposition_cf_constant(C: float, epsilon: float) -> float:
    """Constant B with |1 - phi_G(s)| <= B |s|^(1+eps) when both tails are <= C x^-(1+eps)."""
    return 2.0 * C * math.pi ** (1.0 - epsilon) + 4.0 * C * math.pi ** (-(1.0 + epsilon))


def log_bound_from_cf_bound(B: float) -> float:
    """|ln(1 + a)| <= |a| (1 + |a|) <= 1.5 |a| whenever |a| < 1/2."""
    return 1.5 * B


def levy_expansion_check(
    kernel: DistributionSpec, C: float, epsilon: float, points: ArrayLike
) -> pd.DataFrame:
    """
    Ratio (phi_G(s) - 1) / (-2 C c(eps) |s|^(1+eps)) on nonzero grid points.

    It tends to one as s -> 0 for tails C x^-(1+eps) + o(x^-(1+eps)).
    """
    s = np.asarray(points, dtype=float)
    s = s[s != 0]
    phi_minus_one = np.expm1(np.asarray(log_cf(kernel, s), dtype=complex))
    leading = -2.0 * C * levy_constant(epsilon) * np.abs(s) ** (1.0 + epsilon)
    ratio = phi_minus_one / leading
    return pd.DataFrame({"s": s, "ratio_re": ratio.real, "ratio_im": ratio.imag})


def limit_distance_table(
    seed: DistributionSpec,
    kernel: DistributionSpec,
    n_values: Iterable[int],
    points: ArrayLike,
    depth_cap: int = 200,
    tol: float = 1e-12,
) -> pd.DataFrame:
    """
    sup_s |phi_H(n)(s) - exp(i m s) phi_G(inf)(s)| for each n, m the seed mean.

    Returns:
        pd.DataFrame: Columns n, sup_distance.
    """
    s = np.asarray(points, dtype=float)
    limit = kernel_limit_cf(kernel, s, depth_cap=depth_cap, tol=tol)
    m = moments(seed).mean
    target = np.exp(1j * m * s) * limit.values
    rows = []
    for n in n_values:
        values = iterate_cf(IterateSpec(seed, kernel, int(n)), s).values
        rows.append({"n": int(n), "sup_distance": float(np.max(np.abs(values - target)))})
    return pd.DataFrame(rows, columns=["n", "sup_distance"])
