#!/usr/bin/env python
# coding: utf-8

"""
Parametric one-dimensional laws used as seeds F and kernels G.

Every family is an immutable dataclass. The module-level functions dispatch on
the family with structural pattern matching, so a spec can be shared freely
between threads and processes.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, ClassVar, Dict, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate, special, stats  # type: ignore

from centred_qso.errors import DomainError, InvalidSpecError, QuadratureError
from centred_qso.streams import RandomStream

# Discrete power law: alias table covers 1 <= |k| <= ALIAS_CUTOFF.
ALIAS_CUTOFF = 10**6
# Discrete power law CF: explicit terms before the integral tail correction.
CF_SERIES_TERMS = 10**4
NORMALIZER_TOL = 1e-10
CF_QUAD_TOL = 1e-6
# Brute-force averaging draws at most this many values at once.
CHUNK_ELEMENTS = 2**22


@dataclass(frozen=True)
class PointMass:
    family: ClassVar[str] = "pointmass"
    value: float


@dataclass(frozen=True)
class Normal:
    family: ClassVar[str] = "normal"
    mean: float
    variance: float

    def __post_init__(self) -> None:
        _require(self.variance >= 0, f"Normal variance must be >= 0, got {self.variance}")


@dataclass(frozen=True)
class Exponential:
    family: ClassVar[str] = "exponential"
    rate: float

    def __post_init__(self) -> None:
        _require(self.rate > 0, f"Exponential rate must be > 0, got {self.rate}")


@dataclass(frozen=True)
class CauchyLike:
    """Density c * (1 + a|x - mu|^alpha)^(-2/alpha); tails decay like |x|^-2."""

    family: ClassVar[str] = "cauchylike"
    mu: float
    a: float
    alpha: float
    normalizer: float = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        _require(self.a > 0, f"CauchyLike a must be > 0, got {self.a}")
        _require(self.alpha > 0, f"CauchyLike alpha must be > 0, got {self.alpha}")
        object.__setattr__(self, "normalizer", cauchy_like_normalizer(self.a, self.alpha))


@dataclass(frozen=True)
class DiscretePowerLaw:
    """P(X = k) = C |k|^-(2 + epsilon) on the non-zero integers."""

    family: ClassVar[str] = "discretepowerlaw"
    epsilon: float

    def __post_init__(self) -> None:
        _require(self.epsilon > 0, f"DiscretePowerLaw epsilon must be > 0, got {self.epsilon}")

    @property
    def index(self) -> float:
        return 2.0 + self.epsilon

    @property
    def constant(self) -> float:
        return 1.0 / (2.0 * float(special.zeta(self.index)))


@dataclass(frozen=True)
class SymmetricStable:
    """Characteristic function exp(-|s|^exponent)."""

    family: ClassVar[str] = "stable"
    exponent: float

    def __post_init__(self) -> None:
        _require(
            1.0 < self.exponent <= 2.0,
            f"SymmetricStable exponent must lie in (1, 2], got {self.exponent}",
        )


@dataclass(frozen=True)
class Cauchy:
    family: ClassVar[str] = "cauchy"
    location: float
    scale: float

    def __post_init__(self) -> None:
        _require(self.scale > 0, f"Cauchy scale must be > 0, got {self.scale}")


@dataclass(frozen=True)
class Empirical:
    family: ClassVar[str] = "empirical"
    values: Tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        _require(len(self.values) > 0, "Empirical law needs at least one value")

    def array(self) -> NDArray[np.float64]:
        return np.asarray(self.values, dtype=float)


DistributionSpec = Union[
    PointMass,
    Normal,
    Exponential,
    CauchyLike,
    DiscretePowerLaw,
    SymmetricStable,
    Cauchy,
    Empirical,
]

FAMILIES: Dict[str, Any] = {
    cls.family: cls
    for cls in (
        PointMass,
        Normal,
        Exponential,
        CauchyLike,
        DiscretePowerLaw,
        SymmetricStable,
        Cauchy,
        Empirical,
    )
}


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    variance: float
    finite_mean: bool = True
    max_moment_order: float = math.inf
    degenerate: bool = False

    @property
    def infinite_variance(self) -> bool:
        return math.isinf(self.variance)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mean": self.mean,
            "variance": "infinite" if self.infinite_variance else self.variance,
            "finite_mean": self.finite_mean,
            "max_moment_order": (
                "infinite" if math.isinf(self.max_moment_order) else self.max_moment_order
            ),
            "degenerate": self.degenerate,
        }


def _require(condition: bool, message: str) -> None:
    if not condition:
        logging.error("Invalid distribution spec: %s", message)
        raise InvalidSpecError(message)


# ---------------------------------------------------------------- constants


@functools.lru_cache(maxsize=None)
def cauchy_like_normalizer(a: float, alpha: float) -> float:
    """
    Normalizing constant c of the Cauchy-like density by adaptive quadrature.

    Parameters:
        a (float): Scale coefficient inside the bracket.
        alpha (float): Power inside the bracket.

    Returns:
        float: c such that the density integrates to one.

    Raises:
        QuadratureError: If the quadrature error estimate exceeds NORMALIZER_TOL.
    """
    half, abserr = integrate.quad(
        lambda t: (1.0 + a * t**alpha) ** (-2.0 / alpha),
        0.0,
        np.inf,
        epsabs=1e-13,
        epsrel=1e-12,
        limit=500,
    )
    if abserr > NORMALIZER_TOL:
        logging.error("Cauchy-like normalizer quadrature residual %g", abserr)
        raise QuadratureError("Cauchy-like normalizer did not converge", residual=abserr)
    return 1.0 / (2.0 * half)


def levy_tail_coefficient(exponent: float) -> float:
    """Coefficient of x^-exponent in the tail of the standard symmetric stable law."""
    return float(special.gamma(exponent) * math.sin(math.pi * exponent / 2.0) / math.pi)


# ---------------------------------------------------------------- sampling


def sample(spec: DistributionSpec, count: int, stream: RandomStream) -> NDArray[np.float64]:
    """
    Draw ``count`` independent values from ``spec``.

    The draws depend only on (spec, count, stream): the stream is turned into a
    fresh generator on every call.
    """
    if count < 1:
        raise DomainError(f"count must be positive, got {count}")
    return draw(spec, count, stream.generator())


def draw(spec: DistributionSpec, count: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """Draw ``count`` values from ``spec`` using an already positioned generator."""
    match spec:
        case PointMass(value=m):
            return np.full(count, float(m))
        case Normal(mean=m, variance=v):
            return rng.normal(m, math.sqrt(v), size=count)
        case Exponential(rate=r):
            return rng.exponential(1.0 / r, size=count)
        case CauchyLike():
            return _draw_cauchy_like(spec, count, rng)
        case DiscretePowerLaw():
            return _draw_discrete_power_law(spec, count, rng)
        case SymmetricStable(exponent=a):
            return _draw_symmetric_stable(a, count, rng)
        case Cauchy(location=loc, scale=sc):
            return loc + sc * rng.standard_cauchy(size=count)
        case Empirical():
            return rng.choice(spec.array(), size=count, replace=True)
    raise InvalidSpecError(f"Unknown distribution spec {spec!r}")


def _draw_symmetric_stable(a: float, count: int, rng: np.random.Generator) -> NDArray[np.float64]:
    # Chambers-Mallows-Stuck construction, symmetric case, unit scale.
    u = rng.uniform(-np.pi / 2.0, np.pi / 2.0, size=count)
    w = rng.standard_exponential(size=count)
    left = np.sin(a * u) / np.cos(u) ** (1.0 / a)
    right = (np.cos((1.0 - a) * u) / w) ** ((1.0 - a) / a)
    return left * right


def _draw_cauchy_like(spec: CauchyLike, count: int, rng: np.random.Generator) -> NDArray[np.float64]:
    # |X - mu| has CDF I_v(1/alpha, 1/alpha) with v = a t^alpha / (1 + a t^alpha).
    b = 1.0 / spec.alpha
    q = rng.random(size=count)
    lower = q < 0.5
    v = np.empty(count)
    w = np.empty(count)
    v[lower] = special.betaincinv(b, b, q[lower])
    w[lower] = 1.0 - v[lower]
    w[~lower] = special.betaincinv(b, b, 1.0 - q[~lower])
    v[~lower] = 1.0 - w[~lower]
    distance = (v / (spec.a * w)) ** b
    sign = 2.0 * rng.integers(0, 2, size=count) - 1.0
    return spec.mu + sign * distance


@functools.lru_cache(maxsize=8)
def _power_law_alias_table(epsilon: float) -> Tuple[NDArray[np.float64], NDArray[np.int64], float]:
    """
    Walker alias table for |k| in [1, ALIAS_CUTOFF] plus the mass beyond it.

    Returns:
        Tuple: (acceptance probabilities, alias indices, tail probability).
    """
    index = 2.0 + epsilon
    k = np.arange(1, ALIAS_CUTOFF + 1, dtype=float)
    weights = k**-index
    zeta_total = float(special.zeta(index))
    tail_probability = float(special.zeta(index, ALIAS_CUTOFF + 1)) / zeta_total

    n = weights.size
    scaled_array = weights * (n / weights.sum())
    small = np.flatnonzero(scaled_array < 1.0).tolist()
    large = np.flatnonzero(scaled_array >= 1.0).tolist()
    scaled = scaled_array.tolist()
    prob = np.ones(n)
    alias = np.arange(n, dtype=np.int64)
    while small and large:
        lo = small.pop()
        hi = large.pop()
        prob[lo] = scaled[lo]
        alias[lo] = hi
        scaled[hi] = scaled[hi] + scaled[lo] - 1.0
        (small if scaled[hi] < 1.0 else large).append(hi)
    logging.debug("Built alias table for epsilon=%g (tail mass %.3e)", epsilon, tail_probability)
    return prob, alias, tail_probability


def _draw_power_law_tail(index: float, count: int, rng: np.random.Generator) -> NDArray[np.float64]:
    # Pareto proposal floor(Y), Y >= K + 1; acceptance ratio is within (1 + 1/K)^index of one.
    start = float(ALIAS_CUTOFF + 1)
    bound = (1.0 + 1.0 / start) ** index
    out = np.empty(0)
    while out.size < count:
        need = count - out.size
        y = start * rng.random(size=need) ** (-1.0 / (index - 1.0))
        k = np.floor(y)
        cell = k ** (1.0 - index) * -np.expm1((1.0 - index) * np.log1p(1.0 / k)) / (index - 1.0)
        ratio = k**-index / cell / bound
        out = np.concatenate([out, k[rng.random(size=need) <= ratio]])
    return out[:count]


def _draw_discrete_power_law(
    spec: DiscretePowerLaw, count: int, rng: np.random.Generator
) -> NDArray[np.float64]:
    prob, alias, tail_probability = _power_law_alias_table(spec.epsilon)
    in_tail = rng.random(size=count) < tail_probability
    column = rng.integers(0, ALIAS_CUTOFF, size=count)
    keep = rng.random(size=count) < prob[column]
    magnitude = np.where(keep, column, alias[column]).astype(float) + 1.0
    n_tail = int(in_tail.sum())
    if n_tail:
        magnitude[in_tail] = _draw_power_law_tail(spec.index, n_tail, rng)
    sign = 2.0 * rng.integers(0, 2, size=count) - 1.0
    return sign * magnitude


def average_of_draws(
    spec: DistributionSpec,
    m: int,
    count: int,
    rng: np.random.Generator,
    reduce_sums: bool = True,
) -> NDArray[np.float64]:
    """
    Draw ``count`` realizations of the mean of ``m`` i.i.d. draws from ``spec``.

    Families closed under averaging are sampled through the exact law of the
    mean; everything else (or ``reduce_sums=False``) sums literal draws.

    Parameters:
        spec (DistributionSpec): Law of the summands.
        m (int): Number of summands per realization.
        count (int): Number of realizations.
        rng (np.random.Generator): Generator to consume.
        reduce_sums (bool): Allow closed-form reductions.

    Returns:
        NDArray: ``count`` averages.
    """
    if m < 1:
        raise DomainError(f"number of summands must be positive, got {m}")
    if m == 1:
        return draw(spec, count, rng)
    if reduce_sums:
        match spec:
            case PointMass(value=v):
                return np.full(count, float(v))
            case Normal(mean=mu, variance=v):
                return rng.normal(mu, math.sqrt(v / m), size=count)
            case Exponential(rate=r):
                return rng.gamma(float(m), 1.0 / (r * m), size=count)
            case SymmetricStable(exponent=a):
                return float(m) ** (1.0 / a - 1.0) * _draw_symmetric_stable(a, count, rng)
            case Cauchy():
                return draw(spec, count, rng)
    rows = max(1, CHUNK_ELEMENTS // m)
    out = np.empty(count)
    for start in range(0, count, rows):
        stop = min(count, start + rows)
        if m <= CHUNK_ELEMENTS:
            block = draw(spec, (stop - start) * m, rng).reshape(stop - start, m)
            out[start:stop] = block.sum(axis=1) / m
        else:
            for i in range(start, stop):
                total = 0.0
                for piece in range(0, m, CHUNK_ELEMENTS):
                    total += float(draw(spec, min(CHUNK_ELEMENTS, m - piece), rng).sum())
                out[i] = total / m
    return out


# ---------------------------------------------------------------- characteristic functions


def _wrap_phase(z: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Move the imaginary part of a logarithm onto the principal branch."""
    imag = z.imag
    wrapped = np.where(np.abs(imag) <= np.pi, imag, np.angle(np.exp(1j * imag)))
    return z.real + 1j * wrapped


def _scalar_or_array(s: ArrayLike, values: NDArray[np.complex128]) -> Any:
    return complex(values[()]) if np.ndim(s) == 0 else values


def _cosine_quad(f: Callable[[float], float], w: float) -> Tuple[float, float]:
    value, abserr = integrate.quad(
        f, 0.0, np.inf, weight="cos", wvar=w, limlst=200, limit=500, epsabs=1e-12
    )
    return value, abserr


@functools.lru_cache(maxsize=200_000)
def _cauchy_like_cosine_transform(a: float, alpha: float, w: float) -> float:
    """
    2c * integral_0^inf cos(w t) (1 + a t^alpha)^(-2/alpha) dt for w > 0.

    The Cauchy shape K / (K + t^2) with K = a^(-2/alpha) has the same value at
    zero and the same t^-2 tail, and its transform is (pi/2) sqrt(K) exp(-sqrt(K) w).
    Only the faster-decaying difference goes through quadrature; the direct
    integral is the fallback when that estimate is still too loose.
    """
    c = cauchy_like_normalizer(a, alpha)
    K = a ** (-2.0 / alpha)
    b = math.sqrt(K)
    shape = 0.5 * math.pi * b * math.exp(-b * w)
    rest, abserr = _cosine_quad(
        lambda t: (1.0 + a * t**alpha) ** (-2.0 / alpha) - K / (K + t * t), w
    )
    residual = 2.0 * c * abserr
    if residual <= CF_QUAD_TOL:
        return 2.0 * c * (shape + rest)
    logging.debug("Cauchy-like CF at s=%g: residual %g, retrying without the Cauchy shape", w, residual)
    value, abserr = _cosine_quad(lambda t: (1.0 + a * t**alpha) ** (-2.0 / alpha), w)
    if 2.0 * c * abserr <= CF_QUAD_TOL:
        return 2.0 * c * value
    residual = min(residual, 2.0 * c * abserr)
    logging.error("Cauchy-like CF quadrature at s=%g left residual %g", w, residual)
    raise QuadratureError(f"Cauchy-like CF quadrature did not converge at s={w}", residual=residual)


def _tail_one_minus_cos(s: float, index: float, start: float) -> float:
    """integral_start^inf (1 - cos(s y)) y^-index dy, split where s*y reaches one."""
    split = max(start, 1.0 / s)
    near = 0.0
    if split > start:
        # log substitution, the range can span tens of decades for tiny s
        near, _ = integrate.quad(
            lambda u: 2.0 * math.sin(0.5 * s * math.exp(u)) ** 2 * math.exp((1.0 - index) * u),
            math.log(start),
            math.log(split),
            limit=500,
            epsabs=0.0,
            epsrel=1e-10,
        )
    oscillating, _ = integrate.quad(
        lambda y: y**-index,
        split,
        np.inf,
        weight="cos",
        wvar=s,
        limlst=200,
        limit=500,
        epsabs=1e-8 * split ** (1.0 - index),
    )
    return near + split ** (1.0 - index) / (index - 1.0) - oscillating


@functools.lru_cache(maxsize=200_000)
def _power_law_one_minus_cf(epsilon: float, s: float) -> float:
    """1 - phi(s) for the discrete power law, s > 0; head sum plus midpoint tail integral."""
    index = 2.0 + epsilon
    constant = 1.0 / (2.0 * float(special.zeta(index)))
    k = np.arange(1, CF_SERIES_TERMS + 1, dtype=float)
    head = float(np.sum(2.0 * np.sin(0.5 * s * k) ** 2 * k**-index))
    tail = _tail_one_minus_cos(s, index, CF_SERIES_TERMS + 0.5)
    return 2.0 * constant * (head + tail)


def log_cf(spec: DistributionSpec, s: ArrayLike) -> Any:
    """
    Principal logarithm of the characteristic function.

    Closed forms are used wherever they exist, so the value keeps full relative
    precision near s = 0 where the CF itself is within rounding of one.
    """
    points = np.asarray(s, dtype=float)
    match spec:
        case PointMass(value=m):
            out = _wrap_phase(1j * m * points)
        case Normal(mean=m, variance=v):
            out = _wrap_phase(1j * m * points - 0.5 * v * points**2)
        case Exponential(rate=r):
            out = -np.log1p(-1j * points / r)
        case SymmetricStable(exponent=a):
            out = -(np.abs(points) ** a) + 0j
        case Cauchy(location=loc, scale=sc):
            out = _wrap_phase(1j * loc * points - sc * np.abs(points))
        case CauchyLike(mu=mu, a=a, alpha=alpha):
            flat = np.abs(points).ravel()
            one_minus = np.array(
                [0.0 if w == 0 else 1.0 - _cauchy_like_cosine_transform(a, alpha, float(w)) for w in flat]
            ).reshape(points.shape)
            # symmetric law: 1 - phi lies in [0, 2]
            one_minus = np.clip(one_minus, 0.0, 2.0)
            out = _wrap_phase(np.log1p(-one_minus + 0j) + 1j * mu * points)
        case DiscretePowerLaw(epsilon=eps):
            flat = np.abs(points).ravel()
            one_minus = np.array(
                [0.0 if w == 0 else _power_law_one_minus_cf(eps, float(w)) for w in flat]
            ).reshape(points.shape)
            one_minus = np.clip(one_minus, 0.0, 2.0)
            out = np.log1p(-one_minus + 0j)
        case Empirical():
            with np.errstate(divide="ignore"):
                out = np.log(np.asarray(analytic_cf(spec, points), dtype=complex))
        case _:
            raise InvalidSpecError(f"Unknown distribution spec {spec!r}")
    return _scalar_or_array(s, np.asarray(out, dtype=complex))


def analytic_cf(spec: DistributionSpec, s: ArrayLike) -> Any:
    """
    Characteristic function phi(s) = E exp(i s X).

    Parameters:
        spec (DistributionSpec): Law to evaluate.
        s (ArrayLike): Frequency point or array of points.

    Returns:
        complex or NDArray: CF values, same shape as ``s``.

    Raises:
        QuadratureError: If the Cauchy-like Fourier integral does not converge.
    """
    points = np.asarray(s, dtype=float)
    match spec:
        case Exponential(rate=r):
            out = 1.0 / (1.0 - 1j * points / r)
        case Empirical():
            x = spec.array()
            flat = points.ravel()
            re = np.empty(flat.size)
            im = np.empty(flat.size)
            for i, w in enumerate(flat):
                re[i] = np.cos(w * x).sum() / x.size
                im[i] = np.sin(w * x).sum() / x.size
            out = (re + 1j * im).reshape(points.shape)
        case _:
            out = np.exp(np.asarray(log_cf(spec, points), dtype=complex))
            out = np.where(points == 0, 1.0 + 0j, out)
    return _scalar_or_array(s, np.asarray(out, dtype=complex))


# ---------------------------------------------------------------- moments and tails


def moments(spec: DistributionSpec) -> MomentSummary:
    """Closed-form mean and variance; divergence is reported by flags, never raised."""
    match spec:
        case PointMass(value=m):
            return MomentSummary(float(m), 0.0, degenerate=True)
        case Normal(mean=m, variance=v):
            return MomentSummary(float(m), float(v), degenerate=v == 0)
        case Exponential(rate=r):
            return MomentSummary(1.0 / r, 1.0 / r**2)
        case CauchyLike(mu=mu):
            return MomentSummary(float(mu), math.inf, finite_mean=False, max_moment_order=1.0)
        case DiscretePowerLaw(epsilon=eps):
            variance = (
                2.0 * spec.constant * float(special.zeta(eps)) if eps > 1.0 else math.inf
            )
            return MomentSummary(0.0, variance, max_moment_order=1.0 + eps)
        case SymmetricStable(exponent=a):
            if a == 2.0:
                return MomentSummary(0.0, 2.0)
            return MomentSummary(0.0, math.inf, max_moment_order=a)
        case Cauchy(location=loc):
            return MomentSummary(float(loc), math.inf, finite_mean=False, max_moment_order=1.0)
        case Empirical():
            x = spec.array()
            mean = float(x.sum() / x.size)
            variance = float(((x - mean) ** 2).sum() / x.size)
            return MomentSummary(mean, variance, degenerate=x.size == 1 or variance == 0.0)
    raise InvalidSpecError(f"Unknown distribution spec {spec!r}")


def _cauchy_like_upper(spec: CauchyLike, d: float) -> float:
    """P(X - mu >= d)."""
    if d < 0:
        return 1.0 - _cauchy_like_upper(spec, -d)
    b = 1.0 / spec.alpha
    return 0.5 * float(special.betainc(b, b, 1.0 / (1.0 + spec.a * d**spec.alpha)))


def tail_mass(spec: DistributionSpec, x: float) -> Tuple[float, float]:
    """
    Tail probabilities (G(-inf, -x], G[x, inf)).

    Parameters:
        spec (DistributionSpec): Law to evaluate.
        x (float): Positive threshold.

    Returns:
        Tuple[float, float]: Left and right tail masses.
    """
    if not x > 0:
        logging.error("tail_mass threshold must be positive, got %s", x)
        raise DomainError(f"tail threshold must be > 0, got {x}")
    match spec:
        case PointMass(value=m):
            return float(m <= -x), float(m >= x)
        case Normal(mean=m, variance=v):
            if v == 0:
                return float(m <= -x), float(m >= x)
            scale = math.sqrt(v)
            return float(stats.norm.cdf(-x, m, scale)), float(stats.norm.sf(x, m, scale))
        case Exponential(rate=r):
            return 0.0, math.exp(-r * x)
        case CauchyLike(mu=mu):
            return _cauchy_like_upper(spec, x + mu), _cauchy_like_upper(spec, x - mu)
        case DiscretePowerLaw():
            upper = spec.constant * float(special.zeta(spec.index, math.ceil(x)))
            return upper, upper
        case SymmetricStable(exponent=a):
            if a == 2.0:
                upper = float(stats.norm.sf(x, 0.0, math.sqrt(2.0)))
            else:
                upper = float(stats.levy_stable.sf(x, a, 0.0))
            return upper, upper
        case Cauchy(location=loc, scale=sc):
            return float(stats.cauchy.cdf(-x, loc, sc)), float(stats.cauchy.sf(x, loc, sc))
        case Empirical():
            values = spec.array()
            return float(np.mean(values <= -x)), float(np.mean(values >= x))
    raise InvalidSpecError(f"Unknown distribution spec {spec!r}")


def tail_constant(spec: DistributionSpec) -> Tuple[float, float]:
    """
    Asymptotic power-law tail: P(X >= x) ~ C x^-(1 + epsilon) as x grows.

    Returns:
        Tuple[float, float]: (C, epsilon).
    """
    match spec:
        case CauchyLike(a=a, alpha=alpha):
            return spec.normalizer * a ** (-2.0 / alpha), 0.0
        case Cauchy(scale=sc):
            return sc / math.pi, 0.0
        case DiscretePowerLaw(epsilon=eps):
            return spec.constant / (1.0 + eps), eps
        case SymmetricStable(exponent=a) if a < 2.0:
            return levy_tail_coefficient(a), a - 1.0
    logging.error("%s has no power-law tail", spec)
    raise InvalidSpecError(f"{type(spec).__name__} has no power-law tail")


def tail_envelope_constant(
    spec: DistributionSpec, x_grid: ArrayLike, epsilon: float
) -> float:
    """Smallest C' with right tail <= C' x^-(1 + epsilon) on every grid point."""
    xs = np.asarray(x_grid, dtype=float)
    return float(max(tail_mass(spec, float(x))[1] * x ** (1.0 + epsilon) for x in xs))


# ---------------------------------------------------------------- serialization


def to_dict(spec: DistributionSpec) -> Dict[str, Any]:
    match spec:
        case PointMass(value=v):
            params: Dict[str, Any] = {"value": v}
        case Normal(mean=m, variance=v):
            params = {"mean": m, "variance": v}
        case Exponential(rate=r):
            params = {"rate": r}
        case CauchyLike(mu=mu, a=a, alpha=alpha):
            params = {"mu": mu, "a": a, "alpha": alpha}
        case DiscretePowerLaw(epsilon=eps):
            params = {"epsilon": eps}
        case SymmetricStable(exponent=a):
            params = {"exponent": a}
        case Cauchy(location=loc, scale=sc):
            params = {"location": loc, "scale": sc}
        case Empirical(values=values):
            params = {"values": list(values)}
        case _:
            raise InvalidSpecError(f"Unknown distribution spec {spec!r}")
    return {"family": spec.family, "params": params}


def from_dict(data: Dict[str, Any]) -> DistributionSpec:
    """Build a spec from its JSON object form {"family": ..., "params": {...}}."""
    try:
        cls = FAMILIES[str(data["family"]).lower()]
        params = dict(data["params"])
    except (KeyError, TypeError, ValueError) as e:
        logging.error("Malformed distribution object %r", data)
        raise InvalidSpecError(f"Malformed distribution object {data!r}") from e
    try:
        if cls is Empirical:
            return Empirical(tuple(params["values"]))
        return cls(**{k: float(v) for k, v in params.items()})
    except InvalidSpecError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        logging.error("Bad parameters %r for family %s", params, cls.family)
        raise InvalidSpecError(f"Bad parameters {params!r} for family {cls.family}") from e
