import math

import numpy as np
import pytest
from scipy import special

from centred_qso.analysis import empirical_cf, summarize
from centred_qso.cf_engine import symmetric_grid
from centred_qso.distributions import (
    Cauchy,
    CauchyLike,
    DiscretePowerLaw,
    Empirical,
    Exponential,
    Normal,
    PointMass,
    SymmetricStable,
    analytic_cf,
    average_of_draws,
    cauchy_like_normalizer,
    from_dict,
    log_cf,
    moments,
    sample,
    tail_constant,
    tail_envelope_constant,
    tail_mass,
    to_dict,
)
from centred_qso.errors import DomainError, InvalidSpecError
from centred_qso.streams import RandomStream

ALL_FAMILIES = [
    PointMass(2.0),
    Normal(1.0, 0.5),
    Exponential(2.0),
    CauchyLike(0.5, 1.0, 1.5),
    DiscretePowerLaw(0.5),
    SymmetricStable(1.5),
    Cauchy(0.0, 1.0),
    Empirical((-1.0, 0.5, 2.0)),
]


@pytest.mark.parametrize("spec", ALL_FAMILIES, ids=lambda s: s.family)
def test_cf_at_zero_is_one(spec):
    assert analytic_cf(spec, 0.0) == 1.0


@pytest.mark.parametrize("spec", ALL_FAMILIES, ids=lambda s: s.family)
def test_cf_modulus_at_most_one(spec):
    s = np.linspace(-5, 5, 41)
    assert np.all(np.abs(analytic_cf(spec, s)) <= 1.0 + 1e-9)


@pytest.mark.parametrize("spec", ALL_FAMILIES, ids=lambda s: s.family)
def test_cf_conjugate_symmetric_and_bounded_on_wide_grid(spec):
    s = symmetric_grid(0.1, 200)
    values = np.asarray(analytic_cf(spec, s))
    assert np.max(np.abs(values[::-1] - np.conj(values))) < 1e-12
    assert np.all(np.abs(values) <= 1.0 + 1e-12)


@pytest.mark.parametrize("s", [0.02734375, 0.013671875, 1e-6])
def test_cauchy_like_cf_exact_near_zero(s):
    # a = 4, alpha = 2 is the Cauchy law with scale 1/2
    assert analytic_cf(CauchyLike(0.0, 4.0, 2.0), s) == pytest.approx(math.exp(-s / 2.0), abs=1e-12)


@pytest.mark.parametrize("spec", ALL_FAMILIES, ids=lambda s: s.family)
def test_serialization_round_trip(spec):
    assert from_dict(to_dict(spec)) == spec


def test_normal_cf_closed_form():
    s = np.linspace(-3, 3, 13)
    expected = np.exp(1j * 1.0 * s - 0.5 * 0.5 * s**2)
    assert np.allclose(analytic_cf(Normal(1.0, 0.5), s), expected, rtol=0, atol=1e-14)


def test_cauchy_like_normalizer_matches_beta_closed_form():
    a, alpha = 2.0, 1.5
    closed = alpha * a ** (1.0 / alpha) / (2.0 * special.beta(1.0 / alpha, 1.0 / alpha))
    assert cauchy_like_normalizer(a, alpha) == pytest.approx(closed, rel=1e-8)


def test_cauchy_like_with_alpha_two_is_standard_cauchy():
    s = np.array([0.5, 1.0, 2.0])
    assert np.allclose(analytic_cf(CauchyLike(0.0, 1.0, 2.0), s), np.exp(-s), atol=1e-6)


def test_discrete_power_law_cf_matches_direct_sum():
    spec = DiscretePowerLaw(0.5)
    k = np.arange(1, 10**6 + 1, dtype=float)
    direct = 1.0 - 2.0 * spec.constant * np.sum((1.0 - np.cos(k)) * k**-2.5)
    assert analytic_cf(spec, 1.0).real == pytest.approx(direct, abs=1e-7)
    assert analytic_cf(spec, -1.0).imag == 0.0


def test_invalid_parameters_rejected():
    with pytest.raises(InvalidSpecError):
        Normal(0.0, -1.0)
    with pytest.raises(InvalidSpecError):
        SymmetricStable(0.5)
    with pytest.raises(InvalidSpecError):
        DiscretePowerLaw(0.0)
    with pytest.raises(InvalidSpecError):
        Empirical(())


def test_from_dict_rejects_unknown_family():
    with pytest.raises(InvalidSpecError):
        from_dict({"family": "weibull", "params": {"k": 1}})


@pytest.mark.parametrize(
    "data",
    [
        {"family": "empirical", "params": {}},
        {"family": "normal", "params": {"mean": "abc", "variance": 1}},
        {"family": "normal", "params": {"mean": 0.0}},
        {"family": "cauchy", "params": [1.0, 2.0]},
        {"params": {"mean": 0.0, "variance": 1.0}},
    ],
    ids=["empirical-without-values", "non-numeric", "missing-parameter", "params-not-object", "no-family"],
)
def test_from_dict_rejects_malformed_objects(data):
    with pytest.raises(InvalidSpecError):
        from_dict(data)


def test_moments_flags():
    assert moments(DiscretePowerLaw(0.5)).infinite_variance
    finite = moments(DiscretePowerLaw(1.5))
    assert finite.variance == pytest.approx(2.0 * DiscretePowerLaw(1.5).constant * special.zeta(1.5))
    assert not moments(Cauchy(0.0, 1.0)).finite_mean
    assert moments(SymmetricStable(2.0)).variance == 2.0
    assert moments(PointMass(3.0)).degenerate


def test_tail_mass_discrete_power_law():
    left, right = tail_mass(DiscretePowerLaw(0.5), 1.5)
    expected = (1.0 - 1.0 / special.zeta(2.5)) / 2.0
    assert right == pytest.approx(expected, rel=1e-12)
    assert left == right


def test_tail_mass_requires_positive_threshold():
    with pytest.raises(DomainError):
        tail_mass(Normal(0.0, 1.0), 0.0)


def test_tail_constants():
    C, eps = tail_constant(Cauchy(0.0, 2.0))
    assert C == pytest.approx(2.0 / math.pi)
    assert eps == 0.0
    C, eps = tail_constant(CauchyLike(0.0, 1.0, 2.0))
    assert C == pytest.approx(1.0 / math.pi, rel=1e-9)
    with pytest.raises(InvalidSpecError):
        tail_constant(Normal(0.0, 1.0))


def test_tail_envelope_constant_peaks_at_one():
    envelope = tail_envelope_constant(DiscretePowerLaw(0.5), np.arange(1, 101), 0.5)
    assert envelope == pytest.approx(0.5, rel=1e-12)


def test_log_cf_keeps_precision_near_zero():
    value = log_cf(Normal(0.0, 1.0), 1e-9)
    assert value.real == pytest.approx(-0.5e-18, rel=1e-12)


def test_normal_sampling_moments(stream):
    values = sample(Normal(1.0, 0.5), 100_000, stream)
    summary = summarize(values)
    assert abs(summary.mean - 1.0) < 4 * math.sqrt(0.5 / 1e5)
    assert summary.variance == pytest.approx(0.5, rel=0.02)


def test_stable_two_is_normal_with_variance_two(stream):
    values = sample(SymmetricStable(2.0), 100_000, stream)
    assert summarize(values).variance == pytest.approx(2.0, rel=0.02)


@pytest.mark.parametrize(
    "spec",
    [SymmetricStable(1.5), CauchyLike(0.5, 1.0, 1.5), Exponential(2.0), Cauchy(1.0, 0.5)],
    ids=lambda s: s.family,
)
def test_samples_match_cf(spec, stream):
    s = np.linspace(-2.0, 2.0, 17)
    ecf = empirical_cf(sample(spec, 100_000, stream), s)
    assert np.max(np.abs(ecf.values - analytic_cf(spec, s))) < 0.015


def test_discrete_power_law_sampling(stream):
    spec = DiscretePowerLaw(0.5)
    values = sample(spec, 100_000, stream)
    assert np.all(values == np.round(values))
    assert np.all(values != 0)
    assert np.mean(values == 1.0) == pytest.approx(spec.constant, abs=0.007)
    assert abs(np.mean(values > 0) - 0.5) < 0.007


def test_average_of_draws_reduction_matches_brute_force():
    rng_fast = RandomStream(5).generator()
    rng_slow = RandomStream(6).generator()
    fast = average_of_draws(Exponential(1.0), 8, 50_000, rng_fast)
    slow = average_of_draws(Exponential(1.0), 8, 50_000, rng_slow, reduce_sums=False)
    for values in (fast, slow):
        summary = summarize(values)
        assert summary.mean == pytest.approx(1.0, abs=0.01)
        assert summary.variance == pytest.approx(1.0 / 8, rel=0.04)


def test_average_of_stable_draws_keeps_scale():
    rng = RandomStream(8).generator()
    values = average_of_draws(SymmetricStable(1.5), 16, 100_000, rng)
    s = np.array([0.5, 1.0])
    expected = np.exp(-(np.abs(s) ** 1.5) * 16 ** (1.0 - 1.5))
    assert np.max(np.abs(empirical_cf(values, s).values - expected)) < 0.015
