import math

import mpmath
import numpy as np
import pytest

from centred_qso.cf_engine import (
    CFGrid,
    IterateSpec,
    TailBoundParams,
    analytic_grid,
    dyadic_stability_residual,
    fixed_point_residual,
    is_non_increasing,
    iterate_cf,
    kernel_limit_cf,
    levy_constant,
    levy_expansion_check,
    limit_distance_table,
    log_bound_from_cf_bound,
    proposition_cf_constant,
    stable_limit_check,
    symmetric_grid,
    verify_tail_bound,
)
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
    moments,
    tail_constant,
    tail_envelope_constant,
)
from centred_qso.errors import DomainError, InvalidGridError, NonConvergenceError

SEEDS = [Exponential(1.0), Normal(1.0, 1.0), PointMass(2.0), Cauchy(0.5, 1.0)]
KERNELS = [Normal(0.0, 0.5), SymmetricStable(1.5), Cauchy(0.0, 1.0), PointMass(0.0)]


def test_grid_must_increase():
    with pytest.raises(InvalidGridError):
        CFGrid(np.array([0.0, 1.0, 0.5]), np.ones(3, dtype=complex))


def test_symmetric_grid_contains_halves():
    s = symmetric_grid(0.05, 200)
    assert s.size == 401
    assert s[200] == 0.0
    assert s[0] == pytest.approx(-10.0)


def test_iterate_zero_is_seed_cf(small_grid):
    grid = iterate_cf(IterateSpec(Exponential(1.0), Normal(0.0, 0.5), 0), small_grid)
    assert np.allclose(grid.values, analytic_cf(Exponential(1.0), small_grid), rtol=1e-14, atol=0)


def test_normal_iterates_keep_unit_variance(grid):
    for n in (1, 5, 20):
        values = iterate_cf(IterateSpec(Normal(0.0, 1.0), Normal(0.0, 0.5), n), grid).values
        assert np.max(np.abs(values - np.exp(-(grid**2) / 2.0))) < 1e-12


@pytest.mark.parametrize("seed", SEEDS, ids=lambda s: s.family)
@pytest.mark.parametrize("kernel", KERNELS, ids=lambda s: s.family)
def test_induction_recursion(seed, kernel):
    s = np.linspace(-2.0, 2.0, 41)
    for n in range(12):
        following = iterate_cf(IterateSpec(seed, kernel, n + 1), s).values
        half = iterate_cf(IterateSpec(seed, kernel, n), s / 2.0).values
        recursed = half**2 * analytic_cf(kernel, s)
        assert np.max(np.abs(following - recursed) / np.abs(following)) < 1e-10


@pytest.mark.parametrize("mu", [0.0, 1.0, -3.0])
def test_normal_candidate_is_fixed_point(mu, grid):
    report = fixed_point_residual(analytic_grid(Normal(mu, 1.0), grid), Normal(0.0, 0.5))
    assert report.sup_residual < 1e-12
    assert report.points_used == 201


def test_wrong_variance_is_not_fixed_point(grid):
    report = fixed_point_residual(analytic_grid(Normal(0.0, 2.0), grid), Normal(0.0, 0.5))
    assert report.sup_residual > 0.1


def test_residual_needs_three_points():
    grid = analytic_grid(Normal(0.0, 1.0), np.array([0.5, 1.0, 2.0]))
    with pytest.raises(InvalidGridError):
        fixed_point_residual(grid, Normal(0.0, 0.5))


def test_cauchy_is_dyadically_stable(grid):
    assert dyadic_stability_residual(analytic_grid(Cauchy(1.0, 2.0), grid)).sup_residual < 1e-12
    assert dyadic_stability_residual(analytic_grid(SymmetricStable(1.5), grid)).sup_residual > 0.01


def test_kernel_limit_of_normal(grid):
    limit = kernel_limit_cf(Normal(0.0, 0.5), grid, tol=1e-14)
    assert np.max(np.abs(limit.values - np.exp(-(grid**2) / 2.0))) < 1e-10
    assert limit.depth is not None and limit.depth > 1
    assert limit.truncation_bound is None


def test_kernel_limit_point_mass_is_one(small_grid):
    limit = kernel_limit_cf(PointMass(0.0), small_grid)
    assert np.all(limit.values == 1.0)
    assert limit.depth == 1


def test_kernel_limit_depth_cap():
    s = np.linspace(-1.0, 1.0, 5)
    with pytest.raises(NonConvergenceError) as info:
        kernel_limit_cf(Normal(0.0, 0.5), s, depth_cap=3)
    assert info.value.depth == 3
    limit = kernel_limit_cf(Normal(0.0, 0.5), s, depth_cap=3, tail_params=TailBoundParams(0.25, 2.0, 10.0))
    assert limit.depth == 3
    # remaining log-mass 0.25 s^2 2^-3 / (1 - 1/2)
    assert limit.truncation_bound[0] == pytest.approx(0.0625)


def test_stable_tail_bound_is_tight(grid):
    report = verify_tail_bound(SymmetricStable(1.5), TailBoundParams(1.0, 1.5, 10.0), grid)
    assert report.holds
    assert report.worst_ratio <= 1.0
    assert report.sandwich_holds
    assert report.sandwich_points > 0


def test_discrete_power_law_tail_bound():
    kernel = DiscretePowerLaw(0.5)
    envelope = tail_envelope_constant(kernel, np.arange(1, 101), 0.5)
    A = log_bound_from_cf_bound(proposition_cf_constant(envelope, 0.5))
    report = verify_tail_bound(kernel, TailBoundParams(A, 1.5, 0.3), symmetric_grid(0.01, 30))
    assert report.holds
    assert report.holds_minus_one
    assert report.sandwich_holds


def test_tail_bound_drops_points_outside_window(small_grid):
    report = verify_tail_bound(Normal(0.0, 0.5), TailBoundParams(1.0, 2.0, 1.0), small_grid)
    assert report.points_used == 8
    assert report.holds


def test_levy_constant_against_high_precision():
    with mpmath.workdps(40):
        eps = mpmath.mpf("0.5")
        oracle = (1 + eps) * mpmath.gamma(1 - eps) * mpmath.sin(eps * mpmath.pi / 2) / eps
    assert levy_constant(0.5) == pytest.approx(float(oracle), abs=1e-9)
    assert levy_constant(0.5) == pytest.approx(3.0 * math.sqrt(math.pi) * math.sqrt(2.0) / 2.0, abs=1e-9)
    assert abs(levy_constant(0.001) - math.pi / 2.0) < 1e-2


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.2])
def test_levy_constant_domain(eps):
    with pytest.raises(DomainError):
        levy_constant(eps)


def test_levy_expansion_for_discrete_power_law():
    C, eps = tail_constant(DiscretePowerLaw(0.5))
    table = levy_expansion_check(DiscretePowerLaw(0.5), C, eps, np.array([1e-4, 1e-3, 1e-2]))
    error = np.abs(table["ratio_re"].to_numpy() - 1.0)
    assert error[0] < 0.02
    assert error[0] < error[1] < error[2]


def test_exact_cauchy_stable_limit(grid):
    table = stable_limit_check(Cauchy(0.0, 1.0), 1.0 / math.pi, [1, 2, 4, 8], grid)
    assert list(table["n"]) == [1, 2, 4, 8]
    assert table["sup_error"].max() < 1e-12
    assert is_non_increasing(table["sup_error"].tolist(), slack=1e-12)


def test_normal_negative_control(grid):
    table = stable_limit_check(Normal(0.0, 1.0), 1.0 / math.pi, [1, 4, 16, 64], grid)
    assert table["sup_error"].min() > 0.1


def test_cauchy_like_approaches_cauchy():
    dist = CauchyLike(0.0, 1.0, 1.5)
    C, _ = tail_constant(dist)
    table = stable_limit_check(dist, C, [1, 64], symmetric_grid(0.5, 10))
    errors = table["sup_error"].to_numpy()
    assert errors[1] < errors[0]


def test_limit_distance_normal_is_exact():
    s = symmetric_grid(0.1, 50)
    table = limit_distance_table(Normal(1.0, 1.0), Normal(0.0, 0.5), [0, 5, 10], s, tol=1e-14)
    assert table["sup_distance"].max() < 1e-10


def test_limit_distance_shrinks_for_exponential_seed():
    s = symmetric_grid(0.1, 50)
    table = limit_distance_table(Exponential(1.0), Normal(0.0, 0.5), [0, 2, 8], s)
    distances = table["sup_distance"].to_numpy()
    assert distances[0] > distances[1] > distances[2]


def test_proposition_constant():
    assert proposition_cf_constant(1.0, 0.5) == pytest.approx(
        2.0 * math.pi**0.5 + 4.0 * math.pi**-1.5
    )
    assert log_bound_from_cf_bound(2.0) == 3.0


FINITE_MEAN_SEEDS = [Exponential(1.0), Normal(1.0, 1.0), PointMass(2.0)]
FINITE_VARIANCE_KERNELS = [Normal(0.0, 0.5), PointMass(0.0), Empirical((-1.0, 1.0))]


@pytest.mark.parametrize("seed", FINITE_MEAN_SEEDS, ids=lambda s: s.family)
@pytest.mark.parametrize("kernel", KERNELS + [Empirical((-1.0, 1.0))], ids=lambda s: s.family)
def test_iterates_keep_seed_mean(seed, kernel):
    h = 1e-3
    m = moments(seed).mean
    for n in range(13):
        values = iterate_cf(IterateSpec(seed, kernel, n), np.array([-h, h])).values
        slope = (np.angle(values[1]) - np.angle(values[0])) / (2.0 * h)
        assert abs(slope - m) < 1e-6


@pytest.mark.parametrize("seed", FINITE_MEAN_SEEDS, ids=lambda s: s.family)
@pytest.mark.parametrize("kernel", FINITE_VARIANCE_KERNELS, ids=lambda s: s.family)
def test_iterates_follow_variance_recursion(seed, kernel):
    h = 1e-3
    v_G = moments(kernel).variance
    v = moments(seed).variance
    for n in range(13):
        values = iterate_cf(IterateSpec(seed, kernel, n), np.array([h])).values
        curvature = -2.0 * np.log(np.abs(values[0])) / h**2
        assert curvature == pytest.approx(v, abs=1e-4)
        v = v / 2.0 + v_G


@pytest.mark.parametrize(
    "kernel, params",
    [
        (Normal(0.0, 0.5), TailBoundParams(0.25, 2.0, 10.0)),
        (SymmetricStable(1.5), TailBoundParams(1.0, 1.5, 10.0)),
    ],
    ids=["normal", "stable"],
)
def test_halving_tol_stays_within_truncation_bound(kernel, params, grid):
    coarse = kernel_limit_cf(kernel, grid, tol=1e-6, tail_params=params)
    fine = kernel_limit_cf(kernel, grid, tol=5e-7, tail_params=params)
    assert fine.depth > coarse.depth
    assert np.all(np.abs(fine.values - coarse.values) <= coarse.truncation_bound + 1e-15)
    assert np.all(fine.truncation_bound <= coarse.truncation_bound)


def test_cauchy_like_with_alpha_two_stable_limit():
    table = stable_limit_check(
        CauchyLike(0.0, 1.0, 2.0), 1.0 / math.pi, [1, 4, 16, 64, 256, 1024], symmetric_grid(0.05, 100)
    )
    assert table["sup_error"].max() < 1e-8
    assert is_non_increasing(table["sup_error"].tolist(), slack=1e-9)
