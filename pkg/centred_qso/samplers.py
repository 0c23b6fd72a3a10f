#!/usr/bin/env python
# coding: utf-8

"""
Samplers for centred QSO iterates.

Three ways of producing values:

- ``evolve_population``: a finite population where every child is the
  mid-parent of two uniformly chosen parents plus a kernel perturbation.
- ``draw_exact``: the random-sum representation of the n-th iterate, an
  average of 2^n seed draws plus level averages of the kernel.
- ``draw_approx``: the seed mean plus the first N kernel levels, with N chosen
  from a Chebyshev error budget.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Literal, Optional

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from centred_qso.analysis import summarize
from centred_qso.cf_engine import IterateSpec
from centred_qso.distributions import DistributionSpec, average_of_draws, draw, moments
from centred_qso.errors import (
    BudgetInapplicableError,
    DomainError,
    FeasibilityError,
    InvalidPopulationError,
)
from centred_qso.streams import RandomStream, run_blocks

# draw_exact refuses larger n unless the guard is overridden.
MAX_EXACT_ITERATIONS = 26

LogBase = Literal["base2", "natural"]


@dataclass
class PopulationState:
    generation: int
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.generation < 0 or self.values.size == 0:
            raise InvalidPopulationError("population state needs generation >= 0 and values")


@dataclass(frozen=True)
class TruncationBudget:
    """
    Error budget of the approximate sampler.

    ``n`` is the iteration count being approximated; ``math.inf`` selects the
    limit law. With ``bonferroni_K`` set the level alpha is split over that
    many draws.
    """

    alpha: float
    delta: float
    n: float = math.inf
    v_F: float = 1.0
    v_G: float = 0.5
    log_base: LogBase = "base2"
    bonferroni_K: Optional[int] = None

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            logging.error("alpha must lie in (0, 1), got %s", self.alpha)
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.delta > 0.0:
            logging.error("delta must be positive, got %s", self.delta)
            raise DomainError(f"delta must be positive, got {self.delta}")
        if not (math.isinf(self.n) and self.n > 0) and not (
            float(self.n).is_integer() and self.n >= 1
        ):
            raise DomainError(f"n must be a positive integer or infinity, got {self.n}")
        if math.isinf(self.v_F) or math.isinf(self.v_G):
            logging.error("Chebyshev budget needs finite variances")
            raise BudgetInapplicableError("Chebyshev budget needs finite v_F and v_G")
        if self.v_F < 0 or self.v_G < 0:
            raise DomainError(f"variances must be >= 0, got v_F={self.v_F}, v_G={self.v_G}")
        if self.log_base not in ("base2", "natural"):
            raise DomainError(f"log base must be 'base2' or 'natural', got {self.log_base}")
        if self.bonferroni_K is not None and self.bonferroni_K < 1:
            raise DomainError(f"Bonferroni K must be positive, got {self.bonferroni_K}")

    @property
    def effective_alpha(self) -> float:
        return self.alpha / self.bonferroni_K if self.bonferroni_K else self.alpha

    @property
    def kernel_factor(self) -> float:
        """1 - 2^-n, or 1 for the limit law."""
        return 1.0 if math.isinf(self.n) else 1.0 - 2.0 ** (-self.n)


def truncation_depth(budget: TruncationBudget) -> int:
    """
    N = floor(log(4 max(v_F, v_G (1 - 2^-n) / 2) / (delta^2 alpha)) + 1), at least 1.

    Parameters:
        budget (TruncationBudget): Error budget; its log base picks log2 or ln.

    Returns:
        int: Number of kernel levels to sum.
    """
    worst = max(budget.v_F, budget.v_G * budget.kernel_factor / 2.0)
    argument = 4.0 * worst / (budget.delta**2 * budget.effective_alpha)
    if argument <= 1.0:
        return 1
    log = math.log2 if budget.log_base == "base2" else math.log
    depth = max(1, math.floor(log(argument) + 1.0))
    logging.info(
        "Truncation depth N=%d (alpha=%g, delta=%g, %s log)",
        depth,
        budget.effective_alpha,
        budget.delta,
        budget.log_base,
    )
    return depth


def chebyshev_error_bound(budget: TruncationBudget, depth: int) -> float:
    """Union of the two Chebyshev bounds on a deviation larger than delta at ``depth`` levels."""
    seed_term = 0.0
    if not math.isinf(budget.n):
        seed_term = 4.0 * budget.v_F / budget.delta**2 * 2.0 ** (-budget.n)
    kernel_term = 4.0 * budget.v_G / (2.0 * budget.delta**2) * 2.0 ** (-depth) * budget.kernel_factor
    return seed_term + kernel_term


def evolve_population(
    initial: DistributionSpec,
    kernel: DistributionSpec,
    K: int,
    n: int,
    stream: RandomStream,
    forbid_self_pairing: bool = False,
    threads: Optional[int] = None,
) -> List[PopulationState]:
    """
    Run the finite-population process for ``n`` generations.

    Generation g draws from ``stream.substream(g)``; its children are produced in
    blocks from a snapshot of generation g - 1.

    Parameters:
        initial (DistributionSpec): Law of the K founders.
        kernel (DistributionSpec): Perturbation added to each mid-parent.
        K (int): Population size, at least 2.
        n (int): Number of generations after the founders.
        stream (RandomStream): Root stream of the run.
        forbid_self_pairing (bool): Draw the second parent among the other K - 1.
        threads (Optional[int]): Worker cap.

    Returns:
        List[PopulationState]: Generations 0..n.
    """
    if K < 2:
        logging.error("Population size must be at least 2, got %s", K)
        raise InvalidPopulationError(f"population size K must be >= 2, got {K}")
    if n < 0:
        raise InvalidPopulationError(f"generation count must be >= 0, got {n}")

    def founders(_: int, size: int, sub: RandomStream) -> NDArray[np.float64]:
        return draw(initial, size, sub.generator())

    values = np.concatenate(run_blocks(founders, K, stream.substream(0), threads))
    states = [PopulationState(0, values)]
    for generation in range(1, n + 1):
        parents = states[-1].values

        def children(_: int, size: int, sub: RandomStream) -> NDArray[np.float64]:
            rng = sub.generator()
            first = rng.integers(0, K, size=size)
            if forbid_self_pairing:
                second = (first + 1 + rng.integers(0, K - 1, size=size)) % K
            else:
                second = rng.integers(0, K, size=size)
            return 0.5 * (parents[first] + parents[second]) + draw(kernel, size, rng)

        values = np.concatenate(run_blocks(children, K, stream.substream(generation), threads))
        states.append(PopulationState(generation, values))
        logging.debug("Generation %d: mean %.6g", generation, values.mean())
    logging.info("Population of %d evolved for %d generations", K, n)
    return states


def population_frame(states: List[PopulationState]) -> pd.DataFrame:
    """Long table with columns generation, index, value."""
    return pd.concat(
        [
            pd.DataFrame(
                {
                    "generation": state.generation,
                    "index": np.arange(state.values.size),
                    "value": state.values,
                }
            )
            for state in states
        ],
        ignore_index=True,
    )


def population_means(states: List[PopulationState]) -> pd.DataFrame:
    rows = []
    for state in states:
        summary = summarize(state.values)
        rows.append({"generation": state.generation, "mean": summary.mean, "variance": summary.variance})
    return pd.DataFrame(rows, columns=["generation", "mean", "variance"])


def draw_exact(
    spec: IterateSpec,
    count: int,
    stream: RandomStream,
    guard_override: bool = False,
    threads: Optional[int] = None,
    reduce_sums: bool = True,
) -> NDArray[np.float64]:
    """
    Draw ``count`` values distributed exactly as the n-th iterate.

    Each value is the mean of 2^n seed draws plus, for every level j < n, the
    mean of 2^j kernel draws.

    Raises:
        FeasibilityError: n exceeds the guard and ``guard_override`` is off.
    """
    if count < 1:
        raise DomainError(f"count must be positive, got {count}")
    estimated = count * (2 ** (spec.n + 1) - 1)
    if spec.n > MAX_EXACT_ITERATIONS and not guard_override:
        logging.error("Exact drawing at n=%d needs about %d draws", spec.n, estimated)
        raise FeasibilityError(
            f"exact drawing at n={spec.n} exceeds the guard n <= {MAX_EXACT_ITERATIONS}",
            estimated_draws=estimated,
        )

    def work(_: int, size: int, sub: RandomStream) -> NDArray[np.float64]:
        rng = sub.generator()
        total = average_of_draws(spec.seed, 2**spec.n, size, rng, reduce_sums)
        for j in range(spec.n):
            total = total + average_of_draws(spec.kernel, 2**j, size, rng, reduce_sums)
        return total

    values = np.concatenate(run_blocks(work, count, stream, threads))
    logging.info("Drew %d exact values at n=%d", count, spec.n)
    return values


def truncated_sum(
    seed_mean: float,
    kernel: DistributionSpec,
    depth: int,
    count: int,
    stream: RandomStream,
    threads: Optional[int] = None,
    reduce_sums: bool = True,
) -> NDArray[np.float64]:
    """m + sum_{j<depth} U_j where U_j is the mean of 2^j kernel draws."""
    if count < 1 or depth < 1:
        raise DomainError(f"count and depth must be positive, got {count}, {depth}")

    def work(_: int, size: int, sub: RandomStream) -> NDArray[np.float64]:
        rng = sub.generator()
        total = np.full(size, float(seed_mean))
        for j in range(depth):
            total = total + average_of_draws(kernel, 2**j, size, rng, reduce_sums)
        return total

    return np.concatenate(run_blocks(work, count, stream, threads))


def draw_approx(
    seed_mean: float,
    kernel: DistributionSpec,
    budget: TruncationBudget,
    count: int,
    stream: RandomStream,
    threads: Optional[int] = None,
    reduce_sums: bool = True,
) -> NDArray[np.float64]:
    """
    Approximate draws: the seed mean plus the first N kernel levels.

    Parameters:
        seed_mean (float): Mean m of the seed law.
        kernel (DistributionSpec): Kernel law G, finite variance.
        budget (TruncationBudget): Chooses N through ``truncation_depth``.
        count (int): Number of values.
        stream (RandomStream): Root stream.

    Returns:
        NDArray: ``count`` values.

    Raises:
        BudgetInapplicableError: The kernel has infinite variance.
    """
    kernel_moments = moments(kernel)
    if kernel_moments.infinite_variance:
        logging.error("Chebyshev budget needs a finite kernel variance (%s)", kernel)
        raise BudgetInapplicableError(
            f"{type(kernel).__name__} has infinite variance; the Chebyshev budget does not apply"
        )
    if not math.isclose(kernel_moments.variance, budget.v_G, rel_tol=1e-12, abs_tol=1e-15):
        logging.warning(
            "Budget v_G=%g differs from the kernel variance %g", budget.v_G, kernel_moments.variance
        )
    depth = truncation_depth(budget)
    values = truncated_sum(seed_mean, kernel, depth, count, stream, threads, reduce_sums)
    logging.info(
        "Drew %d approximate values with N=%d (Chebyshev bound %.3g)",
        count,
        depth,
        chebyshev_error_bound(budget, depth),
    )
    return values
