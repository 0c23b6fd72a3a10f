#!/usr/bin/env python
# coding: utf-8

"""
Experiment configuration: defaults, the distribution mini-syntax, JSON
round-trips and the precedence of config files, QSO_SEED and flags.
"""

import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union, get_args, get_origin, get_type_hints

import pandas as pd

from centred_qso.distributions import (
    Cauchy,
    CauchyLike,
    DiscretePowerLaw,
    DistributionSpec,
    Empirical,
    Exponential,
    Normal,
    PointMass,
    SymmetricStable,
    from_dict,
    to_dict,
)
from centred_qso.errors import InvalidGridError, InvalidSpecError, QSOValidationError
from centred_qso.samplers import TruncationBudget

SEED_ENV_VAR = "QSO_SEED"
DEFAULT_MASTER_SEED = 20240917

# Replication defaults for the three histogram figures.
FIGURE_POPULATION_SIZE = 10000
FIGURE_KERNEL = Normal(0.0, 0.5)
FIGURE_SEEDS = (Exponential(1.0), Normal(0.0, 1.0))
FIGURE_ITERATIONS = (1, 100, 500)
FIGURE_ALPHA = 0.05
FIGURE_DELTA = 0.01
FIGURE_BONFERRONI_K = 10000

_DISTRIBUTION_FIELDS = ("seed_dist", "kernel", "candidate", "dist")

# Mini-syntax tag -> (class, parameter names in order)
_SYNTAX: Dict[str, Tuple[Any, Tuple[str, ...]]] = {
    "pointmass": (PointMass, ("value",)),
    "normal": (Normal, ("mean", "variance")),
    "exponential": (Exponential, ("rate",)),
    "cauchylike": (CauchyLike, ("mu", "a", "alpha")),
    "discretepowerlaw": (DiscretePowerLaw, ("epsilon",)),
    "stable": (SymmetricStable, ("exponent",)),
    "symmetricstable": (SymmetricStable, ("exponent",)),
    "cauchy": (Cauchy, ("location", "scale")),
}


def parse_distribution(text: str) -> DistributionSpec:
    """
    Parse ``family:p1,p2,...``, e.g. ``normal:0,0.5`` or ``empirical:@values.csv``.

    Parameters:
        text (str): Mini-syntax string.

    Returns:
        DistributionSpec: The parsed law.
    """
    tag, _, rest = text.strip().partition(":")
    tag = tag.lower()
    if tag == "empirical":
        if rest.startswith("@"):
            return Empirical(tuple(_read_value_column(rest[1:])))
        return Empirical(tuple(_floats(rest, text)))
    if tag not in _SYNTAX:
        logging.error("Unknown distribution family in %r", text)
        raise InvalidSpecError(f"unknown distribution family {tag!r} in {text!r}")
    cls, names = _SYNTAX[tag]
    values = _floats(rest, text)
    if len(values) != len(names):
        raise InvalidSpecError(f"{tag} takes {len(names)} parameter(s) {names}, got {text!r}")
    return cls(*values)


def _floats(rest: str, text: str) -> List[float]:
    try:
        return [float(part) for part in rest.split(",") if part.strip()]
    except ValueError as e:
        logging.error("Non-numeric parameter in %r", text)
        raise InvalidSpecError(f"non-numeric parameter in {text!r}") from e


def _read_value_column(path: str) -> List[float]:
    try:
        df = pd.read_csv(path)
    except Exception as e:
        logging.exception("Error loading empirical values from %s", path)
        raise InvalidSpecError(f"cannot read empirical values from {path}") from e
    column = "value" if "value" in df.columns else df.columns[0]
    return df[column].astype(float).tolist()


def format_distribution(spec: DistributionSpec) -> str:
    params = to_dict(spec)["params"]
    if isinstance(spec, Empirical):
        return "empirical:" + ",".join(repr(v) for v in spec.values)
    return f"{spec.family}:" + ",".join(repr(float(v)) for v in params.values())


def parse_grid(text: str) -> Tuple[float, int]:
    """``delta:K_grid`` -> (delta, K_grid)."""
    try:
        delta_text, half_text = text.split(":")
        delta, half_count = float(delta_text), int(half_text)
    except ValueError as e:
        logging.error("Grid must look like 'delta:K_grid', got %r", text)
        raise InvalidGridError(f"grid must look like 'delta:K_grid', got {text!r}") from e
    if not delta > 0 or half_count < 1:
        raise InvalidGridError(f"grid needs delta > 0 and K_grid >= 1, got {text!r}")
    return delta, half_count


def parse_iterations(text: str) -> float:
    """Integer iteration count, or ``inf`` for the limit law."""
    if text.strip().lower() in ("inf", "infinity", "∞"):
        return math.inf
    try:
        value = int(text)
    except ValueError as e:
        raise QSOValidationError(f"n must be an integer or 'inf', got {text!r}") from e
    if value < 0:
        raise QSOValidationError(f"n must be nonnegative, got {value}")
    return value


def parse_int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise QSOValidationError(f"expected comma-separated integers, got {text!r}") from e


def _matches(value: Any, hint: Any) -> bool:
    """Whether a JSON value fits a config field annotation."""
    origin = get_origin(hint)
    if origin is Union:
        return value is None or any(
            _matches(value, arg) for arg in get_args(hint) if arg is not type(None)
        )
    if origin in (list, tuple):
        item_types = get_args(hint)
        if not isinstance(value, (list, tuple)):
            return False
        if origin is tuple and len(value) != len(item_types):
            return False
        return all(_matches(item, item_types[0]) for item in value)
    if hint is bool:
        return isinstance(value, bool)
    if hint is int:
        return isinstance(value, int) and not isinstance(value, bool)
    if hint is float:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if hint is str:
        return isinstance(value, str)
    return True


@dataclass
class ExperimentConfig:
    seed_dist: Optional[DistributionSpec] = None
    kernel: Optional[DistributionSpec] = None
    candidate: Optional[DistributionSpec] = None
    candidate_grid: Optional[str] = None
    dist: Optional[DistributionSpec] = None
    n: Optional[float] = None
    count: int = 1000
    population_size: int = FIGURE_POPULATION_SIZE
    grid_delta: float = 0.05
    grid_half_count: int = 200
    alpha: float = FIGURE_ALPHA
    delta: float = FIGURE_DELTA
    v_F: Optional[float] = None
    v_G: Optional[float] = None
    seed_mean: Optional[float] = None
    log_base: str = "base2"
    bonferroni_K: Optional[int] = None
    master_seed: int = DEFAULT_MASTER_SEED
    stream_id: int = 0
    threads: Optional[int] = None
    output_dir: str = "."
    output_format: str = "csv"
    guard_override: bool = False
    reduce_sums: bool = True
    forbid_self_pairing: bool = False
    record_generations: Optional[List[int]] = None
    depth_cap: int = 200
    tol: float = 1e-12
    tail_A: Optional[float] = None
    tail_p: Optional[float] = None
    tail_s0: Optional[float] = None
    tail_C: Optional[float] = None
    fit_tail: bool = False
    n_values: List[int] = field(default_factory=lambda: [1, 2, 4, 8, 16, 32, 64])
    sample_a: Optional[str] = None
    sample_b: Optional[str] = None
    bins: int = 50
    hist_range: Optional[Tuple[float, float]] = None
    figures: List[int] = field(default_factory=lambda: [1, 2, 3])
    iterations: List[int] = field(default_factory=lambda: list(FIGURE_ITERATIONS))

    def __post_init__(self) -> None:
        if self.log_base not in ("base2", "natural"):
            raise QSOValidationError(f"log base must be 'base2' or 'natural', got {self.log_base}")
        if self.output_format not in ("csv", "json"):
            raise QSOValidationError(f"format must be 'csv' or 'json', got {self.output_format}")
        if self.count < 1:
            raise QSOValidationError(f"count must be positive, got {self.count}")
        if self.threads is not None and self.threads < 1:
            raise QSOValidationError(f"threads must be positive, got {self.threads}")
        if self.bins < 1:
            raise InvalidSpecError(f"bins must be positive, got {self.bins}")
        if self.n is not None and (self.n < 0 or not (math.isinf(self.n) or float(self.n).is_integer())):
            raise QSOValidationError(f"n must be a nonnegative integer or inf, got {self.n}")
        if self.hist_range is not None:
            self.hist_range = (float(self.hist_range[0]), float(self.hist_range[1]))

    def require(self, *names: str) -> None:
        """Reject a run that is missing any of the named options."""
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            logging.error("Missing required options: %s", ", ".join(missing))
            raise QSOValidationError(f"missing required options: {', '.join(missing)}")

    def iteration_count(self) -> int:
        self.require("n")
        assert self.n is not None
        if math.isinf(self.n):
            raise QSOValidationError("this subcommand needs a finite iteration count n")
        return int(self.n)

    def budget(self) -> TruncationBudget:
        self.require("v_F", "v_G")
        assert self.v_F is not None and self.v_G is not None
        return TruncationBudget(
            alpha=self.alpha,
            delta=self.delta,
            n=math.inf if self.n is None else self.n,
            v_F=self.v_F,
            v_G=self.v_G,
            log_base=self.log_base,  # type: ignore[arg-type]
            bonferroni_K=self.bonferroni_K,
        )

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        for name in _DISTRIBUTION_FIELDS:
            spec = getattr(self, name)
            data[name] = None if spec is None else to_dict(spec)
        if self.n is not None and math.isinf(self.n):
            data["n"] = "inf"
        if self.hist_range is not None:
            data["hist_range"] = list(self.hist_range)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            logging.error("Unknown config keys: %s", sorted(unknown))
            raise QSOValidationError(f"unknown config keys: {sorted(unknown)}")
        values = dict(data)
        for name in _DISTRIBUTION_FIELDS:
            if values.get(name) is not None:
                raw = values[name]
                values[name] = parse_distribution(raw) if isinstance(raw, str) else from_dict(raw)
        if isinstance(values.get("n"), str):
            values["n"] = parse_iterations(values["n"])
        hints = get_type_hints(cls)
        for name, value in values.items():
            if name not in _DISTRIBUTION_FIELDS and not _matches(value, hints[name]):
                logging.error("Config field %s has invalid value %r", name, value)
                raise QSOValidationError(f"config field {name} has invalid value {value!r}")
        if values.get("hist_range") is not None:
            values["hist_range"] = tuple(values["hist_range"])
        return cls(**values)

    def merged(self, overrides: Dict[str, Any]) -> "ExperimentConfig":
        """Copy with every non-None override applied."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Read a JSON config; a run manifest contributes its ``config`` member.

    Parameters:
        path (str): JSON file.

    Returns:
        Dict[str, Any]: Raw config mapping.
    """
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        logging.info("Config loaded from %s.", path)
    except json.JSONDecodeError as e:
        logging.exception("Config file %s is not valid JSON", path)
        raise QSOValidationError(f"config file {path} is not valid JSON: {e}") from e
    except Exception:
        logging.exception("Error loading config from %s", path)
        raise
    if not isinstance(data, dict):
        raise QSOValidationError(f"config file {path} must contain a JSON object")
    if "config" in data and isinstance(data["config"], dict):
        return data["config"]
    return data


def seed_from_env() -> Optional[int]:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw)
    except ValueError as e:
        logging.error("%s must be an integer, got %r", SEED_ENV_VAR, raw)
        raise QSOValidationError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from e


def resolve_config(
    config_path: Optional[str], overrides: Dict[str, Any]
) -> ExperimentConfig:
    """
    Defaults < config file < QSO_SEED (master seed only) < explicit flags.
    """
    config = ExperimentConfig()
    if config_path:
        config = ExperimentConfig.from_dict(load_config_file(config_path))
    env_seed = seed_from_env()
    if env_seed is not None:
        config = replace(config, master_seed=env_seed)
    config = config.merged(overrides)
    Path(config.output_dir).mkdir(parents=True, exist_ok=True)
    if not os.access(config.output_dir, os.W_OK):
        raise QSOValidationError(f"output directory {config.output_dir} is not writable")
    return config
