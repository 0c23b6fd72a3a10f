#!/usr/bin/env python
# coding: utf-8

import json
import logging
import math
from pathlib import Path
from typing import Any, Union

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray

from centred_qso.cf_engine import CFGrid

PathLike = Union[str, Path]

FLOAT_FORMAT = "%.17g"


def save_table(df: pd.DataFrame, file_path: PathLike) -> None:
    """
    Save a DataFrame as UTF-8 CSV with LF line endings and round-trip floats.

    Parameters:
        df (pd.DataFrame): Table to write.
        file_path (PathLike): Destination.
    """
    try:
        df.to_csv(
            file_path,
            index=False,
            float_format=FLOAT_FORMAT,
            lineterminator="\n",
            encoding="utf-8",
        )
        logging.info("Table saved to %s.", file_path)
    except Exception:
        logging.exception("Error saving table to %s", file_path)
        raise


def load_table(file_path: PathLike) -> pd.DataFrame:
    try:
        df = pd.read_csv(file_path)
        logging.info("Data loaded successfully from %s.", file_path)
        logging.debug("DataFrame columns: %s", df.columns.tolist())
        return df
    except Exception:
        logging.exception("Error loading data from %s", file_path)
        raise


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
    return value


def save_json(data: Any, file_path: PathLike) -> None:
    """Write JSON (non-finite floats as strings) with a trailing newline."""
    try:
        with open(file_path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(_jsonable(data), f, indent=2, ensure_ascii=False)
            f.write("\n")
        logging.info("JSON saved to %s.", file_path)
    except Exception:
        logging.exception("Error saving JSON to %s", file_path)
        raise


def load_json(file_path: PathLike) -> Any:
    try:
        with open(file_path, encoding="utf-8") as f:
            return json.load(f)
    except Exception:
        logging.exception("Error loading JSON from %s", file_path)
        raise


def save_values(values: ArrayLike, file_path: PathLike, fmt: str = "csv") -> None:
    """Single-column CSV with header ``value``, or a JSON array."""
    x = np.asarray(values, dtype=float)
    if fmt == "json":
        save_json(x.tolist(), file_path)
    else:
        save_table(pd.DataFrame({"value": x}), file_path)


def load_values(file_path: PathLike) -> NDArray[np.float64]:
    if str(file_path).endswith(".json"):
        return np.asarray(load_json(file_path), dtype=float)
    df = load_table(file_path)
    column = "value" if "value" in df.columns else df.columns[0]
    return df[column].to_numpy(dtype=float)


def save_cf_grid(grid: CFGrid, file_path: PathLike) -> None:
    save_table(grid.to_frame(), file_path)


def load_cf_grid(file_path: PathLike) -> CFGrid:
    return CFGrid.from_frame(load_table(file_path))
