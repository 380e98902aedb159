# report_writer.py
# Date: 2026-10-19
# Version: 1.0.0

"""CSV and JSON artifacts. Every file carries the configuration that produced it."""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from custom_exceptions import ParameterError
from version import get_version

logger = logging.getLogger(__name__)

CONFIG_PREFIX = "# config: "

def _jsonable(value):
    """numpy scalars and arrays, tuples and Paths to plain JSON types."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else str(value)
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, Path):
        return str(value)
    return value

def _dumps(data):
    return json.dumps(_jsonable(data), indent=2, sort_keys=True)

def write_csv(df, path, config):
    """
    Writes a DataFrame as CSV behind a single `# config: {...}` line.

    Args:
        df (pandas.DataFrame): The table.
        path (str or Path): Destination.
        config (dict): Settings that produced the table.

    Returns:
        Path: The written file.

    Raises:
        OSError: If the destination cannot be written.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = CONFIG_PREFIX + json.dumps(_jsonable(config), sort_keys=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(header + "\n")
        df.to_csv(f, index=False, lineterminator="\n", float_format="%.12g")
    logger.info(f"Wrote {len(df)} rows to {path}")
    return path

def read_csv(path):
    """Reads a file written by write_csv. Returns (DataFrame, config dict)."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
    config = json.loads(first[len(CONFIG_PREFIX):]) if first.startswith(CONFIG_PREFIX) else {}
    return pd.read_csv(path, comment=None, skiprows=1 if config else 0), config

def write_json(data, path, config=None):
    """Writes a dict as JSON (sorted keys, indent 2), embedding config under "config"."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = dict(data)
    if config is not None:
        payload["config"] = config
    with open(path, "w", encoding="utf-8") as f:
        f.write(_dumps(payload) + "\n")
    logger.info(f"Wrote JSON report {path}")
    return path

def record_path_for(out):
    """results.csv -> results.record.json"""
    out = Path(out)
    return out.with_name(out.stem + ".record.json")

@dataclass
class ExperimentRecord:
    """What ran, with which settings, how long it took and what it found."""
    command: str
    config: dict
    version: str = field(default_factory=get_version)
    wall_time: float = 0.0
    summary: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    def to_dict(self):
        return _jsonable(asdict(self))

    @classmethod
    def from_file(cls, path):
        """
        Loads a record written by write_record.

        Raises:
            ParameterError: If the file is not valid JSON or not a record.
        """
        with open(path, "r", encoding="utf-8") as f:
            try:
                data = json.load(f)
            except (json.JSONDecodeError, UnicodeDecodeError) as e:
                raise ParameterError(f"{path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ParameterError(f"{path} is not an experiment record: top level is {type(data).__name__}.")
        try:
            record = cls(**data)
        except TypeError as e:
            raise ParameterError(f"{path} is not an experiment record: {e}") from e
        if not isinstance(record.command, str) or not isinstance(record.config, dict):
            raise ParameterError(f"{path} is not an experiment record: bad command or config.")
        return record

def write_record(record, out):
    """Writes the record next to its primary output and returns its path."""
    path = record_path_for(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(_dumps(record.to_dict()) + "\n")
    logger.info(f"Wrote experiment record {path}")
    return path
