# sigma_cache.py
# Date: 2026-10-19
# Version: 1.0.0

"""Loads and saves exact sigma_l^2 tables so repeated runs skip the enumeration."""

import json
import logging
from pathlib import Path

from config import CACHE_DIR
from decomp import SigmaTable, sigma_table

logger = logging.getLogger(__name__)

def cache_path(n, k, cache_dir=None):
    """The JSON file holding sigma_l^2 for (n, k). The squares do not depend on p."""
    return Path(cache_dir or CACHE_DIR) / f"sigma_n{n}_k{k}.json"

def _read_squares(path, k):
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    squares = {int(ell): int(value) for ell, value in data.get("sigma_squared", {}).items()}
    if sorted(squares) != list(range(1, k + 1)):
        raise ValueError(f"degrees {sorted(squares)} do not cover 1..{k}")
    return squares

def load_or_compute(params, p, cache_dir=None):
    """
    Returns the sigma table for (n, k, p), reading the cached squares when a
    valid file exists and writing one after a fresh enumeration.

    A corrupt or unreadable cache file is logged and recomputed; a cache
    directory that cannot be written only costs the write.

    Args:
        params (APParams): Modulus and progression length.
        p (float): Bias applied to the cached squares.
        cache_dir (str or Path, optional): Defaults to config.CACHE_DIR.

    Returns:
        SigmaTable: Exact normalisation constants.
    """
    params.require_multilinear()
    path = cache_path(params.n, params.k, cache_dir)
    if path.exists():
        try:
            squares = _read_squares(path, params.k)
            logger.debug(f"Loaded sigma table from {path}")
            return SigmaTable.from_squares(params.n, params.k, p, squares)
        except (OSError, ValueError, TypeError, AttributeError) as e:
            logger.warning(f"Ignoring unreadable sigma cache {path}: {e}")

    table = sigma_table(params, p)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "n": params.n,
            "k": params.k,
            "sigma_squared": {str(ell): value for ell, value in sorted(table.sigma_squared.items())},
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=4, sort_keys=True)
        logger.info(f"Cached sigma table for n={params.n}, k={params.k} at {path}")
    except OSError as e:
        logger.error(f"Failed to write sigma cache {path}: {e}")
    return table
