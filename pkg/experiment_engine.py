# experiment_engine.py
# Date: 2026-10-19
# Version: 1.0.0

"""
Monte Carlo block runner.

A run is cut into fixed-size blocks (config.BLOCK_SIZE). Each block owns
its random substream, counts progressions for every subset it draws and
returns a partial histogram; shards only decide which process runs which
blocks. Partial histograms are merged by integer addition.
"""

import logging
import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from config import (
    BLOCK_SIZE,
    COMPONENT_BUDGET,
    DEFAULT_K,
    DEFAULT_N,
    DEFAULT_P,
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    DEFAULT_SHARDS,
    MC_BUDGET,
)
from core_count import APParams, count_kap_batch, sample_subsets, validate_probability
from custom_exceptions import ParameterError, ResourceGuardError
from decomp import normalized_components_batch, normalized_degrees
from rng_streams import assign_blocks, block_layout, block_stream
from sigma_cache import load_or_compute

logger = logging.getLogger(__name__)

@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo run. The histogram depends on everything but `shards`."""
    n: int = DEFAULT_N
    k: int = DEFAULT_K
    p: float = DEFAULT_P
    num_samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED
    shards: int = DEFAULT_SHARDS
    record_components: bool = False
    params: APParams = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "params", APParams(self.n, self.k))
        object.__setattr__(self, "p", validate_probability(self.p))
        if int(self.num_samples) != self.num_samples or self.num_samples < 1:
            raise ParameterError(f"num_samples must be a positive integer, got {self.num_samples}.")
        if int(self.shards) != self.shards or self.shards < 1:
            raise ParameterError(f"shards must be a positive integer, got {self.shards}.")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ParameterError(f"seed must be a non-negative integer, got {self.seed}.")

    def to_dict(self):
        data = asdict(self)
        data.pop("params", None)
        return data

@dataclass(frozen=True)
class Histogram:
    """Frequencies of the integer progression counts of a run."""
    counts: dict
    total: int

    @classmethod
    def from_values(cls, values):
        values = np.asarray(values, dtype=np.int64).reshape(-1)
        keys, freqs = np.unique(values, return_counts=True)
        return cls(counts={int(x): int(c) for x, c in zip(keys, freqs)}, total=int(values.size))

    @classmethod
    def from_frame(cls, df):
        counts = {int(x): int(c) for x, c in zip(df["value"], df["count"])}
        return cls(counts=counts, total=sum(counts.values()))

    def merge(self, other):
        merged = Counter(self.counts)
        merged.update(other.counts)
        return Histogram(counts=dict(merged), total=self.total + other.total)

    @property
    def values(self):
        return np.array(sorted(self.counts), dtype=np.int64)

    @property
    def frequencies(self):
        return np.array([self.counts[x] for x in sorted(self.counts)], dtype=np.int64)

    def probability(self, x):
        """Empirical P[kAP = x] for an integer or an integer array."""
        x = np.asarray(x, dtype=np.int64)
        probs = np.vectorize(lambda v: self.counts.get(int(v), 0), otypes=[np.float64])(x) / self.total
        return float(probs) if probs.ndim == 0 else probs

    @property
    def mean(self):
        return float(np.dot(self.values, self.frequencies) / self.total)

    @property
    def std(self):
        """Sample standard deviation (ddof = 1)."""
        if self.total < 2:
            return 0.0
        centred = self.values - self.mean
        return float(math.sqrt(np.dot(centred ** 2, self.frequencies) / (self.total - 1)))

    def expand(self):
        """All samples as a sorted array."""
        return np.repeat(self.values, self.frequencies)

    def to_frame(self):
        return pd.DataFrame({"value": self.values, "count": self.frequencies})

@dataclass(frozen=True, eq=False)
class ComponentSamples:
    """
    Per-sample normalised components for degrees (1, 3, ..., k) plus the
    normalised tail Y / sigma_Y. The degree-2 coordinate is never stored.
    kap and popcount are None for Gaussian reference samples.
    """
    degrees: tuple
    values: np.ndarray
    tail: np.ndarray
    kap: np.ndarray = None
    popcount: np.ndarray = None

    def __post_init__(self):
        if 2 in self.degrees:
            raise ParameterError("The degree-2 component is not part of the normalised vector.")
        if self.values.ndim != 2 or self.values.shape[1] != len(self.degrees):
            raise ParameterError(f"Component matrix shape {self.values.shape} does not match degrees {self.degrees}.")

    def __len__(self):
        return self.values.shape[0]

    def to_frame(self):
        df = pd.DataFrame(self.values, columns=[f"kap{ell}_normalized" for ell in self.degrees])
        df["tail_normalized"] = self.tail
        if self.kap is not None:
            df.insert(0, "popcount", self.popcount)
            df.insert(0, "kap", self.kap)
        return df

@dataclass(frozen=True)
class MCSummary:
    num_samples: int
    mean: float
    std: float
    sem: float
    minimum: int
    maximum: int
    popcount_mean: float
    wall_time: float
    blocks: int
    shards: int

    def to_dict(self):
        return asdict(self)

def check_budget(cfg):
    """
    Refuses runs whose work estimate exceeds the configured budget.

    Raises:
        ResourceGuardError: If num_samples * n^2 (times 2^k with components) is over budget.
    """
    work = cfg.num_samples * cfg.n ** 2
    if work > MC_BUDGET:
        raise ResourceGuardError(f"num_samples * n^2 = {work:.3g} exceeds the budget {MC_BUDGET:.3g}.")
    if cfg.record_components and work * 2 ** cfg.k > COMPONENT_BUDGET:
        raise ResourceGuardError(f"Component recording needs {work * 2 ** cfg.k:.3g} units, "
                                 f"over the budget {COMPONENT_BUDGET:.3g}; reduce num_samples.")

def _run_block(cfg, sigma, block_index, size):
    """Draws one block and returns its partial results. Top-level so worker processes can import it."""
    params = cfg.params
    stream = block_stream(cfg.seed, block_index)
    bits = sample_subsets(params, cfg.p, stream, size)
    kap = count_kap_batch(bits, params)
    popcount = bits.sum(axis=1, dtype=np.int64)
    keys, freqs = np.unique(kap, return_counts=True)
    result = {
        "block": block_index,
        "counts": dict(zip(keys.tolist(), freqs.tolist())),
        "size": size,
        "popcount_sum": int(popcount.sum()),
        "components": None,
    }
    if cfg.record_components:
        y = (bits.astype(np.float64) - cfg.p) / math.sqrt(cfg.p * (1.0 - cfg.p))
        values, tail = normalized_components_batch(y, params, sigma)
        result["components"] = (values, tail, kap, popcount)
    return result

def _run_shard(cfg, sigma, blocks):
    return [_run_block(cfg, sigma, index, size) for index, size in blocks]

def _log_progress(done, total_blocks, last_decile):
    decile = (10 * done) // total_blocks
    if decile > last_decile:
        logger.info(f"Monte Carlo progress: {done}/{total_blocks} blocks ({10 * decile}%)")
    return max(decile, last_decile)

def run_mc(cfg, sigma=None):
    """
    Executes a Monte Carlo run.

    Args:
        cfg (ExperimentConfig): The run.
        sigma (SigmaTable, optional): Needed when components are recorded;
            computed through the cache when omitted.

    Returns:
        tuple: (Histogram, ComponentSamples or None, MCSummary).

    Raises:
        ResourceGuardError: If the run is over budget.
        MultilinearityError: If components are requested with gcd(n, (k-1)!) != 1.
    """
    check_budget(cfg)
    params = cfg.params
    if not params.gcd_ok:
        logger.warning(f"gcd({cfg.n}, ({cfg.k}-1)!) != 1: progressions may repeat residues; "
                       f"counts are still exact but the degree analysis does not apply.")
    if cfg.record_components:
        params.require_multilinear()
        if sigma is None:
            sigma = load_or_compute(params, cfg.p)

    sizes = block_layout(cfg.num_samples, BLOCK_SIZE)
    shards = assign_blocks(len(sizes), cfg.shards)
    logger.info(f"Monte Carlo run started: n={cfg.n}, k={cfg.k}, p={cfg.p}, "
                f"{cfg.num_samples} samples in {len(sizes)} blocks over {len(shards)} shard(s), seed={cfg.seed}")
    start = time.perf_counter()

    results = []
    last_decile = 0
    if len(shards) == 1:
        for index, size in enumerate(sizes):
            results.append(_run_block(cfg, sigma, index, size))
            last_decile = _log_progress(len(results), len(sizes), last_decile)
    else:
        with ProcessPoolExecutor(max_workers=len(shards)) as executor:
            futures = [executor.submit(_run_shard, cfg, sigma, [(i, sizes[i]) for i in blocks])
                       for blocks in shards]
            for future in as_completed(futures):
                results.extend(future.result())
                last_decile = _log_progress(len(results), len(sizes), last_decile)

    results.sort(key=lambda r: r["block"])
    merged = Counter()
    for r in results:
        merged.update(r["counts"])
    hist = Histogram(counts={int(x): int(c) for x, c in sorted(merged.items())},
                     total=sum(r["size"] for r in results))

    components = None
    if cfg.record_components:
        parts = [r["components"] for r in results]
        components = ComponentSamples(
            degrees=normalized_degrees(cfg.k),
            values=np.concatenate([part[0] for part in parts]),
            tail=np.concatenate([part[1] for part in parts]),
            kap=np.concatenate([part[2] for part in parts]),
            popcount=np.concatenate([part[3] for part in parts]),
        )

    wall_time = time.perf_counter() - start
    std = hist.std
    summary = MCSummary(
        num_samples=hist.total,
        mean=hist.mean,
        std=std,
        sem=std / math.sqrt(hist.total),
        minimum=int(hist.values[0]),
        maximum=int(hist.values[-1]),
        popcount_mean=sum(r["popcount_sum"] for r in results) / hist.total,
        wall_time=wall_time,
        blocks=len(sizes),
        shards=len(shards),
    )
    logger.info(f"Monte Carlo run finished in {wall_time:.1f}s: mean={summary.mean:.3f}, std={summary.std:.3f}")
    return hist, components, summary
