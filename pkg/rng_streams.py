# rng_streams.py
# Date: 2026-10-19
# Version: 1.0.0

"""
Reproducible random streams for the Monte Carlo engine.

Samples are drawn in fixed-size blocks. Block i always draws from
substream i of the run seed, so the same (seed, block) pair produces the
same bits whether the run uses one worker or many.
"""

import logging

import numpy as np

logger = logging.getLogger(__name__)

def derive_seed_sequence(seed, block_index):
    """
    Derives the seed sequence of one block.

    Args:
        seed (int): The run seed (non-negative).
        block_index (int): Index of the block inside the run.

    Returns:
        numpy.random.SeedSequence: Independent child sequence for the block.
    """
    if seed < 0 or block_index < 0:
        raise ValueError("seed and block_index must be non-negative")
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(int(block_index),))

def block_stream(seed, block_index):
    """Returns the PCG64 generator owned by one block."""
    return np.random.Generator(np.random.PCG64(derive_seed_sequence(seed, block_index)))

def block_layout(num_samples, block_size):
    """
    Splits a run into block sizes. All blocks are full except possibly the last.

    Args:
        num_samples (int): Total number of samples.
        block_size (int): Samples per block.

    Returns:
        list: Sample count of each block, in block order.
    """
    if num_samples < 1 or block_size < 1:
        raise ValueError("num_samples and block_size must be positive")
    full, rest = divmod(num_samples, block_size)
    sizes = [block_size] * full
    if rest:
        sizes.append(rest)
    return sizes

def assign_blocks(num_blocks, shards):
    """
    Deals block indices round-robin to shards. Only affects where a block
    runs, never what it draws.
    """
    shards = max(1, min(shards, num_blocks))
    return [list(range(i, num_blocks, shards)) for i in range(shards)]
