import numpy as np
import pytest

from rng_streams import assign_blocks, block_layout, block_stream, derive_seed_sequence

def test_same_block_same_draws():
    a = block_stream(123, 4).random(10)
    b = block_stream(123, 4).random(10)
    assert np.array_equal(a, b)

def test_blocks_are_distinct_streams():
    assert not np.array_equal(block_stream(123, 0).random(10), block_stream(123, 1).random(10))
    assert not np.array_equal(block_stream(123, 0).random(10), block_stream(124, 0).random(10))

def test_seed_sequence_carries_block_key():
    seq = derive_seed_sequence(7, 3)
    assert seq.entropy == 7
    assert seq.spawn_key == (3,)
    with pytest.raises(ValueError):
        derive_seed_sequence(-1, 0)

def test_block_layout():
    assert block_layout(10, 4) == [4, 4, 2]
    assert block_layout(8, 4) == [4, 4]
    assert sum(block_layout(1_000_001, 8192)) == 1_000_001

def test_assign_blocks_covers_every_block_once():
    shards = assign_blocks(10, 3)
    assert sorted(i for shard in shards for i in shard) == list(range(10))
    assert len(assign_blocks(2, 8)) == 2
