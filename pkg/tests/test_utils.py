import numpy as np
import pytest

from src.exceptions import EmptyGroup, GroupOutOfRange, InvalidConfig
from src.utils.groups import as_group, complement, parse_group_spec
from src.utils.parallel import ordered_map
from src.utils.rng import counter_stream, derive_seed, normal_block, standard_normals, uniform_open


# Random streams

def test_derive_seed_deterministic_and_distinct():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    seeds = {derive_seed(1, r) for r in range(100)}
    assert len(seeds) == 100
    assert derive_seed(1, 2) != derive_seed(2, 1)


def test_counter_streams_are_independent_of_order():
    forward = [counter_stream(5, b).standard_normal(3) for b in range(4)]
    backward = [counter_stream(5, b).standard_normal(3) for b in reversed(range(4))][::-1]
    np.testing.assert_array_equal(np.vstack(forward), np.vstack(backward))
    assert not np.array_equal(forward[0], forward[1])


def test_uniform_open_interval():
    u = uniform_open(3, 0, 100_000)
    assert u.min() > 0.0 and u.max() < 1.0


def test_normal_block_rows_match_single_streams():
    block = normal_block(9, range(10, 13), 50)
    for row, counter in enumerate(range(10, 13)):
        np.testing.assert_array_equal(block[row], standard_normals(9, counter, 50))


# Parallel helpers

def test_ordered_map_keeps_order():
    assert ordered_map(lambda x: x * x, range(20), threads=4) == [x * x for x in range(20)]
    assert ordered_map(lambda x: x, [], threads=4) == []


# Groups

def test_as_group_sorts_and_deduplicates():
    np.testing.assert_array_equal(as_group([3, 1, 3], 5), [1, 3])
    np.testing.assert_array_equal(as_group(None, 3), [0, 1, 2])
    with pytest.raises(EmptyGroup):
        as_group([], 3)
    with pytest.raises(GroupOutOfRange):
        as_group([5], 5)


def test_complement():
    np.testing.assert_array_equal(complement([0, 2], 4), [1, 3])


@pytest.mark.parametrize("spec, expected", [
    ("all", list(range(6))),
    ("1,3", [0, 2]),
    ("2-4", [1, 2, 3]),
    ("complement:1-4", [4, 5]),
    ("S0", [0, 1]),
    ("S0c", [2, 3, 4, 5]),
    ("3+S0c", [2, 3, 4, 5]),
    ("1+complement:1-5", [0, 5]),
])
def test_parse_group_spec(spec, expected):
    np.testing.assert_array_equal(parse_group_spec(spec, 6, support=[0, 1]), expected)


def test_parse_group_spec_errors():
    with pytest.raises(GroupOutOfRange):
        parse_group_spec("0,2", 6)
    with pytest.raises(GroupOutOfRange):
        parse_group_spec("7", 6)
    with pytest.raises(InvalidConfig):
        parse_group_spec("S0", 6)
    with pytest.raises(InvalidConfig):
        parse_group_spec("1,x", 6)
    with pytest.raises(InvalidConfig):
        parse_group_spec("1++2", 6)
    with pytest.raises(EmptyGroup):
        parse_group_spec("S0", 6, support=[])
    assert parse_group_spec("S0", 6, support=[], allow_empty=True).size == 0
