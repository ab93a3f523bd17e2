import numpy as np
from hypothesis import given, strategies as st

from speciesid.rng import MASK64, Xoshiro256, derive_seed, splitmix64


def test_splitmix64_reference_values():
    # first outputs for seed 0 from the published SplitMix64 reference
    state = 0
    outs = []
    for _ in range(3):
        state, out = splitmix64(state)
        outs.append(out)
    assert outs == [
        0xE220A8397B1DCDAF,
        0x6E789E6AA1B965F4,
        0x06C45D188009454F,
    ]


def test_streams_reproducible():
    a = Xoshiro256(12345)
    b = Xoshiro256(12345)
    assert [a.next_u64() for _ in range(10)] == [b.next_u64() for _ in range(10)]


def test_different_seeds_differ():
    a = Xoshiro256(1)
    b = Xoshiro256(2)
    assert [a.next_u64() for _ in range(4)] != [b.next_u64() for _ in range(4)]


@given(st.integers(min_value=0, max_value=MASK64))
def test_uniform01_in_unit_interval(seed):
    rng = Xoshiro256(seed)
    for _ in range(20):
        assert 0.0 <= rng.uniform01() < 1.0


@given(st.integers(min_value=0, max_value=MASK64), st.integers(min_value=1, max_value=97))
def test_randbelow_range(seed, n):
    rng = Xoshiro256(seed)
    assert all(0 <= rng.randbelow(n) < n for _ in range(30))


def test_shuffle_is_permutation():
    rng = Xoshiro256(7)
    items = list(range(40))
    shuffled = list(items)
    rng.shuffle(shuffled)
    assert sorted(shuffled) == items
    assert shuffled != items  # astronomically unlikely to be identity


def test_derive_seed_tags_matter():
    assert derive_seed(5, 0, 1) != derive_seed(5, 1, 0)
    assert derive_seed(5, 2) == derive_seed(5, 2)


def test_normal_moments():
    rng = Xoshiro256(99)
    draws = np.array([rng.normal() for _ in range(4000)])
    assert abs(draws.mean()) < 0.1
    assert abs(draws.std() - 1.0) < 0.1
