"""Counting, unranking, enumeration, and the deterministic sampling streams.

Counts for small lengths are frozen from independent brute-force
enumeration; the suite re-derives them with enumerate_all where tractable.
"""

import itertools

import pytest

from raspvisor.errors import EmptyLanguageError, EnumerationLimitError
from raspvisor.lang import parse_source, pretty_print, token_length
from raspvisor.sampler import (CountTable, DeterministicStream,
                               ENUMERATION_GUARD, count_programs,
                               enumerate_all, sample_inputs, sample_program,
                               unrank_program)

# program counts by token length, cross-checked by full enumeration below
EXPECTED_COUNTS = {
    14: 0, 15: 0,
    16: 81,
    17: 0, 18: 0, 19: 0, 20: 0,
    21: 16200,
    22: 0,
    23: 18630,
    24: 48600,
    25: 2430,
    26: 1023030,
    27: 0,
    28: 4700430,
    29: 2916000,
    30: 5256900,
    31: 24786000,
    32: 1676700,
}


def test_counts_match_frozen_table():
    for length, want in EXPECTED_COUNTS.items():
        assert count_programs(length) == want, length


def test_counts_grow_past_the_guard():
    # beyond 32 tokens every populated length exceeds the enumeration guard
    for length in range(33, 48):
        count = count_programs(length)
        assert count == 0 or count > ENUMERATION_GUARD
    assert count_programs(33) > ENUMERATION_GUARD


@pytest.mark.parametrize("length", [16, 21, 23, 24, 25])
def test_enumeration_matches_count(length):
    programs = list(enumerate_all(length))
    assert len(programs) == EXPECTED_COUNTS[length]
    for fd in programs[:: max(1, len(programs) // 50)]:
        assert token_length(fd) == length


def test_enumeration_has_no_duplicates():
    programs = [pretty_print(fd) for fd in enumerate_all(21)]
    assert len(set(programs)) == len(programs) == 16200


def test_unrank_matches_enumeration_order():
    for length in (16, 21):
        for rank, fd in enumerate(itertools.islice(enumerate_all(length), 300)):
            assert unrank_program(length, rank) == fd
    # spot-check the tail
    last = count_programs(21) - 1
    tail = None
    for tail in enumerate_all(21):
        pass
    assert unrank_program(21, last) == tail


def test_unrank_bounds():
    with pytest.raises(ValueError):
        unrank_program(16, 81)
    with pytest.raises(ValueError):
        unrank_program(16, -1)


def test_enumeration_guard():
    with pytest.raises(EnumerationLimitError):
        enumerate_all(31)
    with pytest.raises(EnumerationLimitError):
        enumerate_all(33)
    # length 32 dips back under the guard and stays enumerable
    it = enumerate_all(32)
    assert token_length(next(it)) == 32


def test_empty_lengths_raise_on_sampling():
    for length in (15, 17, 22, 27):
        with pytest.raises(EmptyLanguageError):
            sample_program(length, seed=0, index=0)
    assert list(enumerate_all(22)) == []


def test_minimum_length_is_sixteen():
    assert all(count_programs(k) == 0 for k in range(16))
    assert count_programs(16) == 81
    # the 81 shortest programs are exactly the arity pairs around `hlt`
    seen = {(fd.n_in, fd.n_out) for fd in enumerate_all(16)}
    assert seen == {(a, b) for a in range(1, 10) for b in range(1, 10)}


def test_sample_program_deterministic_and_uniform_support():
    a = sample_program(23, seed=4, index=77)
    b = sample_program(23, seed=4, index=77)
    assert a == b
    assert token_length(a) == 23
    # regression pin for the stream layout
    assert pretty_print(sample_program(16, seed=0, index=0)) == \
        "fun f0(ipt: W^1) -> W^5 { hlt }"
    assert pretty_print(sample_program(23, seed=0, index=0)) == \
        "fun f0(ipt: W^9) -> W^2 { opt[5] = 8; hlt }"


def test_sample_program_varies_with_seed_and_index():
    base = sample_program(26, seed=0, index=0)
    assert any(sample_program(26, seed=0, index=k) != base for k in range(1, 8))
    assert any(sample_program(26, seed=s, index=0) != base for s in range(1, 8))


def test_sampled_programs_parse_back():
    for k in range(50):
        fd = sample_program(30, seed=2, index=k)
        assert parse_source(pretty_print(fd)) == fd


def test_sample_inputs_regression():
    assert sample_inputs(3, 8, seed=0, index=0) == (160, 180, 57)
    assert sample_inputs(3, 8, seed=0, index=1) == (181, 129, 231)
    assert sample_inputs(2, 64, seed=9, index=4) == \
        (15599348877545970909, 9905465706893810863)


def test_sample_inputs_bounds():
    vals = sample_inputs(9, 1, seed=3, index=0)
    assert len(vals) == 9 and all(v in (0, 1) for v in vals)
    with pytest.raises(ValueError):
        sample_inputs(0, 8, seed=0, index=0)
    with pytest.raises(ValueError):
        sample_inputs(10, 8, seed=0, index=0)
    with pytest.raises(ValueError):
        sample_inputs(2, 65, seed=0, index=0)


def test_stream_regression():
    s = DeterministicStream(0, 0, b"prog")
    assert [s.getrandbits(32) for _ in range(4)] == \
        [2567651922, 3175537352, 1165561821, 2625677875]
    s = DeterministicStream(0, 0, b"prog")
    assert [s.randbelow(1000) for _ in range(4)] == [594, 720, 400, 802]


def test_stream_domains_and_indices_are_independent():
    a = DeterministicStream(0, 0, b"prog").getrandbits(64)
    b = DeterministicStream(0, 0, b"inp").getrandbits(64)
    c = DeterministicStream(0, 1, b"prog").getrandbits(64)
    d = DeterministicStream(1, 0, b"prog").getrandbits(64)
    assert len({a, b, c, d}) == 4


def test_stream_randbelow_edges():
    s = DeterministicStream(5, 5, b"prog")
    assert s.randbelow(1) == 0
    with pytest.raises(ValueError):
        s.randbelow(0)
    big = 10 ** 30
    vals = [s.randbelow(big) for _ in range(10)]
    assert all(0 <= v < big for v in vals)
    assert s.getrandbits(0) == 0
    with pytest.raises(ValueError):
        s.getrandbits(-1)


def test_shared_count_table_reuse():
    table = CountTable()
    assert count_programs(16, table) == 81
    fd = sample_program(16, seed=1, index=2, table=table)
    assert unrank_program(16, 0, table) is not None
    assert token_length(fd) == 16
