import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import qmc

from lintsample import SequenceExhaustedError, VariateStream, make_stream
from lintsample.streams import KINDS, radical_inverse


def elementary_counts(x, m, splits):
    """Points per elementary box with ``splits[d]`` bits in dimension d."""
    idx = np.zeros(x.shape[0], dtype=np.int64)
    for d, b in enumerate(splits):
        idx = idx * 2**b + np.floor(x[:, d] * 2**b).astype(np.int64)
    return np.bincount(idx, minlength=2**m)


## examples ####################################################################


def test_halton_first_rows():
    rows = VariateStream("halton", 2).rows(0, 3)
    np.testing.assert_allclose(rows, [[0.5, 1 / 3], [0.25, 2 / 3], [0.75, 1 / 9]], rtol=1e-15)


def test_sobol_first_row_skips_zero():
    np.testing.assert_array_equal(VariateStream("sobol", 2).rows(0, 1), [[0.5, 0.5]])


@pytest.mark.parametrize("width", [1, 2, 5, 11])
def test_sobol_matches_scipy(width):
    ours = VariateStream("sobol", width).rows(0, 4095)
    ref = qmc.Sobol(width, scramble=False).random_base2(12)[1:]
    np.testing.assert_array_equal(ours, ref)


@pytest.mark.parametrize("base", [2, 3, 5, 7])
def test_radical_inverse_by_digits(base):
    for i in range(1, 200):
        digits, n = [], i
        while n:
            digits.append(n % base)
            n //= base
        expect = sum(d * base ** -(j + 1) for j, d in enumerate(digits))
        assert radical_inverse(np.array([i], dtype=np.uint64), base)[0] == pytest.approx(
            expect, rel=1e-15)


def test_pseudorandom_equal_seeds():
    a = VariateStream("pseudorandom", 3, seed=123).next_rows(1000)
    b = VariateStream("pseudorandom", 3, seed=123).next_rows(1000)
    assert a.tobytes() == b.tobytes()


def test_pseudorandom_different_seeds_differ():
    a = VariateStream("pseudorandom", 3, seed=1).rows(0, 100)
    b = VariateStream("pseudorandom", 3, seed=2).rows(0, 100)
    assert not np.array_equal(a, b)


def test_pseudorandom_words_follow_philox():
    # the stream is the top 53 bits of successive Philox4x64 words, row-major
    s = VariateStream("pseudorandom", 3, seed=99)
    raw = np.random.Philox(np.random.SeedSequence(99)).random_raw(30)
    expect = (raw >> np.uint64(11)).astype(float) * 2.0**-53
    np.testing.assert_array_equal(s.rows(0, 10).ravel(), expect)


## scrambling ##################################################################


@pytest.mark.parametrize("kind", ["sobol", "halton"])
def test_scramble_reproducible(kind):
    base = VariateStream(kind, 3)
    a = base.scramble(7).rows(0, 500)
    b = base.scramble(7).rows(0, 500)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, base.scramble(8).rows(0, 500))
    assert not np.array_equal(a, base.rows(0, 500))


def test_scramble_pseudorandom_rejected():
    with pytest.raises(ValueError):
        VariateStream("pseudorandom", 2, seed=1).scramble(3)


@pytest.mark.parametrize("m", [1, 4, 8, 10, 12])
@pytest.mark.parametrize("seed", [0, 1, 2**63 + 5])
def test_scrambled_sobol_1d_net(m, seed):
    x = VariateStream("sobol", 1, seed=seed).rows(0, 2**m)[:, 0]
    assert np.all(np.bincount(np.floor(x * 2**m).astype(int), minlength=2**m) == 1)


@pytest.mark.parametrize("seed", [3, 11])
def test_scrambled_sobol_2d_elementary_intervals(seed):
    m = 10
    x = VariateStream("sobol", 2, seed=seed).rows(0, 2**m)
    for m0 in range(m + 1):
        assert np.all(elementary_counts(x, m, (m0, m - m0)) == 1), m0


@pytest.mark.parametrize("seed", [0, 17, 2024])
def test_scrambled_sobol_mean(seed):
    x = VariateStream("sobol", 3, seed=seed).rows(0, 4096)
    assert np.all(np.abs(x.mean(axis=0) - 0.5) <= 0.51e-2)


def test_scrambled_halton_mean_close():
    x = VariateStream("halton", 3, seed=5).rows(0, 4096)
    assert np.all(np.abs(x.mean(axis=0) - 0.5) <= 0.51e-2)


## unscrambled net property ####################################################


@pytest.mark.parametrize("d", range(11))
@pytest.mark.parametrize("m", [1, 5, 12])
def test_unscrambled_sobol_net_from_zero(d, m):
    # rows 0 .. 2^m - 1 of the full sequence (zero point included)
    x = qmc.Sobol(11, scramble=False).random_base2(m)[:, d]
    full = np.concatenate([[0.0], VariateStream("sobol", 11).rows(0, 2**m - 1)[:, d]])
    np.testing.assert_array_equal(full, x)
    assert np.all(np.bincount(np.floor(full * 2**m).astype(int), minlength=2**m) == 1)


@pytest.mark.parametrize("d", range(11))
@pytest.mark.parametrize("m", [1, 5, 12])
def test_unscrambled_sobol_zero_skipped(d, m):
    # with the zero point skipped the first 2^m - 1 rows occupy distinct
    # intervals, every one except the first
    x = VariateStream("sobol", 11).rows(0, 2**m - 1)[:, d]
    counts = np.bincount(np.floor(x * 2**m).astype(int), minlength=2**m)
    assert counts[0] == 0
    assert np.all(counts[1:] == 1)


## counters and skip-ahead #####################################################


@pytest.mark.parametrize("kind,seed", [("pseudorandom", 4), ("sobol", None), ("sobol", 4),
                                       ("halton", None), ("halton", 4)])
def test_skip_ahead_matches_sequential(kind, seed):
    s = VariateStream(kind, 3, seed)
    full = s.rows(0, 1000)
    for start, n in [(0, 1), (1, 7), (3, 250), (999, 1), (513, 100)]:
        np.testing.assert_array_equal(s.rows(start, n), full[start:start + n])
    t = VariateStream(kind, 3, seed)
    parts = [t.next_rows(n) for n in (5, 1, 94, 400)]
    np.testing.assert_array_equal(np.concatenate(parts), full[:500])
    assert t.counter == 500
    t.skip(100)
    np.testing.assert_array_equal(t.next_rows(10), full[600:610])
    t.reset()
    np.testing.assert_array_equal(t.next_rows(3), full[:3])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**64 - 1), start=st.integers(0, 10**9), width=st.integers(1, 11))
def test_philox_skip_ahead_property(seed, start, width):
    s = VariateStream("pseudorandom", width, seed)
    a = s.rows(start, 5)
    b = s.rows(start + 2, 3)
    np.testing.assert_array_equal(a[2:], b)


def test_copy_is_independent():
    s = VariateStream("pseudorandom", 2, seed=1)
    s.next_rows(5)
    c = s.copy()
    np.testing.assert_array_equal(c.next_rows(3), s.next_rows(3))
    c.next_rows(1)
    assert c.counter == s.counter + 1


@pytest.mark.parametrize("kind", KINDS)
def test_range_over_a_million_draws(kind):
    seed = 12345 if kind == "pseudorandom" else None
    x = VariateStream(kind, 4, seed).rows(0, 250_000)
    assert x.size == 10**6
    assert np.all(x >= 0.0) and np.all(x < 1.0)


def test_range_scrambled_and_deep_rows():
    for kind in ("sobol", "halton"):
        x = VariateStream(kind, 11, seed=9).rows(2**30, 10**5)
        assert np.all(x >= 0.0) and np.all(x < 1.0)


## errors ######################################################################


def test_sobol_exhaustion():
    s = VariateStream("sobol", 2)
    s.rows(2**31 - 2, 2)
    with pytest.raises(SequenceExhaustedError):
        s.rows(2**31 - 2, 3)
    with pytest.raises(OverflowError):
        s.skip(2**31).next_rows(1)


@pytest.mark.parametrize("kwargs,exc", [
    (dict(kind="mersenne", width=2, seed=1), ValueError),
    (dict(kind="sobol", width=0), ValueError),
    (dict(kind="sobol", width=12), ValueError),
    (dict(kind="pseudorandom", width=2), ValueError),
    (dict(kind="pseudorandom", width=2, seed=-1), ValueError),
    (dict(kind="pseudorandom", width=2, seed=2**64), ValueError),
    (dict(kind="pseudorandom", width=2, seed=1.5), TypeError),
])
def test_constructor_errors(kwargs, exc):
    with pytest.raises(exc):
        VariateStream(**kwargs)


def test_make_stream_aliases():
    assert make_stream("none", 2, 1).kind == "pseudorandom"
    assert make_stream(None, 2, 1).kind == "pseudorandom"
    assert make_stream("sobol", 2, 1).scrambled
    assert not make_stream("sobol", 2).scrambled
