import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from lintsample import (
    Cell,
    DegenerateMassError,
    DomainError,
    VertexLimitError,
    cell_mass,
    interpolate,
    inverse_linear_cdf,
    sample_within_cell,
)
from lintsample.interpolant import DIM_MAX

from conftest import bin_probabilities


def unit_cell(corners):
    k = int(np.log2(len(corners)))
    return Cell(np.zeros(k), np.ones(k), corners)


def linear_cdf(a, b, t):
    return (a * t + (b - a) * t**2 / 2) / ((a + b) / 2)


## interpolate #################################################################


@pytest.mark.parametrize("corners,t,expected", [
    ((0, 1, 2, 3), (0.5, 0.5), 1.5),
    ((0, 1, 2, 3), (1.0, 0.0), 1.0),
    ((2, 4), (0.25,), 2.5),
])
def test_interpolate_examples(corners, t, expected):
    assert interpolate(unit_cell(corners), t) == pytest.approx(expected, abs=1e-15)


def test_corner_convention_2d():
    # (f00, f10, f01, f11): bit 0 is dimension 0
    cell = unit_cell((0, 1, 2, 3))
    assert interpolate(cell, (0, 1)) == 2.0
    assert interpolate(cell, (1, 1)) == 3.0


@settings(max_examples=50, deadline=None)
@given(k=st.integers(1, 4), data=st.data())
def test_corner_reproduction(k, data):
    corners = data.draw(st.lists(st.floats(0, 1e3), min_size=2**k, max_size=2**k))
    lo = np.array(data.draw(st.lists(st.floats(-10, 10), min_size=k, max_size=k)))
    cell = Cell(lo, lo + 1.5, corners)
    for c in range(2**k):
        t = (c >> np.arange(k)) & 1
        assert interpolate(cell, t) == corners[c]


def test_interpolate_batch():
    cell = unit_cell((0, 1, 2, 3))
    out = interpolate(cell, [[0, 0], [0.5, 0.5], [1, 1]])
    np.testing.assert_allclose(out, [0, 1.5, 3])


@pytest.mark.parametrize("t", [(1.1, 0.5), (-0.01, 0.2), (0.5, 1 + 1e-9)])
def test_interpolate_domain_error(t):
    with pytest.raises(DomainError):
        interpolate(unit_cell((0, 1, 2, 3)), t)


def test_interpolate_tolerates_tiny_excursion():
    assert interpolate(unit_cell((2, 4)), (1 + 1e-13,)) == 4.0


## Cell invariants ###############################################################


@pytest.mark.parametrize("lo,hi,corners", [
    ([0.0], [0.0], [1, 1]),
    ([1.0], [0.0], [1, 1]),
    ([0.0], [1.0], [1, -1]),
    ([0.0], [1.0], [1, np.nan]),
    ([0.0], [1.0], [1, 1, 1]),
])
def test_cell_rejects_bad_input(lo, hi, corners):
    with pytest.raises(DomainError):
        Cell(lo, hi, corners)


def test_cell_dim_cap():
    k = DIM_MAX + 1
    with pytest.raises(VertexLimitError):
        Cell(np.zeros(k), np.ones(k), np.ones(2**k))


## cell_mass ###################################################################


@pytest.mark.parametrize("lo,hi,corners,expected", [
    ([0, 0], [1, 1], [1, 1, 1, 1], 1.0),
    ([0], [2], [0, 2], 2.0),
    ([0, 0], [1, 2], [0, 1, 2, 3], 3.0),
])
def test_cell_mass_examples(lo, hi, corners, expected):
    assert cell_mass(Cell(lo, hi, corners)) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_cell_mass_matches_quadrature(k):
    rng = np.random.default_rng(100 + k)
    for _ in range(5):
        lo = rng.uniform(-5, 5, k)
        hi = lo + rng.uniform(0.1, 3, k)
        cell = Cell(lo, hi, rng.uniform(0, 10, 2**k))
        n = 64
        mids = (np.arange(n) + 0.5) / n
        t = np.stack(np.meshgrid(*([mids] * k), indexing="ij"), -1).reshape(-1, k)
        quad = interpolate(cell, t).mean() * cell.volume
        assert cell_mass(cell) == pytest.approx(quad, rel=1e-10)


## inverse_linear_cdf ##########################################################


@pytest.mark.parametrize("a,b,u,expected", [
    (3, 3, 0.7, 0.7),
    (0, 1, 0.25, 0.5),
    (1, 0, 0.75, 0.5),
])
def test_inverse_linear_cdf_examples(a, b, u, expected):
    assert inverse_linear_cdf(a, b, u) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("a,b", [(0, 1), (1, 0), (2, 5), (1, 1)])
def test_inverse_linear_cdf_endpoints(a, b):
    assert inverse_linear_cdf(a, b, 0.0) == 0.0
    assert inverse_linear_cdf(a, b, 1.0) == 1.0


def test_inverse_linear_cdf_errors():
    with pytest.raises(DegenerateMassError):
        inverse_linear_cdf(0, 0, 0.5)
    with pytest.raises(DomainError):
        inverse_linear_cdf(1, 2, 1.5)
    with pytest.raises(DomainError):
        inverse_linear_cdf(1, 2, -0.1)
    with pytest.raises(DomainError):
        inverse_linear_cdf(-1, 2, 0.5)


def test_inverse_linear_cdf_nearly_flat():
    # b - a far below 1e-14 (a + b): uniform branch
    assert inverse_linear_cdf(1.0, 1.0 + 1e-16, 0.3) == 0.3


pos = st.floats(0, 1e6, allow_nan=False)


@settings(max_examples=300, deadline=None)
@given(a=pos, b=pos, u=st.floats(0, 1))
def test_inverse_linear_cdf_roundtrip(a, b, u):
    if a + b < 1e-300:
        return
    t = inverse_linear_cdf(a, b, u)
    assert 0.0 <= t <= 1.0
    assert linear_cdf(a, b, t) == pytest.approx(u, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(a=pos, b=pos, u1=st.floats(0, 1), u2=st.floats(0, 1))
def test_inverse_linear_cdf_monotone(a, b, u1, u2):
    if a + b < 1e-300:
        return
    u1, u2 = sorted((u1, u2))
    assert inverse_linear_cdf(a, b, u1) <= inverse_linear_cdf(a, b, u2)


## sample_within_cell ##########################################################


def test_uniform_cell_is_affine_in_u():
    cell = Cell([1.0, -2.0], [3.0, 2.0], [5, 5, 5, 5])
    u = np.array([0.3, 0.8])
    np.testing.assert_allclose(sample_within_cell(cell, u), cell.lo + u * (cell.hi - cell.lo))


def test_1d_cell_reduces_to_inverse_cdf():
    assert sample_within_cell(Cell([0], [1], [0, 1]), [0.25])[0] == pytest.approx(0.5)


def test_zero_mass_cell_raises():
    with pytest.raises(DegenerateMassError):
        sample_within_cell(Cell([0, 0], [1, 1], [0, 0, 0, 0]), [0.5, 0.5])


def test_zero_mass_slice_falls_back_to_uniform():
    # f = (1 - t0)(1 - t1); u0 = 1 pins t0 = 1 where the conditional slice is empty
    cell = Cell([0, 0], [1, 1], [1, 0, 0, 0])
    x = sample_within_cell(cell, [1.0, 0.3])
    np.testing.assert_allclose(x, [1.0, 0.3])


def test_samples_stay_in_cell():
    rng = np.random.default_rng(3)
    cell = Cell([1e8], [1e8 + 1e-6], [0, 1])
    x = sample_within_cell(cell, rng.random((10000, 1)))
    assert np.all(x >= cell.lo) and np.all(x <= cell.hi)


@pytest.mark.slow
def test_2d_histogram_matches_interpolant():
    corners = np.array([0.0, 1.0, 2.0, 3.0])
    rng = np.random.default_rng(2024)
    x = sample_within_cell(unit_cell(corners), rng.random((10**6, 2)))
    counts, _, _ = np.histogram2d(x[:, 0], x[:, 1], bins=10, range=[[0, 1], [0, 1]])
    expected = bin_probabilities(corners, 2, 10) * x.shape[0]
    _, p = stats.chisquare(counts.ravel(), expected.ravel())
    assert p > 0.01


@pytest.mark.parametrize("k", [1, 2, 3])
def test_axis_marginals_ks(k):
    rng = np.random.default_rng(50 + k)
    for trial in range(3):
        corners = rng.uniform(0, 5, 2**k)
        cell = Cell(np.zeros(k), np.ones(k), corners)
        x = sample_within_cell(cell, rng.random((10**5, k)))
        bits = (np.arange(2**k)[:, None] >> np.arange(k)) & 1
        for d in range(k):
            a = corners[bits[:, d] == 0].mean()
            b = corners[bits[:, d] == 1].mean()
            res = stats.kstest(x[:, d], lambda t: linear_cdf(a, b, np.clip(t, 0, 1)))
            crit = stats.kstwo.ppf(0.99, x.shape[0])
            assert res.statistic < crit, (trial, d)


def test_batched_matches_single():
    rng = np.random.default_rng(8)
    cell = Cell([0, 1, 2], [1, 3, 2.5], rng.uniform(0, 1, 8))
    u = rng.random((20, 3))
    batch = sample_within_cell(cell, u)
    for row, ui in zip(batch, u):
        np.testing.assert_array_equal(row, sample_within_cell(cell, ui))


def test_sampling_order_is_dimension_zero_first():
    # brute force: conditional on t0, dimension 1 is linear with ends g(t0, 0), g(t0, 1)
    corners = np.array([1.0, 4.0, 2.0, 0.5])
    cell = unit_cell(corners)
    u = np.array([0.37, 0.81])
    x = sample_within_cell(cell, u)
    a0 = (corners[0] + corners[2]) / 2
    b0 = (corners[1] + corners[3]) / 2
    ts = np.linspace(0, 1, 200001)
    t0 = ts[np.searchsorted(linear_cdf(a0, b0, ts), u[0])]
    g0 = corners[0] + t0 * (corners[1] - corners[0])
    g1 = corners[2] + t0 * (corners[3] - corners[2])
    t1 = ts[np.searchsorted(linear_cdf(g0, g1, ts), u[1])]
    np.testing.assert_allclose(x, [t0, t1], atol=1e-5)


def test_cell_is_immutable_value():
    cell = unit_cell((1, 2))
    with pytest.raises(Exception):
        cell.lo = np.array([5.0])


def test_corner_helper():
    cell = Cell([0, 10], [1, 20], [0, 1, 2, 3])
    for c, expect in enumerate(itertools.product([10, 20], [0, 1])):
        np.testing.assert_array_equal(cell.corner(c), expect[::-1])
