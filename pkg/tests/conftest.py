import itertools

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import trapezoid

from lintsample.pdfs import GaussianMixture1D


def box_mass(corners, a, b):
    """Integral of the unit-cell multilinear interpolant over the box [a, b].

    Independent of the package: the interpolant is a sum of separable terms
    corner * prod_d (t_d or 1 - t_d), each integrated in closed form.
    """
    k = len(a)
    total = 0.0
    for c, value in enumerate(corners):
        term = value
        for d in range(k):
            lo, hi = a[d], b[d]
            upper = (hi**2 - lo**2) / 2
            term *= upper if (c >> d) & 1 else (hi - lo) - upper
        total += term
    return total


def bin_probabilities(corners, k, nbins):
    """Probability of each of nbins^k equal bins of the unit cell (C order)."""
    edges = np.linspace(0, 1, nbins + 1)
    probs = np.empty((nbins,) * k)
    for idx in itertools.product(range(nbins), repeat=k):
        a = [edges[i] for i in idx]
        b = [edges[i + 1] for i in idx]
        probs[idx] = box_mass(corners, a, b)
    return probs / probs.sum()


@pytest.fixture(scope="session")
def gmm():
    return GaussianMixture1D()


@pytest.fixture(scope="session")
def gmm_edges():
    return np.linspace(-7, 7, 100)


def pooled_chisquare_p(counts, expected, min_expected=5.0):
    """Chi-square p-value after merging all bins with expected count < min_expected."""
    counts = np.asarray(counts, dtype=float)
    expected = np.asarray(expected, dtype=float)
    small = expected < min_expected
    c = list(counts[~small])
    e = list(expected[~small])
    if small.any():
        c.append(counts[small].sum())
        e.append(expected[small].sum())
    c, e = np.array(c), np.array(e)
    return stats.chisquare(c, e * c.sum() / e.sum()).pvalue


def trapezoid_mass(edges, values):
    """Tensor-product trapezoid rule over a rectilinear vertex lattice."""
    out = np.asarray(values, dtype=float)
    for e in reversed(edges):
        out = trapezoid(out, e, axis=-1)
    return float(out)


def piecewise_linear_cdf(edges, values, x):
    """Normalized CDF of the piecewise-linear interpolant through (edges, values)."""
    edges = np.asarray(edges, dtype=float)
    values = np.asarray(values, dtype=float)
    widths = np.diff(edges)
    areas = widths * (values[:-1] + values[1:]) / 2
    before = np.concatenate([[0.0], np.cumsum(areas)])
    x = np.clip(np.asarray(x, dtype=float), edges[0], edges[-1])
    i = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, edges.size - 2)
    s = x - edges[i]
    slope = (values[i + 1] - values[i]) / widths[i]
    partial = values[i] * s + slope * s**2 / 2
    return (before[i] + partial) / before[-1]


## acceptance summary ##########################################################

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    detail = dict(item.user_properties).get("detail", "")
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _CRITERIA[number] = (title, "PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status, detail = _CRITERIA[number]
        line = f"[{status}] {number:2d}. {title}"
        terminalreporter.write_line(line + (f": {detail}" if detail else ""))
