import numpy as np
import pytest
from scipy import integrate, stats

from lintsample.pdfs import (
    BUILTINS,
    CountingPdf,
    Doughnut2D,
    GaussianMixture1D,
    PowerLaw1D,
    make_pdf,
    parse_params,
)


def test_gmm_matches_scipy_mixture():
    g = GaussianMixture1D()
    x = np.linspace(-8, 8, 301)
    ref = (0.4 * stats.norm.pdf(x, -3, 1) + 0.25 * stats.norm.pdf(x, 0.5, 0.25)
           + 0.35 * stats.norm.pdf(x, 2.5, 0.75))
    np.testing.assert_allclose(g(x[:, None]), ref, rtol=1e-13)
    assert g.mean == pytest.approx(-0.2, abs=1e-15)


def test_powerlaw_is_nfw_shape():
    p = PowerLaw1D()
    r = np.array([[0.1], [1.0], [10.0]])
    np.testing.assert_allclose(p(r), 1 / (r[:, 0] * (1 + r[:, 0]) ** 2))
    assert p(np.array([[0.001], [200.0]])).tolist() == [0.0, 0.0]


def test_doughnut_has_two_rings():
    d = Doughnut2D()
    on_ring = d(np.array([[-2.5 + 1.5, 0.0], [2.5, 1.5]]))
    off = d(np.array([[-2.5, 0.0], [0.0, 3.0]]))
    assert np.all(on_ring > 100 * off)


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_builtins_nonnegative(name):
    dim = 2 if name == "doughnut2d" else 1
    pdf = make_pdf(name, dim=dim)
    x = np.random.default_rng(0).uniform(-10, 110, (2000, dim))
    v = pdf(x)
    assert v.shape == (2000,)
    assert np.all(np.isfinite(v)) and np.all(v >= 0)


def test_gauss_kd_normalized_2d():
    pdf = make_pdf("gauss_kd", dim=2, params={"sigma": 0.7})
    val = integrate.dblquad(lambda y, x: pdf(np.array([[x, y]]))[0], -8, 8, -8, 8)[0]
    assert val == pytest.approx(1.0, rel=1e-7)


def test_parse_params():
    assert parse_params(["mu=-3,0.5", "rs=2"]) == {"mu": [-3.0, 0.5], "rs": 2.0}
    assert parse_params(["mu=1"]) == {"mu": [1.0]}
    with pytest.raises(ValueError):
        parse_params(["mu"])
    with pytest.raises(ValueError):
        parse_params(["mu=abc"])


@pytest.mark.parametrize("name,dim,params", [
    ("nope", None, {}),
    ("gmm1d", 2, {}),
    ("gauss_kd", 1, {"sigma": -1.0}),
    ("gauss_kd", 1, {"mu": [1.0, 2.0]}),
    ("powerlaw1d", None, {"bogus": 1.0}),
])
def test_make_pdf_errors(name, dim, params):
    with pytest.raises(ValueError):
        make_pdf(name, dim=dim, params=params)


def test_counting_pdf():
    pdf = CountingPdf(lambda x: np.ones(len(x)))
    pdf(np.zeros((5, 1)))
    pdf(np.zeros((3, 1)))
    assert pdf.calls == 2 and pdf.evaluations == 8
