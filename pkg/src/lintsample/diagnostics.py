"""Exact interpolant statistics and goodness-of-fit checks for samples.

These are the reference oracles: everything here is computed in closed form
from the structure's corner values, independent of the sampling path.
"""
from dataclasses import asdict, dataclass, field
import json
import time

import numpy as np
from scipy import stats

from .grid import DensityGrid
from .interpolant import corner_bits
from .sampler import LintSampler
from .streams import VariateStream


def exact_interpolant_cdf(grid, x):
    """CDF of the normalized piecewise-linear interpolant of a 1D grid.

    Within cell ``i`` with corner values ``(a, b)`` and width ``w``, the mass
    up to local position ``t`` is ``w (a t + (b - a) t^2 / 2)``. Points left
    of the grid give 0 and points right of it give 1.
    """
    if grid.dim != 1:
        raise ValueError("exact_interpolant_cdf needs a 1D grid")
    e = grid.edges[0]
    f = grid.vertex_density.ravel()
    x = np.asarray(x, dtype=np.float64)
    i = np.clip(np.searchsorted(e, x, side="right") - 1, 0, e.size - 2)
    w = e[i + 1] - e[i]
    t = np.clip((x - e[i]) / w, 0.0, 1.0)
    a, b = f[i], f[i + 1]
    partial = w * (a * t + (b - a) * t * t / 2)
    before = np.concatenate([[0.0], np.cumsum(grid.cell_masses)])[i]
    out = (before + partial) / grid.total_mass
    out = np.where(x <= e[0], 0.0, np.where(x >= e[-1], 1.0, out))
    return np.clip(out, 0.0, 1.0)


def _marginal_ends(corners, k):
    # mean corner value on the lower / upper face of each dimension
    bits = corner_bits(k)
    a = np.stack([corners[:, bits[:, d] == 0].mean(axis=1) for d in range(k)], axis=1)
    b = np.stack([corners[:, bits[:, d] == 1].mean(axis=1) for d in range(k)], axis=1)
    return a, b


def interpolant_moments(structures):
    """Mean and variance per dimension of the normalized interpolant.

    Along dimension ``d`` a cell's marginal is linear with end values
    ``a, b``, giving ``E[t] = (a + 2b) / (3(a + b))`` and
    ``E[t^2] = (a + 3b) / (6(a + b))`` in local coordinates.

    Returns
    -------
    mean, var : ndarray, shape (k,)
    """
    if not isinstance(structures, (list, tuple)):
        structures = [structures]
    k = structures[0].dim
    m1 = np.zeros(k)
    m2 = np.zeros(k)
    total = 0.0
    for s in structures:
        idx = np.flatnonzero(s.cell_masses > 0)
        lo, hi, corners = s.cell_arrays(idx)
        mass = s.cell_masses[idx][:, None]
        a, b = _marginal_ends(corners, k)
        w = hi - lo
        et = (a + 2 * b) / (3 * (a + b))
        et2 = (a + 3 * b) / (6 * (a + b))
        m1 += np.sum(mass * (lo + w * et), axis=0)
        m2 += np.sum(mass * (lo**2 + 2 * lo * w * et + w**2 * et2), axis=0)
        total += s.total_mass
    mean = m1 / total
    return mean, m2 / total - mean**2


def ks_test(grid, samples):
    """KS statistic and p-value of 1D samples against the exact CDF."""
    x = np.asarray(samples, dtype=np.float64).reshape(-1)
    res = stats.kstest(x, lambda v: exact_interpolant_cdf(grid, v))
    return float(res.statistic), float(res.pvalue)


def occupancy_chisquare(structure, points, min_expected=5.0):
    """Chi-square of per-cell counts against ``cell_mass / total_mass``.

    Cells expecting fewer than ``min_expected`` points are pooled into one
    bin.

    Returns
    -------
    stat, dof, pvalue
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, structure.dim)
    n = points.shape[0]
    counts = np.bincount(structure.locate(points), minlength=structure.n_cells)
    expected = n * structure.cell_masses / structure.total_mass
    return chisquare_pooled(counts, expected, min_expected)


def chisquare_pooled(counts, expected, min_expected=5.0):
    """Pearson chi-square with small-expectation bins pooled together."""
    counts = np.asarray(counts, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    big = expected >= min_expected
    obs = list(counts[big])
    exp = list(expected[big])
    if np.any(~big) and expected[~big].sum() > 0:
        obs.append(counts[~big].sum())
        exp.append(expected[~big].sum())
    obs = np.array(obs)
    exp = np.array(exp)
    stat = float(np.sum((obs - exp) ** 2 / exp))
    dof = max(len(obs) - 1, 1)
    return stat, dof, float(stats.chi2.sf(stat, dof))


@dataclass
class StatsReport:
    """Summary statistics of a sample batch.

    KS fields are only filled for one-dimensional grids.
    """

    n: int
    mean: list
    variance: list
    exact_mean: list
    exact_variance: list
    chi2: float
    chi2_dof: int
    chi2_pvalue: float
    pdf_evaluations: int
    ks_statistic: float = None
    ks_pvalue: float = None
    timings: dict = field(default_factory=dict)

    def to_text(self):
        d = {k: v for k, v in asdict(self).items() if v is not None}
        return json.dumps(d, indent=2, sort_keys=False)


def stats_report(structures, points, timings=None):
    """Build a :class:`StatsReport` for ``points`` drawn from ``structures``."""
    if not isinstance(structures, (list, tuple)):
        structures = [structures]
    points = np.asarray(points, dtype=np.float64).reshape(-1, structures[0].dim)
    mean, var = interpolant_moments(structures)
    if len(structures) == 1:
        chi2, dof, p = occupancy_chisquare(structures[0], points)
    else:
        counts, expected = [], []
        owner = _owner(structures, points)
        total = sum(s.total_mass for s in structures)
        for j, s in enumerate(structures):
            sel = points[owner == j]
            counts.append(np.bincount(s.locate(sel), minlength=s.n_cells) if sel.size
                          else np.zeros(s.n_cells))
            expected.append(points.shape[0] * s.cell_masses / total)
        chi2, dof, p = chisquare_pooled(np.concatenate(counts), np.concatenate(expected))
    report = StatsReport(
        n=int(points.shape[0]),
        mean=points.mean(axis=0).tolist(),
        variance=points.var(axis=0, ddof=1).tolist() if points.shape[0] > 1 else [0.0] * points.shape[1],
        exact_mean=mean.tolist(),
        exact_variance=var.tolist(),
        chi2=chi2, chi2_dof=dof, chi2_pvalue=p,
        pdf_evaluations=int(sum(s.n_evaluations for s in structures)),
        timings=dict(timings or {}),
    )
    if len(structures) == 1 and isinstance(structures[0], DensityGrid) and structures[0].dim == 1:
        report.ks_statistic, report.ks_pvalue = ks_test(structures[0], points)
    return report


def _owner(structures, points):
    owner = np.full(points.shape[0], -1)
    for j, s in enumerate(structures):
        inside = np.all((points >= s.mins) & (points <= s.maxs), axis=1) & (owner < 0)
        owner[inside] = j
    return owner


@dataclass
class QmcStudy:
    """RMSE of the sample mean against the exact mean, by sample size."""

    n: list
    rmse_mc: list
    rmse_qmc: list
    slope_mc: float
    slope_qmc: float
    repeats: int
    seconds: float = 0.0

    def to_text(self):
        lines = [f"# repeats={self.repeats}", "N,rmse_mc,rmse_qmc"]
        for n, a, b in zip(self.n, self.rmse_mc, self.rmse_qmc):
            lines.append(f"{n},{a:.6e},{b:.6e}")
        lines.append(f"# slope_mc={self.slope_mc:.4f}")
        lines.append(f"# slope_qmc={self.slope_qmc:.4f}")
        return "\n".join(lines)


def _loglog_slope(n, rmse):
    return float(np.polyfit(np.log(n), np.log(rmse), 1)[0])


def qmc_study(structures, n_list=tuple(2**m for m in range(8, 15)), repeats=32, seed=0):
    """Compare pseudo-random and scrambled-Sobol error in the sample mean.

    For every ``N`` and each of ``repeats`` independent seeds, draws ``N``
    points both ways and measures the deviation of the sample mean from the
    exact interpolant mean; RMSE is taken over repeats and dimensions.
    Slopes are least-squares fits of log RMSE against log N.
    """
    t0 = time.perf_counter()
    if not isinstance(structures, (list, tuple)):
        structures = [structures]
    k = structures[0].dim
    exact, _ = interpolant_moments(structures)
    seeds = np.random.SeedSequence(seed).generate_state(2 * repeats, dtype=np.uint64)
    n_list = [int(n) for n in n_list]
    rmse_mc, rmse_qmc = [], []
    for n in n_list:
        err_mc, err_qmc = [], []
        for r in range(repeats):
            for kind, s, errs in (("pseudorandom", seeds[r], err_mc),
                                  ("sobol", seeds[repeats + r], err_qmc)):
                sampler = LintSampler(structures, VariateStream(kind, k + 1, int(s)))
                pts = sampler.sample(n).points
                errs.append(pts.mean(axis=0) - exact)
        rmse_mc.append(float(np.sqrt(np.mean(np.square(err_mc)))))
        rmse_qmc.append(float(np.sqrt(np.mean(np.square(err_qmc)))))
    return QmcStudy(
        n=n_list, rmse_mc=rmse_mc, rmse_qmc=rmse_qmc,
        slope_mc=_loglog_slope(n_list, rmse_mc),
        slope_qmc=_loglog_slope(n_list, rmse_qmc),
        repeats=repeats, seconds=time.perf_counter() - t0,
    )
