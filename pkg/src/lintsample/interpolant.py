"""Multilinear interpolant on a single k-dimensional cell.

Corner convention (shared by every module): the corner with bitmask ``c`` sits
at the upper edge of dimension ``d`` iff bit ``d`` of ``c`` is set, with
dimension 0 the least significant bit. So in 2D the corner array reads
``(f00, f10, f01, f11)`` with the first subscript the dimension-0 side.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMassError, DomainError, VertexLimitError

#: Hard cap on dimensionality. Vertex counts grow as 2^k per cell, so anything
#: much beyond this is impractical anyway.
DIM_MAX = 10

_T_TOL = 1e-12
_EQUAL_TOL = 1e-14


def check_dim(k):
    """Raise unless ``1 <= k <= DIM_MAX``."""
    if not 1 <= k <= DIM_MAX:
        raise VertexLimitError(f"dimension {k} outside supported range 1..{DIM_MAX}")


def corner_bits(k):
    """Return a (2^k, k) 0/1 array; row ``c`` holds the bits of corner ``c``."""
    c = np.arange(2**k)[:, None]
    return (c >> np.arange(k)) & 1


@dataclass(frozen=True)
class Cell:
    """Axis-aligned box with density values at its 2^k corners.

    Parameters
    ----------
    lo, hi : array_like, shape (k,)
        Lower and upper coordinates; ``hi > lo`` in every dimension.
    corners : array_like, shape (2^k,)
        Non-negative densities, ordered by corner bitmask.
    """

    lo: np.ndarray
    hi: np.ndarray
    corners: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=np.float64))
        corners = np.asarray(self.corners, dtype=np.float64).ravel()
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise DomainError("lo and hi must be 1D arrays of equal length")
        check_dim(lo.size)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise DomainError("cell bounds must be finite")
        if np.any(hi <= lo):
            raise DomainError(f"cell has non-positive width: lo={lo}, hi={hi}")
        if corners.size != 2**lo.size:
            raise DomainError(
                f"expected {2**lo.size} corner values for a {lo.size}D cell, "
                f"got {corners.size}"
            )
        if not np.all(np.isfinite(corners)) or np.any(corners < 0):
            raise DomainError("corner densities must be finite and non-negative")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "corners", corners)

    @property
    def dim(self):
        return self.lo.size

    @property
    def volume(self):
        return float(np.prod(self.hi - self.lo))

    def corner(self, c):
        """Coordinates of corner ``c``."""
        bits = (c >> np.arange(self.dim)) & 1
        return np.where(bits == 1, self.hi, self.lo)


def interpolate(cell, t):
    """Evaluate the multilinear interpolant at local coordinates ``t``.

    Parameters
    ----------
    cell : Cell
    t : array_like, shape (k,) or (n, k)
        Position in the unit hypercube; (0,...,0) is ``cell.lo``.

    Returns
    -------
    float or ndarray of shape (n,)
    """
    t = np.asarray(t, dtype=np.float64)
    single = t.ndim <= 1
    t = np.atleast_2d(t.reshape(1, -1) if single else t)
    if t.shape[1] != cell.dim:
        raise DomainError(f"expected {cell.dim} local coordinates, got {t.shape[1]}")
    if np.any(t < -_T_TOL) or np.any(t > 1 + _T_TOL):
        raise DomainError("local coordinates must lie in [0, 1]")
    t = np.clip(t, 0.0, 1.0)
    bits = corner_bits(cell.dim)
    # weights[n, c] = prod_d (t_d if bit else 1 - t_d)
    w = np.prod(np.where(bits[None] == 1, t[:, None, :], 1.0 - t[:, None, :]), axis=2)
    out = w @ cell.corners
    return float(out[0]) if single else out


def cell_mass(cell):
    """Integral of the interpolant over the cell: volume times mean corner."""
    return cell.volume * float(np.mean(cell.corners))


def _inverse_linear_cdf(a, b, u):
    # Unchecked, vectorized core. Uses u(a+b) / (a + sqrt(a^2 + u(b^2-a^2))),
    # the conjugate form of the textbook root, which never divides by b - a.
    a, b, u = np.broadcast_arrays(
        np.asarray(a, dtype=np.float64),
        np.asarray(b, dtype=np.float64),
        np.asarray(u, dtype=np.float64),
    )
    s = a + b
    root = np.sqrt(np.maximum(a * a + u * (b - a) * s, 0.0))
    denom = a + root
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(denom > 0, u * s / np.where(denom > 0, denom, 1.0), 0.0)
    nearly_flat = np.abs(b - a) < _EQUAL_TOL * s
    empty = s <= 0
    t = np.where(nearly_flat | empty, u, t)
    return np.clip(t, 0.0, 1.0)


def inverse_linear_cdf(a, b, u):
    """Invert the CDF of the density proportional to ``a + (b - a) t`` on [0, 1].

    Parameters
    ----------
    a, b : float or array_like
        Non-negative end values of the linear density, ``a + b > 0``.
    u : float or array_like
        Uniform variates in [0, 1].

    Returns
    -------
    t : float or ndarray
        Solution of ``F(t) = u``, clamped into [0, 1].

    Raises
    ------
    DegenerateMassError
        If ``a + b == 0`` anywhere.
    DomainError
        If ``u`` lies outside [0, 1] or ``a``/``b`` are negative.
    """
    a_arr = np.asarray(a, dtype=np.float64)
    b_arr = np.asarray(b, dtype=np.float64)
    u_arr = np.asarray(u, dtype=np.float64)
    if np.any(a_arr < 0) or np.any(b_arr < 0):
        raise DomainError("linear density end values must be non-negative")
    if np.any(u_arr < 0) or np.any(u_arr > 1) or np.any(np.isnan(u_arr)):
        raise DomainError("u must lie in [0, 1]")
    if np.any(a_arr + b_arr <= 0):
        raise DegenerateMassError("cannot invert a zero-mass linear density")
    t = _inverse_linear_cdf(a_arr, b_arr, u_arr)
    return float(t) if t.ndim == 0 else t


def sample_cells(lo, hi, corners, u):
    """Draw one point per row from a batch of cells.

    Sequential conditional inversion: dimension 0 is drawn from its marginal,
    then the corner array is collapsed onto the drawn hyperplane and the next
    dimension is drawn from the resulting conditional, and so on.

    Parameters
    ----------
    lo, hi : ndarray, shape (n, k)
    corners : ndarray, shape (n, 2^k)
    u : ndarray, shape (n, k)
        Uniform variates; column ``d`` drives dimension ``d``.

    Returns
    -------
    ndarray, shape (n, k)
    """
    n, k = u.shape
    g = np.asarray(corners, dtype=np.float64)
    t = np.empty((n, k))
    for d in range(k):
        # after collapsing dimensions < d, bit 0 of the index is dimension d
        g = g.reshape(n, -1, 2)
        lower = g[:, :, 0]
        upper = g[:, :, 1]
        a = lower.mean(axis=1)
        b = upper.mean(axis=1)
        td = _inverse_linear_cdf(a, b, u[:, d])
        t[:, d] = td
        g = lower + td[:, None] * (upper - lower)
    x = lo + t * (hi - lo)
    # keep the mapped point inside the cell despite rounding in lo + t*w
    return np.minimum(np.maximum(x, lo), hi)


def sample_within_cell(cell, u):
    """Draw a point from the normalized interpolant of ``cell``.

    Parameters
    ----------
    cell : Cell
    u : array_like, shape (k,) or (n, k)
        Uniform variates in [0, 1).

    Returns
    -------
    ndarray, shape (k,) or (n, k)

    Raises
    ------
    DegenerateMassError
        If the cell has zero mass. A zero-mass slice inside a cell with
        positive mass falls back to a uniform draw along that dimension.
    """
    u = np.asarray(u, dtype=np.float64)
    single = u.ndim <= 1
    u = np.atleast_2d(u.reshape(1, -1) if single else u)
    if u.shape[1] != cell.dim:
        raise DomainError(f"expected {cell.dim} variates per point, got {u.shape[1]}")
    if np.any(u < 0) or np.any(u > 1):
        raise DomainError("variates must lie in [0, 1]")
    if cell_mass(cell) <= 0:
        raise DegenerateMassError("cannot sample from a zero-mass cell")
    n = u.shape[0]
    x = sample_cells(
        np.broadcast_to(cell.lo, (n, cell.dim)),
        np.broadcast_to(cell.hi, (n, cell.dim)),
        np.broadcast_to(cell.corners, (n, cell.corners.size)),
        u,
    )
    return x[0] if single else x
