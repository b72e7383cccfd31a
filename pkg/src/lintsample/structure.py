"""Abstract contract shared by every density structure."""
from abc import ABC, abstractmethod
import hashlib

import numpy as np

from .errors import DegenerateMassError, InvalidDensityError, NegativeDensityError
from .interpolant import Cell


class DensityStructure(ABC):
    """A set of cells with a cumulative mass table.

    Subclasses must set ``dim``, ``mins``, ``maxs`` and provide the cell
    geometry and masses; ``cum_mass`` and ``total_mass`` are derived here via
    :meth:`_set_masses`.
    """

    dim: int
    mins: np.ndarray
    maxs: np.ndarray
    #: number of PDF point evaluations made while building the structure
    n_evaluations: int = 0

    @property
    @abstractmethod
    def n_cells(self):
        """Number of cells (grid cells or tree leaves)."""

    @abstractmethod
    def cell_arrays(self, indices):
        """Batched geometry for cells ``indices``.

        Returns
        -------
        lo, hi : ndarray, shape (n, k)
        corners : ndarray, shape (n, 2^k)
        """

    @abstractmethod
    def locate(self, points):
        """Index of the cell containing each point, shape (n,)."""

    @abstractmethod
    def _fingerprint_payload(self):
        """Iterable of byte strings that identify the structure exactly."""

    def get_cell(self, index):
        """Return cell ``index`` as a :class:`Cell`."""
        index = int(index)
        if not 0 <= index < self.n_cells:
            raise IndexError(f"cell index {index} out of range [0, {self.n_cells})")
        lo, hi, corners = self.cell_arrays(np.array([index]))
        return Cell(lo[0], hi[0], corners[0])

    def _set_masses(self, masses):
        masses = np.asarray(masses, dtype=np.float64).ravel()
        total = float(np.sum(masses))
        if not total > 0:
            raise DegenerateMassError("structure has zero total mass")
        cum = np.cumsum(masses)
        cum /= cum[-1]
        cum[-1] = 1.0
        self.cell_masses = masses
        self.total_mass = total
        self.cum_mass = cum

    def fingerprint(self):
        """Stable 64-bit digest of geometry and densities."""
        h = hashlib.blake2b(digest_size=8)
        for chunk in self._fingerprint_payload():
            h.update(chunk)
        return int.from_bytes(h.digest(), "little")


def choose_cell(structure, u0):
    """Inverse-transform pick of a cell index from uniform ``u0``.

    Returns the smallest index ``i`` with ``cum_mass[i] > u0``, so cell ``i``
    is chosen with probability proportional to its mass and zero-mass cells
    are never chosen.
    """
    idx = np.searchsorted(structure.cum_mass, u0, side="right")
    idx = np.minimum(idx, structure.n_cells - 1)
    return int(idx) if np.ndim(idx) == 0 else idx


def _f64_bytes(arr):
    return np.ascontiguousarray(arr, dtype="<f8").tobytes()


def evaluate_pdf(pdf, points):
    """Evaluate ``pdf`` on a (B, k) batch and validate the densities.

    Raises
    ------
    InvalidDensityError
        Wrong output size or non-finite values.
    NegativeDensityError
        Negative values; the message names the first offending point.
    """
    points = np.asarray(points, dtype=np.float64)
    f = np.asarray(pdf(points), dtype=np.float64)
    if f.size != points.shape[0]:
        raise InvalidDensityError(
            f"pdf returned {f.size} values for a batch of {points.shape[0]} points"
        )
    f = f.reshape(points.shape[0])
    bad = ~np.isfinite(f)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise InvalidDensityError(f"non-finite density {f[i]} at {points[i].tolist()}")
    neg = f < 0
    if np.any(neg):
        i = int(np.argmax(neg))
        raise NegativeDensityError(f"negative density {f[i]} at {points[i].tolist()}")
    return f
