"""End-to-end sampling over one or several density structures."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import hashlib
import struct

import numpy as np

from .errors import VertexFileError, WidthMismatchError
from .grid import HEADER_SIZE, KIND_SAMPLES, pack_header, unpack_header
from .interpolant import sample_cells
from .streams import VariateStream, make_stream
from .structure import DensityStructure

_BELOW_ONE = 1.0 - 2.0**-53
_BLOCK = 1 << 15


def fingerprint(structure):
    """64-bit digest of a structure, or of a list of structures."""
    if isinstance(structure, DensityStructure):
        return structure.fingerprint()
    h = hashlib.blake2b(digest_size=8)
    for s in structure:
        h.update(struct.pack("<Q", s.fingerprint()))
    return int.from_bytes(h.digest(), "little")


@dataclass
class SampleBatch:
    """Sampled points plus where they came from.

    Attributes
    ----------
    points : ndarray, shape (N, k)
    seed : int or None
    kind : str
        Stream kind.
    fingerprint : int
        Digest of the structures sampled.
    start : int
        Stream row of the first point.
    """

    points: np.ndarray
    seed: object
    kind: str
    fingerprint: int
    start: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.points.shape[0]

    def to_csv(self, fh):
        """Write ``x0,...`` header then one ``%.17g`` row per point."""
        k = self.points.shape[1]
        fh.write(",".join(f"x{d}" for d in range(k)) + "\n")
        for row in self.points:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    def to_raw(self, fh):
        """Header, u64 point count, then row-major little-endian float64."""
        k = self.points.shape[1]
        fh.write(pack_header(k, KIND_SAMPLES))
        fh.write(struct.pack("<Q", self.n))
        fh.write(np.ascontiguousarray(self.points, dtype="<f8").tobytes())

    def save(self, path, format="csv"):
        if format == "csv":
            with open(path, "w", newline="\n") as fh:
                self.to_csv(fh)
        elif format == "raw":
            with open(path, "wb") as fh:
                self.to_raw(fh)
        else:
            raise ValueError(f"unknown sample format {format!r}")


def read_samples(path, format=None):
    """Load points written by :meth:`SampleBatch.save` as an (N, k) array."""
    if format is None:
        with open(path, "rb") as fh:
            format = "raw" if fh.read(4) == b"LSMP" else "csv"
    if format == "raw":
        with open(path, "rb") as fh:
            raw = fh.read()
        k, kind = unpack_header(raw)
        if kind != KIND_SAMPLES:
            raise VertexFileError(f"{path} is not a sample file")
        (n,) = struct.unpack("<Q", raw[HEADER_SIZE:HEADER_SIZE + 8])
        pts = np.frombuffer(raw, dtype="<f8", offset=HEADER_SIZE + 8)
        if pts.size != n * k:
            raise VertexFileError(f"{path}: expected {n * k} values, found {pts.size}")
        return pts.astype(np.float64).reshape(n, k)
    return np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2))


class LintSampler:
    """Draw samples from the interpolated density over given structures.

    Each sample consumes one stream row ``(u0, u1, ..., uk)``. ``u0`` picks a
    structure by mass and is then rescaled onto that structure's share of
    [0, 1) to pick a cell; ``u1..uk`` place the point inside the cell. Points
    come out in stream order.

    Parameters
    ----------
    structures : DensityStructure or sequence of them
        All of the same dimension. Domains may be disjoint.
    stream : VariateStream, optional
        Width must be ``k + 1``. Built from ``seed`` and ``qmc`` if omitted.
    seed : int, optional
        Seed for the default stream.
    qmc : {None, 'none', 'sobol', 'halton'}, optional
        Stream kind for the default stream. QMC streams are scrambled when a
        seed is given.

    Examples
    --------
    >>> import numpy as np
    >>> from lintsample import build_grid, LintSampler
    >>> grid = build_grid([np.linspace(-3, 3, 61)], lambda x: np.exp(-x[:, 0]**2 / 2))
    >>> batch = LintSampler(grid, seed=42).sample(1000)
    >>> batch.points.shape
    (1000, 1)
    """

    def __init__(self, structures, stream=None, *, seed=None, qmc=None):
        if isinstance(structures, DensityStructure):
            structures = [structures]
        structures = list(structures)
        if not structures:
            raise ValueError("need at least one density structure")
        k = structures[0].dim
        if any(s.dim != k for s in structures):
            raise WidthMismatchError("all structures must share one dimension")
        self.structures = structures
        self.dim = k
        masses = np.array([s.total_mass for s in structures], dtype=np.float64)
        self.total_mass = float(masses.sum())
        cum = np.cumsum(masses) / self.total_mass
        cum[-1] = 1.0
        self.structure_cum = cum
        self._before = np.concatenate([[0.0], cum[:-1]])
        self._frac = cum - self._before
        if stream is None:
            if seed is None and qmc in (None, "none", "pseudorandom"):
                seed = int(np.random.SeedSequence().entropy % 2**64)
            stream = make_stream(qmc, k + 1, seed)
        if not isinstance(stream, VariateStream):
            raise TypeError("stream must be a VariateStream")
        if stream.width != k + 1:
            raise WidthMismatchError(
                f"stream width {stream.width} does not match dimension {k} + 1"
            )
        self.stream = stream
        self.fingerprint = fingerprint(structures[0] if len(structures) == 1 else structures)

    def _sample_rows(self, u):
        u0 = u[:, 0]
        points = np.empty((u.shape[0], self.dim))
        if len(self.structures) == 1:
            which = np.zeros(u.shape[0], dtype=np.intp)
            u0s = u0
        else:
            which = np.searchsorted(self.structure_cum, u0, side="right")
            which = np.minimum(which, len(self.structures) - 1)
            u0s = (u0 - self._before[which]) / self._frac[which]
            u0s = np.clip(u0s, 0.0, _BELOW_ONE)
        for s_idx, structure in enumerate(self.structures):
            rows = np.flatnonzero(which == s_idx) if len(self.structures) > 1 else slice(None)
            cells = np.searchsorted(structure.cum_mass, u0s[rows], side="right")
            cells = np.minimum(cells, structure.n_cells - 1)
            lo, hi, corners = structure.cell_arrays(cells)
            points[rows] = sample_cells(lo, hi, corners, u[rows, 1:])
        return points

    def sample_range(self, start, n):
        """Points for stream rows ``start .. start + n - 1`` (counter untouched)."""
        out = np.empty((n, self.dim))
        # fixed-size blocks keep temporaries cache-sized, so cost is linear in n
        for b in range(0, n, _BLOCK):
            m = min(_BLOCK, n - b)
            out[b:b + m] = self._sample_rows(self.stream.rows(start + b, m))
        return out

    def sample(self, N, threads=1):
        """Draw ``N`` points, advancing the stream by ``N`` rows.

        ``threads > 1`` splits the rows into contiguous ranges sampled
        concurrently; the output is identical to a serial draw.
        """
        N = self._check_n(N)
        start = self.stream.counter
        if threads is None or threads <= 1 or N < 2 * threads:
            points = self.sample_range(start, N)
        else:
            bounds = [start + (w * N) // threads for w in range(threads + 1)]
            with ThreadPoolExecutor(max_workers=threads) as ex:
                parts = ex.map(lambda i: self.sample_range(bounds[i], bounds[i + 1] - bounds[i]),
                               range(threads))
                points = np.concatenate(list(parts))
        self.stream.skip(N)
        return self._batch(points, start)

    def sample_streamed(self, N, chunk):
        """Yield ``N`` points as successive :class:`SampleBatch` chunks.

        Concatenating the chunks gives exactly what :meth:`sample` would.
        """
        N = self._check_n(N)
        chunk = int(chunk)
        if chunk < 1:
            raise ValueError("chunk must be at least 1")
        remaining = N
        while remaining > 0:
            n = min(chunk, remaining)
            start = self.stream.counter
            points = self.sample_range(start, n)
            self.stream.skip(n)
            remaining -= n
            yield self._batch(points, start)

    def _batch(self, points, start):
        return SampleBatch(points, self.stream.seed, self.stream.kind,
                           self.fingerprint, start)

    @staticmethod
    def _check_n(N):
        if isinstance(N, bool) or not isinstance(N, (int, np.integer)):
            raise TypeError("N must be an integer")
        if N < 1:
            raise ValueError("N must be at least 1")
        return int(N)


def sample(sampler, N):
    """Functional alias for :meth:`LintSampler.sample`."""
    return sampler.sample(N)


def sample_streamed(sampler, N, chunk):
    """Functional alias for :meth:`LintSampler.sample_streamed`."""
    return sampler.sample_streamed(N, chunk)
