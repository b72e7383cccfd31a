"""Cartesian density grids and their vertex-density files."""
import struct

import numpy as np

from .errors import (
    InvalidDensityError,
    InvalidEdgesError,
    NegativeDensityError,
    SizeMismatchError,
    VertexFileError,
    VertexLimitError,
)
from .interpolant import check_dim, corner_bits
from .structure import DensityStructure, _f64_bytes, evaluate_pdf

#: Largest number of vertices a grid may have.
VERTEX_MAX = 10**8

MAGIC = b"LSMP"
FILE_VERSION = 1
KIND_VERTICES = 0
KIND_SAMPLES = 1
HEADER_SIZE = 16


def pack_header(k, kind):
    """16-byte file header: magic, version, k, kind byte, zero padding."""
    return MAGIC + struct.pack("<BBB", FILE_VERSION, k, kind) + bytes(9)


def unpack_header(raw):
    """Parse a header, returning ``(k, kind)``."""
    if len(raw) < HEADER_SIZE or raw[:4] != MAGIC:
        raise VertexFileError("missing LSMP header")
    version, k, kind = struct.unpack("<BBB", raw[4:7])
    if version != FILE_VERSION:
        raise VertexFileError(f"unsupported file version {version}")
    return k, kind


def _normalize_edges(edges):
    # a bare 1D sequence of numbers means a 1D grid
    if isinstance(edges, np.ndarray) and edges.ndim == 1:
        edges = [edges]
    elif len(edges) > 0 and np.ndim(edges[0]) == 0:
        edges = [edges]
    out = []
    for d, e in enumerate(edges):
        e = np.asarray(e, dtype=np.float64)
        if e.ndim != 1 or e.size < 2:
            raise InvalidEdgesError(f"edges[{d}] must be 1D with at least 2 entries")
        if not np.all(np.isfinite(e)):
            raise InvalidEdgesError(f"edges[{d}] contains non-finite values")
        if np.any(np.diff(e) <= 0):
            raise InvalidEdgesError(f"edges[{d}] is not strictly increasing")
        out.append(e)
    if not out:
        raise InvalidEdgesError("need at least one edge array")
    check_dim(len(out))
    return out


def vertex_shape(edges):
    return tuple(e.size for e in edges)


def _check_vertex_count(shape, vertex_max):
    count = 1
    for n in shape:
        count *= int(n)
    if count > vertex_max:
        raise VertexLimitError(f"grid has {count} vertices, limit is {vertex_max}")
    return count


class DensityGrid(DensityStructure):
    """Rectilinear grid with densities cached on its vertices.

    Edges need not be evenly spaced. Vertex densities are stored row-major
    with dimension 0 slowest (C order), as are cell masses.

    Parameters
    ----------
    edges : sequence of 1D arrays
        ``k`` strictly increasing edge arrays. A single 1D array is accepted
        for a one-dimensional grid.
    densities : array_like
        Vertex densities, either shaped like the vertex lattice or flat in
        row-major order.
    n_evaluations : int, optional
        PDF point evaluations spent producing ``densities``; recorded only.

    Attributes
    ----------
    edges : list of ndarray
    vertex_density : ndarray, shape (n_0+1, ..., n_{k-1}+1)
    cell_masses : ndarray, flat, row-major
    cum_mass : ndarray, flat
    total_mass : float
    """

    def __init__(self, edges, densities, n_evaluations=0, vertex_max=VERTEX_MAX):
        self.edges = _normalize_edges(edges)
        shape = vertex_shape(self.edges)
        _check_vertex_count(shape, vertex_max)
        f = np.asarray(densities, dtype=np.float64)
        if f.size != int(np.prod(shape)):
            raise SizeMismatchError(
                f"expected {int(np.prod(shape))} vertex densities, got {f.size}"
            )
        f = f.reshape(shape)
        flat = f.ravel()
        bad = ~np.isfinite(flat)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise InvalidDensityError(f"non-finite vertex density at flat index {i}")
        neg = flat < 0
        if np.any(neg):
            i = int(np.argmax(neg))
            raise NegativeDensityError(
                f"negative vertex density {flat[i]} at flat index {i}, "
                f"coordinates {self.vertex_coords(i).tolist()}"
            )
        f.setflags(write=False)
        self.vertex_density = f
        self.dim = len(self.edges)
        self.mins = np.array([e[0] for e in self.edges])
        self.maxs = np.array([e[-1] for e in self.edges])
        self.cell_shape = tuple(n - 1 for n in shape)
        self.n_evaluations = int(n_evaluations)
        self._set_masses(self._compute_masses())

    def _compute_masses(self):
        k = self.dim
        total = np.zeros(self.cell_shape)
        for bits in corner_bits(k):
            sl = tuple(slice(1, None) if b else slice(None, -1) for b in bits)
            total += self.vertex_density[sl]
        vols = np.ones(self.cell_shape)
        for d, e in enumerate(self.edges):
            shape = [1] * k
            shape[d] = -1
            vols = vols * np.diff(e).reshape(shape)
        return (vols * total / 2**k).ravel()

    @property
    def n_cells(self):
        return int(np.prod(self.cell_shape))

    @property
    def n_vertices(self):
        return self.vertex_density.size

    def vertex_coords(self, flat_index):
        idx = np.unravel_index(flat_index, vertex_shape(self.edges))
        return np.array([e[i] for e, i in zip(self.edges, idx)])

    def cell_arrays(self, indices):
        indices = np.asarray(indices, dtype=np.intp)
        multi = np.unravel_index(indices, self.cell_shape)
        lo = np.stack([e[m] for e, m in zip(self.edges, multi)], axis=-1)
        hi = np.stack([e[m + 1] for e, m in zip(self.edges, multi)], axis=-1)
        bits = corner_bits(self.dim)
        corners = np.empty((indices.size, bits.shape[0]))
        for c, b in enumerate(bits):
            corners[:, c] = self.vertex_density[tuple(m + bd for m, bd in zip(multi, b))]
        return lo, hi, corners

    def locate(self, points):
        points = np.asarray(points, dtype=np.float64).reshape(-1, self.dim)
        multi = []
        for d, e in enumerate(self.edges):
            i = np.searchsorted(e, points[:, d], side="right") - 1
            multi.append(np.clip(i, 0, e.size - 2))
        return np.ravel_multi_index(tuple(multi), self.cell_shape)

    def _fingerprint_payload(self):
        yield b"grid" + struct.pack("<B", self.dim)
        for e in self.edges:
            yield struct.pack("<Q", e.size) + _f64_bytes(e)
        yield _f64_bytes(self.vertex_density)


def vertex_points(edges):
    """All vertex coordinates, shape (n_vertices, k), row-major."""
    mesh = np.meshgrid(*edges, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def build_grid(edges, pdf, vertex_max=VERTEX_MAX):
    """Evaluate ``pdf`` once on every grid vertex and build the grid.

    Parameters
    ----------
    edges : sequence of 1D arrays
    pdf : callable
        Maps a (B, k) array of points to B non-negative densities. Need not
        be normalized.
    vertex_max : int, optional
        Refuse grids with more vertices than this.

    Returns
    -------
    DensityGrid
    """
    edges = _normalize_edges(edges)
    _check_vertex_count(vertex_shape(edges), vertex_max)
    pts = vertex_points(edges)
    f = evaluate_pdf(pdf, pts)
    return DensityGrid(edges, f, n_evaluations=pts.shape[0], vertex_max=vertex_max)


def export_vertex_file(grid, path, format="text"):
    """Write vertex densities row-major as text or raw little-endian float64."""
    flat = grid.vertex_density.ravel()
    if format == "text":
        with open(path, "w") as fh:
            fh.writelines(f"{v:.17g}\n" for v in flat)
    elif format == "raw":
        with open(path, "wb") as fh:
            fh.write(pack_header(grid.dim, KIND_VERTICES))
            fh.write(struct.pack(f"<{grid.dim}I", *vertex_shape(grid.edges)))
            fh.write(_f64_bytes(flat))
    else:
        raise ValueError(f"unknown vertex file format {format!r}")


def read_vertex_file(path, format="text"):
    """Read a vertex file; returns ``(values, counts)`` (counts None for text)."""
    if format == "text":
        values = []
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    values.append(float(line))
                except ValueError:
                    raise VertexFileError(f"{path}:{lineno}: not a number: {line!r}")
        return np.array(values, dtype=np.float64), None
    if format == "raw":
        with open(path, "rb") as fh:
            raw = fh.read()
        k, kind = unpack_header(raw)
        if kind != KIND_VERTICES:
            raise VertexFileError(f"{path} is not a vertex-density file")
        end = HEADER_SIZE + 4 * k
        if len(raw) < end or (len(raw) - end) % 8:
            raise VertexFileError(f"{path} is truncated")
        counts = struct.unpack(f"<{k}I", raw[HEADER_SIZE:end])
        return np.frombuffer(raw, dtype="<f8", offset=end).astype(np.float64), counts
    raise ValueError(f"unknown vertex file format {format!r}")


def ingest_vertex_file(edges, path, format="text", vertex_max=VERTEX_MAX):
    """Build a grid from precomputed vertex densities stored in ``path``.

    Raises
    ------
    SizeMismatchError
        Value count (or raw-header vertex counts) disagree with ``edges``.
    InvalidDensityError
        A value is negative or NaN; the message gives its flat index.
    OSError
        The file cannot be read.
    """
    edges = _normalize_edges(edges)
    shape = vertex_shape(edges)
    values, counts = read_vertex_file(path, format)
    if counts is not None and tuple(counts) != shape:
        raise SizeMismatchError(f"file vertex counts {counts} do not match grid {shape}")
    return DensityGrid(edges, values, vertex_max=vertex_max)
