"""Sampling arbitrary densities through their piecewise multilinear interpolant.

A density is evaluated once on the vertices of a grid or adaptive tree; the
multilinear interpolant between vertices is then sampled exactly by inverse
transform, driven by pseudo-random or quasi-Monte Carlo variates.
"""
from .errors import (
    DegenerateMassError,
    DepthLimitError,
    DomainError,
    InvalidDensityError,
    InvalidEdgesError,
    LintSampleError,
    NegativeDensityError,
    SequenceExhaustedError,
    SizeMismatchError,
    ToleranceUnreachedWarning,
    VertexFileError,
    VertexLimitError,
    WidthMismatchError,
)
from .interpolant import (
    Cell,
    cell_mass,
    interpolate,
    inverse_linear_cdf,
    sample_within_cell,
)
from .structure import DensityStructure, choose_cell
from .grid import (
    DensityGrid,
    build_grid,
    export_vertex_file,
    ingest_vertex_file,
)
from .tree import DensityTree, Leaf, build_tree
from .streams import VariateStream, make_stream
from .sampler import LintSampler, SampleBatch, fingerprint, read_samples

__version__ = "0.1.0"

__all__ = [
    "Cell", "interpolate", "cell_mass", "inverse_linear_cdf", "sample_within_cell",
    "DensityStructure", "choose_cell",
    "DensityGrid", "build_grid", "ingest_vertex_file", "export_vertex_file",
    "DensityTree", "Leaf", "build_tree",
    "VariateStream", "make_stream",
    "LintSampler", "SampleBatch", "fingerprint", "read_samples",
    "LintSampleError", "DomainError", "DegenerateMassError", "InvalidEdgesError",
    "InvalidDensityError", "NegativeDensityError", "VertexLimitError",
    "SizeMismatchError", "VertexFileError", "DepthLimitError",
    "SequenceExhaustedError", "WidthMismatchError", "ToleranceUnreachedWarning",
]
