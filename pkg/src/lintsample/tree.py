"""Adaptive 2^k-ary tree of cells refined on an interpolation-error estimate."""
from dataclasses import dataclass
import heapq
import math
import struct
from warnings import warn

import numpy as np

from .errors import DepthLimitError, DomainError, ToleranceUnreachedWarning, VertexFileError
from .interpolant import Cell, check_dim, corner_bits
from .structure import DensityStructure, _f64_bytes, evaluate_pdf


@dataclass(eq=False)
class Leaf:
    """One leaf cell of a :class:`DensityTree`.

    ``path`` lists the child bitmasks taken from the root; sorting leaves by
    path gives depth-first order.
    """

    lo: np.ndarray
    hi: np.ndarray
    corners: np.ndarray
    depth: int
    err: float
    center_value: float = math.nan
    path: tuple = ()

    @property
    def volume(self):
        return float(np.prod(self.hi - self.lo))

    @property
    def mass(self):
        return self.volume * float(np.mean(self.corners))

    @property
    def cell(self):
        return Cell(self.lo, self.hi, self.corners)


def _ternary_digits(k):
    i = np.arange(3**k)[:, None]
    return (i // 3 ** np.arange(k)) % 3


class DensityTree(DensityStructure):
    """Adaptively refined tree of cells over a box.

    Construction evaluates the PDF on the root corners, refines uniformly to
    ``min_depth``, then repeatedly splits the leaf with the largest error
    estimate until the summed estimate drops below ``tol_rel * total_mass``
    or a budget (``max_leaves``, ``max_depth``) runs out. A leaf's error
    estimate is ``|f(center) - mean(corners)| * volume``: the gap between the
    PDF and the interpolant at the leaf center, scaled to a mass. Leaf masses
    use the corner values only, so sampling sees the plain multilinear
    interpolant.

    Every PDF evaluation is cached by exact coordinates, so no point is ever
    evaluated twice; a leaf's center value is reused when it is split.

    Parameters
    ----------
    mins, maxs : scalar or array_like, shape (k,)
        Root box.
    pdf : callable
        Maps (B, k) points to B non-negative densities.
    tol_rel : float, optional
        Target for ``sum(err) / total_mass``. Default 1e-3.
    max_depth : int, optional
        Leaves at this depth are never split. Default 20.
    max_leaves : int, optional
        Stop splitting once another split would exceed this. Default 100000.
    min_depth : int, optional
        Depth of the initial uniform refinement. Default 2.

    Attributes
    ----------
    leaves : list of Leaf
        Depth-first order.
    converged : bool
        Whether the tolerance was met.
    achieved_tol : float
        ``sum(err) / total_mass`` after the last build or refine.
    n_splits : int
    n_evaluations : int
        PDF point evaluations so far.
    """

    def __init__(self, mins, maxs, pdf, tol_rel=1e-3, max_depth=20,
                 max_leaves=100_000, min_depth=2):
        mins = np.atleast_1d(np.asarray(mins, dtype=np.float64))
        maxs = np.atleast_1d(np.asarray(maxs, dtype=np.float64))
        if mins.ndim != 1 or mins.shape != maxs.shape:
            raise DomainError("mins and maxs must be 1D and of equal length")
        check_dim(mins.size)
        if not (np.all(np.isfinite(mins)) and np.all(np.isfinite(maxs))):
            raise DomainError("tree box must be finite")
        if np.any(maxs <= mins):
            raise DomainError(f"invalid tree box: mins={mins}, maxs={maxs}")
        if not tol_rel > 0:
            raise ValueError("tol_rel must be positive")
        if not 0 <= min_depth <= max_depth:
            raise ValueError("need 0 <= min_depth <= max_depth")
        k = mins.size
        if 2 ** (k * min_depth) > max_leaves:
            raise ValueError(
                f"min_depth={min_depth} already needs {2 ** (k * min_depth)} leaves, "
                f"more than max_leaves={max_leaves}"
            )
        self.dim = k
        self.mins = mins
        self.maxs = maxs
        self.pdf = pdf
        self.tol_rel = float(tol_rel)
        self.max_depth = int(max_depth)
        self.max_leaves = int(max_leaves)
        self.min_depth = int(min_depth)
        self.n_evaluations = 0
        self.n_splits = 0
        self._cache = {}
        self._bits = corner_bits(k)
        self._tern = _ternary_digits(k)
        self._leaves = {}
        self._heap = []

        corners = self._evaluate(np.where(self._bits == 1, maxs, mins))
        root = self._make_leaf(mins, maxs, corners, depth=0, path=())
        self._leaves[()] = root
        self._err_sum = root.err
        self._mass_sum = root.mass

        level = [root]
        for _ in range(self.min_depth):
            level = self._split_many(level)
        for leaf in self._leaves.values():
            self._push(leaf)
        self._run(budget=None, tol=self.tol_rel)
        self._finalize()
        if not self.converged:
            warn(self.status_message(), ToleranceUnreachedWarning, stacklevel=2)

    # -- evaluation ---------------------------------------------------------

    def _evaluate(self, points):
        points = np.ascontiguousarray(points, dtype=np.float64)
        keys = [p.tobytes() for p in points]
        missing = {}
        for key, p in zip(keys, points):
            if key not in self._cache and key not in missing:
                missing[key] = p
        if missing:
            batch = np.array(list(missing.values()))
            values = evaluate_pdf(self.pdf, batch)
            self.n_evaluations += batch.shape[0]
            self._cache.update(zip(missing.keys(), values.tolist()))
        return np.array([self._cache[key] for key in keys])

    def _make_leaf(self, lo, hi, corners, depth, path, center_value=None):
        if center_value is None:
            center_value = float(self._evaluate(((lo + hi) / 2)[None])[0])
        vol = float(np.prod(hi - lo))
        err = abs(center_value - float(np.mean(corners))) * vol
        return Leaf(lo, hi, corners, depth, err, center_value, path)

    # -- splitting ----------------------------------------------------------

    def _split_many(self, leaves):
        """Split each of ``leaves`` into 2^k children in one PDF batch."""
        k = self.dim
        bits = self._bits
        lattices = []
        child_boxes = []
        for leaf in leaves:
            mid = (leaf.lo + leaf.hi) / 2
            axes = np.stack([leaf.lo, mid, leaf.hi])
            lattices.append(axes[self._tern, np.arange(k)])
            clo = np.where(bits == 1, mid, leaf.lo)
            chi = np.where(bits == 1, leaf.hi, mid)
            child_boxes.append((clo, chi))
        centers = [(clo + chi) / 2 for clo, chi in child_boxes]
        n_lat = 3**k
        values = self._evaluate(np.concatenate(lattices + centers))
        lat_values = values[: len(leaves) * n_lat].reshape(len(leaves), n_lat)
        ctr_values = values[len(leaves) * n_lat:].reshape(len(leaves), 2**k)

        # lattice index of corner c' of child c: digits bits[c] + bits[c']
        weights = 3 ** np.arange(k)
        lattice_idx = (bits[:, None, :] + bits[None, :, :]) @ weights

        children = []
        for i, leaf in enumerate(leaves):
            clo, chi = child_boxes[i]
            del self._leaves[leaf.path]
            self._err_sum -= leaf.err
            self._mass_sum -= leaf.mass
            for c in range(2**k):
                child = self._make_leaf(
                    clo[c], chi[c], lat_values[i, lattice_idx[c]],
                    depth=leaf.depth + 1, path=leaf.path + (c,),
                    center_value=float(ctr_values[i, c]),
                )
                self._leaves[child.path] = child
                self._err_sum += child.err
                self._mass_sum += child.mass
                children.append(child)
            self.n_splits += 1
        return children

    def _push(self, leaf):
        if leaf.depth < self.max_depth:
            heapq.heappush(self._heap, (-leaf.err, leaf.path))

    def _run(self, budget, tol):
        """Largest-error-first splitting; returns the number of splits."""
        done = 0
        grow = 2**self.dim - 1
        while self._heap:
            if budget is not None and done >= budget:
                break
            if tol is not None and self._err_sum <= tol * self._mass_sum:
                # running sums drift; confirm before stopping
                self._resum()
                if self._err_sum <= tol * self._mass_sum:
                    break
            neg_err, path = self._heap[0]
            if neg_err >= 0:
                break
            if len(self._leaves) + grow > self.max_leaves:
                break
            heapq.heappop(self._heap)
            leaf = self._leaves.get(path)
            if leaf is None:
                continue
            for child in self._split_many([leaf]):
                self._push(child)
            done += 1
        return done

    def _resum(self):
        self._err_sum = math.fsum(l.err for l in self._leaves.values())
        self._mass_sum = math.fsum(l.mass for l in self._leaves.values())

    def split_leaf(self, leaf):
        """Split ``leaf`` at its midpoint in every dimension.

        Returns
        -------
        list of Leaf
            The 2^k children, in bitmask order.

        Raises
        ------
        DepthLimitError
            If ``leaf`` is already at ``max_depth``.
        """
        if self.pdf is None:
            raise ValueError("tree was loaded without a pdf and cannot be split")
        if leaf.path not in self._leaves:
            raise ValueError("leaf does not belong to this tree")
        if leaf.depth >= self.max_depth:
            raise DepthLimitError(f"leaf is at max_depth={self.max_depth}")
        children = self._split_many([leaf])
        for child in children:
            self._push(child)
        self._finalize()
        return children

    def refine(self, extra_budget):
        """Perform up to ``extra_budget`` more largest-error-first splits.

        Stops early when every splittable leaf has zero error estimate.
        Returns the tree itself.
        """
        if self.pdf is None:
            raise ValueError("tree was loaded without a pdf and cannot be refined")
        if extra_budget > 0:
            self._run(budget=int(extra_budget), tol=None)
        self._finalize()
        return self

    # -- structure contract -------------------------------------------------

    def _finalize(self):
        self._resum()
        self.leaves = [self._leaves[p] for p in sorted(self._leaves)]
        self._set_from_leaves()

    def _set_from_leaves(self):
        leaves = self.leaves
        self._lo = np.array([l.lo for l in leaves])
        self._hi = np.array([l.hi for l in leaves])
        self._corners = np.array([l.corners for l in leaves])
        self._set_masses([l.mass for l in leaves])
        self.err_sum = math.fsum(l.err for l in leaves)
        self.achieved_tol = self.err_sum / self.total_mass
        self.converged = self.achieved_tol <= self.tol_rel
        self._build_nodes()

    def _build_nodes(self):
        # node table for point location: children[node, c] -> node id
        prefixes = {()}
        for l in self.leaves:
            for i in range(len(l.path)):
                prefixes.add(l.path[:i])
        leaf_ids = {l.path: i for i, l in enumerate(self.leaves)}
        paths = sorted(prefixes | set(leaf_ids))
        node_id = {p: i for i, p in enumerate(paths)}
        n = len(paths)
        self._node_children = np.full((n, 2**self.dim), -1, dtype=np.intp)
        self._node_leaf = np.full(n, -1, dtype=np.intp)
        self._node_mid = np.zeros((n, self.dim))
        lo = {(): self.mins}
        hi = {(): self.maxs}
        for p in paths:
            if p:
                parent = p[:-1]
                pmid = (lo[parent] + hi[parent]) / 2
                b = self._bits[p[-1]]
                lo[p] = np.where(b == 1, pmid, lo[parent])
                hi[p] = np.where(b == 1, hi[parent], pmid)
                self._node_children[node_id[parent], p[-1]] = node_id[p]
            self._node_mid[node_id[p]] = (lo[p] + hi[p]) / 2
            if p in leaf_ids:
                self._node_leaf[node_id[p]] = leaf_ids[p]

    @property
    def n_cells(self):
        return len(self.leaves)

    def cell_arrays(self, indices):
        indices = np.asarray(indices, dtype=np.intp)
        return self._lo[indices], self._hi[indices], self._corners[indices]

    def locate(self, points):
        points = np.asarray(points, dtype=np.float64).reshape(-1, self.dim)
        node = np.zeros(points.shape[0], dtype=np.intp)
        weights = 1 << np.arange(self.dim)
        while True:
            internal = self._node_leaf[node] < 0
            if not np.any(internal):
                break
            sel = np.flatnonzero(internal)
            code = (points[sel] >= self._node_mid[node[sel]]).astype(np.intp) @ weights
            node[sel] = self._node_children[node[sel], code]
        return self._node_leaf[node]

    def _fingerprint_payload(self):
        yield b"tree" + struct.pack("<BQ", self.dim, len(self.leaves))
        yield _f64_bytes(self._lo)
        yield _f64_bytes(self._hi)
        yield _f64_bytes(self._corners)

    def status_message(self):
        if self.converged:
            return (f"tolerance reached: sum(err)/mass = {self.achieved_tol:.6g} "
                    f"<= {self.tol_rel:.6g} with {len(self.leaves)} leaves")
        return (f"warning: tolerance not reached: sum(err)/mass = "
                f"{self.achieved_tol:.6g} > tol_rel = {self.tol_rel:.6g} "
                f"(budget exhausted at {len(self.leaves)} leaves, "
                f"max_leaves={self.max_leaves}, max_depth={self.max_depth})")

    # -- text dump ------------------------------------------------------------

    def dump(self, path):
        """Write leaves depth-first, one per line.

        Each line holds ``depth lo_0..lo_{k-1} hi_0..hi_{k-1} corner_0..
        corner_{2^k-1} err`` separated by spaces; floats are written with
        17 significant digits so a reload is exact. Lines starting with ``#``
        are comments.
        """
        k = self.dim
        with open(path, "w") as fh:
            fh.write("# lintsample tree v1\n")
            fh.write(f"# dim {k}\n")
            fh.write(f"# tol_rel {self.tol_rel!r}\n")
            fh.write("# depth lo[k] hi[k] corners[2^k] err\n")
            for l in self.leaves:
                vals = np.concatenate([l.lo, l.hi, l.corners, [l.err]])
                fh.write(f"{l.depth} " + " ".join(f"{v:.17g}" for v in vals) + "\n")

    @classmethod
    def load(cls, path):
        """Rebuild a tree from :meth:`dump` output. The result has no pdf."""
        k = None
        tol_rel = math.nan
        rows = []
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    parts = line[1:].split()
                    if len(parts) == 2 and parts[0] == "dim":
                        k = int(parts[1])
                    elif len(parts) == 2 and parts[0] == "tol_rel":
                        tol_rel = float(parts[1])
                    continue
                rows.append((lineno, line.split()))
        if k is None:
            raise VertexFileError(f"{path}: missing '# dim' header")
        check_dim(k)
        width = 1 + 2 * k + 2**k + 1
        tree = cls.__new__(cls)
        tree.dim = k
        tree.pdf = None
        tree.tol_rel = tol_rel
        tree.n_evaluations = 0
        tree.n_splits = 0
        tree._bits = corner_bits(k)
        leaves = []
        for lineno, parts in rows:
            if len(parts) != width:
                raise VertexFileError(f"{path}:{lineno}: expected {width} fields")
            depth = int(parts[0])
            vals = np.array([float(v) for v in parts[1:]])
            leaves.append(Leaf(vals[:k], vals[k:2 * k], vals[2 * k:-1], depth, vals[-1]))
        if not leaves:
            raise VertexFileError(f"{path}: no leaves")
        tree.mins = np.min([l.lo for l in leaves], axis=0)
        tree.maxs = np.max([l.hi for l in leaves], axis=0)
        for l in leaves:
            l.path = tree._path_of(l)
        tree.max_depth = max(l.depth for l in leaves)
        tree.leaves = sorted(leaves, key=lambda l: l.path)
        tree._set_from_leaves()
        return tree

    def _path_of(self, leaf):
        lo, hi = self.mins, self.maxs
        path = []
        for _ in range(leaf.depth):
            mid = (lo + hi) / 2
            b = (leaf.lo >= mid).astype(int)
            path.append(int(b @ (1 << np.arange(self.dim))))
            lo = np.where(b == 1, mid, lo)
            hi = np.where(b == 1, hi, mid)
        return tuple(path)


def build_tree(lo, hi, pdf, tol_rel=1e-3, max_depth=20, max_leaves=100_000, min_depth=2):
    """Build a :class:`DensityTree`; see the class for parameters."""
    return DensityTree(lo, hi, pdf, tol_rel=tol_rel, max_depth=max_depth,
                       max_leaves=max_leaves, min_depth=min_depth)


def refine(tree, extra_budget):
    """Continue refining ``tree`` for up to ``extra_budget`` splits."""
    return tree.refine(extra_budget)


def split_leaf(tree, leaf):
    """Split one leaf of ``tree``; returns its children."""
    return tree.split_leaf(leaf)
