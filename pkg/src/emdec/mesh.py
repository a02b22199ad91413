"""Cell complexes, their circumcentric duals, and mesh quality diagnostics.

A :class:`CellComplex` stores oriented cells of every dimension 0..n as
tuples of vertex indices, together with signed boundary incidence.  Two
element families are supported and are distinguished purely by vertex
count: a k-cell with k+1 vertices is a simplex, one with 2**k vertices is
an axis-aligned box stored in corner-binary order (bit j of the corner
index selects the upper side along the cell's j-th local axis).

Orientation conventions
-----------------------
Derived simplices are stored with sorted vertex tuples; a cell read from a
file keeps its given vertex order and its orientation is the parity of
that order.  Box cells are oriented by their ascending axis list.  All
incidence signs follow from these rules, so operator matrices are
reproducible across runs and platforms.

Dual measures are *signed*: each elementary piece of a dual cell is the
simplex spanned by the circumcenters of a chain of nested cells, counted
negative when a circumcenter falls on the far side of its facet.  Signed
pieces make the dual volumes of a Delaunay mesh partition the domain
exactly even when circumcenters leave their elements; a warning is issued
when any total comes out negative.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMeshError, MeshError, MeshParseError, NonManifoldError

COND_LIMIT = 1e12


def _permutation_sign(perm) -> int:
    """Sign of a permutation given as a sequence of distinct sortable items."""
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def _relative_sign(a: tuple, b: tuple) -> int:
    """Orientation sign between two orderings of the same vertex set."""
    if a == b:
        return 1
    pos = {v: i for i, v in enumerate(b)}
    return _permutation_sign([pos[v] for v in a])


def simplex_facets(cell: tuple) -> list[tuple[tuple, int]]:
    """Facets of an oriented simplex with alternating boundary signs."""
    out = []
    for i in range(len(cell)):
        out.append((cell[:i] + cell[i + 1:], -1 if i % 2 else 1))
    return out


def box_facets(cell: tuple) -> list[tuple[tuple, int]]:
    """Facets of a corner-binary box via the graded Leibniz rule.

    For local axis j the upper facet carries sign (-1)**j and the lower
    facet the opposite sign.
    """
    k = int(math.log2(len(cell)))
    out = []
    for j in range(k):
        axis_sign = -1 if j % 2 else 1
        lower, upper = [], []
        for corner in range(len(cell)):
            if corner & (1 << j):
                upper.append(cell[corner])
            else:
                lower.append(cell[corner])
        out.append((tuple(upper), axis_sign))
        out.append((tuple(lower), -axis_sign))
    return out


def cell_facets(cell: tuple, k: int) -> list[tuple[tuple, int]]:
    if len(cell) == k + 1:
        return simplex_facets(cell)
    if len(cell) == 2 ** k:
        return box_facets(cell)
    raise MeshError(f"{k}-cell with {len(cell)} vertices is neither simplex nor box")


@dataclass
class GridInfo:
    """Tensor-product bookkeeping kept by rectangular grids.

    ``axes`` are the per-axis vertex coordinates; ``cell_axes[k][i]`` is the
    ascending tuple of axes spanned by the i-th k-cell and
    ``cell_corner[k][i]`` its lowest-corner multi-index.
    """

    axes: list[np.ndarray]
    cell_axes: list[list[tuple[int, ...]]]
    cell_corner: list[list[tuple[int, ...]]]
    index_of: list[dict]

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(a) - 1 for a in self.axes)

    def spacings(self, axis: int) -> np.ndarray:
        return np.diff(self.axes[axis])

    def locate(self, k: int, axes: tuple[int, ...], corner: tuple[int, ...]) -> int:
        return self.index_of[k][(axes, corner)]


class CellComplex:
    """Oriented cell complex with signed boundary incidence.

    Parameters
    ----------
    dimension:
        Top cell dimension n; must equal the ambient coordinate dimension.
    vertices:
        (n_vertices, n) float array of coordinates.
    cells:
        cells[k] is the ordered list of k-cell vertex tuples, k = 0..n.
    """

    def __init__(self, dimension: int, vertices: np.ndarray, cells: list[list[tuple]],
                 grid: GridInfo | None = None):
        self.dimension = dimension
        self.vertices = np.asarray(vertices, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != dimension:
            raise MeshError("vertex array must be (n_vertices, dimension)")
        self.cells = cells
        self.grid = grid
        self._index = [self._build_index(k) for k in range(dimension + 1)]
        self.boundary_incidence = [[] if k == 0 else self._build_boundary(k)
                                   for k in range(dimension + 1)]
        self._cofaces: list[list[list[tuple[int, int]]]] | None = None
        self._boundary_mask: list[np.ndarray] | None = None
        self.vertices.flags.writeable = False

    # -- construction helpers ------------------------------------------------

    @staticmethod
    def _key(cell: tuple) -> tuple:
        return tuple(sorted(cell))

    def _build_index(self, k: int) -> dict:
        index: dict = {}
        for i, cell in enumerate(self.cells[k]):
            key = self._key(cell)
            if key in index:
                raise MeshError(f"duplicate {k}-cell {cell}")
            index[key] = i
        return index

    def _build_boundary(self, k: int) -> list[list[tuple[int, int]]]:
        out = []
        for cell in self.cells[k]:
            rows = []
            for facet, sign in cell_facets(cell, k):
                key = self._key(facet)
                try:
                    idx = self._index[k - 1][key]
                except KeyError:
                    raise MeshError(f"{k}-cell {cell} references missing facet {facet}")
                stored = self.cells[k - 1][idx]
                if len(stored) == k:  # simplex facet: orientation via parity
                    sign *= _relative_sign(facet, stored)
                elif facet != stored:
                    raise MeshError(
                        f"box facet {facet} stored with incompatible order {stored}")
                rows.append((idx, sign))
            out.append(rows)
        return out

    # -- basic queries ---------------------------------------------------------

    def n_cells(self, k: int) -> int:
        return len(self.cells[k])

    def cell_index(self, k: int, cell: tuple) -> int:
        return self._index[k][self._key(cell)]

    def cofaces(self, k: int) -> list[list[tuple[int, int]]]:
        """For each k-cell, the (k+1)-cells containing it with incidence sign."""
        if self._cofaces is None:
            self._cofaces = []
            for kk in range(self.dimension):
                lists: list[list[tuple[int, int]]] = [[] for _ in self.cells[kk]]
                for ci, rows in enumerate(self.boundary_incidence[kk + 1]):
                    for fi, sign in rows:
                        lists[fi].append((ci, sign))
                self._cofaces.append(lists)
            self._cofaces.append([[] for _ in self.cells[self.dimension]])
        return self._cofaces[k]

    def boundary_mask(self, k: int) -> np.ndarray:
        """Boolean mask of k-cells lying in the topological boundary."""
        if self._boundary_mask is None:
            n = self.dimension
            masks = [np.zeros(self.n_cells(kk), dtype=bool) for kk in range(n + 1)]
            cof = self.cofaces(n - 1)
            for i in range(self.n_cells(n - 1)):
                if len(cof[i]) == 1:
                    masks[n - 1][i] = True
            # close downward: every face of a boundary cell is boundary
            for kk in range(n - 1, 0, -1):
                for ci in np.nonzero(masks[kk])[0]:
                    for fi, _ in self.boundary_incidence[kk][ci]:
                        masks[kk - 1][fi] = True
            self._boundary_mask = masks
        return self._boundary_mask[k]

    def validate_manifold(self):
        """Check the 2-or-1-coface condition for codimension-1 cells."""
        cof = self.cofaces(self.dimension - 1)
        for i, lst in enumerate(cof):
            if not 1 <= len(lst) <= 2:
                raise NonManifoldError(
                    f"{self.dimension - 1}-cell {self.cells[self.dimension - 1][i]} "
                    f"has {len(lst)} top-cell cofaces")

    # -- geometry --------------------------------------------------------------

    def cell_points(self, k: int, i: int) -> np.ndarray:
        return self.vertices[list(self.cells[k][i])]

    def is_box(self, k: int, i: int) -> bool:
        return k > 0 and len(self.cells[k][i]) == 2 ** k and len(self.cells[k][i]) != k + 1

    def cell_volume(self, k: int, i: int) -> float:
        """Unsigned k-volume of a cell."""
        if k == 0:
            return 1.0
        pts = self.cell_points(k, i)
        if self.is_box(k, i):
            vol = 1.0
            for j in range(k):
                vol *= float(np.linalg.norm(pts[1 << j] - pts[0]))
            return vol
        edges = pts[1:] - pts[0]
        gram = edges @ edges.T
        det = float(np.linalg.det(gram))
        if det < 0:
            det = 0.0
        return math.sqrt(det) / math.factorial(k)

    def circumcenter(self, k: int, i: int) -> np.ndarray:
        """Circumcenter of a cell, solving the equidistance system for simplices."""
        pts = self.cell_points(k, i)
        if k == 0:
            return pts[0].copy()
        if self.is_box(k, i):
            return pts.mean(axis=0)
        edges = pts[1:] - pts[0]
        gram = edges @ edges.T
        rhs = 0.5 * np.einsum("ij,ij->i", edges, edges)
        if np.linalg.cond(gram) > COND_LIMIT:
            raise DegenerateMeshError(
                f"{k}-cell {self.cells[k][i]} is degenerate (no circumcenter)")
        lam = np.linalg.solve(gram, rhs)
        return pts[0] + lam @ edges

    def barycenter(self, k: int, i: int) -> np.ndarray:
        return self.cell_points(k, i).mean(axis=0)


# -- rectangular grids ----------------------------------------------------------


def build_rect_grid(extents, counts) -> CellComplex:
    """Tensor-product grid over [0, L1] x ... with uniform spacing per axis.

    Cells are ordered lexicographically by lowest-corner multi-index, then by
    ascending axis subset.
    """
    extents = tuple(float(e) for e in extents)
    counts = tuple(int(c) for c in counts)
    if len(extents) != len(counts):
        raise ValueError("extents and counts must have equal length")
    if len(extents) not in (2, 3):
        raise ValueError("spatial dimension must be 2 or 3")
    if any(e <= 0 for e in extents):
        raise ValueError("all extents must be positive")
    if any(c < 1 for c in counts):
        raise ValueError("all counts must be at least 1")
    axes = [np.linspace(0.0, e, c + 1) for e, c in zip(extents, counts)]
    return grid_from_axes(axes)


def grid_from_axes(axes) -> CellComplex:
    """Grid with explicit, strictly increasing vertex coordinates per axis."""
    axes = [np.asarray(a, dtype=float) for a in axes]
    n = len(axes)
    for a in axes:
        if a.ndim != 1 or len(a) < 2 or np.any(np.diff(a) <= 0):
            raise ValueError("each axis needs at least 2 strictly increasing coordinates")
    shape = tuple(len(a) for a in axes)
    counts = tuple(s - 1 for s in shape)

    vid = np.arange(int(np.prod(shape))).reshape(shape)
    mesh = np.meshgrid(*axes, indexing="ij")
    vertices = np.stack([m.ravel() for m in mesh], axis=1)

    cells: list[list[tuple]] = [[] for _ in range(n + 1)]
    cell_axes: list[list[tuple]] = [[] for _ in range(n + 1)]
    cell_corner: list[list[tuple]] = [[] for _ in range(n + 1)]
    index_of: list[dict] = [{} for _ in range(n + 1)]

    cells[0] = [(int(v),) for v in vid.ravel()]
    for i, corner in enumerate(np.ndindex(*shape)):
        cell_axes[0].append(())
        cell_corner[0].append(tuple(corner))
        index_of[0][((), tuple(corner))] = i

    for k in range(1, n + 1):
        subsets = list(itertools.combinations(range(n), k))
        for corner in np.ndindex(*shape):
            for sub in subsets:
                if any(corner[a] + 1 > counts[a] for a in sub):
                    continue
                verts = []
                for bits in range(2 ** k):
                    idx = list(corner)
                    for j, a in enumerate(sub):
                        if bits & (1 << j):
                            idx[a] += 1
                    verts.append(int(vid[tuple(idx)]))
                index_of[k][(sub, tuple(corner))] = len(cells[k])
                cells[k].append(tuple(verts))
                cell_axes[k].append(sub)
                cell_corner[k].append(tuple(corner))

    grid = GridInfo(axes=axes, cell_axes=cell_axes, cell_corner=cell_corner,
                    index_of=index_of)
    return CellComplex(n, vertices, cells, grid=grid)


def random_partition_axes(extents, counts, seed, low=0.7, high=1.3) -> list[np.ndarray]:
    """Randomly partitioned axis coordinates with spacing ratios in [low, high].

    Used for fully asynchronous runs: every element gets unique spatial
    dimensions, hence a unique time step.
    """
    rng = np.random.default_rng(seed)
    out = []
    for e, c in zip(extents, counts):
        steps = rng.uniform(low, high, size=c)
        coords = np.concatenate([[0.0], np.cumsum(steps)])
        coords *= float(e) / coords[-1]
        coords[-1] = float(e)
        out.append(coords)
    return out


# -- simplicial complexes --------------------------------------------------------


def complex_from_top_cells(dimension: int, vertices: np.ndarray,
                           top_cells: list[tuple]) -> CellComplex:
    """Close a list of top simplices (or boxes) under the facet operation.

    Derived lower simplices are stored with sorted vertex tuples in first-
    encounter order; the given top-cell orientations are preserved.
    """
    cells: list[list[tuple]] = [[] for _ in range(dimension + 1)]
    cells[dimension] = [tuple(c) for c in top_cells]
    for k in range(dimension, 0, -1):
        seen = {}
        derived = []
        for cell in cells[k]:
            for facet, _ in cell_facets(cell, k):
                if len(facet) == k:
                    facet = tuple(sorted(facet))
                key = tuple(sorted(facet))
                if key not in seen:
                    seen[key] = len(derived)
                    derived.append(facet)
        cells[k - 1] = derived
    cells[0] = [(v,) for v in sorted({v for c in cells[1] for v in c})]
    if len(cells[0]) != len(vertices):
        cells[0] = [(v,) for v in range(len(vertices))]
    K = CellComplex(dimension, vertices, cells)
    K.validate_manifold()
    return K


def delaunay_mesh(points) -> CellComplex:
    """Delaunay triangulation of a 2-D or 3-D point set as a CellComplex."""
    from scipy.spatial import Delaunay

    points = np.asarray(points, dtype=float)
    tri = Delaunay(points)
    top = [tuple(sorted(int(v) for v in s)) for s in tri.simplices]
    top.sort()
    return complex_from_top_cells(points.shape[1], points, top)


def graded_square_points(n: int = 14, grading: float = 0.45, jitter: float = 0.10,
                         seed: int = 20) -> np.ndarray:
    """Unit-square point set refined toward the boundary.

    1-D coordinates follow s(t) = t - grading * sin(2 pi t) / (2 pi), so
    spacing shrinks by (1 - grading) at the walls and stretches by
    (1 + grading) in the middle; interior points are jittered by a fraction
    of the local spacing to break the tensor structure.  The parameters are
    chosen so the Delaunay triangulation stays well-centered (all signed
    dual measures positive).
    """
    t = np.linspace(0.0, 1.0, n + 1)
    s = t - grading * np.sin(2 * np.pi * t) / (2 * np.pi)
    rng = np.random.default_rng(seed)
    pts = []
    for i, x in enumerate(s):
        for j, y in enumerate(s):
            if 0 < i < n and 0 < j < n:
                hx = min(s[i + 1] - s[i], s[i] - s[i - 1])
                hy = min(s[j + 1] - s[j], s[j] - s[j - 1])
                pts.append([x + rng.uniform(-jitter, jitter) * hx,
                            y + rng.uniform(-jitter, jitter) * hy])
            else:
                pts.append([x, y])
    return np.array(pts)


# -- mesh file I/O -----------------------------------------------------------------

MESH_FORMAT_DOC = """\
Line-oriented mesh format: `dim <n>` header, then `v x1 .. xn` per vertex,
`c k i1 .. i(k+1)` per top simplex or `r i1 .. i(2^n)` per axis-aligned
rectangle (corner-binary vertex order). `#` starts a comment."""


def load_mesh(stream) -> CellComplex:
    """Parse a mesh file (see MESH_FORMAT_DOC); raises MeshParseError with line numbers."""
    if isinstance(stream, str):
        lines = stream.splitlines()
    else:
        lines = stream.read().splitlines()
    dim = None
    verts: list[list[float]] = []
    top: list[tuple] = []
    top_kind = None
    for ln, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        fields = text.split()
        tag = fields[0]
        try:
            if tag == "dim":
                if dim is not None:
                    raise MeshParseError("duplicate dim line", ln)
                dim = int(fields[1])
                if dim not in (2, 3):
                    raise MeshParseError(f"dimension {dim} not supported", ln)
            elif tag == "v":
                if dim is None:
                    raise MeshParseError("vertex before dim line", ln)
                coords = [float(x) for x in fields[1:]]
                if len(coords) != dim:
                    raise MeshParseError(
                        f"expected {dim} coordinates, got {len(coords)}", ln)
                verts.append(coords)
            elif tag == "c":
                k = int(fields[1])
                idx = tuple(int(x) for x in fields[2:])
                if dim is None:
                    raise MeshParseError("cell before dim line", ln)
                if k != dim:
                    raise MeshParseError(f"top cell dimension {k} != mesh dim {dim}", ln)
                if len(idx) != k + 1:
                    raise MeshParseError(
                        f"simplex needs {k + 1} vertex indices, got {len(idx)}", ln)
                _check_indices(idx, len(verts), ln)
                _check_kind(top_kind, "simplex", ln)
                top_kind = "simplex"
                top.append(idx)
            elif tag == "r":
                idx = tuple(int(x) for x in fields[1:])
                if dim is None:
                    raise MeshParseError("cell before dim line", ln)
                if len(idx) != 2 ** dim:
                    raise MeshParseError(
                        f"rectangle needs {2 ** dim} vertex indices, got {len(idx)}", ln)
                _check_indices(idx, len(verts), ln)
                _check_kind(top_kind, "rect", ln)
                top_kind = "rect"
                top.append(idx)
            else:
                raise MeshParseError(f"unknown record '{tag}'", ln)
        except (ValueError, IndexError) as exc:
            raise MeshParseError(f"malformed record: {exc}", ln) from exc
    if dim is None:
        raise MeshParseError("missing dim line", None)
    if not top:
        raise MeshParseError("no top cells", None)
    if len(set(map(tuple, (tuple(sorted(t)) for t in top)))) != len(top):
        raise MeshParseError("duplicate top cells", None)
    return complex_from_top_cells(dim, np.asarray(verts, dtype=float), top)


def _check_indices(idx, n_verts, ln):
    for v in idx:
        if not 0 <= v < n_verts:
            raise MeshParseError(f"vertex index {v} out of range (have {n_verts})", ln)
    if len(set(idx)) != len(idx):
        raise MeshParseError("repeated vertex index in cell", ln)


def _check_kind(seen, kind, ln):
    if seen is not None and seen != kind:
        raise MeshParseError("cannot mix simplex and rectangle cells", ln)


def save_mesh(K: CellComplex, path):
    """Write a complex back out in the load_mesh format."""
    lines = [f"dim {K.dimension}"]
    for p in K.vertices:
        lines.append("v " + " ".join(repr(float(x)) for x in p))
    n = K.dimension
    for cell in K.cells[n]:
        if len(cell) == n + 1:
            lines.append(f"c {n} " + " ".join(str(v) for v in cell))
        else:
            lines.append("r " + " ".join(str(v) for v in cell))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# -- circumcentric dual -------------------------------------------------------------


@dataclass
class DualComplex:
    """Boundary-restricted circumcentric dual of a primal complex.

    ``dual_volumes[k][i]`` is the signed (n-k)-volume of the dual of the
    i-th primal k-cell, assembled from elementary chain pieces;
    ``pieces[k][i]`` lists the per-top-cell contributions ``(top_index,
    signed_measure)`` used for material-weighted Hodge stars.  The squashed
    boundary shell is represented by ``boundary_complex`` (the boundary as
    its own complex) with its own restricted dual measures.
    """

    complex: CellComplex
    primal_volumes: list[np.ndarray]
    dual_volumes: list[np.ndarray]
    circumcenters: list[np.ndarray]
    pieces: list[list[list[tuple[int, float]]]]
    boundary_complex: CellComplex | None
    boundary_cell_map: list[np.ndarray] | None  # boundary k-cell -> primal k-cell index
    boundary_dual_volumes: list[np.ndarray] | None

    def dual_edge_vector(self, i: int) -> np.ndarray:
        """Geometric dual edge of codimension-1 primal cell i (for orthogonality checks)."""
        K = self.complex
        n = K.dimension
        cof = K.cofaces(n - 1)[i]
        if len(cof) == 2:
            return (self.circumcenters[n][cof[1][0]]
                    - self.circumcenters[n][cof[0][0]])
        return self.circumcenters[n][cof[0][0]] - self.circumcenters[n - 1][i]


def circumcentric_dual(K: CellComplex, _with_boundary: bool = True) -> DualComplex:
    """Circumcenters, primal measures, and signed restricted dual measures.

    Raises DegenerateMeshError for cells without a circumcenter or with zero
    volume; warns when a signed dual volume is negative (non-well-centered
    mesh, e.g. obtuse triangles).
    """
    n = K.dimension
    amb = K.vertices.shape[1]
    circumcenters = []
    primal_volumes = []
    for k in range(n + 1):
        cc = np.array([K.circumcenter(k, i) for i in range(K.n_cells(k))]
                      ).reshape(K.n_cells(k), amb)
        vol = np.array([K.cell_volume(k, i) for i in range(K.n_cells(k))])
        if k > 0 and np.any(vol <= 0):
            bad = int(np.argmin(vol))
            raise DegenerateMeshError(f"zero-volume {k}-cell {K.cells[k][bad]}")
        circumcenters.append(cc)
        primal_volumes.append(vol)

    barycenters = [np.array([K.barycenter(k, i) for i in range(K.n_cells(k))]
                            ).reshape(K.n_cells(k), amb) for k in range(n + 1)]

    # orthonormal bases of each cell's direction space, for side-of-facet signs
    bases: list[list[np.ndarray]] = []
    for k in range(n + 1):
        row = []
        for i in range(K.n_cells(k)):
            pts = K.cell_points(k, i)
            if k == 0:
                row.append(np.zeros((amb, 0)))
            else:
                q, _ = np.linalg.qr((pts[1:] - pts[0]).T)
                row.append(q[:, :min(k, q.shape[1])])
        bases.append(row)

    pieces: list[list[list[tuple[int, float]]]] = []
    dual_volumes: list[np.ndarray] = []
    for k in range(n + 1):
        cell_pieces: list[list[tuple[int, float]]] = [[] for _ in range(K.n_cells(k))]
        if k == n:
            for i in range(K.n_cells(n)):
                cell_pieces[i].append((i, 1.0))
        else:
            for i in range(K.n_cells(k)):
                for top, measure in _chain_pieces(K, circumcenters, barycenters,
                                                  bases, k, i):
                    cell_pieces[i].append((top, measure))
        vols = np.array([math.fsum(m for _, m in lst) for lst in cell_pieces])
        pieces.append(cell_pieces)
        dual_volumes.append(vols)

    for k in range(n):
        if np.any(dual_volumes[k] < 0):
            bad = int(np.argmin(dual_volumes[k]))
            warnings.warn(
                f"negative signed dual volume for {k}-cell {K.cells[k][bad]} "
                f"({dual_volumes[k][bad]:.3e}); mesh is not well-centered",
                RuntimeWarning, stacklevel=2)

    boundary_complex = None
    boundary_map = None
    boundary_duals = None
    if _with_boundary and n >= 2:
        boundary_complex, boundary_map = extract_boundary(K)
        if boundary_complex.n_cells(n - 1) > 0:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                sub = circumcentric_dual(boundary_complex, _with_boundary=False)
            boundary_duals = sub.dual_volumes

    return DualComplex(K, primal_volumes, dual_volumes, circumcenters, pieces,
                       boundary_complex, boundary_map, boundary_duals)


def _chain_pieces(K, circumcenters, barycenters, bases, k, i):
    """Signed elementary dual pieces of k-cell i, one per chain to a top cell."""
    n = K.dimension
    out = []
    stack = [(k, i, 1.0, [circumcenters[k][i]])]
    while stack:
        kk, ci, sign, pts = stack.pop()
        if kk == n:
            vol = _simplex_volume_from_points(np.array(pts))
            out.append((ci, sign * vol))
            continue
        for up, _ in K.cofaces(kk)[ci]:
            c_up = circumcenters[kk + 1][up]
            # inward unit direction from aff(cell) within aff(coface)
            w = barycenters[kk + 1][up] - barycenters[kk][ci]
            q = bases[kk][ci]
            w = w - q @ (q.T @ w)
            norm = np.linalg.norm(w)
            if norm < 1e-14:
                continue
            w /= norm
            side = float(np.dot(c_up - barycenters[kk][ci], w))
            step = 1.0 if side >= 0 else -1.0
            stack.append((kk + 1, up, sign * step, pts + [c_up]))
    return out


def _simplex_volume_from_points(pts: np.ndarray) -> float:
    """Unsigned m-volume of the simplex spanned by m+1 points in R^n."""
    m = len(pts) - 1
    if m == 0:
        return 1.0
    edges = pts[1:] - pts[0]
    gram = edges @ edges.T
    det = float(np.linalg.det(gram))
    if det < 0:
        det = 0.0
    return math.sqrt(det) / math.factorial(m)


def extract_boundary(K: CellComplex) -> tuple[CellComplex, list[np.ndarray]]:
    """The boundary (n-1)-complex of K plus per-dimension index maps into K."""
    n = K.dimension
    top_idx = np.nonzero(K.boundary_mask(n - 1))[0]
    top_cells = [K.cells[n - 1][i] for i in top_idx]

    cells: list[list[tuple]] = [[] for _ in range(n)]
    cells[n - 1] = list(top_cells)
    for k in range(n - 1, 0, -1):
        seen = {}
        derived = []
        for cell in cells[k]:
            for facet, _ in cell_facets(cell, k):
                if len(facet) == k:
                    facet = tuple(sorted(facet))
                key = tuple(sorted(facet))
                if key not in seen:
                    seen[key] = len(derived)
                    derived.append(facet)
        cells[k - 1] = derived

    used = sorted({v for c in cells[0] for v in c}) if n > 1 else []
    remap = {v: j for j, v in enumerate(used)}
    verts = K.vertices[used]
    rcells: list[list[tuple]] = []
    for k in range(n):
        rcells.append([tuple(remap[v] for v in c) for c in cells[k]])

    sub = _EmbeddedComplex(n - 1, verts, rcells)
    maps = []
    for k in range(n):
        m = np.array([K.cell_index(k, tuple(used[v] for v in c))
                      for c in rcells[k]], dtype=int)
        maps.append(m)
    return sub, maps


class _EmbeddedComplex(CellComplex):
    """A k-complex embedded in higher-dimensional space (boundary shells)."""

    def __init__(self, dimension: int, vertices: np.ndarray, cells):
        self.dimension = dimension
        self.vertices = np.asarray(vertices, dtype=float)
        self.cells = cells
        self.grid = None
        self._index = [self._build_index(k) for k in range(dimension + 1)]
        self.boundary_incidence = [[] if k == 0 else self._build_boundary(k)
                                   for k in range(dimension + 1)]
        self._cofaces = None
        self._boundary_mask = None


# -- quality -------------------------------------------------------------------------


@dataclass
class CellQuality:
    cell: int
    circumcenter_inside: bool
    min_edge: float
    circumradius: float
    aspect_ratio: float


@dataclass
class MeshQualityReport:
    records: list[CellQuality] = field(default_factory=list)

    @property
    def all_inside(self) -> bool:
        return all(r.circumcenter_inside for r in self.records)

    def worst_aspect(self) -> float:
        return max(r.aspect_ratio for r in self.records)


def quality(K: CellComplex) -> MeshQualityReport:
    """Per-top-cell circumcenter, radius, and aspect diagnostics.

    Aspect ratio is max/min extent for boxes and circumradius over the
    circumradius of the regular simplex on the shortest edge for simplices,
    so 1.0 is ideal in both families.  Circumcenters falling outside their
    cell produce a warning, not an error.
    """
    n = K.dimension
    report = MeshQualityReport()
    outside = []
    for i in range(K.n_cells(n)):
        pts = K.cell_points(n, i)
        cc = K.circumcenter(n, i)
        radius = float(np.linalg.norm(pts[0] - cc))
        if K.is_box(n, i):
            ext = [float(np.linalg.norm(pts[1 << j] - pts[0])) for j in range(n)]
            min_edge = min(ext)
            aspect = max(ext) / min(ext)
            inside = True
        else:
            edges = [float(np.linalg.norm(pts[a] - pts[b]))
                     for a, b in itertools.combinations(range(n + 1), 2)]
            min_edge = min(edges)
            # barycentric coordinates of the circumcenter
            mat = (pts[1:] - pts[0]).T
            lam, *_ = np.linalg.lstsq(mat, cc - pts[0], rcond=None)
            bary = np.concatenate([[1.0 - lam.sum()], lam])
            inside = bool(np.all(bary >= -1e-12))
            regular_radius = min_edge * math.sqrt(n / (2.0 * (n + 1)))
            aspect = radius / regular_radius
        if not inside:
            outside.append(i)
        report.records.append(CellQuality(i, inside, min_edge, radius, aspect))
    if outside:
        warnings.warn(f"{len(outside)} top cells have circumcenters outside "
                      f"(first: cell {outside[0]})", RuntimeWarning, stacklevel=2)
    return report
