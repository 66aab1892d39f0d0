"""Truncated half-space box domains and their structured simplicial meshes.

The computational domain is always a box ``[0, depth] x [-width, width]``
(or the interval ``[0, depth]`` in one dimension) sitting inside the half
space ``{x_1 > 0}``.  The wall ``{x_1 = 0}`` carries the FREE tag and is left
unconstrained by the solver; the remaining, artificial truncation boundary is
DIRICHLET.  Meshes are structured (squares split into two right triangles),
which keeps refinement nested and every quality bound trivial.  A mesh is
immutable after construction and safe for shared reads.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache
from typing import Optional

import numpy as np

__all__ = [
    "Tag",
    "HalfDomain",
    "Mesh",
    "build_mesh",
    "refine",
    "half_ball_vertices",
    "write_mesh_csv",
]

_WALL_TOL = 1e-12


class Tag(IntEnum):
    INTERIOR = 0
    FREE = 1
    DIRICHLET = 2


@dataclass(frozen=True)
class HalfDomain:
    """Box ``[0, depth] x [-width, width]`` (n = 2) or ``[0, depth]`` (n = 1)."""

    n: int
    depth: float
    width: Optional[float] = None
    resolution: float = 0.1

    def __post_init__(self) -> None:
        if self.n not in (1, 2):
            raise ValueError("graph dimension must be 1 or 2")
        if self.depth <= 0.0:
            raise ValueError("depth must be positive")
        if self.n == 2:
            if self.width is None or self.width <= 0.0:
                raise ValueError("a 2d domain needs a positive width")
        if self.resolution <= 0.0:
            raise ValueError("resolution must be positive")

    def extents(self) -> tuple[float, ...]:
        if self.n == 1:
            return (self.depth,)
        return (self.depth, 2.0 * self.width)


@dataclass(frozen=True, eq=False)
class Mesh:
    """Structured simplicial mesh of a HalfDomain with tagged boundary.

    ``boundary_facets`` holds one row per boundary facet (a single vertex for
    n = 1, an edge for n = 2); ``facet_cells`` maps each facet to its unique
    incident cell.  ``grad_lambda[c, i]`` is the gradient of the i-th
    barycentric hat on cell ``c``, so per-cell gradients of piecewise-linear
    fields are a single einsum away.
    """

    domain: HalfDomain
    divisions: tuple[int, ...]
    h: float
    vertices: np.ndarray
    cells: np.ndarray
    vertex_tags: np.ndarray
    boundary_facets: np.ndarray
    facet_tags: np.ndarray
    facet_cells: np.ndarray
    cell_measures: np.ndarray
    grad_lambda: np.ndarray
    vertex_masses: np.ndarray

    @property
    def n(self) -> int:
        return self.domain.n

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def wall_facets(self) -> np.ndarray:
        """Indices (into boundary_facets) of the facets on the wall {x1=0}."""
        return np.flatnonzero(self.facet_tags == Tag.FREE)

    def cell_gradients(self, values: np.ndarray) -> np.ndarray:
        """Per-cell constant gradient of the piecewise-linear interpolant."""
        values = np.asarray(values, dtype=float)
        return np.einsum("cin,ci->cn", self.grad_lambda, values[self.cells])

    def cell_barycenters(self) -> np.ndarray:
        return self.vertices[self.cells].mean(axis=1)


def build_mesh(domain: HalfDomain) -> Mesh:
    """Mesh the domain at its requested resolution.

    Raises ValueError when the resolution gives fewer than two cells along
    any axis (too coarse to carry distinct wall and truncation boundaries).
    """
    ext = domain.extents()
    divisions = tuple(max(1, round(e / domain.resolution)) for e in ext)
    if any(d < 2 for d in divisions):
        raise ValueError(
            f"resolution {domain.resolution} too coarse for extents {ext}; "
            "need at least two cells per axis"
        )
    return _build(domain, divisions)


def refine(mesh: Mesh) -> Mesh:
    """Uniform refinement halving the mesh size; tags are inherited."""
    return _build(mesh.domain, tuple(2 * d for d in mesh.divisions))


def _build(domain: HalfDomain, divisions: tuple[int, ...]) -> Mesh:
    if domain.n == 1:
        return _build_1d(domain, divisions[0])
    return _build_2d(domain, divisions)


def _build_1d(domain: HalfDomain, nx: int) -> Mesh:
    dx = domain.depth / nx
    verts = (np.arange(nx + 1) * dx)[:, None]
    verts[-1, 0] = domain.depth
    cells = np.stack([np.arange(nx), np.arange(1, nx + 1)], axis=1)
    tags = np.full(nx + 1, Tag.INTERIOR, dtype=np.int8)
    tags[0] = Tag.FREE
    tags[-1] = Tag.DIRICHLET
    facets = np.array([[0], [nx]], dtype=np.int64)
    facet_tags = np.array([Tag.FREE, Tag.DIRICHLET], dtype=np.int8)
    facet_cells = np.array([0, nx - 1], dtype=np.int64)
    measures = np.full(nx, dx)
    grad = np.empty((nx, 2, 1))
    grad[:, 0, 0] = -1.0 / dx
    grad[:, 1, 0] = 1.0 / dx
    masses = np.zeros(nx + 1)
    np.add.at(masses, cells, (measures / 2.0)[:, None])
    return Mesh(domain, (nx,), dx, verts, cells, tags, facets, facet_tags,
                facet_cells, measures, grad, masses)


def _build_2d(domain: HalfDomain, divisions: tuple[int, ...]) -> Mesh:
    nx, ny = divisions
    dx = domain.depth / nx
    dy = 2.0 * domain.width / ny
    xs = np.arange(nx + 1) * dx
    ys = -domain.width + np.arange(ny + 1) * dy
    xs[-1], ys[-1] = domain.depth, domain.width
    xs[0], ys[0] = 0.0, -domain.width
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    verts = np.stack([gx.ravel(), gy.ravel()], axis=1)

    def vid(i, j):
        return i * (ny + 1) + j

    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    v00 = vid(ii, jj).ravel()
    v10 = vid(ii + 1, jj).ravel()
    v11 = vid(ii + 1, jj + 1).ravel()
    v01 = vid(ii, jj + 1).ravel()
    lower = np.stack([v00, v10, v11], axis=1)
    upper = np.stack([v00, v11, v01], axis=1)
    cells = np.empty((2 * nx * ny, 3), dtype=np.int64)
    cells[0::2] = lower
    cells[1::2] = upper

    tags = np.full(verts.shape[0], Tag.INTERIOR, dtype=np.int8)
    i_idx = np.repeat(np.arange(nx + 1), ny + 1)
    j_idx = np.tile(np.arange(ny + 1), nx + 1)
    on_wall = i_idx == 0
    on_outer = (i_idx == nx) | (j_idx == 0) | (j_idx == ny)
    tags[on_wall] = Tag.FREE
    tags[on_outer] = Tag.DIRICHLET  # wall corners are truncation-dominated

    facet_rows = []
    facet_tag_rows = []
    facet_cell_rows = []

    def square_cell(i, j, which):
        return 2 * (i * ny + j) + which

    for j in range(ny):  # wall x1 = 0 (upper triangle of square (0, j))
        facet_rows.append((vid(0, j), vid(0, j + 1)))
        facet_tag_rows.append(Tag.FREE)
        facet_cell_rows.append(square_cell(0, j, 1))
    for j in range(ny):  # far side x1 = depth
        facet_rows.append((vid(nx, j), vid(nx, j + 1)))
        facet_tag_rows.append(Tag.DIRICHLET)
        facet_cell_rows.append(square_cell(nx - 1, j, 0))
    for i in range(nx):  # bottom x2 = -width (lower triangle owns it)
        facet_rows.append((vid(i, 0), vid(i + 1, 0)))
        facet_tag_rows.append(Tag.DIRICHLET)
        facet_cell_rows.append(square_cell(i, 0, 0))
    for i in range(nx):  # top x2 = +width
        facet_rows.append((vid(i, ny), vid(i + 1, ny)))
        facet_tag_rows.append(Tag.DIRICHLET)
        facet_cell_rows.append(square_cell(i, ny - 1, 1))

    facets = np.asarray(facet_rows, dtype=np.int64)
    facet_tags = np.asarray(facet_tag_rows, dtype=np.int8)
    facet_cells = np.asarray(facet_cell_rows, dtype=np.int64)

    e1 = verts[cells[:, 1]] - verts[cells[:, 0]]
    e2 = verts[cells[:, 2]] - verts[cells[:, 0]]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    if np.any(det <= 0.0):
        raise AssertionError("triangulation produced a non-positively-oriented cell")
    measures = 0.5 * det
    inv = np.empty((cells.shape[0], 2, 2))
    inv[:, 0, 0] = e2[:, 1] / det
    inv[:, 0, 1] = -e1[:, 1] / det
    inv[:, 1, 0] = -e2[:, 0] / det
    inv[:, 1, 1] = e1[:, 0] / det
    grad = np.empty((cells.shape[0], 3, 2))
    grad[:, 1, :] = inv[:, :, 0]
    grad[:, 2, :] = inv[:, :, 1]
    grad[:, 0, :] = -grad[:, 1, :] - grad[:, 2, :]

    masses = np.zeros(verts.shape[0])
    np.add.at(masses, cells, (measures / 3.0)[:, None])

    wall_x = np.abs(verts[facets[facet_tags == Tag.FREE]][:, :, 0])
    if wall_x.size and wall_x.max() > _WALL_TOL:
        raise AssertionError("a FREE facet strayed off the wall {x1=0}")

    return Mesh(domain, (nx, ny), max(dx, dy), verts, cells, tags, facets,
                facet_tags, facet_cells, measures, grad, masses)


def half_ball_vertices(mesh: Mesh, x0: np.ndarray, r: float) -> np.ndarray:
    """Indices of mesh vertices within distance r of x0 (half-ball in the box).

    An empty result (radius below the local mesh size) is flagged with a
    warning, not an error.
    """
    if r <= 0.0:
        raise ValueError("radius must be positive")
    x0 = np.asarray(x0, dtype=float).reshape(mesh.n)
    d = np.linalg.norm(mesh.vertices - x0, axis=1)
    idx = np.flatnonzero(d <= r + _WALL_TOL)
    if idx.size == 0:
        warnings.warn(f"no vertices within radius {r} of {x0.tolist()}", stacklevel=2)
    return idx


@lru_cache(maxsize=64)
def vertex_stencils(mesh: Mesh) -> list[np.ndarray]:
    """Two-ring vertex neighborhoods (including the vertex), per vertex."""
    ring1: list[set[int]] = [set() for _ in range(mesh.num_vertices)]
    for cell in mesh.cells:
        for a in cell:
            ring1[a].update(int(v) for v in cell)
    out = []
    for v in range(mesh.num_vertices):
        stencil: set[int] = set()
        for u in ring1[v]:
            stencil.update(ring1[u])
        out.append(np.fromiter(sorted(stencil), dtype=np.int64))
    return out


def write_mesh_csv(mesh: Mesh, vertices_path, cells_path) -> None:
    """Dump vertices (id, coords, tag) and cells (id, vertex ids) as CSV."""
    coords = [f"x{i + 1}" for i in range(mesh.n)]
    with open(vertices_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", *coords, "tag"])
        for i, (xyz, tag) in enumerate(zip(mesh.vertices, mesh.vertex_tags)):
            w.writerow([i, *[f"{c:.17g}" for c in xyz], Tag(tag).name])
    with open(cells_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", *[f"v{k}" for k in range(mesh.n + 1)]])
        for i, cell in enumerate(mesh.cells):
            w.writerow([i, *cell.tolist()])
