"""Structured Cartesian meshes (1D intervals, 2D quadrilaterals).

All connectivity is derived from index arithmetic on the structured grid,
so orderings are deterministic and lookups are O(1). Meshes are uniform per
axis and immutable after construction.

Conventions:
  * cell id      e = cx + Ex*cy
  * vertex id    i = vx + Nvx*vy   (Nvx = Ex for a periodic axis, Ex+1 otherwise)
  * local corner v = dx + 2*dy     with reference coordinates (dx, dy) in {0,1}
  * local face   f in (-x, +x, -y, +y) order
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BOUNDARY_TAGS = ("left", "right", "bottom", "top")


class MeshError(ValueError):
    """Invalid mesh configuration or connectivity lookup."""


@dataclass(frozen=True)
class CellGeometry:
    """Axis-aligned box geometry of one cell."""

    origin: tuple
    widths: tuple

    @property
    def dim(self) -> int:
        return len(self.widths)

    @property
    def diameter(self) -> float:
        return float(np.hypot.reduce(np.asarray(self.widths)))

    @property
    def measure(self) -> float:
        return float(np.prod(self.widths))

    def to_reference(self, points) -> np.ndarray:
        """Map physical points (..., dim) to reference coordinates in [0,1]^dim."""
        pts = np.asarray(points, dtype=float)
        return (pts - np.asarray(self.origin)) / np.asarray(self.widths)

    def to_physical(self, ref_points) -> np.ndarray:
        pts = np.asarray(ref_points, dtype=float)
        return np.asarray(self.origin) + pts * np.asarray(self.widths)


@dataclass
class StructuredMesh:
    """Uniform structured mesh with full cell/vertex connectivity.

    Attributes populated by :func:`build_mesh`:
      cell_shape     cells per axis
      widths         per-axis cell width (uniform)
      vertex_coords  (n_vertices, dim) physical vertex coordinates
      cell_verts     (n_cells, 2^dim) global vertex id of each cell corner
      vertex_cells   (n_vertices, 2^dim) cell ids of the vertex patch, -1 padded
      vertex_slot    (n_vertices, 2^dim) local corner index of the vertex
                     inside the corresponding patch cell
      neighbors      (n_cells, 2*dim) face-neighbor cell ids, -1 at boundaries
    """

    dim: int
    bounds: tuple
    cells: tuple
    periodic: tuple

    widths: np.ndarray = field(repr=False, default=None)
    n_cells: int = 0
    n_vertices: int = 0
    cell_shape: tuple = ()
    vert_shape: tuple = ()
    vertex_coords: np.ndarray = field(repr=False, default=None)
    cell_verts: np.ndarray = field(repr=False, default=None)
    vertex_cells: np.ndarray = field(repr=False, default=None)
    vertex_slot: np.ndarray = field(repr=False, default=None)
    neighbors: np.ndarray = field(repr=False, default=None)
    cell_origins: np.ndarray = field(repr=False, default=None)

    @property
    def diameter(self) -> float:
        """Cell diameter h_e (uniform: width in 1D, diagonal in 2D)."""
        return float(np.hypot.reduce(self.widths))

    @property
    def measure(self) -> float:
        """Cell measure |K_e| (uniform)."""
        return float(np.prod(self.widths))

    @property
    def corners_per_cell(self) -> int:
        return 2 ** self.dim

    def cell_geometry(self, cell_id: int = 0) -> CellGeometry:
        self._check_cell(cell_id)
        return CellGeometry(tuple(self.cell_origins[cell_id]), tuple(self.widths))

    def cell_multi_index(self, cell_id: int) -> tuple:
        self._check_cell(cell_id)
        if self.dim == 1:
            return (cell_id,)
        ex = self.cell_shape[0]
        return (cell_id % ex, cell_id // ex)

    def _check_cell(self, cell_id: int) -> None:
        if not 0 <= cell_id < self.n_cells:
            raise MeshError(f"cell id {cell_id} out of range [0, {self.n_cells})")

    def _check_vertex(self, vertex_id: int) -> None:
        if not 0 <= vertex_id < self.n_vertices:
            raise MeshError(f"vertex id {vertex_id} out of range [0, {self.n_vertices})")


def build_mesh(dim: int, bounds, cells, periodic=False) -> StructuredMesh:
    """Build a uniform structured mesh with all connectivity maps populated.

    Parameters
    ----------
    dim : 1 or 2
    bounds : (lo, hi) for 1D, or ((lox, hix), (loy, hiy)) for 2D
    cells : cell count per axis (int or per-axis tuple)
    periodic : per-axis periodicity flag (bool or per-axis tuple)
    """
    if dim not in (1, 2):
        raise MeshError(f"dim must be 1 or 2, got {dim}")
    bounds = _per_axis_bounds(dim, bounds)
    cells = _per_axis(dim, cells, int)
    periodic = _per_axis(dim, periodic, bool)
    for ax, n in enumerate(cells):
        if n < 1:
            raise MeshError(f"cell count along axis {ax} must be >= 1, got {n}")
    for ax, (lo, hi) in enumerate(bounds):
        if not hi > lo:
            raise MeshError(f"empty bounds along axis {ax}: ({lo}, {hi})")

    widths = np.array([(hi - lo) / n for (lo, hi), n in zip(bounds, cells)])
    mesh = StructuredMesh(dim=dim, bounds=bounds, cells=cells, periodic=periodic,
                          widths=widths)
    mesh.cell_shape = cells
    mesh.n_cells = int(np.prod(cells))
    mesh.vert_shape = tuple(n if per else n + 1 for n, per in zip(cells, periodic))
    mesh.n_vertices = int(np.prod(mesh.vert_shape))

    _build_vertex_coords(mesh)
    _build_cell_vertex_incidence(mesh)
    _build_vertex_patches(mesh)
    _build_face_neighbors(mesh)
    _build_cell_origins(mesh)
    return mesh


def vertex_patch(mesh: StructuredMesh, vertex_id: int) -> list:
    """Cell ids sharing the given vertex, in ascending order."""
    mesh._check_vertex(vertex_id)
    row = mesh.vertex_cells[vertex_id]
    return sorted(int(c) for c in row if c >= 0)


def face_neighbors(mesh: StructuredMesh, cell_id: int) -> list:
    """Per-face neighbor cell id, or the boundary tag string at boundaries."""
    mesh._check_cell(cell_id)
    out = []
    for f, nbr in enumerate(mesh.neighbors[cell_id]):
        out.append(int(nbr) if nbr >= 0 else BOUNDARY_TAGS[f])
    return out


def _per_axis(dim, value, cast):
    if np.isscalar(value):
        return tuple(cast(value) for _ in range(dim))
    value = tuple(value)
    if len(value) != dim:
        raise MeshError(f"expected {dim} per-axis entries, got {len(value)}")
    return tuple(cast(v) for v in value)


def _per_axis_bounds(dim, bounds):
    bounds = tuple(bounds)
    if dim == 1 and len(bounds) == 2 and np.isscalar(bounds[0]):
        return ((float(bounds[0]), float(bounds[1])),)
    if len(bounds) != dim:
        raise MeshError(f"expected {dim} bound pairs, got {len(bounds)}")
    return tuple((float(lo), float(hi)) for lo, hi in bounds)


def _axis_grids(mesh):
    """Integer index grids (vx, vy) flattened in vertex-id order."""
    if mesh.dim == 1:
        return (np.arange(mesh.vert_shape[0]),)
    nvx, nvy = mesh.vert_shape
    vy, vx = np.divmod(np.arange(nvx * nvy), nvx)
    return vx, vy


def _build_vertex_coords(mesh):
    axes = []
    for ax in range(mesh.dim):
        lo = mesh.bounds[ax][0]
        axes.append(lo + mesh.widths[ax] * np.arange(mesh.vert_shape[ax]))
    grids = _axis_grids(mesh)
    coords = np.stack([axes[ax][grids[ax]] for ax in range(mesh.dim)], axis=-1)
    mesh.vertex_coords = coords.astype(float)


def _cell_index_grids(mesh):
    if mesh.dim == 1:
        return (np.arange(mesh.n_cells),)
    ex = mesh.cell_shape[0]
    cy, cx = np.divmod(np.arange(mesh.n_cells), ex)
    return cx, cy


def _vertex_id_from_axes(mesh, idx_per_axis):
    if mesh.dim == 1:
        return idx_per_axis[0]
    return idx_per_axis[0] + mesh.vert_shape[0] * idx_per_axis[1]


def _build_cell_vertex_incidence(mesh):
    cgrids = _cell_index_grids(mesh)
    n_corners = mesh.corners_per_cell
    incidence = np.empty((mesh.n_cells, n_corners), dtype=np.int64)
    for corner in range(n_corners):
        offsets = [(corner >> ax) & 1 for ax in range(mesh.dim)]
        vidx = []
        for ax in range(mesh.dim):
            v = cgrids[ax] + offsets[ax]
            if mesh.periodic[ax]:
                v = v % mesh.vert_shape[ax]
            vidx.append(v)
        incidence[:, corner] = _vertex_id_from_axes(mesh, vidx)
    mesh.cell_verts = incidence


def _build_vertex_patches(mesh):
    vgrids = _axis_grids(mesh)
    n_slots = mesh.corners_per_cell
    cells = np.full((mesh.n_vertices, n_slots), -1, dtype=np.int64)
    slots = np.zeros((mesh.n_vertices, n_slots), dtype=np.int64)
    for s in range(n_slots):
        off = [(s >> ax) & 1 for ax in range(mesh.dim)]
        cidx = []
        valid = np.ones(mesh.n_vertices, dtype=bool)
        for ax in range(mesh.dim):
            c = vgrids[ax] - 1 + off[ax]
            if mesh.periodic[ax]:
                c = c % mesh.cell_shape[ax]
            else:
                valid &= (c >= 0) & (c < mesh.cell_shape[ax])
                c = np.clip(c, 0, mesh.cell_shape[ax] - 1)
            cidx.append(c)
        if mesh.dim == 1:
            cid = cidx[0]
        else:
            cid = cidx[0] + mesh.cell_shape[0] * cidx[1]
        cells[:, s] = np.where(valid, cid, -1)
        # corner of the patch cell that coincides with this vertex
        local = sum((1 - off[ax]) << ax for ax in range(mesh.dim))
        slots[:, s] = local
    mesh.vertex_cells = cells
    mesh.vertex_slot = slots


def _build_face_neighbors(mesh):
    cgrids = _cell_index_grids(mesh)
    nbrs = np.full((mesh.n_cells, 2 * mesh.dim), -1, dtype=np.int64)
    for ax in range(mesh.dim):
        for side, step in ((0, -1), (1, +1)):
            cidx = [g.copy() for g in cgrids]
            c = cidx[ax] + step
            if mesh.periodic[ax]:
                c = c % mesh.cell_shape[ax]
                valid = np.ones(mesh.n_cells, dtype=bool)
            else:
                valid = (c >= 0) & (c < mesh.cell_shape[ax])
                c = np.clip(c, 0, mesh.cell_shape[ax] - 1)
            cidx[ax] = c
            if mesh.dim == 1:
                cid = cidx[0]
            else:
                cid = cidx[0] + mesh.cell_shape[0] * cidx[1]
            nbrs[:, 2 * ax + side] = np.where(valid, cid, -1)
    mesh.neighbors = nbrs


def _build_cell_origins(mesh):
    cgrids = _cell_index_grids(mesh)
    origins = np.stack(
        [mesh.bounds[ax][0] + mesh.widths[ax] * cgrids[ax] for ax in range(mesh.dim)],
        axis=-1)
    mesh.cell_origins = origins.astype(float)
