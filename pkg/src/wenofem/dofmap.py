"""Global DOF numbering for CG and DG spaces on structured meshes.

CG nodes on a tensor grid are numbered g = gx + nx*gy with gx = cx*p + ix
(modulo the axis size on periodic axes). DG blocks are numbered cell by cell.
"""

from __future__ import annotations

import numpy as np

from .element import ReferenceElement
from .mesh import StructuredMesh


def cg_axis_size(mesh: StructuredMesh, p: int, ax: int) -> int:
    n = mesh.cell_shape[ax] * p
    return n if mesh.periodic[ax] else n + 1


def cg_dof_map(mesh: StructuredMesh, elem: ReferenceElement):
    """(cell_dofs (E, n_loc), n_dofs) for the continuous space."""
    p = elem.p
    sizes = [cg_axis_size(mesh, p, ax) for ax in range(mesh.dim)]
    axis_dofs = []
    for ax in range(mesh.dim):
        cells = np.arange(mesh.cell_shape[ax])
        loc = np.arange(p + 1)
        g = cells[:, None] * p + loc[None, :]
        if mesh.periodic[ax]:
            g = g % sizes[ax]
        axis_dofs.append(g)
    if mesh.dim == 1:
        return axis_dofs[0].astype(np.int64), sizes[0]
    ex = mesh.cell_shape[0]
    cy, cx = np.divmod(np.arange(mesh.n_cells), ex)
    gx = axis_dofs[0][cx]          # (E, p+1)
    gy = axis_dofs[1][cy]          # (E, p+1)
    dofs = gx[:, None, :] + sizes[0] * gy[:, :, None]   # (E, p+1, p+1), ix fastest
    return dofs.reshape(mesh.n_cells, elem.n_loc).astype(np.int64), sizes[0] * sizes[1]


def _axis_owner(mesh: StructuredMesh, p: int, ax: int):
    """Per-axis owner (cell, local index) of each global axis node.

    The owner is the lowest adjacent cell index; interface nodes between
    cells c-1 and c belong to c-1 (local index p), except at a periodic
    wrap where cell 0 is the lowest adjacent cell.
    """
    n = cg_axis_size(mesh, p, ax)
    g = np.arange(n)
    cell = g // p
    loc = g % p
    interface = loc == 0
    owner_cell = np.where(interface & (cell > 0), cell - 1, cell)
    owner_loc = np.where(interface & (cell > 0), p, loc)
    if not mesh.periodic[ax]:
        # right endpoint g = E*p decomposes to cell E, fix to (E-1, p)
        owner_cell = np.where(g == n - 1, mesh.cell_shape[ax] - 1, owner_cell)
        owner_loc = np.where(g == n - 1, p, owner_loc)
    return owner_cell, owner_loc


def cg_owner_map(mesh: StructuredMesh, elem: ReferenceElement):
    """(owner_cell (N,), owner_loc (N,)) with the lowest-cell-index chooser."""
    p = elem.p
    ox, lx = _axis_owner(mesh, p, 0)
    if mesh.dim == 1:
        return ox.astype(np.int64), lx.astype(np.int64)
    oy, ly = _axis_owner(mesh, p, 1)
    nx = cg_axis_size(mesh, p, 0)
    ny = cg_axis_size(mesh, p, 1)
    gy, gx = np.divmod(np.arange(nx * ny), nx)
    cell = ox[gx] + mesh.cell_shape[0] * oy[gy]
    loc = lx[gx] + (p + 1) * ly[gy]
    return cell.astype(np.int64), loc.astype(np.int64)


def dg_dof_map(mesh: StructuredMesh, elem: ReferenceElement):
    n = mesh.n_cells * elem.n_loc
    return np.arange(n, dtype=np.int64).reshape(mesh.n_cells, elem.n_loc), n
