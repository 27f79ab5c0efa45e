"""CSV and VTK output writers.

csv-line: 1D nodal samples sorted by x. csv-table: convergence tables.
vtk-legacy: ASCII unstructured grids with per-point scalars; Q_p cells are
written as p x p bilinear subcells on the shared nodal lattice.
"""

from __future__ import annotations

import os

import numpy as np


def _fmt(v) -> str:
    return f"{v:.9e}"


def write_csv_line(path, system, u, component_names=None) -> str:
    """1D nodal profile (x, components), sorted by x, one header row."""
    if system.mesh.dim != 1:
        raise ValueError("csv-line output is for 1D runs")
    names = component_names or [f"u{c}" for c in range(u.shape[0])]
    xs = system.node_coords[:, 0]
    order = np.argsort(xs, kind="stable")
    _ensure_dir(path)
    with open(path, "w") as fh:
        fh.write("x," + ",".join(names) + "\n")
        for i in order:
            fh.write(_fmt(xs[i]) + "," + ",".join(_fmt(u[c, i]) for c in range(u.shape[0])) + "\n")
    return path


def write_csv_table(path, rows, header=("cells", "h", "l1_error", "eoc")) -> str:
    """Convergence-table CSV; EOC is blank on the first row."""
    _ensure_dir(path)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = []
            for v in row:
                if v is None:
                    cells.append("")
                elif isinstance(v, (int, np.integer)):
                    cells.append(str(int(v)))
                else:
                    cells.append(_fmt(float(v)))
            fh.write(",".join(cells) + "\n")
    return path


def write_vtk(path, system, u, component_names=None) -> str:
    """Legacy ASCII VTK unstructured grid with per-point scalar fields."""
    mesh, p = system.mesh, system.p
    names = component_names or [f"u{c}" for c in range(u.shape[0])]
    if mesh.dim == 1:
        nx = mesh.cell_shape[0] * p + 1
        xs = np.linspace(mesh.bounds[0][0], mesh.bounds[0][1], nx)
        points = np.column_stack([xs, np.zeros(nx), np.zeros(nx)])
        cells = np.column_stack([np.arange(nx - 1), np.arange(1, nx)])
        cell_type = 3  # VTK_LINE
        values = _lattice_values(system, u, (nx,))
    else:
        nx = mesh.cell_shape[0] * p + 1
        ny = mesh.cell_shape[1] * p + 1
        xs = np.linspace(mesh.bounds[0][0], mesh.bounds[0][1], nx)
        ys = np.linspace(mesh.bounds[1][0], mesh.bounds[1][1], ny)
        X, Y = np.meshgrid(xs, ys, indexing="xy")
        points = np.column_stack([X.ravel(), Y.ravel(), np.zeros(nx * ny)])
        ii, jj = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="xy")
        ll = (jj * nx + ii).ravel()
        cells = np.column_stack([ll, ll + 1, ll + nx + 1, ll + nx])
        cell_type = 9  # VTK_QUAD
        values = _lattice_values(system, u, (ny, nx)).reshape(u.shape[0], -1)

    _ensure_dir(path)
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("wenofem solution\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(points)} double\n")
        for pt in points:
            fh.write(" ".join(_fmt(v) for v in pt) + "\n")
        fh.write(f"CELLS {len(cells)} {len(cells) * (cells.shape[1] + 1)}\n")
        for cell in cells:
            fh.write(f"{cells.shape[1]} " + " ".join(str(int(v)) for v in cell) + "\n")
        fh.write(f"CELL_TYPES {len(cells)}\n")
        for _ in range(len(cells)):
            fh.write(f"{cell_type}\n")
        fh.write(f"POINT_DATA {len(points)}\n")
        for c, name in enumerate(names):
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for v in values[c].ravel():
                fh.write(_fmt(v) + "\n")
    return path


def _lattice_values(system, u, shape):
    """Values on the global nodal lattice; DG contributions are averaged at
    shared lattice points."""
    mesh, elem = system.mesh, system.elem
    m = u.shape[0]
    n_lattice = int(np.prod(shape))
    cells = system.gather(u)
    if system.space == "cg" and elem.node_family == "equispaced":
        # CG dofs coincide with the lattice
        vals = u.reshape(m, *shape) if system.mesh.dim == 1 else u.reshape(m, *shape)
        return vals
    # evaluate each cell's polynomial at the equispaced lattice points it owns
    p = elem.p
    ref = np.arange(p + 1) / p
    if mesh.dim == 1:
        pts = ref[:, None]
    else:
        rx, ry = np.meshgrid(ref, ref, indexing="xy")
        pts = np.column_stack([rx.ravel(), ry.ravel()])
    tab = elem.tabulate(pts, (0,) * mesh.dim)
    local = np.einsum("men,kn->mek", cells, tab)
    acc = np.zeros((m, n_lattice))
    cnt = np.zeros(n_lattice)
    idx = _lattice_index(mesh, p, shape)
    flat = idx.ravel()
    np.add.at(cnt, flat, 1.0)
    for c in range(m):
        np.add.at(acc[c], flat, local[c].ravel())
    return acc / cnt


def _lattice_index(mesh, p, shape):
    """Global lattice index of each cell's (p+1)^dim equispaced points."""
    if mesh.dim == 1:
        cx = np.arange(mesh.cell_shape[0])
        return cx[:, None] * p + np.arange(p + 1)[None, :]
    nx = shape[1]
    ex = mesh.cell_shape[0]
    cy, cx = np.divmod(np.arange(mesh.n_cells), ex)
    gx = cx[:, None] * p + np.arange(p + 1)[None, :]          # (E, p+1)
    gy = cy[:, None] * p + np.arange(p + 1)[None, :]
    return gx[:, None, :] + nx * gy[:, :, None]               # (E, p+1, p+1)


def _ensure_dir(path):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
