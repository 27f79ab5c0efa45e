"""Hermite WENO reconstructions, nonlinear weights, and the smoothness sensor.

Two candidate families are provided for the per-cell reconstruction u*:

  * cell-cell ("cc"): one candidate per von Neumann (face) neighbor, built by
    extending the neighbor polynomial onto the target cell via a Taylor
    transform about the shared face midpoint and shifting it to match the
    target cell average.
  * cell-vertex ("cv"): one candidate per cell corner. A vertex candidate is
    the Jiang-Shu average (equal linear weights, pointwise-semi-norm
    indicators) of the Taylor expansions of all patch cells about that
    vertex; the same vertex polynomial is shared by every adjacent cell.

In both families candidate 0 is the cell's own polynomial and carries the
dominant linear weight. The final reconstruction is the Jiang-Shu average
with element-semi-norm indicators; the per-cell smoothness sensor is

    gamma_e = 1 - min(1, ||u - u*||_e / ||u||_e)^q.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .element import CellTables, ReferenceElement, TaylorPoly, cell_average
from .mesh import MeshError, StructuredMesh

DEGENERATE_SENSOR_REL = 1e-14


class UsageError(TypeError):
    """Operation called on an unsupported discretization."""


@dataclass(frozen=True)
class WenoParams:
    """Reconstruction parameters.

    eps, r      Jiang-Shu division guard and weight exponent
    q_sensor    steepening exponent of the smoothness sensor
    q_beta      exponent applied to the semi-norms in the indicators
    gamma_vert  linear weight of each non-central candidate
    scheme      "cv" (cell-vertex) or "cc" (cell-cell)
    """

    eps: float = 1e-6
    r: int = 2
    q_sensor: float = 1.0
    q_beta: float = 2.0
    gamma_vert: float = 1e-3
    scheme: str = "cv"

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.r < 1 or self.q_sensor < 1 or self.q_beta < 1:
            raise ValueError("exponents must be >= 1")
        if not 0 < self.gamma_vert < 0.25:
            raise ValueError("gamma_vert must lie in (0, 0.25)")
        if self.scheme not in ("cc", "cv"):
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass
class Candidate:
    label: object
    coeffs: np.ndarray
    beta: float
    linear_weight: float
    weight: float


@dataclass
class CandidateSet:
    cell: int
    candidates: list


def jiang_shu_weights(betas, linear_weights=None, eps: float = 1e-6,
                      r: int = 2) -> np.ndarray:
    """Normalized nonlinear weights gamma_l / (eps + beta_l)^r.

    `betas` may be batched with the candidate axis last; linear weights are
    normalized internally (equal weights when omitted).
    """
    betas = np.asarray(betas, dtype=float)
    n = betas.shape[-1]
    if linear_weights is None:
        lin = np.full(n, 1.0 / n)
    else:
        lin = np.asarray(linear_weights, dtype=float)
        if np.any(lin <= 0):
            raise ValueError("linear weights must be positive")
        lin = lin / lin.sum(axis=-1, keepdims=(lin.ndim > 1))
    raw = lin / (eps + betas) ** r
    return raw / raw.sum(axis=-1, keepdims=True)


class WenoReconstructor:
    """Vectorized WENO reconstruction over all cells of a structured mesh."""

    def __init__(self, mesh: StructuredMesh, elem: ReferenceElement,
                 params: WenoParams | None = None, tables: CellTables | None = None):
        self.mesh = mesh
        self.elem = elem
        self.params = params if params is not None else WenoParams()
        self.tables = tables if tables is not None else CellTables(elem, mesh.widths)
        n_side = mesh.corners_per_cell if self.params.scheme == "cv" else 2 * mesh.dim
        if self.params.gamma_vert * n_side >= 1.0:
            raise ValueError("gamma_vert too large for the candidate count")
        if self.params.scheme == "cc":
            self._build_cc_tables()

    # ------------------------------------------------------------------ cc
    def _build_cc_tables(self):
        elem, mesh, tables = self.elem, self.mesh, self.tables
        dim = mesh.dim
        self._cc_taylor = []
        self._cc_mono = []
        for f in range(2 * dim):
            axis, side = divmod(f, 2)
            mid_src = np.full(dim, 0.5)
            mid_src[axis] = 1.0 - side
            mid_tgt = np.full(dim, 0.5)
            mid_tgt[axis] = float(side)
            tabs = elem.tabulate_all(mid_src[None, :])[:, 0, :]
            taylor = tabs * tables.scale_k[:, None] / tables.k_factorial[:, None]
            self._cc_taylor.append(taylor)
            offsets = (elem.nodes - mid_tgt) * tables.widths
            from .element import _monomials
            self._cc_mono.append(_monomials(elem.p, dim, offsets).T)

    def cc_candidates(self, U: np.ndarray):
        """Mean-matching Hermite candidates from face neighbors.

        Returns (cands (E, n_faces, n_loc), mask (E, n_faces)); boundary
        faces contribute no candidate.
        """
        mesh, tables = self.mesh, self.tables
        nbrs = mesh.neighbors
        mask = nbrs >= 0
        n_faces = nbrs.shape[1]
        cands = np.empty((mesh.n_cells, n_faces, self.elem.n_loc))
        for f in range(n_faces):
            tay = U[nbrs[:, f]] @ self._cc_taylor[f].T
            cands[:, f] = tay @ self._cc_mono[f]
        avg_u = tables.averages(U)
        avg_c = tables.averages(cands)
        cands = cands + (avg_u[:, None] - avg_c)[:, :, None]
        return np.where(mask[:, :, None], cands, 0.0), mask

    # ------------------------------------------------------------------ cv
    def vertex_taylors(self, U: np.ndarray) -> np.ndarray:
        """Vertex-averaged Taylor polynomials, one per mesh vertex: (N_v, n_k).

        Jiang-Shu averaging over the vertex patch with equal linear weights
        and pointwise-semi-norm smoothness indicators.
        """
        p = self.params
        tables, mesh = self.tables, self.mesh
        ps = tables.pointwise_seminorm_at_vertices(U)
        tay = tables.taylor_at_vertices(U)
        patch, slot = mesh.vertex_cells, mesh.vertex_slot
        pmask = patch >= 0
        betas = ps[patch, slot] ** p.q_beta
        raw = np.where(pmask, 1.0 / (p.eps + betas) ** p.r, 0.0)
        total = raw.sum(axis=1)
        if np.any(total <= 0):
            raise MeshError("empty vertex patch encountered")
        om = raw / total[:, None]
        return np.einsum("is,isk->ik", om, tay[patch, slot])

    def cv_candidates(self, U: np.ndarray):
        """Vertex candidates expressed in the nodal basis of each cell."""
        verts = self.vertex_taylors(U)[self.mesh.cell_verts]
        cands = np.einsum("evk,vkn->evn", verts, self.tables.mono_vert)
        mask = np.ones(cands.shape[:2], dtype=bool)
        return cands, mask

    # ------------------------------------------------------------- combine
    def candidates(self, U: np.ndarray):
        """All candidates including the cell's own polynomial at index 0."""
        if self.params.scheme == "cv":
            cands, mask = self.cv_candidates(U)
        else:
            cands, mask = self.cc_candidates(U)
        allc = np.concatenate([U[:, None, :], cands], axis=1)
        full_mask = np.concatenate(
            [np.ones((len(U), 1), dtype=bool), mask], axis=1)
        return allc, full_mask

    def linear_weights(self, mask: np.ndarray) -> np.ndarray:
        """Dominant central weight, gamma_vert for each available candidate."""
        gv = self.params.gamma_vert
        lin = np.where(mask, gv, 0.0)
        lin[:, 0] = 1.0 - gv * mask[:, 1:].sum(axis=1)
        return lin

    def reconstruct(self, U: np.ndarray, return_parts: bool = False):
        """Final WENO reconstruction and smoothness sensor for every cell.

        Returns (recon (E, n_loc), gamma (E,)); with return_parts also the
        candidate stack, mask, betas and nonlinear weights.
        """
        p = self.params
        allc, mask = self.candidates(U)
        sems = self.tables.seminorm(allc)
        betas = sems ** p.q_beta
        lin = self.linear_weights(mask)
        raw = np.where(mask, lin / (p.eps + betas) ** p.r, 0.0)
        om = raw / raw.sum(axis=1, keepdims=True)
        recon = np.einsum("el,eln->en", om, allc)
        gamma = self.sensor_values(U, recon, denom=sems[:, 0])
        if return_parts:
            return recon, gamma, allc, mask, betas, om
        return recon, gamma

    def sensor_values(self, U: np.ndarray, recon: np.ndarray,
                      denom: np.ndarray | None = None) -> np.ndarray:
        """Smoothness sensor gamma_e in [0, 1]; constant cells count as smooth."""
        tables = self.tables
        if denom is None:
            denom = tables.seminorm(U)
        num = tables.seminorm(U - recon)
        avg = tables.averages(U)
        degenerate = denom <= DEGENERATE_SENSOR_REL * np.abs(avg)
        safe = np.where(degenerate, 1.0, denom)
        ratio = np.minimum(1.0, num / safe)
        gamma = 1.0 - ratio ** self.params.q_sensor
        return np.where(degenerate, 1.0, gamma)


# ------------------------------------------------------------ op wrappers

def _scalar_field(field) -> np.ndarray:
    field = np.asarray(field, dtype=float)
    if field.ndim != 2:
        raise ValueError("expected a scalar field of per-cell coefficients (E, n_loc)")
    return field


def cell_cell_candidates(field, mesh, elem, target_cell: int,
                         params: WenoParams | None = None) -> CandidateSet:
    """Hermite candidate set of one cell from its face neighbors."""
    params = replace(params or WenoParams(), scheme="cc")
    return _candidate_set(field, mesh, elem, target_cell, params)


def _candidate_set(field, mesh, elem, target_cell, params) -> CandidateSet:
    U = _scalar_field(field)
    mesh._check_cell(target_cell)
    rec = WenoReconstructor(mesh, elem, params)
    _, _, allc, mask, betas, om = rec.reconstruct(U, return_parts=True)
    lin = rec.linear_weights(mask)
    cands = []
    if params.scheme == "cc":
        labels = ["self"] + [("face-neighbor", int(n))
                             for n in mesh.neighbors[target_cell]]
    else:
        labels = ["self"] + [("vertex", int(v)) for v in mesh.cell_verts[target_cell]]
    for l, label in enumerate(labels):
        if not mask[target_cell, l]:
            continue
        cands.append(Candidate(label=label,
                               coeffs=allc[target_cell, l].copy(),
                               beta=float(betas[target_cell, l]),
                               linear_weight=float(lin[target_cell, l]),
                               weight=float(om[target_cell, l])))
    return CandidateSet(cell=int(target_cell), candidates=cands)


def vertex_candidate(field, mesh, elem, vertex_id: int,
                     params: WenoParams | None = None) -> TaylorPoly:
    """Vertex-averaged WENO polynomial about one mesh vertex."""
    U = _scalar_field(field)
    mesh._check_vertex(vertex_id)
    rec = WenoReconstructor(mesh, elem, params or WenoParams())
    coeffs = rec.vertex_taylors(U)[vertex_id]
    return TaylorPoly(center=mesh.vertex_coords[vertex_id].copy(),
                      coeffs=coeffs, p=elem.p, dim=elem.dim)


def cell_vertex_reconstruct(field, mesh, elem, target_cell: int,
                            params: WenoParams | None = None) -> np.ndarray:
    """Nodal coefficients of the cell-vertex reconstruction on one cell."""
    U = _scalar_field(field)
    mesh._check_cell(target_cell)
    params = replace(params or WenoParams(), scheme="cv")
    rec = WenoReconstructor(mesh, elem, params)
    recon, _ = rec.reconstruct(U)
    return recon[target_cell]


def mean_corrected_candidate(candidate, target_cell, field_coeffs, elem,
                             quad=None) -> np.ndarray:
    """Shift a candidate by a constant so it matches the field's cell average."""
    candidate = np.asarray(candidate, dtype=float)
    shift = (cell_average(elem, field_coeffs, target_cell, quad)
             - cell_average(elem, candidate, target_cell, quad))
    return candidate + shift


def smoothness_sensor(field_coeffs, recon_coeffs, elem, cell,
                      params: WenoParams | None = None) -> float | np.ndarray:
    """Per-cell sensor from a field polynomial and its reconstruction."""
    from .element import element_seminorm
    params = params or WenoParams()
    u = np.asarray(field_coeffs, dtype=float)
    w = np.asarray(recon_coeffs, dtype=float)
    denom = element_seminorm(elem, u, cell)
    num = element_seminorm(elem, u - w, cell)
    avg = cell_average(elem, u, cell)
    degenerate = np.asarray(denom <= DEGENERATE_SENSOR_REL * np.abs(avg))
    safe = np.where(degenerate, 1.0, denom)
    gamma = 1.0 - np.minimum(1.0, num / safe) ** params.q_sensor
    out = np.where(degenerate, 1.0, gamma)
    return float(out) if out.ndim == 0 else out


def hweno_limit(field, mesh, elem, params: WenoParams | None = None,
                threshold: float = 0.9, space: str = "dg") -> np.ndarray:
    """Overwrite troubled-cell polynomials by the mean-corrected reconstruction.

    Applies componentwise to (..., E, n_loc) DG fields; cell averages are
    preserved exactly.
    """
    if space != "dg":
        raise UsageError("the HWENO limiter requires a DG field")
    params = params or WenoParams()
    field = np.asarray(field, dtype=float)
    comps = field.reshape((-1,) + field.shape[-2:])
    rec = WenoReconstructor(mesh, elem, params)
    out = np.empty_like(comps)
    for c, U in enumerate(comps):
        recon, gamma = rec.reconstruct(U)
        corrected = recon + (rec.tables.averages(U)
                             - rec.tables.averages(recon))[:, None]
        out[c] = np.where((gamma < threshold)[:, None], corrected, U)
    return out.reshape(field.shape)
