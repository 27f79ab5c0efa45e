"""Blended low/high-order dissipation operators and shock-capturing quadrature.

The per-cell stabilization acting on a test function phi_i is

    low order   :  nu_e * int_K grad(phi_i) . grad(u_h)
    high order  :  nu_e * int_K grad(phi_i) . (grad(u_h) - P_h grad(u_h))
    blended (CG):  nu_e * int_K grad(phi_i) . (grad(u_h) - gamma_e P_h grad(u_h))

with nu_e = lambda_e h_e / (2 p). For DG spaces the elementwise L2 projection
makes the high-order part vanish identically, so the blended operator reduces
to (1 - gamma_e) times the low-order one.

The shock-capturing quadrature rescales the stabilization weights w_q by
factors alpha_q that concentrate dissipation where the pointwise derivative
semi-norm is large, while preserving the elementwise dissipation rate
sum_q w_q alpha_q f_q = sum_q w_q f_q exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dofmap import cg_dof_map, cg_owner_map
from .element import CellTables, ReferenceElement
from .mesh import StructuredMesh
from .weno import UsageError

REDISTRIBUTION_GUARD = 1e-14


@dataclass
class StabilizationState:
    """Per-cell stabilization data for one residual assembly pass."""

    gamma: np.ndarray
    lam: np.ndarray
    nu: np.ndarray
    alpha: np.ndarray
    cutoff: float = 0.9
    redistribute: bool = False

    @classmethod
    def create(cls, gamma, lam, tables: CellTables, alpha=None,
               cutoff: float = 0.9, redistribute: bool = False):
        gamma = np.asarray(gamma, dtype=float)
        lam = np.asarray(lam, dtype=float)
        nu = lam * tables.h / (2.0 * tables.elem.p)
        if alpha is None:
            alpha = np.ones(gamma.shape + (tables.quad.n_points,))
        return cls(gamma=gamma, lam=lam, nu=nu, alpha=np.asarray(alpha, dtype=float),
                   cutoff=cutoff, redistribute=redistribute)


def local_wavespeed(law, coeffs, tables: CellTables, x_quad=None, x_nodes=None,
                    strict: bool = False):
    """Max wave speed over the cell's quadrature and nodal points: (...,).

    With strict=True nonphysical states raise a state error; by default wave
    speeds use the law's clipped sound speed so that transient sub-nodal
    undershoots next to strong jumps stay finite.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if strict:
        law.check_admissible(coeffs)
        law.check_admissible(tables.values_at_quad(coeffs))
    vals_q = tables.values_at_quad(coeffs)
    s_q = law.max_speed(vals_q, x_quad)
    s_n = law.max_speed(coeffs, x_nodes)
    return np.maximum(s_q.max(axis=-1), s_n.max(axis=-1))


def apply_low_order(tables: CellTables, coeffs, nu, alpha=None) -> np.ndarray:
    """Low-order residual contributions nu * sum_q alpha_q w_q grad(phi_i).grad(u)."""
    grads = tables.gradient_at_quad(coeffs)
    w = tables.wq if alpha is None else tables.wq * np.asarray(alpha, dtype=float)
    out = np.einsum("...dq,...q,dqn->...n", grads, np.broadcast_to(w, grads.shape[:-2] + w.shape[-1:]), tables.dphi_q)
    return out * np.asarray(nu, dtype=float)[..., None]


def apply_high_order(tables: CellTables, coeffs, proj_grad, nu, gamma,
                     alpha=None) -> np.ndarray:
    """Blended CG contributions nu * int grad(phi_i).(grad u - gamma P grad u).

    `proj_grad` holds per-cell nodal coefficients of the projected gradient,
    shape (..., dim, n_loc). gamma = 0 reproduces the low-order operator.
    """
    grads = tables.gradient_at_quad(coeffs)
    pg_q = np.einsum("...dn,qn->...dq", np.asarray(proj_grad, dtype=float),
                     tables.phi_q)
    gdiff = grads - np.asarray(gamma, dtype=float)[..., None, None] * pg_q
    w = tables.wq if alpha is None else tables.wq * np.asarray(alpha, dtype=float)
    out = np.einsum("...dq,...q,dqn->...n", gdiff, np.broadcast_to(w, gdiff.shape[:-2] + w.shape[-1:]), tables.dphi_q)
    return out * np.asarray(nu, dtype=float)[..., None]


def gradient_nodal_values(tables: CellTables, coeffs) -> np.ndarray:
    """Per-cell nodal values of grad(u_h): (..., dim, n_loc)."""
    return np.einsum("...n,dmn->...dm", np.asarray(coeffs, dtype=float),
                     tables.grad_nodes)


def scott_zhang_project(grad_cells, mesh: StructuredMesh, elem: ReferenceElement,
                        tables: CellTables | None = None, maps=None) -> np.ndarray:
    """Scott-Zhang quasi-interpolation of per-cell gradient data into the CG space.

    For each global node the value is the local dual-basis functional of the
    gradient on the lowest-index adjacent cell (local mass solve against the
    cell's load vector). Reproduces continuous FE fields exactly. Returns
    global nodal values of shape (..., n_dofs).

    grad_cells: per-cell nodal polynomial coefficients, shape (..., E, n_loc).
    """
    grad_cells = np.asarray(grad_cells, dtype=float)
    if grad_cells.ndim < 2:
        raise UsageError("scott_zhang_project expects per-cell data (..., E, n_loc)")
    if tables is None:
        tables = CellTables(elem, mesh.widths)
    if maps is None:
        owner_cell, owner_loc = cg_owner_map(mesh, elem)
    else:
        owner_cell, owner_loc = maps
    # dual functional on the owner cell: solve M_loc c = int(phi_j g)
    g_q = tables.values_at_quad(grad_cells)
    load = np.einsum("...eq,qn,q->...en", g_q, tables.phi_q, tables.quad.weights)
    dual = np.linalg.solve(tables.mass_ref, load[..., None])[..., 0]
    return dual[..., owner_cell, owner_loc]


def project_gradient_dg(tables: CellTables, coeffs) -> np.ndarray:
    """Per-cell L2 projection of grad(u_h) onto the local space (..., dim, n_loc).

    Since grad(u_h) already lies in the local space this reproduces it, which
    is what makes the DG high-order operator vanish.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    g_q = np.einsum("...n,dqn->...dq", coeffs, tables.dphi_q)
    load = np.einsum("...dq,qn,q->...dn", g_q, tables.phi_q, tables.quad.weights)
    return np.linalg.solve(tables.mass_ref, load[..., None])[..., 0]


def dissipation_rate(tables: CellTables, coeffs, proj_grad, gamma, nu,
                     space: str = "dg"):
    """Elementwise dissipation rate D_e and per-quadrature-point integrand f_q.

    DG: f_q = (1 - gamma) |grad u|^2
    CG: f_q = |grad u|^2 - gamma grad(u) . P grad(u)
    """
    gamma = np.asarray(gamma, dtype=float)
    grads = tables.gradient_at_quad(coeffs)
    g2 = (grads ** 2).sum(axis=-2)
    if space == "dg":
        f = (1.0 - gamma)[..., None] * g2
    elif space == "cg":
        pg_q = np.einsum("...dn,qn->...dq", np.asarray(proj_grad, dtype=float),
                         tables.phi_q)
        f = g2 - gamma[..., None] * (grads * pg_q).sum(axis=-2)
    else:
        raise ValueError(f"unknown space {space!r}")
    D = np.asarray(nu, dtype=float) * (f @ tables.wq)
    return D, f


def shock_capturing_weights(tables: CellTables, coeffs, f, gamma,
                            cutoff: float = 0.9) -> np.ndarray:
    """Dissipation-preserving quadrature scaling factors alpha_q: (..., n_q).

    Redistributes only on cells with gamma < cutoff and p > 1; degenerate
    cells (vanishing semi-norm, vanishing or sign-flipping redistribution
    sums) keep alpha = 1.
    """
    f = np.asarray(f, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    n_q = tables.quad.n_points
    if tables.elem.p == 1:
        return np.ones(gamma.shape + (n_q,))
    sem = tables.seminorm(coeffs)
    ps_q = tables.pointwise_seminorm_at_quad(coeffs)
    active = (gamma < cutoff) & (sem > 0.0)
    safe_sem = np.where(sem > 0.0, sem, 1.0)
    tilde = ps_q / safe_sem[..., None]
    num = f @ tables.wq
    den = (tilde * f) @ tables.wq
    # fallbacks: zero dissipation, ill-conditioned or sign-flipped denominator
    ok = active & (num * den > 0.0) & (np.abs(den) > REDISTRIBUTION_GUARD * np.abs(num))
    ratio = np.where(ok, num / np.where(ok, den, 1.0), 1.0)
    alpha = np.where(ok[..., None], tilde * ratio[..., None], 1.0)
    return alpha
