"""Reference Lagrange elements, quadrature rules, Taylor transforms, semi-norms.

Elements are tensor-product Lagrange (Q_p) on the reference box [0,1]^dim.
The 1D basis is represented in a shifted Legendre basis for stable evaluation
of values and derivatives up to order p. Multi-indices run over the full
tensor set 0 <= k_i <= p (index k = kx + (p+1)*ky), so Q_p data transforms
exactly between nodal and Taylor representations; the derivative semi-norms
sum only total degrees 1 <= |k| <= p.

The scaled element semi-norm of v on a cell with diameter h is

    ||v||_e   = ( sum_k  h^(2|k|-d) * int_K |D^k v|^2 dx )^(1/2)

and its pointwise analogue at a point x is

    ||v||_x   = ( sum_k  h^(2|k|)   * |D^k v(x)|^2 )^(1/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg

from .mesh import CellGeometry

_CLOSURE_TOL = 1e-10


class DomainError(ValueError):
    """Evaluation point outside the cell closure."""


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor quadrature on the reference box [0,1]^dim.

    Weights sum to 1 (the reference measure); `order` is the per-axis
    polynomial exactness degree.
    """

    points: np.ndarray
    weights: np.ndarray
    order: int

    @property
    def n_points(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def gauss_rule(dim: int, n: int) -> QuadratureRule:
    """Tensor Gauss-Legendre rule with n points per axis, exact per-axis degree 2n-1."""
    if n < 1:
        raise ValueError(f"points per axis must be >= 1, got {n}")
    x, w = npleg.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    if dim == 1:
        return QuadratureRule(x[:, None].copy(), w.copy(), 2 * n - 1)
    if dim == 2:
        # x varies fastest, matching the node/multi-index conventions
        px, py = np.meshgrid(x, x, indexing="xy")
        pts = np.column_stack([px.ravel(), py.ravel()])
        wts = np.outer(w, w).ravel()
        return QuadratureRule(pts, wts, 2 * n - 1)
    raise ValueError(f"dim must be 1 or 2, got {dim}")


def lobatto_nodes(n: int) -> np.ndarray:
    """n Gauss-Lobatto points on [0,1] (endpoints included), n >= 2."""
    if n < 2:
        raise ValueError("Lobatto family needs at least 2 nodes")
    if n == 2:
        return np.array([0.0, 1.0])
    # interior nodes are the roots of P'_{n-1}
    coeffs = np.zeros(n)
    coeffs[n - 1] = 1.0
    interior = npleg.legroots(npleg.legder(coeffs))
    pts = np.concatenate([[-1.0], np.sort(interior), [1.0]])
    return 0.5 * (pts + 1.0)


def multi_indices(p: int, dim: int) -> np.ndarray:
    """Tensor multi-index set 0 <= k_i <= p, flattened with kx fastest."""
    if dim == 1:
        return np.arange(p + 1, dtype=np.int64)[:, None]
    ky, kx = np.divmod(np.arange((p + 1) ** 2, dtype=np.int64), p + 1)
    return np.column_stack([kx, ky])


class ReferenceElement:
    """Tensor-product Lagrange element of degree p on [0,1]^dim.

    Node families: equispaced (default for p < 8) or Gauss-Lobatto
    (default for p >= 8, where equispaced interpolation is badly
    conditioned).
    """

    def __init__(self, p: int, dim: int, node_family: str = "auto"):
        if p < 1:
            raise ValueError(f"degree must be >= 1, got {p}")
        if dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {dim}")
        if node_family == "auto":
            node_family = "equispaced" if p < 8 else "lobatto"
        if node_family == "equispaced":
            nodes_1d = np.arange(p + 1) / p
        elif node_family == "lobatto":
            nodes_1d = lobatto_nodes(p + 1)
        else:
            raise ValueError(f"unknown node family {node_family!r}")

        self.p = p
        self.dim = dim
        self.node_family = node_family
        self.nodes_1d = nodes_1d
        self.n_loc = (p + 1) ** dim
        self.multi_indices = multi_indices(p, dim)
        self.k_total = self.multi_indices.sum(axis=1)
        self.k_factorial = np.array(
            [np.prod([math.factorial(int(ki)) for ki in k]) for k in self.multi_indices],
            dtype=float)
        # 1D basis in shifted Legendre representation: phi_j = sum_m C[m,j] P_m(2x-1)
        V = npleg.legvander(2.0 * nodes_1d - 1.0, p)
        self._coeffs = np.linalg.inv(V)
        self._deriv_coeffs = [self._coeffs]
        for _ in range(p):
            self._deriv_coeffs.append(npleg.legder(self._deriv_coeffs[-1], axis=0) * 2.0)

        if dim == 1:
            self.nodes = nodes_1d[:, None].copy()
        else:
            nx, ny = np.meshgrid(nodes_1d, nodes_1d, indexing="xy")
            self.nodes = np.column_stack([nx.ravel(), ny.ravel()])
        # reference corners in local-corner order (dx + 2*dy)
        if dim == 1:
            self.corners = np.array([[0.0], [1.0]])
        else:
            self.corners = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])

    def eval_1d(self, points: np.ndarray, k: int) -> np.ndarray:
        """k-th derivatives of the (p+1) 1D basis functions: (n_pts, p+1)."""
        pts = np.atleast_1d(np.asarray(points, dtype=float))
        if k > self.p:
            return np.zeros((len(pts), self.p + 1))
        vals = npleg.legval(2.0 * pts - 1.0, self._deriv_coeffs[k])
        return vals.T

    def tabulate(self, points, k) -> np.ndarray:
        """D^k of all basis functions at reference points: (n_pts, n_loc)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        k = tuple(int(ki) for ki in np.atleast_1d(k))
        if self.dim == 1:
            return self.eval_1d(pts[:, 0], k[0])
        tx = self.eval_1d(pts[:, 0], k[0])
        ty = self.eval_1d(pts[:, 1], k[1])
        return (ty[:, :, None] * tx[:, None, :]).reshape(len(pts), self.n_loc)

    def tabulate_all(self, points) -> np.ndarray:
        """D^k for every tensor multi-index: (n_k, n_pts, n_loc)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.dim == 1:
            return np.stack([self.eval_1d(pts[:, 0], k) for k in range(self.p + 1)])
        tx = [self.eval_1d(pts[:, 0], k) for k in range(self.p + 1)]
        ty = [self.eval_1d(pts[:, 1], k) for k in range(self.p + 1)]
        out = np.empty((len(self.multi_indices), len(pts), self.n_loc))
        for idx, (kx, ky) in enumerate(self.multi_indices):
            out[idx] = (ty[ky][:, :, None] * tx[kx][:, None, :]).reshape(len(pts), self.n_loc)
        return out


@dataclass
class TaylorPoly:
    """Polynomial in Taylor form: sum_k coeffs[k] * (x - center)^k.

    coeffs[k] stores D^k u(center) / k! over the tensor multi-index set.
    """

    center: np.ndarray
    coeffs: np.ndarray
    p: int
    dim: int

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        mono = _monomials(self.p, self.dim, pts - self.center)
        return mono @ self.coeffs


def _monomials(p: int, dim: int, offsets: np.ndarray) -> np.ndarray:
    """(x - c)^k for every tensor multi-index: (n_pts, n_k)."""
    mi = multi_indices(p, dim)
    pows = offsets[:, None, :] ** mi[None, :, :]
    return pows.prod(axis=-1)


def _deriv_scale(widths, mi) -> np.ndarray:
    """Chain-rule factor prod_ax widths_ax^(-k_ax) per multi-index."""
    w = np.asarray(widths, dtype=float)
    return np.prod(w[None, :] ** (-mi.astype(float)), axis=1)


def _ref_point(elem: ReferenceElement, cell: CellGeometry, point) -> np.ndarray:
    ref = cell.to_reference(np.atleast_1d(np.asarray(point, dtype=float)))
    if np.any(ref < -_CLOSURE_TOL) or np.any(ref > 1.0 + _CLOSURE_TOL):
        raise DomainError(f"point {point} outside cell closure {cell}")
    return np.clip(ref, 0.0, 1.0)


def eval_derivatives(elem: ReferenceElement, coeffs, point, cell: CellGeometry) -> dict:
    """All partial derivatives D^k u_h(point), 0 <= k_i <= p, as a dict.

    Keys are multi-index tuples; the chain rule uses the constant Cartesian
    Jacobian of the axis-aligned cell.
    """
    ref = _ref_point(elem, cell, point)
    coeffs = np.asarray(coeffs, dtype=float)
    tabs = elem.tabulate_all(ref[None, :])[:, 0, :]
    scale = _deriv_scale(cell.widths, elem.multi_indices)
    vals = (tabs @ coeffs) * scale
    return {tuple(int(ki) for ki in k): float(v)
            for k, v in zip(elem.multi_indices, vals)}


def taylor_from_nodal(elem: ReferenceElement, coeffs, cell: CellGeometry,
                      expansion_point) -> TaylorPoly:
    """Exact change of basis from nodal coefficients to a Taylor polynomial."""
    ref = _ref_point(elem, cell, expansion_point)
    coeffs = np.asarray(coeffs, dtype=float)
    tabs = elem.tabulate_all(ref[None, :])[:, 0, :]
    scale = _deriv_scale(cell.widths, elem.multi_indices)
    deriv = (tabs @ coeffs) * scale
    center = np.atleast_1d(np.asarray(expansion_point, dtype=float))
    return TaylorPoly(center=center, coeffs=deriv / elem.k_factorial,
                      p=elem.p, dim=elem.dim)


def nodal_from_taylor(elem: ReferenceElement, taylor: TaylorPoly,
                      target_cell: CellGeometry) -> np.ndarray:
    """Evaluate a Taylor polynomial at the physical nodes of a (possibly
    different) target cell, extending the polynomial if needed."""
    nodes_phys = target_cell.to_physical(elem.nodes)
    return taylor(nodes_phys)


def _seminorm_selection(elem: ReferenceElement):
    sel = np.flatnonzero((elem.k_total >= 1) & (elem.k_total <= elem.p))
    return sel, elem.k_total[sel]


def element_seminorm(elem: ReferenceElement, coeffs, cell: CellGeometry,
                     quad: QuadratureRule | None = None) -> float | np.ndarray:
    """Scaled Sobolev semi-norm ||u_h||_e over total degrees 1 <= |k| <= p.

    `coeffs` may be batched with shape (..., n_loc).
    """
    if quad is None:
        quad = gauss_rule(elem.dim, elem.p + 1)
    coeffs = np.asarray(coeffs, dtype=float)
    sel, ktot = _seminorm_selection(elem)
    tabs = elem.tabulate_all(quad.points)[sel]
    scale = _deriv_scale(cell.widths, elem.multi_indices[sel])
    h = cell.diameter
    # int_K |D^k u|^2 with physical weights w_ref * |K|
    dvals = np.einsum("...n,kqn->...kq", coeffs, tabs) * scale[:, None]
    integrals = np.einsum("...kq,q->...k", dvals ** 2, quad.weights) * cell.measure
    weights = h ** (2.0 * ktot - elem.dim)
    return np.sqrt(np.einsum("...k,k->...", integrals, weights))


def pointwise_seminorm(elem: ReferenceElement, coeffs, cell: CellGeometry,
                       point) -> float | np.ndarray:
    """Pointwise analogue ||u_h||_x of the element semi-norm."""
    ref = _ref_point(elem, cell, point)
    coeffs = np.asarray(coeffs, dtype=float)
    sel, ktot = _seminorm_selection(elem)
    tabs = elem.tabulate_all(ref[None, :])[sel][:, 0, :]
    scale = _deriv_scale(cell.widths, elem.multi_indices[sel])
    dvals = np.einsum("...n,kn->...k", coeffs, tabs) * scale
    weights = cell.diameter ** (2.0 * ktot)
    return np.sqrt(np.einsum("...k,k->...", dvals ** 2, weights))


def cell_average(elem: ReferenceElement, coeffs, cell: CellGeometry,
                 quad: QuadratureRule | None = None) -> float | np.ndarray:
    """|K_e|^(-1) int_K u_h dx (exact quadrature)."""
    if quad is None:
        quad = gauss_rule(elem.dim, elem.p + 1)
    coeffs = np.asarray(coeffs, dtype=float)
    phi = elem.tabulate(quad.points, (0,) * elem.dim)
    return np.einsum("...n,qn,q->...", coeffs, phi, quad.weights)


class CellTables:
    """Reference tables bound to a uniform cell geometry.

    Precomputes everything the WENO/stabilization/solver hot loops contract
    against: basis values and all scaled derivatives at quadrature points,
    corner vertices and nodal points, semi-norm scalings, Taylor monomial
    tables at corners, and the reference mass matrix. All arrays are
    immutable after construction.
    """

    def __init__(self, elem: ReferenceElement, widths,
                 quad: QuadratureRule | None = None):
        self.elem = elem
        self.widths = np.atleast_1d(np.asarray(widths, dtype=float))
        self.h = float(np.hypot.reduce(self.widths))
        self.measure = float(np.prod(self.widths))
        self.quad = quad if quad is not None else gauss_rule(elem.dim, elem.p + 1)

        mi = elem.multi_indices
        self.scale_k = _deriv_scale(self.widths, mi)
        self.n_k = len(mi)

        # volume quadrature tables (physical derivative scaling)
        self.wq = self.quad.weights * self.measure
        self.phi_q = elem.tabulate(self.quad.points, (0,) * elem.dim)
        self.deriv_q = elem.tabulate_all(self.quad.points) * self.scale_k[:, None, None]
        grad_idx = self._first_derivative_indices()
        self.dphi_q = self.deriv_q[grad_idx]

        # corner vertices and nodal points
        self.deriv_vert = elem.tabulate_all(elem.corners) * self.scale_k[:, None, None]
        self.grad_nodes = (elem.tabulate_all(elem.nodes) * self.scale_k[:, None, None])[grad_idx]

        # semi-norm bookkeeping
        sel, ktot = _seminorm_selection(elem)
        self.sem_sel = sel
        self.sem_scale_elem = self.h ** (2.0 * ktot - elem.dim)
        self.sem_scale_point = self.h ** (2.0 * ktot)
        self.deriv_q_sem = self.deriv_q[sel]
        self.deriv_vert_sem = self.deriv_vert[sel]

        # mean-value weights: coeffs @ mean_w == cell average
        self.mean_w = self.quad.weights @ self.phi_q

        # Taylor monomials (x_node - x_corner)^k, physical offsets
        offsets = (elem.nodes[None, :, :] - elem.corners[:, None, :]) * self.widths
        n_v = len(elem.corners)
        self.mono_vert = np.empty((n_v, self.n_k, elem.n_loc))
        for v in range(n_v):
            self.mono_vert[v] = _monomials(elem.p, elem.dim, offsets[v]).T

        # reference mass matrix (unit measure); physical mass = measure * mass_ref
        self.mass_ref = np.einsum("qi,qj,q->ij", self.phi_q, self.phi_q,
                                  self.quad.weights)

        self.k_factorial = elem.k_factorial

    def _first_derivative_indices(self):
        mi = self.elem.multi_indices
        idx = []
        for ax in range(self.elem.dim):
            unit = np.zeros(self.elem.dim, dtype=np.int64)
            unit[ax] = 1
            idx.append(int(np.flatnonzero((mi == unit).all(axis=1))[0]))
        return np.array(idx)

    # ---- batched kernels used by the WENO and stabilization modules ----

    def averages(self, coeffs) -> np.ndarray:
        """Cell averages for (..., n_loc) coefficient arrays."""
        return np.asarray(coeffs) @ self.mean_w

    def seminorm(self, coeffs) -> np.ndarray:
        """Element semi-norm for (..., n_loc) coefficient arrays."""
        coeffs = np.asarray(coeffs, dtype=float)
        lead = coeffs.shape[:-1]
        n_sem, n_q = self.deriv_q_sem.shape[0], self.deriv_q_sem.shape[1]
        flat = coeffs.reshape(-1, coeffs.shape[-1])
        dvals = flat @ self.deriv_q_sem.reshape(n_sem * n_q, -1).T
        dvals = dvals.reshape(-1, n_sem, n_q)
        integrals = (dvals ** 2) @ self.wq
        out = np.sqrt(integrals @ self.sem_scale_elem)
        return out.reshape(lead)

    def pointwise_seminorm_at_vertices(self, coeffs) -> np.ndarray:
        """||u||_x at the cell corners: (..., n_vert)."""
        coeffs = np.asarray(coeffs, dtype=float)
        dvals = np.einsum("...n,kvn->...kv", coeffs, self.deriv_vert_sem)
        return np.sqrt(np.einsum("...kv,k->...v", dvals ** 2, self.sem_scale_point))

    def pointwise_seminorm_at_quad(self, coeffs) -> np.ndarray:
        """||u||_x at the volume quadrature points: (..., n_q)."""
        coeffs = np.asarray(coeffs, dtype=float)
        dvals = np.einsum("...n,kqn->...kq", coeffs, self.deriv_q_sem)
        return np.sqrt(np.einsum("...kq,k->...q", dvals ** 2, self.sem_scale_point))

    def taylor_at_vertices(self, coeffs) -> np.ndarray:
        """Taylor coefficients D^k u / k! about every corner: (..., n_vert, n_k)."""
        coeffs = np.asarray(coeffs, dtype=float)
        dvals = np.einsum("...n,kvn->...vk", coeffs, self.deriv_vert)
        return dvals / self.k_factorial

    def gradient_at_quad(self, coeffs) -> np.ndarray:
        """Physical gradient at quadrature points: (..., dim, n_q)."""
        return np.einsum("...n,dqn->...dq", np.asarray(coeffs, dtype=float), self.dphi_q)

    def values_at_quad(self, coeffs) -> np.ndarray:
        return np.asarray(coeffs, dtype=float) @ self.phi_q.T


@lru_cache(maxsize=32)
def _cached_element(p: int, dim: int, node_family: str) -> ReferenceElement:
    return ReferenceElement(p, dim, node_family)


def reference_element(p: int, dim: int, node_family: str = "auto") -> ReferenceElement:
    """Shared, cached reference element instance."""
    return _cached_element(p, dim, node_family)
