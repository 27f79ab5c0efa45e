"""Semi-discrete assembly, boundary conditions, SSP-RK3 stepping, positivity limiter.

The semi-discrete system is M du/dt = r(u, t) with

    r_i = int grad(phi_i) . f(u)  -  face fluxes  -  s_h(u, phi_i)

where s_h is the blended WENO stabilization. DG discretizations couple cells
through Riemann fluxes on every face; CG discretizations only see boundary
faces, with exterior ghost states supplied by the boundary conditions.
gamma_e, lambda_e and the shock-capturing quadrature weights are recomputed
at every Runge-Kutta stage from the current stage field.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dofmap import cg_dof_map, cg_owner_map, dg_dof_map
from .element import CellTables, ReferenceElement, gauss_rule
from .mesh import BOUNDARY_TAGS, StructuredMesh
from .physics import StateError
from .stabilization import (StabilizationState, apply_high_order, apply_low_order,
                            dissipation_rate, gradient_nodal_values, local_wavespeed,
                            shock_capturing_weights)
from .weno import WenoParams, WenoReconstructor

WAVESPEED_FLOOR = 1e-12


class NumericalError(RuntimeError):
    """Numerical breakdown (NaN/Inf, failed solve) with diagnostics."""


class BoundaryCondition:
    """Boundary condition attached to one boundary tag.

    kind: 'dirichlet' (constant state or callable(x, t) -> state),
          'reflective' (mirror the normal momentum), 'outflow' (copy), or
          'custom' (callable(interior, x, normal, t) -> ghost, for mixed
          conditions along one boundary).
    """

    def __init__(self, kind: str, state=None):
        if kind not in ("dirichlet", "reflective", "outflow", "custom"):
            raise ValueError(f"unknown boundary condition kind {kind!r}")
        if kind in ("dirichlet", "custom") and state is None:
            raise ValueError(f"{kind} boundary needs a state or resolver")
        self.kind = kind
        self.state = state


def apply_boundary_ghost(bc: BoundaryCondition, interior, normal, t, x=None):
    """Exterior ghost state for one boundary face batch.

    interior: (m, ...) trace values; normal: outward unit normal (dim,).
    """
    interior = np.asarray(interior, dtype=float)
    if bc.kind == "outflow":
        return interior
    if bc.kind == "custom":
        return np.asarray(bc.state(interior, x, np.asarray(normal, dtype=float), t),
                          dtype=float)
    if bc.kind == "reflective":
        n = np.asarray(normal, dtype=float)
        dim = len(n)
        ghost = interior.copy()
        if interior.shape[0] >= dim + 2:
            mom = interior[1:1 + dim]
            mn = np.einsum("d...,d->...", mom, n)
            ghost[1:1 + dim] = mom - 2.0 * mn * n.reshape((dim,) + (1,) * mn.ndim)
        return ghost
    # dirichlet
    if callable(bc.state):
        vals = np.asarray(bc.state(x, t), dtype=float)
        return np.broadcast_to(vals, interior.shape).copy() if vals.shape != interior.shape else vals
    state = np.atleast_1d(np.asarray(bc.state, dtype=float))
    return np.broadcast_to(state.reshape((len(state),) + (1,) * (interior.ndim - 1)),
                           interior.shape).copy()


class StabConfig:
    """Stabilization configuration.

    gamma_mode: 'weno' (sensor-driven blend), 'zero' (full low-order
    dissipation) or 'one' (high-order only). redistribute enables the
    shock-capturing quadrature below the gamma cutoff.

    gamma_dilate (None = on for CG, off for DG): before entering the blend,
    each cell's gamma is reduced to the minimum over its von Neumann
    neighborhood. The CG antidiffusive term evaluates the projected gradient
    at nodes shared with neighbors, so a cell bordering a troubled cell sees
    polluted projection data one layer beyond the trouble; dilating the
    sensor keeps the antidiffusion off in that layer. DG has no such
    coupling and uses the raw sensor.
    """

    def __init__(self, gamma_mode: str = "weno", redistribute: bool = False,
                 cutoff: float = 0.9, gamma_dilate: bool | None = None):
        if gamma_mode not in ("weno", "zero", "one"):
            raise ValueError(f"unknown gamma mode {gamma_mode!r}")
        self.gamma_mode = gamma_mode
        self.redistribute = redistribute
        self.cutoff = cutoff
        self.gamma_dilate = gamma_dilate


class DiscreteSystem:
    """CG or DG discretization of a conservation law on a structured mesh."""

    def __init__(self, law, mesh: StructuredMesh, p: int, space: str,
                 bcs: dict | None = None,
                 weno_params: WenoParams | None = None,
                 stab: StabConfig | None = None,
                 node_family: str = "auto",
                 over_integrate: bool = False,
                 limiter: bool = False,
                 eps_pos: float = 1e-8,
                 projection: str = "l2"):
        if space not in ("cg", "dg"):
            raise ValueError(f"space must be 'cg' or 'dg', got {space!r}")
        if projection not in ("l2", "scott-zhang", "lumped"):
            raise ValueError(f"unknown gradient projection {projection!r}")
        self.law = law
        self.mesh = mesh
        self.space = space
        self.p = p
        self.elem = ReferenceElement(p, mesh.dim, node_family)
        n_vol = p + 1 + (1 if over_integrate else 0)
        self.tables = CellTables(self.elem, mesh.widths, gauss_rule(mesh.dim, n_vol))
        self.weno_params = weno_params if weno_params is not None else WenoParams()
        self.stab = stab if stab is not None else StabConfig()
        self.limiter = bool(limiter)
        self.eps_pos = eps_pos
        self.projection = projection
        self.sense_comp = 0
        self.last_state: StabilizationState | None = None

        if space == "cg":
            self.cell_dofs, self.n_dofs = cg_dof_map(mesh, self.elem)
            self.owner_cell, self.owner_loc = cg_owner_map(mesh, self.elem)
        else:
            self.cell_dofs, self.n_dofs = dg_dof_map(mesh, self.elem)
            self.owner_cell = self.owner_loc = None

        if self.stab.gamma_mode == "weno":
            self.recon = WenoReconstructor(mesh, self.elem, self.weno_params,
                                           self.tables)
        else:
            self.recon = None

        # physical coordinates of quadrature and nodal points
        org = mesh.cell_origins
        self.x_quad = org[:, None, :] + self.tables.quad.points[None, :, :] * mesh.widths
        self.x_nodes = org[:, None, :] + self.elem.nodes[None, :, :] * mesh.widths
        self.node_coords = np.empty((self.n_dofs, mesh.dim))
        self.node_coords[self.cell_dofs.reshape(-1)] = self.x_nodes.reshape(-1, mesh.dim)

        self._build_faces()
        self._resolve_bcs(bcs or {})
        self._build_mass()
        self._check_matrix = np.vstack([np.eye(self.elem.n_loc), self.tables.phi_q]
                                       + [self._trace[f] for f in range(2 * mesh.dim)])

    # ----------------------------------------------------------- face setup
    def _build_faces(self):
        mesh, elem = self.mesh, self.elem
        dim = mesh.dim
        if dim == 1:
            t_pts = np.zeros((1, 0))
            t_w = np.array([1.0])
        else:
            r = gauss_rule(1, elem.p + 1)
            t_pts = r.points
            t_w = r.weights
        self._face_ref = []
        self._trace = []
        self._face_w = []
        for f in range(2 * dim):
            axis, side = divmod(f, 2)
            pts = np.empty((len(t_w), dim))
            pts[:, axis] = float(side)
            if dim == 2:
                pts[:, 1 - axis] = t_pts[:, 0]
            self._face_ref.append(pts)
            self._trace.append(self.elem.tabulate(pts, (0,) * dim))
            area = 1.0 if dim == 1 else mesh.widths[1 - axis]
            self._face_w.append(t_w * area)

        self.interior_faces = []
        for axis in range(dim):
            f_plus = 2 * axis + 1
            left = np.flatnonzero(mesh.neighbors[:, f_plus] >= 0)
            right = mesh.neighbors[left, f_plus]
            coords = (mesh.cell_origins[left][:, None, :]
                      + self._face_ref[f_plus][None, :, :] * mesh.widths)
            self.interior_faces.append(
                dict(axis=axis, left=left, right=right, coords=coords))

        self.boundary_faces = []
        for f in range(2 * dim):
            cells = np.flatnonzero(mesh.neighbors[:, f] < 0)
            if len(cells) == 0:
                continue
            axis, side = divmod(f, 2)
            coords = (mesh.cell_origins[cells][:, None, :]
                      + self._face_ref[f][None, :, :] * mesh.widths)
            normal = np.zeros(dim)
            normal[axis] = -1.0 if side == 0 else 1.0
            self.boundary_faces.append(
                dict(face=f, axis=axis, cells=cells, coords=coords,
                     normal=normal, tag=BOUNDARY_TAGS[f]))

    def _resolve_bcs(self, bcs):
        self.bcs = dict(bcs)
        for batch in self.boundary_faces:
            if batch["tag"] not in self.bcs:
                raise ValueError(
                    f"boundary {batch['tag']!r} has faces but no boundary condition")

    # ----------------------------------------------------------- mass setup
    def _build_mass(self):
        elem, mesh = self.elem, self.mesh
        if self.space == "dg":
            self._mass_inv_ref = np.linalg.inv(self.tables.mass_ref)
            return
        elem1 = ReferenceElement(elem.p, 1, elem.node_family)
        q1 = gauss_rule(1, elem.p + 1)
        phi1 = elem1.tabulate(q1.points, (0,))
        mass1 = np.einsum("qi,qj,q->ij", phi1, phi1, q1.weights)
        self._axis_solvers = []
        self._axis_mats = []
        for ax in range(mesh.dim):
            n_cells = mesh.cell_shape[ax]
            n = n_cells * elem.p + (0 if mesh.periodic[ax] else 1)
            loc = np.arange(elem.p + 1)
            g = (np.arange(n_cells)[:, None] * elem.p + loc[None, :])
            if mesh.periodic[ax]:
                g = g % n
            rows = np.repeat(g, elem.p + 1, axis=1).ravel()
            cols = np.tile(g, (1, elem.p + 1)).ravel()
            vals = np.tile((mass1 * mesh.widths[ax]).ravel(), n_cells)
            M = sp.csc_matrix((vals, (rows, cols)), shape=(n, n))
            self._axis_mats.append(M)
            self._axis_solvers.append(spla.splu(M))
        self._assert_spd()

    def _assert_spd(self):
        rng = np.random.default_rng(12345)
        for _ in range(3):
            v = rng.normal(size=self.n_dofs)
            if not self.mass_matvec(v[None, :])[0] @ v > 0.0:
                raise NumericalError("mass operator failed the SPD check")

    def mass_matvec(self, u: np.ndarray) -> np.ndarray:
        """M @ u for (m, N) arrays (tensor-product structure for CG)."""
        m = u.shape[0]
        if self.space == "dg":
            cells = u.reshape(m, self.mesh.n_cells, self.elem.n_loc)
            out = (cells @ self.tables.mass_ref.T) * self.tables.measure
            return out.reshape(m, self.n_dofs)
        if self.mesh.dim == 1:
            return (self._axis_mats[0] @ u.T).T
        nx = self._axis_mats[0].shape[0]
        ny = self._axis_mats[1].shape[0]
        X = u.reshape(m, ny, nx)
        Y = (self._axis_mats[0] @ X.reshape(-1, nx).T).T.reshape(m, ny, nx)
        Z = (self._axis_mats[1] @ Y.transpose(0, 2, 1).reshape(-1, ny).T).T
        return Z.reshape(m, nx, ny).transpose(0, 2, 1).reshape(m, self.n_dofs)

    def mass_solve(self, r: np.ndarray) -> np.ndarray:
        """Solve M du = r for (m, N) right-hand sides."""
        m = r.shape[0]
        if self.space == "dg":
            cells = r.reshape(m, self.mesh.n_cells, self.elem.n_loc)
            out = (cells @ self._mass_inv_ref.T) / self.tables.measure
            return out.reshape(m, self.n_dofs)
        if self.mesh.dim == 1:
            return self._axis_solvers[0].solve(r.T).T
        nx = self._axis_mats[0].shape[0]
        ny = self._axis_mats[1].shape[0]
        X = r.reshape(m, ny, nx)
        Y = self._axis_solvers[0].solve(X.reshape(-1, nx).T).T.reshape(m, ny, nx)
        Z = self._axis_solvers[1].solve(Y.transpose(0, 2, 1).reshape(-1, ny).T).T
        return Z.reshape(m, nx, ny).transpose(0, 2, 1).reshape(m, self.n_dofs)

    # ------------------------------------------------------------- fields
    def gather(self, u: np.ndarray) -> np.ndarray:
        """Global (m, N) -> per-cell blocks (m, E, n_loc)."""
        return u[:, self.cell_dofs]

    def scatter_add(self, contrib: np.ndarray) -> np.ndarray:
        """Accumulate per-cell contributions (m, E, n_loc) into (m, N)."""
        m = contrib.shape[0]
        if self.space == "dg":
            return contrib.reshape(m, self.n_dofs)
        flat = self.cell_dofs.ravel()
        out = np.empty((m, self.n_dofs))
        for c in range(m):
            out[c] = np.bincount(flat, weights=contrib[c].ravel(),
                                 minlength=self.n_dofs)
        return out

    def projected_gradient(self, U: np.ndarray) -> np.ndarray:
        """Gradient projected into the CG space, per-cell coefficients
        (m, E, dim, n_loc).

        'l2' (default) is the consistent-mass global L2 projection, which
        preserves the optimal convergence rates of the blended operator for
        every p. 'scott-zhang' picks the lowest-index adjacent cell's nodal
        gradient (the dual-functional evaluation for elementwise polynomial
        data); 'lumped' is the mass-lumped patch average.
        """
        if self.projection == "scott-zhang":
            gnod = gradient_nodal_values(self.tables, U)        # (m, E, dim, n_loc)
            glob = gnod[:, self.owner_cell, :, self.owner_loc]  # (N, m, dim)
            pg = glob.transpose(1, 2, 0)[:, :, self.cell_dofs]
            return pg.transpose(0, 2, 1, 3)
        tb = self.tables
        g_q = np.einsum("men,dqn->medq", U, tb.dphi_q)
        load = np.einsum("medq,qn,q->medn", g_q, tb.phi_q, tb.wq)
        m, dim = U.shape[0], self.mesh.dim
        flat = self.cell_dofs.ravel()
        b = np.empty((m * dim, self.n_dofs))
        k = 0
        for c in range(m):
            for d in range(dim):
                b[k] = np.bincount(flat, weights=load[c, :, d, :].ravel(),
                                   minlength=self.n_dofs)
                k += 1
        if self.projection == "lumped":
            lump = np.bincount(flat, weights=np.tile(tb.mean_w * tb.measure,
                                                     self.mesh.n_cells),
                               minlength=self.n_dofs)
            glob = (b / lump).reshape(m, dim, self.n_dofs)
        else:
            glob = self.mass_solve(b).reshape(m, dim, self.n_dofs)
        return glob[:, :, self.cell_dofs].transpose(0, 2, 1, 3)

    # ------------------------------------------------------------ assembly
    def stabilization_state(self, U: np.ndarray, pgrad=None) -> StabilizationState:
        """gamma_e, lambda_e, nu_e and alpha_q for the current stage field."""
        E = self.mesh.n_cells
        sense = U[self.sense_comp]
        if self.stab.gamma_mode == "weno":
            _, gamma = self.recon.reconstruct(sense)
        elif self.stab.gamma_mode == "zero":
            gamma = np.zeros(E)
        else:
            gamma = np.ones(E)
        dilate = self.stab.gamma_dilate
        if dilate is None:
            dilate = self.space == "cg"
        if dilate and self.stab.gamma_mode == "weno":
            nbrs = self.mesh.neighbors
            gmin = gamma.copy()
            for f in range(nbrs.shape[1]):
                valid = nbrs[:, f] >= 0
                gmin[valid] = np.minimum(gmin[valid], gamma[nbrs[valid, f]])
            gamma = gmin
        lam = local_wavespeed(self.law, U, self.tables, self.x_quad, self.x_nodes)
        state = StabilizationState.create(gamma, lam, self.tables,
                                          cutoff=self.stab.cutoff,
                                          redistribute=self.stab.redistribute)
        if self.stab.redistribute and self.elem.p > 1:
            pg_sense = None if pgrad is None else pgrad[self.sense_comp]
            _, f = dissipation_rate(self.tables, sense, pg_sense, gamma,
                                    state.nu, self.space)
            state.alpha = shock_capturing_weights(self.tables, sense, f, gamma,
                                                  cutoff=self.stab.cutoff)
        return state

    def assemble_rhs(self, u: np.ndarray, t: float) -> np.ndarray:
        return assemble_rhs(self, u, t)


def build_system(law, mesh, p, space, **kwargs) -> DiscreteSystem:
    return DiscreteSystem(law, mesh, p, space, **kwargs)


def assemble_rhs(system: DiscreteSystem, u: np.ndarray, t: float) -> np.ndarray:
    """Right-hand side r with M du/dt = r (volume flux, face fluxes, stabilization)."""
    sy = system
    law, tables = sy.law, sy.tables
    U = sy.gather(u)
    vals_q = tables.values_at_quad(U)

    pgrad = sy.projected_gradient(U) if sy.space == "cg" else None
    state = sy.stabilization_state(U, pgrad)
    sy.last_state = state

    # volume convection
    F = law.flux(vals_q, sy.x_quad)
    r_cells = np.einsum("mdeq,dqn,q->men", F, tables.dphi_q, tables.wq,
                        optimize=True)

    # stabilization
    alpha = state.alpha
    if sy.space == "cg":
        r_cells -= apply_high_order(tables, U, pgrad, state.nu, state.gamma, alpha)
    else:
        r_cells -= apply_low_order(tables, U, (1.0 - state.gamma) * state.nu, alpha)

    # interior Riemann fluxes (DG only; CG faces cancel by continuity)
    if sy.space == "dg":
        for batch in sy.interior_faces:
            axis = batch["axis"]
            fl, fr = 2 * axis + 1, 2 * axis
            trL, trR = sy._trace[fl], sy._trace[fr]
            wf = sy._face_w[fl]
            normal = np.zeros(sy.mesh.dim)
            normal[axis] = 1.0
            UL = U[:, batch["left"]] @ trL.T
            UR = U[:, batch["right"]] @ trR.T
            Fh = law.numerical_flux(UL, UR, normal, x=batch["coords"])
            r_cells[:, batch["left"]] -= np.einsum("mfq,q,qn->mfn", Fh, wf, trL)
            r_cells[:, batch["right"]] += np.einsum("mfq,q,qn->mfn", Fh, wf, trR)

    # boundary fluxes against ghost states (CG and DG)
    for batch in sy.boundary_faces:
        f = batch["face"]
        tr, wf = sy._trace[f], sy._face_w[f]
        bc = sy.bcs[batch["tag"]]
        Uin = U[:, batch["cells"]] @ tr.T
        ghost = apply_boundary_ghost(bc, Uin, batch["normal"], t, x=batch["coords"])
        Fh = law.numerical_flux(Uin, ghost, batch["normal"], x=batch["coords"])
        r_cells[:, batch["cells"]] -= np.einsum("mfq,q,qn->mfn", Fh, wf, tr)

    return sy.scatter_add(r_cells)


def cfl_timestep(system: DiscreteSystem, u: np.ndarray, cfl: float,
                 t_remaining: float = np.inf) -> float:
    """dt = cfl * min_e h_e / (lambda_e (2p + 1)), capped by the remaining time."""
    U = system.gather(u)
    lam = local_wavespeed(system.law, U, system.tables,
                          system.x_quad, system.x_nodes)
    lam_max = max(float(lam.max()), WAVESPEED_FLOOR)
    dt = cfl * system.tables.h / (lam_max * (2 * system.p + 1))
    return min(dt, t_remaining)


def _maybe_limit(system: DiscreteSystem, u: np.ndarray) -> np.ndarray:
    if not (system.limiter and system.space == "dg" and system.law.m > 1):
        return u
    cells = system.gather(u)
    limited = zhang_shu_limit(cells, system.law, system.tables,
                              system._check_matrix, system.eps_pos)
    return limited.reshape(u.shape)


def ssp_rk3_step(system: DiscreteSystem, u: np.ndarray, dt: float,
                 t: float) -> np.ndarray:
    """One Shu-Osher SSP-RK3 step; the positivity limiter runs after each stage."""
    def L(v, ts):
        return system.mass_solve(assemble_rhs(system, v, ts))

    u1 = _maybe_limit(system, u + dt * L(u, t))
    u2 = _maybe_limit(system, 0.75 * u + 0.25 * (u1 + dt * L(u1, t + dt)))
    return _maybe_limit(system,
                        u / 3.0 + (2.0 / 3.0) * (u2 + dt * L(u2, t + 0.5 * dt)))


def zhang_shu_limit(u_cells: np.ndarray, law, tables: CellTables,
                    check_matrix: np.ndarray, eps_pos: float = 1e-8) -> np.ndarray:
    """Average-preserving positivity limiter for DG Euler fields.

    Scales density deviations to enforce rho >= eps_pos at all check points,
    then scales all deviations by a bisected factor so the pressure is
    >= eps_pos there as well. Cell averages are unchanged.
    """
    u_cells = np.array(u_cells, dtype=float)
    avg = u_cells @ tables.mean_w                       # (m, E)
    p_avg = law.pressure_raw(avg)
    if np.any(avg[0] <= eps_pos) or np.any(p_avg <= eps_pos):
        bad = int(np.argmin(np.minimum(avg[0], p_avg)))
        raise StateError(
            f"cell {bad}: inadmissible cell average (rho={avg[0][bad]:.3e}, "
            f"p={p_avg[bad]:.3e}); the limiter cannot repair averages")

    vals_rho = u_cells[0] @ check_matrix.T              # (E, n_chk)
    rho_min = vals_rho.min(axis=1)
    need = rho_min < eps_pos
    if np.any(need):
        denom = np.where(need, avg[0] - rho_min, 1.0)
        theta1 = np.where(need, (avg[0] - eps_pos) / denom, 1.0)
        theta1 = np.clip(theta1, 0.0, 1.0)
        u_cells[0] = avg[0][:, None] + theta1[:, None] * (u_cells[0] - avg[0][:, None])

    vals = u_cells @ check_matrix.T                     # (m, E, n_chk)
    p_min = law.pressure_raw(vals).min(axis=-1)
    need2 = p_min < eps_pos
    if np.any(need2):
        E = u_cells.shape[1]
        lo = np.zeros(E)
        hi = np.ones(E)
        dev = vals - avg[:, :, None]
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            pm = law.pressure_raw(avg[:, :, None] + mid[None, :, None] * dev).min(axis=-1)
            ok = pm >= eps_pos
            lo = np.where(ok, mid, lo)
            hi = np.where(ok, hi, mid)
        theta2 = np.where(need2, lo, 1.0)
        u_cells = avg[:, :, None] + theta2[None, :, None] * (u_cells - avg[:, :, None])
    return u_cells


def initialize(system: DiscreteSystem, u0, kind: str = "interp") -> np.ndarray:
    """Initial data by nodal interpolation or L2 projection.

    u0: callable mapping coordinates (..., dim) to states (m, ...).
    """
    if kind == "interp":
        vals = np.asarray(u0(system.node_coords), dtype=float)
        return vals.reshape(system.law.m, system.n_dofs)
    if kind == "l2":
        quad = gauss_rule(system.mesh.dim, system.p + 2)
        phi = system.elem.tabulate(quad.points, (0,) * system.mesh.dim)
        xq = (system.mesh.cell_origins[:, None, :]
              + quad.points[None, :, :] * system.mesh.widths)
        f = np.asarray(u0(xq), dtype=float)             # (m, E, n_q)
        b_cells = np.einsum("meq,qn,q->men", f, phi,
                            quad.weights * system.tables.measure)
        return system.mass_solve(system.scatter_add(b_cells))
    raise ValueError(f"unknown initialization kind {kind!r}")


def total_mass(system: DiscreteSystem, u: np.ndarray) -> np.ndarray:
    """int u_h dx per component."""
    avg = system.gather(u) @ system.tables.mean_w
    return avg.sum(axis=1) * system.tables.measure


def assert_finite(u: np.ndarray, step: int, t: float) -> None:
    if np.isfinite(u).all():
        return
    bad = np.argwhere(~np.isfinite(u))
    comp, dof = (int(v) for v in bad[0])
    raise NumericalError(
        f"non-finite value at step {step}, t={t:.6g} "
        f"(component {comp}, dof {dof}; {len(bad)} bad entries)")


def check_state(system: DiscreteSystem, u: np.ndarray, step: int, t: float,
                rho_rel: float = 1e-9, p_rel: float = 0.25) -> None:
    """Accept/reject test for a completed step: finite values, sane DOF states.

    Density may graze zero only to machine precision relative to its domain
    maximum (a genuinely negative density signals transport breakdown and
    rejects the step). Nodal pressure is allowed to undershoot transiently
    next to extreme jumps, where the semi-discrete CG trajectory passes
    through small negative pockets before thermalizing; only a gross
    pressure collapse (beyond p_rel of the domain maximum) rejects.
    """
    assert_finite(u, step, t)
    law = system.law
    if law.m == 1:
        return
    rho = u[0]
    p = law.pressure_raw(u)
    floor_rho = -rho_rel * max(float(rho.max()), 1.0)
    floor_p = -p_rel * max(float(p.max()), 1.0)
    if rho.min() < floor_rho or p.min() < floor_p:
        dof = int(np.argmin(np.minimum(rho - floor_rho, p - floor_p)))
        raise StateError(
            f"inadmissible state at step {step}, t={t:.6g}: dof {dof} has "
            f"rho={rho[dof]:.4e}, p={p[dof]:.4e}")
