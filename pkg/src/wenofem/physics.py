"""Flux functions, wave-speed bounds, numerical fluxes, exact Riemann solver.

State arrays carry the component axis first: U has shape (m, ...) with m = 1
for scalar laws and m = dim + 2 for the Euler equations (density, momentum
components, total energy density). Flux evaluations return (m, dim, ...).
"""

from __future__ import annotations

import numpy as np


class StateError(ValueError):
    """Nonphysical state (nonpositive density or pressure)."""


ADMISSIBLE_FLOOR = 1e-12


# --------------------------------------------------------------------- laws

class ConservationLaw:
    """Base class: flux, wave-speed bounds, admissibility, numerical flux."""

    m = 1
    dim = 1
    name = "law"

    def flux(self, U, x=None) -> np.ndarray:
        raise NotImplementedError

    def max_speed(self, U, x=None) -> np.ndarray:
        """Spectral radius of the flux Jacobian maximized over directions."""
        raise NotImplementedError

    def llf_speed(self, uL, uR, normal, x=None) -> np.ndarray:
        """Dissipation bound max |f'(u) . n| for the local Lax-Friedrichs flux."""
        raise NotImplementedError

    def admissible(self, U) -> np.ndarray:
        return np.ones(np.asarray(U).shape[1:], dtype=bool)

    def check_admissible(self, U) -> None:
        pass

    def numerical_flux(self, uL, uR, normal, x=None) -> np.ndarray:
        return llf_flux(self, uL, uR, normal, x)


class LinearAdvection(ConservationLaw):
    """Scalar advection with constant or space-dependent velocity."""

    name = "advection"

    def __init__(self, velocity, dim: int = 1):
        self.dim = dim
        if callable(velocity):
            self.velocity_fn = velocity
        else:
            v = np.atleast_1d(np.asarray(velocity, dtype=float))
            self.velocity_fn = None
            self._v_const = v
            if len(v) != dim:
                raise ValueError("velocity dimension mismatch")

    def velocity(self, x, shape) -> np.ndarray:
        """Velocity as (..., dim) broadcast against the state shape."""
        if self.velocity_fn is None:
            return np.broadcast_to(self._v_const, shape + (self.dim,))
        if x is None:
            raise ValueError("space-dependent advection needs coordinates")
        return np.broadcast_to(self.velocity_fn(np.asarray(x, dtype=float)), shape + (self.dim,))

    def flux(self, U, x=None):
        U = np.asarray(U, dtype=float)
        v = self.velocity(x, U.shape[1:])
        return np.moveaxis(v, -1, 0)[None, ...] * U[:, None, ...]

    def max_speed(self, U, x=None):
        U = np.asarray(U, dtype=float)
        v = self.velocity(x, U.shape[1:])
        return np.sqrt((v ** 2).sum(axis=-1))

    def llf_speed(self, uL, uR, normal, x=None):
        shape = np.asarray(uL).shape[1:]
        v = self.velocity(x, shape)
        return np.abs(v @ np.asarray(normal, dtype=float))


class Burgers(ConservationLaw):
    """1D inviscid Burgers equation, f(u) = u^2 / 2."""

    name = "burgers"
    dim = 1

    def flux(self, U, x=None):
        U = np.asarray(U, dtype=float)
        return 0.5 * U[:, None, ...] ** 2

    def max_speed(self, U, x=None):
        return np.abs(np.asarray(U, dtype=float)[0])

    def llf_speed(self, uL, uR, normal, x=None):
        n = float(np.asarray(normal).reshape(()))
        return np.maximum(np.abs(uL[0]), np.abs(uR[0])) * abs(n)


class KPP(ConservationLaw):
    """2D scalar problem with the nonconvex flux (sin u, cos u); |f'| <= 1."""

    name = "kpp"
    dim = 2

    def flux(self, U, x=None):
        U = np.asarray(U, dtype=float)
        return np.stack([np.sin(U, dtype=float), np.cos(U, dtype=float)], axis=1)

    def max_speed(self, U, x=None):
        return np.ones(np.asarray(U).shape[1:])

    def llf_speed(self, uL, uR, normal, x=None):
        n = np.asarray(normal, dtype=float)
        return np.full(np.asarray(uL).shape[1:], float(np.linalg.norm(n)))


class Euler(ConservationLaw):
    """Compressible Euler equations with a polytropic ideal gas law."""

    name = "euler"

    def __init__(self, dim: int = 1, gamma: float = 1.4):
        self.dim = dim
        self.m = dim + 2
        self.gamma = gamma

    def pressure(self, U) -> np.ndarray:
        return pressure(U, self.gamma)

    def pressure_raw(self, U) -> np.ndarray:
        """Pressure without admissibility checks (used by limiters)."""
        U = np.asarray(U, dtype=float)
        rho = U[0]
        kinetic = 0.5 * (U[1:1 + self.dim] ** 2).sum(axis=0) / rho
        return (self.gamma - 1.0) * (U[-1] - kinetic)

    def sound_speed(self, U) -> np.ndarray:
        """Sound speed with pressure/density clipped at the admissibility floor.

        Keeps wave-speed bounds finite through transient sub-nodal
        undershoots; admissibility of actual DOF values is enforced
        separately.
        """
        U = np.asarray(U, dtype=float)
        rho = np.maximum(U[0], ADMISSIBLE_FLOOR)
        p = np.maximum(self.pressure_raw(U), ADMISSIBLE_FLOOR)
        return np.sqrt(self.gamma * p / rho)

    def flux(self, U, x=None):
        U = np.asarray(U, dtype=float)
        rho = U[0]
        mom = U[1:1 + self.dim]
        v = mom / rho
        p = self.pressure_raw(U)
        F = np.empty((self.m, self.dim) + U.shape[1:])
        F[0] = mom
        for d in range(self.dim):
            F[1 + d] = mom * v[d]
            F[1 + d, d] += p
        F[-1] = (U[-1] + p) * v
        return F

    def max_speed(self, U, x=None):
        U = np.asarray(U, dtype=float)
        rho = np.maximum(U[0], ADMISSIBLE_FLOOR)
        v = np.sqrt(((U[1:1 + self.dim] / rho) ** 2).sum(axis=0))
        return v + self.sound_speed(U)

    def admissible(self, U, floor: float = ADMISSIBLE_FLOOR):
        U = np.asarray(U, dtype=float)
        return (U[0] > floor) & (self.pressure_raw(U) > floor)

    def check_admissible(self, U, floor: float = ADMISSIBLE_FLOOR):
        ok = self.admissible(U, floor)
        if not ok.all():
            U = np.asarray(U, dtype=float)
            bad = np.nonzero(~ok)
            rho_min = float(U[0][bad].min()) if U[0][bad].size else float("nan")
            p_min = float(self.pressure_raw(U)[bad].min())
            raise StateError(
                f"inadmissible Euler state at {len(bad[0])} point(s): "
                f"min rho = {rho_min:.3e}, min p = {p_min:.3e}, "
                f"first index {tuple(int(b[0]) for b in bad)}")

    def numerical_flux(self, uL, uR, normal, x=None):
        return hll_flux(uL, uR, normal, self.gamma)


# ------------------------------------------------------------------- fluxes

def pressure(state, gamma: float = 1.4) -> np.ndarray | float:
    """Ideal-gas pressure p = (gamma - 1)(rhoE - |rho v|^2 / (2 rho))."""
    U = np.asarray(state, dtype=float)
    dim = U.shape[0] - 2
    rho = U[0]
    if np.any(rho <= ADMISSIBLE_FLOOR):
        raise StateError("nonpositive density")
    p = (gamma - 1.0) * (U[-1] - 0.5 * (U[1:1 + dim] ** 2).sum(axis=0) / rho)
    if np.any(p <= ADMISSIBLE_FLOOR):
        raise StateError("nonpositive pressure")
    return p if p.ndim else float(p)


def flux(law: ConservationLaw, state, x=None) -> np.ndarray:
    """Flux matrix f(u) of shape (m, dim, ...)."""
    return law.flux(np.asarray(state, dtype=float), x)


def llf_flux(law: ConservationLaw, uL, uR, normal, x=None) -> np.ndarray:
    """Local Lax-Friedrichs flux 0.5 (f(uL) + f(uR)) . n - 0.5 lambda (uR - uL)."""
    uL = np.asarray(uL, dtype=float)
    uR = np.asarray(uR, dtype=float)
    n = np.asarray(normal, dtype=float)
    fn = 0.5 * np.einsum("md...,d->m...", law.flux(uL, x) + law.flux(uR, x), n)
    lam = law.llf_speed(uL, uR, n, x)
    return fn - 0.5 * lam * (uR - uL)


def hll_flux(uL, uR, normal, gamma: float = 1.4) -> np.ndarray:
    """Harten-Lax-van Leer flux for the Euler equations.

    Wave-speed estimates: sL = min(vL.n - cL, vR.n - cR),
    sR = max(vL.n + cL, vR.n + cR).
    """
    uL = np.asarray(uL, dtype=float)
    uR = np.asarray(uR, dtype=float)
    n = np.asarray(normal, dtype=float)
    dim = len(n)
    law = Euler(dim=dim, gamma=gamma)
    fL = np.einsum("md...,d->m...", law.flux(uL), n)
    fR = np.einsum("md...,d->m...", law.flux(uR), n)
    vnL = np.einsum("d...,d->...", uL[1:1 + dim], n) / uL[0]
    vnR = np.einsum("d...,d->...", uR[1:1 + dim], n) / uR[0]
    cL = law.sound_speed(uL)
    cR = law.sound_speed(uR)
    sL = np.minimum(vnL - cL, vnR - cR)
    sR = np.maximum(vnL + cL, vnR + cR)

    dsafe = np.where(sR - sL > 0.0, sR - sL, 1.0)
    fmid = (sR * fL - sL * fR + sL * sR * (uR - uL)) / dsafe
    out = np.where(sL >= 0.0, fL, np.where(sR <= 0.0, fR, fmid))
    return out


# --------------------------------------------------- exact Riemann solver

class RiemannSolution:
    """Self-similar solution of a 1D Euler Riemann problem (Newton star state)."""

    def __init__(self, primL, primR, gamma: float = 1.4, tol: float = 1e-12):
        self.gamma = float(gamma)
        self.rhoL, self.vL, self.pL = (float(v) for v in primL)
        self.rhoR, self.vR, self.pR = (float(v) for v in primR)
        if min(self.rhoL, self.rhoR, self.pL, self.pR) <= 0.0:
            raise StateError("Riemann data requires positive density and pressure")
        g = self.gamma
        self.cL = np.sqrt(g * self.pL / self.rhoL)
        self.cR = np.sqrt(g * self.pR / self.rhoR)
        if 2.0 * (self.cL + self.cR) / (g - 1.0) <= self.vR - self.vL:
            raise StateError("vacuum-generating Riemann data is unsupported")
        self.p_star, self.v_star = self._solve_star(tol)
        self.left_wave = "shock" if self.p_star > self.pL else "rarefaction"
        self.right_wave = "shock" if self.p_star > self.pR else "rarefaction"
        self.rho_star_L = self._star_density(self.rhoL, self.pL, self.p_star)
        self.rho_star_R = self._star_density(self.rhoR, self.pR, self.p_star)

    def _branch(self, p, rho_k, p_k, c_k):
        """Toro's pressure function f_K(p) and its derivative."""
        g = self.gamma
        if p > p_k:  # shock
            A = 2.0 / ((g + 1.0) * rho_k)
            B = (g - 1.0) / (g + 1.0) * p_k
            root = np.sqrt(A / (p + B))
            f = (p - p_k) * root
            df = root * (1.0 - 0.5 * (p - p_k) / (p + B))
        else:  # rarefaction
            f = 2.0 * c_k / (g - 1.0) * ((p / p_k) ** ((g - 1.0) / (2.0 * g)) - 1.0)
            df = (p / p_k) ** (-(g + 1.0) / (2.0 * g)) / (rho_k * c_k)
        return f, df

    def _pressure_fn(self, p):
        fL, dL = self._branch(p, self.rhoL, self.pL, self.cL)
        fR, dR = self._branch(p, self.rhoR, self.pR, self.cR)
        return fL + fR + (self.vR - self.vL), dL + dR

    def _solve_star(self, tol):
        g = self.gamma
        # primitive-variable guess, clipped away from zero
        p = max(0.5 * (self.pL + self.pR)
                - 0.125 * (self.vR - self.vL) * (self.rhoL + self.rhoR) * (self.cL + self.cR),
                tol)
        scale = max(self.pL, self.pR, 1.0)
        for _ in range(200):
            f, df = self._pressure_fn(p)
            dp = f / df
            p_new = p - dp
            if p_new <= 0.0:
                p_new = 0.5 * p
            if abs(p_new - p) <= tol * max(p, tol) and abs(f) <= 1e-12 * scale:
                p = p_new
                break
            p = p_new
        f, _ = self._pressure_fn(p)
        if abs(f) > 1e-10 * scale:
            raise RuntimeError(f"star-state Newton iteration stalled, residual {f:.3e}")
        fL, _ = self._branch(p, self.rhoL, self.pL, self.cL)
        fR, _ = self._branch(p, self.rhoR, self.pR, self.cR)
        v = 0.5 * (self.vL + self.vR) + 0.5 * (fR - fL)
        return p, v

    def _star_density(self, rho_k, p_k, p_star):
        g = self.gamma
        if p_star > p_k:  # shock: Rankine-Hugoniot
            r = p_star / p_k
            gm = (g - 1.0) / (g + 1.0)
            return rho_k * (r + gm) / (gm * r + 1.0)
        return rho_k * (p_star / p_k) ** (1.0 / g)  # isentropic

    def shock_speeds(self):
        """Speeds of any shock waves as {'left': s} / {'right': s}."""
        g = self.gamma
        out = {}
        if self.left_wave == "shock":
            out["left"] = self.vL - self.cL * np.sqrt(
                (g + 1.0) / (2.0 * g) * self.p_star / self.pL + (g - 1.0) / (2.0 * g))
        if self.right_wave == "shock":
            out["right"] = self.vR + self.cR * np.sqrt(
                (g + 1.0) / (2.0 * g) * self.p_star / self.pR + (g - 1.0) / (2.0 * g))
        return out

    def sample(self, xi) -> np.ndarray:
        """Primitive states (rho, v, p) at similarity coordinates xi = x/t."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        g = self.gamma
        rho = np.empty_like(xi)
        v = np.empty_like(xi)
        p = np.empty_like(xi)

        left_of_contact = xi <= self.v_star
        # left side
        if self.left_wave == "shock":
            sL = self.shock_speeds()["left"]
            pre = xi < sL
            rho[pre] = self.rhoL; v[pre] = self.vL; p[pre] = self.pL
            mid = ~pre & left_of_contact
            rho[mid] = self.rho_star_L; v[mid] = self.v_star; p[mid] = self.p_star
        else:
            c_star = self.cL * (self.p_star / self.pL) ** ((g - 1.0) / (2.0 * g))
            head, tail = self.vL - self.cL, self.v_star - c_star
            pre = xi < head
            rho[pre] = self.rhoL; v[pre] = self.vL; p[pre] = self.pL
            fan = (xi >= head) & (xi < tail)
            u_f = (2.0 / (g + 1.0)) * (self.cL + 0.5 * (g - 1.0) * self.vL + xi[fan])
            c_f = self.cL - 0.5 * (g - 1.0) * (u_f - self.vL)
            rho[fan] = self.rhoL * (c_f / self.cL) ** (2.0 / (g - 1.0))
            v[fan] = u_f
            p[fan] = self.pL * (c_f / self.cL) ** (2.0 * g / (g - 1.0))
            mid = (xi >= tail) & left_of_contact
            rho[mid] = self.rho_star_L; v[mid] = self.v_star; p[mid] = self.p_star
        # right side
        right = ~left_of_contact
        if self.right_wave == "shock":
            sR = self.shock_speeds()["right"]
            post = right & (xi <= sR)
            rho[post] = self.rho_star_R; v[post] = self.v_star; p[post] = self.p_star
            pre = xi > sR
            rho[pre] = self.rhoR; v[pre] = self.vR; p[pre] = self.pR
        else:
            c_star = self.cR * (self.p_star / self.pR) ** ((g - 1.0) / (2.0 * g))
            head, tail = self.vR + self.cR, self.v_star + c_star
            post = right & (xi <= tail)
            rho[post] = self.rho_star_R; v[post] = self.v_star; p[post] = self.p_star
            fan = (xi > tail) & (xi <= head)
            u_f = (2.0 / (g + 1.0)) * (-self.cR + 0.5 * (g - 1.0) * self.vR + xi[fan])
            c_f = self.cR + 0.5 * (g - 1.0) * (u_f - self.vR)
            rho[fan] = self.rhoR * (c_f / self.cR) ** (2.0 / (g - 1.0))
            v[fan] = u_f
            p[fan] = self.pR * (c_f / self.cR) ** (2.0 * g / (g - 1.0))
            pre = xi > head
            rho[pre] = self.rhoR; v[pre] = self.vR; p[pre] = self.pR
        return np.stack([rho, v, p])

    def conserved(self, xi) -> np.ndarray:
        """Conserved states (rho, rho v, rho E) at xi = x/t."""
        rho, v, p = self.sample(xi)
        E = p / (self.gamma - 1.0) + 0.5 * rho * v ** 2
        return np.stack([rho, rho * v, E])


def exact_riemann(primL, primR, gamma: float = 1.4, xi=None):
    """Solve a Riemann problem; returns sampled primitives or the solution object.

    With `xi` given (similarity coordinates x/t) returns a (3, len(xi)) array
    of (rho, v, p); otherwise returns the RiemannSolution.
    """
    sol = RiemannSolution(primL, primR, gamma)
    if xi is None:
        return sol
    return sol.sample(xi)


def conserved_from_primitive(prim, gamma: float = 1.4) -> np.ndarray:
    """(rho, v..., p) -> (rho, rho v..., rho E) for any spatial dimension."""
    prim = np.asarray(prim, dtype=float)
    dim = prim.shape[0] - 2
    rho = prim[0]
    v = prim[1:1 + dim]
    p = prim[-1]
    out = np.empty_like(prim)
    out[0] = rho
    out[1:1 + dim] = rho * v
    out[-1] = p / (gamma - 1.0) + 0.5 * rho * (v ** 2).sum(axis=0)
    return out


def primitive_from_conserved(U, gamma: float = 1.4) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    dim = U.shape[0] - 2
    rho = U[0]
    v = U[1:1 + dim] / rho
    p = (gamma - 1.0) * (U[-1] - 0.5 * rho * (v ** 2).sum(axis=0))
    out = np.empty_like(U)
    out[0] = rho
    out[1:1 + dim] = v
    out[-1] = p
    return out
