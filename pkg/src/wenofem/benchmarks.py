"""Benchmark problem definitions: laws, domains, initial and boundary data.

Each benchmark bundles everything the harness needs to build a run: the
conservation law, mesh geometry, initial state, boundary conditions, final
time, scheme defaults, and (when available) the exact solution used for
error norms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .physics import (Burgers, Euler, KPP, LinearAdvection, RiemannSolution,
                      conserved_from_primitive)
from .solver import BoundaryCondition

GAMMA_GAS = 1.4

# solid body rotation: one revolution per unit time
ROTATION_RATE = 2.0 * np.pi
BODY_RADIUS = 0.15
HUMP_CENTER = (0.25, 0.5)
CONE_CENTER = (0.5, 0.25)
CYLINDER_CENTER = (0.5, 0.75)
SLOT_HALF_WIDTH = 0.025
SLOT_TOP = 0.85

SOD_LEFT = (1.0, 0.75, 1.0)
SOD_RIGHT = (0.125, 0.0, 0.1)
SOD_SPLIT = 0.25

DMR_POST = (8.0, 8.25 * np.cos(np.pi / 6.0), -8.25 * np.sin(np.pi / 6.0), 116.5)
DMR_PRE = (1.4, 0.0, 0.0, 1.0)
DMR_X0 = 1.0 / 6.0


@dataclass
class Benchmark:
    name: str
    dim: int
    make_law: callable
    bounds: tuple
    periodic: tuple
    u0: callable
    make_bcs: callable
    t_end: float
    space: str = "cg"
    scheme: str = "cv-weno"
    p: int = 2
    dofs: int = 257
    init: str = "interp"
    cfl: float = 0.1
    limiter: bool = False
    startup_safety: float = 1.0
    exact: callable | None = None       # (x, t) -> component-0 values
    cells_align: int = 1                # pick cell counts divisible by this


def _rot_velocity(x):
    v = np.empty(x.shape)
    v[..., 0] = ROTATION_RATE * (0.5 - x[..., 1])
    v[..., 1] = ROTATION_RATE * (x[..., 0] - 0.5)
    return v


def solid_body_shapes(x) -> np.ndarray:
    """Slotted cylinder, cone and smooth hump on the unit square."""
    xx, yy = x[..., 0], x[..., 1]
    u = np.zeros(xx.shape)

    r = np.hypot(xx - HUMP_CENTER[0], yy - HUMP_CENTER[1]) / BODY_RADIUS
    hump = 0.25 * (1.0 + np.cos(np.pi * np.minimum(r, 1.0)))
    u = np.where(r <= 1.0, hump, u)

    r = np.hypot(xx - CONE_CENTER[0], yy - CONE_CENTER[1]) / BODY_RADIUS
    u = np.where(r <= 1.0, np.maximum(1.0 - r, u), u)

    r = np.hypot(xx - CYLINDER_CENTER[0], yy - CYLINDER_CENTER[1]) / BODY_RADIUS
    in_cyl = (r <= 1.0) & ((np.abs(xx - CYLINDER_CENTER[0]) >= SLOT_HALF_WIDTH)
                           | (yy >= SLOT_TOP))
    return np.where(in_cyl, 1.0, u)


def _sbr_exact(x, t):
    # rotate sample points backward around the domain center
    theta = ROTATION_RATE * t
    c, s = np.cos(theta), np.sin(theta)
    dx, dy = x[..., 0] - 0.5, x[..., 1] - 0.5
    back = np.stack([0.5 + c * dx + s * dy, 0.5 - s * dx + c * dy], axis=-1)
    return solid_body_shapes(back)


def _burgers_exact(x, t):
    """Characteristic solution of u_t + (u^2/2)_x = 0 with u0 = sin(2 pi x).

    Newton iteration on u = sin(2 pi (x - u t)); single-valued for
    t < 1/(2 pi).
    """
    if t >= 1.0 / (2.0 * np.pi):
        raise ValueError("Burgers characteristics cross at t = 1/(2 pi)")
    u = np.sin(2.0 * np.pi * x)
    for _ in range(100):
        arg = 2.0 * np.pi * (x - u * t)
        f = u - np.sin(arg)
        df = 1.0 + 2.0 * np.pi * t * np.cos(arg)
        du = f / df
        u = u - du
        if np.abs(du).max() < 1e-15:
            break
    return u


SMOOTH_STEP_SHARPNESS = 10.0


def _smooth_step(x):
    # C-infinity, exactly 1-periodic smoothed step profile
    return 0.5 * (1.0 + np.tanh(SMOOTH_STEP_SHARPNESS * np.cos(2.0 * np.pi * x)))


def _kpp_u0(x):
    r = np.hypot(x[..., 0], x[..., 1])
    return np.where(r <= 1.0, 3.5 * np.pi, 0.25 * np.pi)[None]


def _sod_u0(x):
    xx = x[..., 0]
    UL = conserved_from_primitive(SOD_LEFT, GAMMA_GAS)
    UR = conserved_from_primitive(SOD_RIGHT, GAMMA_GAS)
    shape = (3,) + (1,) * xx.ndim
    return np.where(xx < SOD_SPLIT, UL.reshape(shape), UR.reshape(shape))


def _sod_exact_density(x, t):
    sol = RiemannSolution(SOD_LEFT, SOD_RIGHT, GAMMA_GAS)
    if t <= 0.0:
        return _sod_u0(x[..., None] * np.ones(1))[0]
    return sol.sample((x - SOD_SPLIT) / t)[0].reshape(np.shape(x))


def _blast_u0(x):
    xx = x[..., 0]
    p0 = np.where(xx < 0.1, 1000.0, np.where(xx <= 0.9, 0.01, 100.0))
    prim = np.stack([np.ones_like(xx), np.zeros_like(xx), p0])
    return conserved_from_primitive(prim, GAMMA_GAS)


def _dmr_shock_position(y, t=0.0):
    return DMR_X0 + (y + 20.0 * t) / np.sqrt(3.0)


def _dmr_u0(x):
    post = conserved_from_primitive(np.asarray(DMR_POST), GAMMA_GAS)
    pre = conserved_from_primitive(np.asarray(DMR_PRE), GAMMA_GAS)
    behind = x[..., 0] < _dmr_shock_position(x[..., 1])
    shape = (4,) + (1,) * behind.ndim
    return np.where(behind, post.reshape(shape), pre.reshape(shape))


def _dmr_top_state(x, t):
    post = conserved_from_primitive(np.asarray(DMR_POST), GAMMA_GAS)
    pre = conserved_from_primitive(np.asarray(DMR_PRE), GAMMA_GAS)
    behind = x[..., 0] < DMR_X0 + (1.0 + 20.0 * t) / np.sqrt(3.0)
    shape = (4,) + (1,) * behind.ndim
    return np.where(behind, post.reshape(shape), pre.reshape(shape))


def _dmr_bottom_ghost(interior, x, normal, t):
    """Post-shock inflow ahead of the wall start, reflective wall beyond."""
    post = conserved_from_primitive(np.asarray(DMR_POST), GAMMA_GAS)
    mirrored = interior.copy()
    mn = np.einsum("d...,d->...", interior[1:3], normal)
    mirrored[1:3] = interior[1:3] - 2.0 * mn * normal.reshape(2, *([1] * mn.ndim))
    inflow = x[..., 0] < DMR_X0
    shape = (4,) + (1,) * inflow.ndim
    return np.where(inflow, post.reshape(shape), mirrored)


BENCHMARKS = {}


def _register(bench: Benchmark):
    BENCHMARKS[bench.name] = bench
    return bench


_register(Benchmark(
    name="solid-body-rotation",
    dim=2,
    make_law=lambda: LinearAdvection(_rot_velocity, dim=2),
    bounds=((0.0, 1.0), (0.0, 1.0)),
    periodic=(False, False),
    u0=lambda x: solid_body_shapes(x)[None],
    make_bcs=lambda law: {tag: BoundaryCondition("dirichlet", np.array([0.0]))
                          for tag in ("left", "right", "bottom", "top")},
    t_end=1.0,
    space="cg", scheme="cv-weno", p=4, dofs=257, init="interp",
    exact=_sbr_exact,
))

_register(Benchmark(
    name="burgers-1d",
    dim=1,
    make_law=Burgers,
    bounds=((0.0, 1.0),),
    periodic=(True,),
    u0=lambda x: np.sin(2.0 * np.pi * x[..., 0])[None],
    make_bcs=lambda law: {},
    t_end=0.1,
    space="cg", scheme="cv-weno", p=2, dofs=257, init="l2", cfl=0.3,
    exact=lambda x, t: _burgers_exact(x, t),
))

_register(Benchmark(
    name="advection-1d-smooth-step",
    dim=1,
    make_law=lambda: LinearAdvection([1.0], dim=1),
    bounds=((0.0, 1.0),),
    periodic=(True,),
    u0=lambda x: _smooth_step(x[..., 0])[None],
    make_bcs=lambda law: {},
    t_end=1.0,
    space="cg", scheme="cv-weno", p=2, dofs=257, init="l2", cfl=0.3,
    exact=lambda x, t: _smooth_step(x - t),
))

_register(Benchmark(
    name="kpp",
    dim=2,
    make_law=KPP,
    bounds=((-2.0, 2.0), (-2.5, 1.5)),
    periodic=(False, False),
    u0=_kpp_u0,
    make_bcs=lambda law: {tag: BoundaryCondition("dirichlet",
                                                 np.array([0.25 * np.pi]))
                          for tag in ("left", "right", "bottom", "top")},
    t_end=1.0,
    space="cg", scheme="cv-weno", p=2, dofs=257, init="interp",
))

_register(Benchmark(
    name="sod-modified",
    dim=1,
    make_law=lambda: Euler(dim=1, gamma=GAMMA_GAS),
    bounds=((0.0, 1.0),),
    periodic=(False,),
    u0=_sod_u0,
    make_bcs=lambda law: {
        "left": BoundaryCondition("dirichlet",
                                  conserved_from_primitive(SOD_LEFT, GAMMA_GAS)),
        "right": BoundaryCondition("reflective"),
    },
    t_end=0.2,
    space="cg", scheme="cv-weno", p=2, dofs=257, init="interp",
    startup_safety=0.1,
    exact=_sod_exact_density,
    cells_align=4,
))

_register(Benchmark(
    name="blast-wave",
    dim=1,
    make_law=lambda: Euler(dim=1, gamma=GAMMA_GAS),
    bounds=((0.0, 1.0),),
    periodic=(False,),
    u0=_blast_u0,
    make_bcs=lambda law: {
        "left": BoundaryCondition("reflective"),
        "right": BoundaryCondition("reflective"),
    },
    t_end=0.038,
    space="cg", scheme="cv-weno", p=2, dofs=1025, init="interp",
    startup_safety=1e-3,
))

_register(Benchmark(
    name="double-mach",
    dim=2,
    make_law=lambda: Euler(dim=2, gamma=GAMMA_GAS),
    bounds=((0.0, 4.0), (0.0, 1.0)),
    periodic=(False, False),
    u0=_dmr_u0,
    make_bcs=lambda law: {
        "left": BoundaryCondition("dirichlet",
                                  conserved_from_primitive(np.asarray(DMR_POST),
                                                           GAMMA_GAS)),
        "right": BoundaryCondition("outflow"),
        "bottom": BoundaryCondition("custom", _dmr_bottom_ghost),
        "top": BoundaryCondition("dirichlet", _dmr_top_state),
    },
    t_end=0.2,
    space="dg", scheme="cv-weno", p=2, dofs=None, init="interp",
    limiter=True, startup_safety=1e-2,
))
