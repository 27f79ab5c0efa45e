"""Benchmark harness: run configuration, time loop, error norms, EOC tables.

A run is described by a BenchmarkConfig (benchmark id plus overrides), which
maps onto a DiscreteSystem via the scheme table below. The time loop uses
CFL-based steps with an adaptive safety factor: steps producing non-finite
or inadmissible DOF states are rejected and retried with a smaller step,
which handles the violent startup transients of blast-type problems without
touching the spatial discretization.
"""

from __future__ import annotations

import configparser
import io
import os
import time
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .benchmarks import BENCHMARKS, Benchmark
from .element import gauss_rule
from .mesh import build_mesh
from .output import write_csv_line, write_csv_table, write_vtk
from .physics import StateError
from .solver import (DiscreteSystem, NumericalError, StabConfig, cfl_timestep,
                     check_state, initialize, ssp_rk3_step, total_mass)
from .weno import WenoParams

# scheme id -> (weno stencil scheme, gamma mode, shock-capturing quadrature)
SCHEMES = {
    "cc-weno": ("cc", "weno", False),
    "cv-weno": ("cv", "weno", False),
    "cv-weno-sc": ("cv", "weno", True),
    "low-order": ("cv", "zero", False),
    "none": ("cv", "one", False),
}


@dataclass
class BenchmarkConfig:
    """One benchmark run; None fields fall back to the benchmark defaults."""

    benchmark: str
    space: str | None = None
    scheme: str | None = None
    p: int | None = None
    cells: tuple | None = None
    dofs: int | None = None
    t_end: float | None = None
    cfl: float | None = None
    limiter: bool | None = None
    init: str | None = None
    out: str | None = None
    output_every: int = 0
    seed: int = 0
    node_family: str = "auto"
    projection: str = "l2"
    weno_eps: float = 1e-6
    weno_r: int = 2
    weno_q_sensor: float = 1.0
    weno_q_beta: float = 2.0
    weno_gamma_vert: float = 1e-3

    def resolve(self) -> "ResolvedConfig":
        if self.benchmark not in BENCHMARKS:
            raise ValueError(f"unknown benchmark {self.benchmark!r}; "
                             f"choose from {sorted(BENCHMARKS)}")
        bench = BENCHMARKS[self.benchmark]
        scheme = self.scheme or bench.scheme
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}; choose from {sorted(SCHEMES)}")
        space = self.space or bench.space
        p = self.p if self.p is not None else bench.p
        cells = self.cells
        if cells is None:
            dofs = self.dofs if self.dofs is not None else bench.dofs
            if dofs is None:
                raise ValueError(f"{self.benchmark} needs --cells (no DOF default)")
            cells = tuple(cells_for_dofs(dofs, p, space, bench.periodic[ax],
                                         align=bench.cells_align)
                          for ax in range(bench.dim))
        elif np.isscalar(cells):
            cells = (int(cells),) * bench.dim
        else:
            cells = tuple(int(c) for c in cells)
            if len(cells) == 1 and bench.dim == 2:
                cells = cells * 2
        return ResolvedConfig(
            config=self, bench=bench, space=space, scheme=scheme, p=p,
            cells=cells,
            t_end=self.t_end if self.t_end is not None else bench.t_end,
            cfl=self.cfl if self.cfl is not None else bench.cfl,
            limiter=self.limiter if self.limiter is not None else bench.limiter,
            init=self.init or bench.init)


@dataclass
class ResolvedConfig:
    config: BenchmarkConfig
    bench: Benchmark
    space: str
    scheme: str
    p: int
    cells: tuple
    t_end: float
    cfl: float
    limiter: bool
    init: str


@dataclass
class RunReport:
    benchmark: str
    scheme: str
    space: str
    p: int
    cells: tuple
    n_dofs: int
    t_end: float
    steps: int
    rejected_steps: int
    wall_time: float
    l1_error: float | None
    u_min: np.ndarray
    u_max: np.ndarray
    gamma_min: float
    gamma_mean: float
    gamma_low_fraction: float
    mass_drift: float
    outputs: list = field(default_factory=list)

    def summary(self) -> str:
        lines = [
            f"benchmark={self.benchmark} scheme={self.scheme} space={self.space} "
            f"p={self.p} cells={'x'.join(str(c) for c in self.cells)} "
            f"dofs={self.n_dofs}",
            f"t_end={self.t_end:g} steps={self.steps} "
            f"(rejected {self.rejected_steps}) wall={self.wall_time:.1f}s",
            f"u range: [{', '.join(f'{v:.6g}' for v in self.u_min)}] .. "
            f"[{', '.join(f'{v:.6g}' for v in self.u_max)}]",
            f"gamma: min={self.gamma_min:.4f} mean={self.gamma_mean:.4f} "
            f"frac<0.9={self.gamma_low_fraction:.4f}",
            f"mass drift (relative): {self.mass_drift:.3e}",
        ]
        if self.l1_error is not None:
            lines.insert(2, f"L1 error = {self.l1_error:.6e}")
        for path in self.outputs:
            lines.append(f"wrote {path}")
        return "\n".join(lines)


def cells_for_dofs(n_dofs: int, p: int, space: str, periodic: bool,
                   align: int = 1) -> int:
    """Per-axis cell count matching a per-axis DOF budget.

    CG: E*p + 1 = N (E*p = N when periodic); DG: E*(p+1) = N. The count is
    rounded to the nearest multiple of `align` (used to keep initial
    discontinuities on cell interfaces).
    """
    if space == "cg":
        e = (n_dofs if periodic else n_dofs - 1) / p
    else:
        e = n_dofs / (p + 1)
    e = max(align, int(round(e / align)) * align)
    return e


def build_run(config: BenchmarkConfig):
    """Build (system, initial field, resolved config) for a benchmark run."""
    rc = config.resolve()
    bench = rc.bench
    law = bench.make_law()
    mesh = build_mesh(bench.dim, bench.bounds, rc.cells, bench.periodic)
    stencil, gamma_mode, redistribute = SCHEMES[rc.scheme]
    weno = WenoParams(eps=config.weno_eps, r=config.weno_r,
                      q_sensor=config.weno_q_sensor, q_beta=config.weno_q_beta,
                      gamma_vert=config.weno_gamma_vert, scheme=stencil)
    system = DiscreteSystem(
        law, mesh, rc.p, rc.space,
        bcs=bench.make_bcs(law),
        weno_params=weno,
        stab=StabConfig(gamma_mode=gamma_mode, redistribute=redistribute),
        node_family=config.node_family,
        limiter=rc.limiter,
        projection=config.projection)
    u = initialize(system, bench.u0, rc.init)
    return system, u, rc


def run(config: BenchmarkConfig) -> RunReport:
    """Execute one benchmark run and collect the report."""
    system, u, rc = build_run(config)
    bench = rc.bench
    t_end = rc.t_end

    t = 0.0
    steps = 0
    rejected = 0
    safety = bench.startup_safety
    gamma_min = 1.0
    gamma_low = 0.0
    gamma_mean = 1.0
    mass0 = total_mass(system, u)
    wall0 = time.time()
    outputs = []

    while t < t_end - 1e-13 * max(t_end, 1.0):
        dt = min(safety * cfl_timestep(system, u, rc.cfl), t_end - t)
        try:
            u_new = ssp_rk3_step(system, u, dt, t)
            check_state(system, u_new, steps, t)
        except (StateError, NumericalError) as err:
            safety *= 0.5
            rejected += 1
            if safety < 1e-12:
                raise NumericalError(
                    f"step {steps} at t={t:.6g} failed at minimal step size: {err}"
                ) from err
            continue
        u = u_new
        t += dt
        steps += 1
        safety = min(1.0, safety * 1.3)
        if system.last_state is not None:
            g = system.last_state.gamma
            gamma_min = min(gamma_min, float(g.min()))
            gamma_mean = float(g.mean())
            gamma_low = float((g < 0.9).mean())
        if config.output_every and steps % config.output_every == 0 and config.out:
            outputs.append(_write_snapshot(system, u, rc, steps))

    mass1 = total_mass(system, u)
    denom = np.maximum(np.abs(mass0), 1e-30)
    mass_drift = float(np.max(np.abs(mass1 - mass0) / denom))

    l1 = None
    if bench.exact is not None:
        l1 = l1_error(system, u, lambda x: bench.exact(x, t_end))

    if config.out:
        outputs.append(_write_snapshot(system, u, rc, steps, final=True))

    return RunReport(
        benchmark=bench.name, scheme=rc.scheme, space=rc.space, p=rc.p,
        cells=rc.cells, n_dofs=system.n_dofs, t_end=t_end, steps=steps,
        rejected_steps=rejected, wall_time=time.time() - wall0, l1_error=l1,
        u_min=u.min(axis=1), u_max=u.max(axis=1),
        gamma_min=gamma_min, gamma_mean=gamma_mean,
        gamma_low_fraction=gamma_low, mass_drift=mass_drift, outputs=outputs)


def _write_snapshot(system, u, rc, step, final=False):
    tag = "final" if final else f"step{step:07d}"
    base = os.path.join(rc.config.out,
                        f"{rc.bench.name}_{rc.scheme}_{rc.space}_p{rc.p}_{tag}")
    if system.mesh.dim == 1:
        return write_csv_line(base + ".csv", system, u,
                              _component_names(system))
    return write_vtk(base + ".vtk", system, u, _component_names(system))


def _component_names(system):
    if system.law.m == 1:
        return ["u"]
    dim = system.law.dim
    return ["rho"] + [f"mom{ax}" for ax in "xy"[:dim]] + ["energy"]


def l1_error(system: DiscreteSystem, u: np.ndarray, exact_fn,
             component: int = 0, n_extra: int = 1) -> float:
    """L1 norm of (u_h - exact) for one component with an over-integrated rule
    (p + 2 points per axis by default)."""
    quad = gauss_rule(system.mesh.dim, system.p + 1 + n_extra)
    phi = system.elem.tabulate(quad.points, (0,) * system.mesh.dim)
    xq = (system.mesh.cell_origins[:, None, :]
          + quad.points[None, :, :] * system.mesh.widths)
    uh = system.gather(u)[component] @ phi.T
    ue = np.asarray(exact_fn(xq if system.mesh.dim > 1 else xq[..., 0]), dtype=float)
    err = np.abs(uh - ue) @ quad.weights
    return float(err.sum() * system.tables.measure)


def eoc_table(errors) -> list:
    """Rows (h, error, eoc) with EOC = log(e0/e1)/log(h0/h1); the first row
    and rows after an exact (nonpositive) error carry no EOC."""
    rows = []
    prev = None
    for h, e in errors:
        eoc = None
        if prev is not None and e > 0.0 and prev[1] > 0.0:
            eoc = float(np.log(prev[1] / e) / np.log(prev[0] / h))
        rows.append((float(h), float(e), eoc))
        prev = (h, e)
    return rows


def convergence(config: BenchmarkConfig, levels) -> list:
    """Run a refinement series; returns rows (cells, h, error, eoc)."""
    results = []
    for cells in levels:
        report = run(replace(config, cells=(int(cells),) * BENCHMARKS[config.benchmark].dim,
                             dofs=None))
        if report.l1_error is None:
            raise ValueError(f"benchmark {config.benchmark} has no exact solution")
        bench = BENCHMARKS[config.benchmark]
        h = min((hi - lo) / cells for (lo, hi) in bench.bounds)
        results.append((int(cells), h, report.l1_error))
    rows = eoc_table([(h, e) for _, h, e in results])
    return [(c, h, e, eoc) for (c, _, _), (h, e, eoc) in zip(results, rows)]


# ------------------------------------------------------------- config file

_CONFIG_SECTION = "run"


def serialize_config(config: BenchmarkConfig) -> str:
    cp = configparser.ConfigParser()
    cp[_CONFIG_SECTION] = {}
    for f in fields(config):
        v = getattr(config, f.name)
        if v is None:
            continue
        if isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        cp[_CONFIG_SECTION][f.name] = str(v)
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def parse_config(text: str) -> BenchmarkConfig:
    cp = configparser.ConfigParser()
    cp.read_string(text)
    if _CONFIG_SECTION not in cp:
        raise ValueError(f"config file needs a [{_CONFIG_SECTION}] section")
    sec = cp[_CONFIG_SECTION]
    kwargs = {}
    types = {f.name: f for f in fields(BenchmarkConfig)}
    for key, raw in sec.items():
        if key not in types:
            raise ValueError(f"unknown config key {key!r}")
        kwargs[key] = _parse_value(key, raw)
    return BenchmarkConfig(**kwargs)


def _parse_value(key, raw):
    raw = raw.strip()
    if key == "cells":
        return tuple(int(v) for v in raw.split(","))
    if key in ("p", "dofs", "output_every", "seed", "weno_r"):
        return int(raw)
    if key in ("t_end", "cfl", "weno_eps", "weno_q_sensor", "weno_q_beta",
               "weno_gamma_vert"):
        return float(raw)
    if key == "limiter":
        return raw.lower() in ("1", "true", "yes", "on")
    return raw


def load_config(path: str) -> BenchmarkConfig:
    with open(path) as fh:
        return parse_config(fh.read())
