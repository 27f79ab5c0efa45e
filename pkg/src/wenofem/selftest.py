"""Built-in property checks runnable without pytest (`wenofem selftest`)."""

from __future__ import annotations

import numpy as np

from . import element as el
from . import physics as ph
from . import solver as sv
from . import stabilization as st
from . import weno as wn
from .harness import BenchmarkConfig, run
from .mesh import CellGeometry, build_mesh, face_neighbors, vertex_patch


def _checks():
    rng = np.random.default_rng(0)

    def mesh_connectivity():
        m = build_mesh(2, ((0, 1), (0, 1)), (4, 3), periodic=(True, True))
        handshake = sum(len(vertex_patch(m, i)) for i in range(m.n_vertices))
        assert handshake == m.n_cells * 4
        for e in range(m.n_cells):
            for f, nbr in enumerate(face_neighbors(m, e)):
                back = face_neighbors(m, nbr)
                assert e in back

    def partition_of_unity():
        for dim in (1, 2):
            elem = el.ReferenceElement(3, dim)
            pts = rng.random((40, dim))
            phi = elem.tabulate(pts, (0,) * dim)
            assert np.abs(phi.sum(axis=1) - 1.0).max() < 1e-12

    def taylor_roundtrip():
        elem = el.ReferenceElement(4, 2)
        cell = CellGeometry((0.2, 0.1), (0.3, 0.5))
        coeffs = rng.normal(size=elem.n_loc)
        tp = el.taylor_from_nodal(elem, coeffs, cell, (0.2, 0.1))
        back = el.nodal_from_taylor(elem, tp, cell)
        assert np.abs(back - coeffs).max() < 1e-10

    def jiang_shu_convexity():
        w = wn.jiang_shu_weights(rng.random((100, 5)), np.full(5, 0.2))
        assert np.abs(w.sum(axis=-1) - 1.0).max() < 1e-12 and w.min() >= 0.0

    def polynomial_reproduction():
        m = build_mesh(2, ((0, 1), (0, 1)), (4, 4))
        elem = el.ReferenceElement(2, 2)
        nodes = m.cell_origins[:, None, :] + elem.nodes[None, :, :] * m.widths
        U = 1.0 + nodes[..., 0] + 0.5 * nodes[..., 1] ** 2
        for scheme in ("cc", "cv"):
            rec = wn.WenoReconstructor(m, elem, wn.WenoParams(scheme=scheme))
            recon, gamma = rec.reconstruct(U)
            assert np.abs(recon - U).max() < 1e-10 and gamma.min() > 1.0 - 1e-10

    def dissipation_preservation():
        m = build_mesh(1, (0, 1), 8)
        for p in (2, 3):
            elem = el.ReferenceElement(p, 1)
            tb = el.CellTables(elem, m.widths)
            U = rng.normal(size=(50, elem.n_loc))
            gamma = rng.random(50) * 0.85
            nu = rng.random(50) + 0.1
            D0, f = st.dissipation_rate(tb, U, None, gamma, nu, "dg")
            alpha = st.shock_capturing_weights(tb, U, f, gamma)
            D1 = nu * ((alpha * f) @ tb.wq)
            assert np.abs(D1 - D0).max() <= 1e-12 * max(np.abs(D0).max(), 1e-30)

    def flux_antisymmetry():
        law = ph.Euler(1)
        uL = ph.conserved_from_primitive(rng.random((3, 50)) + 0.2)
        uR = ph.conserved_from_primitive(rng.random((3, 50)) + 0.2)
        f1 = ph.hll_flux(uL, uR, [1.0])
        f2 = ph.hll_flux(uR, uL, [-1.0])
        assert np.abs(f1 + f2).max() < 1e-12 * max(1.0, np.abs(f1).max())

    def free_stream():
        report = run(BenchmarkConfig(benchmark="burgers-1d", cells=(16,),
                                     t_end=2e-3))
        assert report.mass_drift < 1e-10

    return [
        ("mesh connectivity and handshake", mesh_connectivity),
        ("basis partition of unity", partition_of_unity),
        ("taylor transform roundtrip", taylor_roundtrip),
        ("jiang-shu weight convexity", jiang_shu_convexity),
        ("weno polynomial reproduction", polynomial_reproduction),
        ("dissipation-preserving quadrature", dissipation_preservation),
        ("numerical flux antisymmetry", flux_antisymmetry),
        ("conservation on a short run", free_stream),
    ]


def run_selftest(verbose: bool = True) -> int:
    failures = 0
    for name, fn in _checks():
        try:
            fn()
        except Exception as err:  # report and continue
            failures += 1
            print(f"FAIL  {name}: {err}")
            continue
        if verbose:
            print(f"PASS  {name}")
    if failures:
        print(f"{failures} check(s) failed")
    elif verbose:
        print("all checks passed")
    return 1 if failures else 0
