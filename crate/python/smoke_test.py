#!/usr/bin/env python3
"""Smoke test for the lowdim_heat_py extension module.

Builds the PyO3 crate, loads the resulting shared library and drives the
main types end to end. Exits nonzero on any failure.

    python3 python/smoke_test.py
"""

import json
import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def build_and_import():
    subprocess.run(
        [
            "cargo",
            "build",
            "-p",
            "lowdim-heat-py",
            "--features",
            "extension-module",
        ],
        cwd=REPO,
        check=True,
    )
    libname = {
        "linux": "liblowdim_heat_py.so",
        "darwin": "liblowdim_heat_py.dylib",
    }.get(sys.platform, "liblowdim_heat_py.so")
    built = REPO / "target" / "debug" / libname
    stage = Path(tempfile.mkdtemp(prefix="lowdim_heat_py_"))
    shutil.copy2(built, stage / "lowdim_heat_py.so")
    sys.path.insert(0, str(stage))
    import lowdim_heat_py

    return lowdim_heat_py


def main():
    lh = build_and_import()
    print(f"loaded lowdim_heat_py {lh.__version__}")

    # expressions
    w = lh.Expression("cos(3.141592653589793*(x^2+y^2))")
    assert w.eval(x=0.0, y=0.0) == 1.0
    assert abs(w.eval(x=1.0, y=0.0) + 1.0) < 1e-15
    print("PASS expression parsing and evaluation")

    # spectral reference functions
    root = lh.bessel_jprime_root(1, 1)
    assert abs(root - 1.8411838) < 1e-6, root
    assert abs(lh.bessel_j(0, 0.0) - 1.0) < 1e-15
    print(f"PASS bessel: j'_(1,1) = {root:.9f}")

    # geometry / meshing
    s = lh.Structure.crossing_segments()
    assert s.n_components == 2
    assert abs(s.total_measure - 4.0) < 1e-12
    assert s.coupling_classes() == [[0, 1]]
    [(a, b, kind, coupled)] = s.junctions()
    assert (a, b, kind, coupled) == (0, 1, "point", True)
    mesh = s.mesh(2.0 / 64.0)
    min_angle, max_aspect, h_max, n_dofs = mesh.quality()
    assert min_angle is None and n_dofs == mesh.n_dofs
    print(f"PASS structure and mesh: {mesh!r}, h_max = {h_max}")

    # stationary solve against the closed form
    u = mesh.solve_stationary({0: "x", 1: "0"})
    err = mesh.l2_error(u, {0: "-x^3/6 + x/2", 1: "0"})
    assert err < 5e-4, err
    print(f"PASS stationary solve: L2 error {err:.3e}")

    # junction-aware interpolation rejects jumps
    discs = lh.Structure.crossing_discs()
    dmesh = discs.mesh(0.2)
    try:
        dmesh.interpolate({0: "cos(3.141592653589793*(x^2+y^2))", 1: "0"})
    except ValueError:
        pass
    else:
        raise AssertionError("glued discontinuous data slipped through")
    print("PASS junction continuity check")

    # parabolic decay
    traj = dmesh.run_parabolic(dt=0.02, t_final=0.5, theta=1.0, seed=3)
    l2 = traj["l2_norm"]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(l2, l2[1:]))
    assert traj["energy"][-1] < traj["energy"][0]
    print(f"PASS parabolic decay: |u| {l2[0]:.4f} -> {l2[-1]:.4f}")

    # Poincare constant of the interval
    seg = lh.Structure.from_json(
        json.dumps(
            {
                "components": [
                    {"kind": "segment", "p0": [-1.0, 0.0, 0.0], "p1": [1.0, 0.0, 0.0]}
                ]
            }
        )
    )
    consts = seg.mesh(2.0 / 128.0).poincare_constants()
    [(cls, c, lam2, res)] = consts
    want = 4.0 / math.pi**2
    assert abs(c - want) < 0.01 * want, consts
    print(f"PASS poincare: C = {c:.6f} (want {want:.6f}), residual {res:.1e}")

    # scenario pipeline
    out = Path(tempfile.mkdtemp(prefix="lowdim_out_"))
    summary = json.loads(
        lh.run_scenario_file(
            str(REPO / "scenarios" / "crossing_segments_poisson.json"), str(out)
        )
    )
    assert summary["passed"], summary
    assert (out / "crossing_segments_poisson.vtk").exists()
    print(f"PASS scenario pipeline: l2_error {summary['metrics']['l2_error']:.3e}")

    print("smoke test OK")


if __name__ == "__main__":
    main()
