#!/usr/bin/env python3
"""Smoke test for the anderson_tree_py extension module.

Builds the cdylib with cargo, loads it, and checks a handful of exact
anchors against closed forms.
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def build_and_import():
    subprocess.run(
        ["cargo", "build", "--release", "-p", "anderson-tree-py"],
        cwd=ROOT,
        check=True,
    )
    libdir = ROOT / "target" / "release"
    candidates = list(libdir.glob("libanderson_tree_py.so")) + list(
        libdir.glob("libanderson_tree_py.dylib")
    )
    if not candidates:
        sys.exit("extension library not found under target/release")
    tmp = Path(tempfile.mkdtemp())
    shutil.copy(candidates[0], tmp / "anderson_tree_py.so")
    sys.path.insert(0, str(tmp))
    import anderson_tree_py

    return anderson_tree_py


def main():
    at = build_and_import()

    # free Green's function anchors: |w_0| = 1/sqrt(K), w_{K+1} = -1/K
    for k in (2, 3):
        w0 = at.free_green(complex(0.0, 1e-9), k)
        assert abs(abs(w0) - 1.0 / math.sqrt(k)) < 1e-6, (k, w0)
        wkp1 = at.free_green(complex(k + 1.0, 1e-12), k)
        assert abs(wkp1 - (-1.0 / k)) < 1e-5, (k, wkp1)

    # branch convention: sqrt(-4) = 2i
    s = at.branch_sqrt(complex(-4.0, 0.0))
    assert abs(s - 2j) < 1e-12, s

    # hyperbolic distance examples
    assert abs(at.hyp_dist(1j, 2j) - 0.5) < 1e-12
    assert abs(at.hyp_dist(1 + 1j, -1 + 1j) - 4.0) < 1e-12

    # Cauchy kernel at its center
    assert abs(at.cauchy_density(1j, 0.0) - 1.0 / math.pi) < 1e-12

    # zero-disorder pool sits at the free point; Lyapunov matches log|w|
    pool = at.Pool(0.0, 0.01, 2, beta=0.0, n=512, seed=1, init=at.free_green(0.01j, 2))
    pool.step(50)
    lam, err = pool.lyapunov()
    assert abs(lam - math.log(abs(at.free_green(0.01j, 2)))) < 1e-9, (lam, err)

    # small disordered solve: delocalized prediction at E = 0
    rep = at.solve(0.0, 2, 0.05, eta=1e-3, pool_size=4000, max_generations=120, seed=3)
    assert rep["criterion_margin"] > 0.0, rep["criterion_margin"]
    assert rep["phase"] == "delocalized_predicted", rep["phase"]

    # hyperbolic certificate closes at E = 3, fails at the parabolic edge
    cert = at.certify(3.0, 2, 1e-4)
    assert cert["closes"], cert
    edge = at.certify(2.0 * math.sqrt(2.0), 2, 1e-4)
    assert not edge["closes"], edge

    # law validation passes for a legal uniform law
    rep = at.validate_law("uniform", 0.05, l=2.0, tol=0.05)
    assert all(rep["passes"].values()), rep["passes"]

    print("smoke test passed")


if __name__ == "__main__":
    main()
