"""Smoke test for the limitfrac_py extension module.

Build and install first:  pip install --no-build-isolation crates/python
"""

import math
import tempfile
from pathlib import Path

import limitfrac_py as lf


def main():
    names = lf.preset_names()
    assert "ex1_linear" in names and "ex4_nlsl" in names, names

    try:
        lf.preset("no_such_preset")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown preset accepted")

    # hydrostatic check: K[I] = I/(2mu + 3lam), phi~ = 1/(1 + sqrt(3/5))
    m = lf.Material(1.0, 1.0, 1.0, 1.0)
    e = m.strain_nl((1.0, 1.0, 0.0, 1.0))
    want = 0.2 / (1.0 + math.sqrt(0.6))
    assert all(abs(v - want) < 1e-14 for v in (e[0], e[1], e[3])), e
    back = m.stress_sl(e)
    assert max(abs(a - b) for a, b in zip(back, (1.0, 1.0, 0.0, 1.0))) < 1e-12, back
    assert abs(lf.phi_tilde(1.5, 2.0, 0.5) - 0.8) < 1e-15

    cfg = lf.preset("ex1_linear")
    rows = lf.converge(cfg, 3)
    assert len(rows) == 3 and rows[-1][4] < rows[0][4], rows
    print("converge:", ["%.4e" % r[4] for r in rows])

    cfg = lf.preset("ex4_nlsl_reduced")
    cfg.set("mesh.global", "4")
    cfg.set("coupling.n_steps", "3")
    assert lf.Config.parse(cfg.render()).render() == cfg.render()
    sim = lf.Simulation(cfg)
    assert sim.model == lf.NLSL
    n = len(sim.vertices)
    assert len(sim.u) == 2 * n and len(sim.phi) == n
    while sim.step_index < sim.n_steps:
        rep = sim.step()
        assert rep["max_monitor"] < 1.0, rep
    bulk, crack, total = sim.energies()
    assert abs(bulk + crack - total) < 1e-12 * max(1.0, abs(total))
    print("simulation: %d cells, step %d, energies %.4e %.4e" % (sim.n_cells, sim.step_index, bulk, crack))

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "state.vtk"
        sim.write_vtk(str(path))
        assert path.read_text().startswith("# vtk DataFile Version 3.0")
        out = lf.run(cfg, str(Path(tmp) / "run"))
        assert (Path(tmp) / "run" / "run_log.csv").is_file()
    assert len(out["reports"]) == 3 and len(out["energies"]) == 4
    assert out["phi"] == sim.phi

    failed = [c for c in lf.verify() if not c[1]]
    assert not failed, failed
    print("smoke test passed")


if __name__ == "__main__":
    main()
