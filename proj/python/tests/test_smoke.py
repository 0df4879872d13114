import math
import os

import numpy as np
import pytest

import diva

DATA = os.environ.get("DIVA_DATA_DIR", os.path.join(os.path.dirname(__file__), "..", "..", "data"))


def test_dimer_fci_and_hf_start():
    model = diva.build_hubbard(diva.LatticeSpec(2, 1.0, 4.0, False, 1.0))
    assert model.n_electrons == [1, 1]
    assert diva.fci_ground_state(model).energy == pytest.approx(2.0 - 2.0 * math.sqrt(2.0), abs=1e-12)
    g = diva.initial_guess(model)
    assert np.allclose(g.up, 0.5)


def test_tp_run_on_small_ring():
    lat = diva.LatticeSpec(6, 1.0, 4.0, True, 1.0)
    res = diva.diva_run(diva.build_hubbard(lat), "tp")
    assert res.converged
    assert res.energy["total"] / 6 < diva.tight_binding_energy(diva.LatticeSpec(6, 1.0, 0.0, True, 1.0)) / 6 + 4.0
    assert res.trace[0]["iter"] == 0
    assert res.diagonal_spread < 1e-5


def test_non_interacting_limit():
    lat = diva.LatticeSpec(10, 1.0, 0.0, True, 0.6)
    res = diva.diva_run(diva.build_hubbard(lat), "mueller")
    assert res.energy["total"] == pytest.approx(diva.tight_binding_energy(lat), rel=1e-10)


def test_geometry_and_errors():
    g = diva.DensityMatrix.closed_shell(np.diag([0.3, 0.7, 1.0]))
    tag, d = diva.classify(g)
    assert tag == "Boundary"
    assert d == pytest.approx(0.0, abs=1e-12)
    weights, members = diva.idempotent_decompose(g)
    assert sum(weights) == pytest.approx(1.0)
    assert diva.frobenius_distance(diva.convex_combine(members, weights), g) < 1e-10
    bad = diva.DensityMatrix.closed_shell(np.diag([1.2, -0.2]))
    with pytest.raises(diva.NotRepresentable):
        diva.idempotent_decompose(bad)
    with pytest.raises(diva.FillingError):
        diva.build_hubbard(diva.LatticeSpec(5, 1.0, 4.0, True, 1.0))


def test_lieb_wu():
    assert diva.lieb_wu_half_filling(0.0) == pytest.approx(-4.0 / math.pi)
    assert diva.lieb_wu_half_filling(4.0) == pytest.approx(-0.573729, abs=1e-5)


def test_molecule_soft():
    model = diva.load_fcidump(os.path.join(DATA, "h2", "h2_r1.00.fcidump"))
    assert model.n_spatial == 4
    cfg = diva.DivaConfig()
    cfg.energy_tol = 1e-10
    cfg.rdm_tol = 1e-7
    cfg.max_iters = 5000
    soft = diva.SoftConfig(200, 0.3, 5)
    res = diva.soft_diva_run(model, "mueller", cfg, None, soft, 1e-8)
    assert res.converged
    assert res.energy["total"] >= diva.fci_ground_state(model).energy - 0.05


def test_vxc_rows():
    rows = diva.vxc_extract(diva.LatticeSpec(10, 1.0, 4.0, True, 1.0), [0.6, 1.0], "tp")
    assert len(rows) == 2
    assert all(r.error == "" for r in rows)
    assert len(rows[1].v_xc) == 10
