import json
import math

import numpy as np
import pytest

import capaf


def solid_cap_volume(theta):
    c = math.cos(theta)
    return math.pi * (1 - c) ** 2 * (2 + c) / 3


@pytest.fixture(scope="module")
def grid():
    return capaf.build_grid(1.1, 48, 48)


def test_grid_properties(grid):
    assert grid.n_rho == 48 and grid.n_phi == 48
    assert grid.node_count == 48 * (48 + 1)  # boundary ring included
    assert len(grid.rho_nodes) == 48 + 1
    assert grid.rho_nodes[-1] == pytest.approx(1.1)
    assert grid.rho_nodes[0] > 0.0
    assert "theta=" in repr(grid)


def test_cap_volume_matches_closed_form(grid):
    l = capaf.ell_values(grid)
    v = capaf.mixed_volume(grid, l, l, l)
    assert v == pytest.approx(solid_cap_volume(1.1), rel=1e-5)
    assert capaf.cap_volume(1.1) == pytest.approx(solid_cap_volume(1.1), rel=1e-14)


def test_mixed_volume_homogeneity(grid):
    a = capaf.random_body(grid, 3).values
    b = capaf.random_body(grid, 4).values
    c = capaf.random_body(grid, 5).values
    base = capaf.mixed_volume(grid, a, b, c)
    assert capaf.mixed_volume(grid, 2.5 * a, b, c) == pytest.approx(2.5 * base, rel=1e-12)
    # symmetric up to discretization error
    assert capaf.mixed_volume(grid, b, a, c) == pytest.approx(base, rel=1e-5)


def test_af_check_on_scaled_cap(grid):
    l = capaf.ell(grid)
    r = capaf.af_check(l, 2.0 * l.values, l.values)
    assert r["verdict"] == "equality within resolution"
    assert abs(r["relative_gap"]) < 1e-8


def test_af_check_random_holds(grid):
    f2 = capaf.random_body(grid, 11)
    f1 = capaf.random_body(grid, 12).values
    f = capaf.random_capillary(grid, 13)
    r = capaf.af_check(f2, f, f1)
    assert r["gap"] >= -1e-8 * abs(r["rhs"])


def test_spectrum_leading_eigenvalue():
    g = capaf.build_grid(0.9, 32, 32)
    s = capaf.spectrum(capaf.ell(g), method="dense")
    assert s["lambda1"] == pytest.approx(1.0, abs=1e-6)
    assert s["lambda1_simple"]
    assert s["kernel_count"] == 2


def test_quermass_report_top_index(grid):
    rep = capaf.quermass_report(capaf.ell(grid))
    top = rep["quermassintegrals"][-1]["value"]
    assert top == pytest.approx(rep["b_theta"], rel=1e-6)


def test_embed_shapes(grid):
    pos, nrm, tri = capaf.embed(capaf.ell(grid))
    assert pos.shape[1] == 3 and nrm.shape == pos.shape
    assert np.allclose(np.linalg.norm(nrm, axis=1), 1.0)
    assert len(tri) > 0


def test_run_is_deterministic():
    cfg = {"command": "af", "theta": 2.0, "grid": [32, 32], "seed": 7, "trials": 3, "equality_trials": 2}
    a = capaf.run(cfg)
    b = capaf.run(cfg)
    assert json.dumps(a["report"], sort_keys=True) == json.dumps(b["report"], sort_keys=True)
    assert a["csv"] == b["csv"]
    assert a["name"] == "af"
    assert a["report"]["config"]["seed"] == 7


def test_body_roundtrip(tmp_path, grid):
    body = capaf.random_body(grid, 21)
    path = str(tmp_path / "body.json")
    capaf.save_body(body, path)
    back = capaf.load_body(path)
    assert np.array_equal(back.values, body.values)


def test_errors_are_raised():
    with pytest.raises(capaf.CapafError):
        capaf.build_grid(4.0, 32, 32)
    g = capaf.build_grid(1.0, 24, 24)
    bad = -np.ones(g.node_count)
    assert not capaf.certify(g, bad)
    with pytest.raises(capaf.CapafError):
        capaf.body_from_values(g, bad)
