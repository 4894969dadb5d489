import json
import math

import numpy as np
import pytest

import sevl


def test_subcommands_listed():
    subs = sevl.subcommands()
    assert "dni-check" in subs and "verify-operators" in subs


def test_default_config_is_json():
    cfg = json.loads(sevl.default_config("verify-pressure"))
    assert cfg["subcommand"] == "verify-pressure"
    assert cfg["grid"]["d"] >= 1


def test_taylor_green_is_solenoidal_and_normed():
    u = sevl.taylor_green(16)
    assert u.shape == (2, 16, 16)
    assert np.max(np.abs(sevl.divergence(u))) < 1e-12
    l2 = sevl.sobolev_norm(u, 0.0)
    ref = math.sqrt(np.sum(u**2) * (2 * np.pi / 16) ** 2)
    assert l2 == pytest.approx(ref, rel=1e-12)


def test_leray_projection_idempotent_and_removes_gradients():
    rng = np.random.default_rng(3)
    n = 16
    x = np.arange(n) * 2 * np.pi / n
    X, Y = np.meshgrid(x, x, indexing="ij")
    phi_grad = np.stack([np.cos(X) * np.sin(2 * Y), 2 * np.sin(X) * np.cos(2 * Y)])
    assert np.max(np.abs(sevl.leray_project(phi_grad))) < 1e-12
    f = sevl.mollify(rng.standard_normal((2, n, n)), 4)
    p = sevl.leray_project(f)
    assert np.allclose(sevl.leray_project(p), p, atol=1e-12)
    assert np.max(np.abs(sevl.divergence(p))) < 1e-10


def test_advection_is_energy_neutral():
    u = sevl.leray_project(sevl.mollify(np.random.default_rng(5).standard_normal((2, 16, 16)), 3))
    b = sevl.projected_advection(u)
    assert abs(np.sum(b * u)) < 1e-10 * np.sum(u * u) * max(1.0, np.max(np.abs(u)))


def test_isothermal_transform():
    law = sevl.PressureLaw.by_name("isothermal", [2.0])
    tr = sevl.PressureTransform(law)
    rho = np.geomspace(1e-3, 1e3, 40)
    assert sevl.structural_residual(law, tr, list(rho)) < 1e-10
    for r in (0.1, 1.0, 7.0):
        assert tr.r_inv(tr.r(r)) == pytest.approx(r, rel=1e-10)


def test_levy_small_jump_moment():
    nu = sevl.LevyMeasure.truncated_stable(0.5, 1.0, 1e-2)
    assert nu.small_jump_second_moment() == pytest.approx(2 / 1.5 * 0.01**1.5, rel=1e-12)


def test_cli_round_trip(tmp_path):
    rc = sevl.run(["verify-pressure", "--law", "gamma", "--quiet", "--out", str(tmp_path)])
    assert rc == 0
    res = json.loads((tmp_path / "result.json").read_text())
    assert res["pass"] is True
    assert sevl.run(["no-such-command"]) == 2
