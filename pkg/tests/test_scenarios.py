import json

import numpy as np
import pytest

from uwvf import cli
from uwvf.mesh import Resistive, TSInterface
from uwvf.oracle import MieSpec, mie_bistatic_rcs
from uwvf.postprocess import read_rcs_csv, write_rcs_csv
from uwvf.scenarios import (
    PRESETS,
    Scenario,
    ScenarioError,
    StageError,
    build_mesh,
    compare,
    compare_rcs,
    emit_mie,
    load_scenario,
    preset,
    run,
)

SMALL_PEC = {
    "name": "small_pec",
    "length_unit": "wavelength",
    "mesh": {"kind": "sphere", "radii": [0.25, 0.5, 0.75], "refinement": 0, "curved": True},
    "outputs": {"rcs": {"angles": [0, 180, 10], "surface_radius": 0.5}},
    "reference": {"kind": "mie", "radius": 0.25, "pec": True},
    "tolerances": {"rcs_l2_percent": 50.0},
}


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("small")
    return run(Scenario.from_dict(SMALL_PEC), out), out


# ---------------------------------------------------------------------------
# scenario descriptions


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_validate_and_build(name):
    sc = preset(name)
    assert sc.name == name
    mesh = build_mesh(sc)
    assert mesh.n_elements > 0
    assert Scenario.from_dict(json.loads(json.dumps(sc.to_dict()))) == sc


def test_preset_mesh_tags():
    mesh = build_mesh(preset("salisbury_eta0.5"))
    sheet = [f for f in mesh.faces if isinstance(f.tag, Resistive)]
    assert sheet and all(np.allclose(f.corners[:, 0], -0.25 * preset("salisbury_eta1").wavelength) for f in sheet)
    mesh = build_mesh(preset("dielectric_sphere"))
    ts = [f for f in mesh.faces if isinstance(f.tag, TSInterface)]
    assert ts
    for f in ts:
        out = f.tag.scattered_side
        assert mesh.elements[out].kind == "wedge" and mesh.elements[f.other(out)].kind == "tetra"


def test_config_overrides_preset(tmp_path):
    path = tmp_path / "sc.json"
    path.write_text(json.dumps({"preset": "pec_sphere_curved", "solver": {"tol": 1e-4}, "frequency": 1e9}))
    sc = load_scenario(path)
    assert sc.solver["tol"] == 1e-4 and sc.frequency == 1e9
    assert sc.mesh["radii"] == preset("pec_sphere_curved").mesh["radii"]


@pytest.mark.parametrize("patch, match", [
    ({"frequency": -1.0}, "frequency"),
    ({"length_unit": "ft"}, "length_unit"),
    ({"basis_tolerance": 1e6}, "basis_tolerance"),
    ({"solver": {"mode": "sparse"}}, "mode"),
    ({"solver": {"tol": 0}}, "tolerance"),
    ({"polarization": [1.0, 0.0, 0.0]}, "orthogonal"),
    ({"mesh": {"kind": "cylinder"}}, "mesh kind"),
    ({"reference": {"kind": "guess"}}, "reference"),
    ({"colour": "red"}, "unknown scenario keys"),
])
def test_invalid_scenarios(patch, match):
    with pytest.raises(ScenarioError, match=match):
        Scenario.from_dict({"preset": "empty_box", **patch})


def test_malformed_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ScenarioError):
        load_scenario(path)
    with pytest.raises(ScenarioError):
        preset("nope")


# ---------------------------------------------------------------------------
# pipeline


def test_empty_box_has_zero_solution(tmp_path):
    res = run(preset("empty_box"), tmp_path)
    assert np.all(res.chi == 0) and res.report["iterations"] == 0
    assert not (tmp_path / "rcs.csv").exists()
    assert (tmp_path / "report.json").exists()


def test_small_sphere_artifacts(small_run):
    res, out = small_run
    rep = json.loads((out / "report.json").read_text())
    for key in ("N_elements", "N_DoF", "iterations", "residual", "cpu_time_s", "stage_wall_time_s", "h_min",
                "h_max", "verdict"):
        assert key in rep
    assert set(rep["stage_wall_time_s"]) == {"mesh", "basis", "assembly", "solve", "postprocess"}
    assert rep["N_elements"] == {"tetra": 0, "wedge": 40, "hexa": 0}
    phi, sigma = read_rcs_csv(out / "rcs.csv")
    assert np.array_equal(phi, np.arange(0, 181, 10.0))
    _, mie = read_rcs_csv(out / "mie.csv")
    spec = MieSpec(0.25 * res.scenario.wavelength, 2e9)
    assert np.allclose(mie, mie_bistatic_rcs(spec, phi), rtol=1e-12)
    assert res.passed and rep["metrics"]["rcs_l2_percent"] < 50
    assert Scenario.from_dict(json.loads((out / "scenario.json").read_text())) == res.scenario


def test_rerun_is_bit_identical(small_run, tmp_path):
    _, out = small_run
    run(Scenario.from_dict(SMALL_PEC), tmp_path)
    assert (tmp_path / "rcs.csv").read_bytes() == (out / "rcs.csv").read_bytes()


def test_matrix_free_run_matches_stored(small_run, tmp_path):
    res, _ = small_run
    mf = run(Scenario.from_dict(SMALL_PEC), tmp_path, mode="matrix-free")
    assert mf.report["mode"] == "matrix_free"
    assert np.linalg.norm(mf.chi - res.chi) <= 1e-4 * np.linalg.norm(res.chi)


def test_salisbury_writes_field_line(tmp_path):
    res = run(preset("salisbury_eta1"), tmp_path)
    data = np.genfromtxt(tmp_path / "field_line.csv", delimiter=",", names=True)
    assert len(data) == 200
    assert res.report["verdict"]["reflection"]["pass"]


@pytest.mark.parametrize("patch, stage", [
    ({"mesh": {"surfaces": [{"radius": 0.33, "tag": {"type": "ts_interface"}}]}}, "mesh"),
    ({"solver": {"tol": 1e-14, "max_iter": 1}}, "solve"),
    ({"outputs": {"rcs": {"angles": [0, 180, 10], "surface_radius": 0.6}}}, "postprocess"),
])
def test_stage_errors_name_the_stage(patch, stage):
    sc = Scenario.from_dict({**SMALL_PEC, **{k: v for k, v in patch.items() if k != "mesh"}})
    if "mesh" in patch:
        sc.mesh = {**sc.mesh, **patch["mesh"]}
    with pytest.raises(StageError) as info:
        run(sc)
    assert info.value.stage == stage
    assert str(info.value).startswith(f"{stage} stage failed")


# ---------------------------------------------------------------------------
# comparison


def test_compare_identical_and_perturbed(tmp_path):
    phi = np.arange(0, 181, 2.0)
    sigma = 1 + np.cos(np.deg2rad(phi)) ** 2
    write_rcs_csv(tmp_path / "a.csv", phi, sigma)
    write_rcs_csv(tmp_path / "b.csv", phi, 1.01 * sigma)
    same = compare(tmp_path / "a.csv", tmp_path / "a.csv")
    assert same["l2_percent"] == 0 and same["max_percent"] == 0
    res = compare(tmp_path / "b.csv", tmp_path / "a.csv", tolerance=1.5)
    assert np.isclose(res["l2_percent"], 1.0) and res["pass"]
    assert len(res["per_angle"]) == len(phi)
    assert np.allclose([r["rel_percent"] for r in res["per_angle"]], 1.0)
    with pytest.raises(ValueError):
        compare_rcs(phi, sigma, phi + 1, sigma)


def test_emit_mie(tmp_path):
    spec = MieSpec(0.15, 2e9)
    angles = np.arange(0, 181, 5.0)
    sigma = emit_mie(spec, angles, tmp_path / "m.csv")
    phi, s = read_rcs_csv(tmp_path / "m.csv")
    assert np.array_equal(phi, angles) and np.array_equal(s, sigma)


# ---------------------------------------------------------------------------
# command line


def test_cli_exit_codes(tmp_path, capsys):
    assert cli.main(["--list-presets"]) == 0
    assert "pec_sphere_curved" in capsys.readouterr().out
    assert cli.main(["--preset", "empty_box", "--out", str(tmp_path / "e")]) == 0
    assert cli.main([]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"preset": "empty_box", "frequency": -1}))
    assert cli.main(["--config", str(bad)]) == 2
    stage = tmp_path / "stage.json"
    stage.write_text(json.dumps({**SMALL_PEC, "solver": {"tol": 1e-14, "max_iter": 1}}))
    assert cli.main(["--config", str(stage), "--out", str(tmp_path / "s")]) == 3
    fail = tmp_path / "fail.json"
    fail.write_text(json.dumps({**SMALL_PEC, "tolerances": {"rcs_l2_percent": 1e-3}}))
    assert cli.main(["--config", str(fail), "--out", str(tmp_path / "f"), "--mode", "matrix-free"]) == 1
    out = capsys.readouterr().out
    assert "FAIL" in out and "small_pec" in out
    assert json.loads((tmp_path / "f" / "report.json").read_text())["mode"] == "matrix_free"


def test_cli_emit_mie_and_compare(tmp_path, capsys):
    assert cli.main(["--emit-mie", "--radius", "0.15", "--eps-r", "1.5+0.5i", "--out", str(tmp_path)]) == 0
    phi, s = read_rcs_csv(tmp_path / "mie.csv")
    assert np.allclose(s, mie_bistatic_rcs(MieSpec(0.15, 2e9, False, 1.5 + 0.5j), phi))
    assert cli.main(["--emit-mie", "--preset", "pec_sphere_curved", "--out", str(tmp_path / "p")]) == 0
    assert cli.main(["--emit-mie"]) == 2
    capsys.readouterr()
    m = str(tmp_path / "mie.csv")
    assert cli.main(["--compare", m, m, "--tolerance", "0.1"]) == 0
    assert json.loads(capsys.readouterr().out)["l2_percent"] == 0
    assert cli.main(["--compare", m, str(tmp_path / "missing.csv")]) == 2
