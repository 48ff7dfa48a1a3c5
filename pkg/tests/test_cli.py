"""Config parsing, the batch drivers, manifests and the CLI entry point."""

import csv
import json

import numpy as np
import pytest

from semwave import cli
from semwave.fvsource import load_fv
from semwave.mesh import HexMesh
from semwave.newmark import NewmarkConfig


def _write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_mesh_gen_roundtrip(tmp_path):
    out = tmp_path / "mesh.json"
    code = cli.main([
        "mesh-gen", "--box", "0,1,0,2,0,1", "--div", "2,4,2",
        "--tag", "xmin=inlet", "--out", str(out),
    ])
    assert code == 0
    mesh = HexMesh.load(out)
    assert mesh.num_elements == 16
    assert "inlet" in mesh.tags


def test_config_version_rejected(tmp_path, capsys):
    path = _write_config(tmp_path, {"version": "7"})
    code = cli.main(["solve", "--config", path, "--out", str(tmp_path / "out")])
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "configuration"


def test_all_problems_reported_at_once(tmp_path, capsys):
    path = _write_config(tmp_path, {"version": "1", "time": {}})
    code = cli.main(["solve", "--config", path, "--out", str(tmp_path / "out")])
    assert code == 2
    problems = json.loads(capsys.readouterr().err)["problems"]
    joined = " ".join(problems)
    for key in ("rho0", "c0", "mesh", "degree", "dt", "t_final"):
        assert key in joined
    assert len(problems) >= 6


def test_runtime_error_exit_code(tmp_path, capsys):
    cfg = {
        "version": "1", "rho0": 1.0, "c0": 1.0, "degree": 1,
        "mesh": {"generator": {"box": [[0, 1], [0, 1], [0, 1]], "div": [2, 2, 2]}},
        "time": {"dt": 0.01, "t_final": 0.05},
        "probes": {"bad": [9.0, 0.5, 0.5]},
    }
    code = cli.main(["solve", "--config", _write_config(tmp_path, cfg), "--out", str(tmp_path / "out")])
    assert code == 1
    assert "outside" in json.loads(capsys.readouterr().err)["message"]


def test_solve_zero_source_zero_probes(tmp_path):
    out = tmp_path / "out"
    cfg = {
        "version": "1", "rho0": 1.204, "c0": 343.0, "degree": 2,
        "mesh": {"generator": {"box": [[0, 1], [0, 1], [0, 1]], "div": [2, 2, 2]}},
        "time": {"dt": 1e-4, "t_final": 1e-3},
        "probes": {"mid": [0.5, 0.5, 0.5]},
    }
    code = cli.main(["solve", "--config", _write_config(tmp_path, cfg), "--out", str(out)])
    assert code == 0
    rows = np.loadtxt(out / "solve_probes.csv", delimiter=",", skiprows=1)
    assert np.max(np.abs(rows[:, 1])) == 0.0


def test_solve_unknown_impedance_tag(tmp_path, capsys):
    cfg = {
        "version": "1", "rho0": 1.0, "c0": 1.0, "degree": 1,
        "mesh": {"generator": {"box": [[0, 1], [0, 1], [0, 1]], "div": [1, 1, 1]}},
        "time": {"dt": 0.01, "t_final": 0.05},
        "impedance": {"lid": 415.0},
    }
    code = cli.main(["solve", "--config", _write_config(tmp_path, cfg), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "lid" in " ".join(json.loads(capsys.readouterr().err)["problems"])


def test_manifest_lists_all_outputs(tmp_path):
    out = tmp_path / "out"
    cfg = {
        "version": "1", "rho0": 1.0, "c0": 340.0, "degree": 1,
        "mesh": {"generator": {"box": [[0, 1], [0, 1], [0, 1]], "div": [2, 2, 2]}},
        "time": {"dt": 1e-4, "t_final": 1e-3},
        "probes": {"a": [0.25, 0.25, 0.25]},
    }
    assert cli.main(["solve", "--config", _write_config(tmp_path, cfg), "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert "solve_probes.csv" in manifest["outputs"]
    assert len(manifest["outputs"]["solve_probes.csv"]) == 64  # sha256 hex
    assert manifest["config"]["degree"] == 1


def test_monopole_source_loads():
    problems = []

    class _Space:
        ndof = 4

    # point_source_load needs a real space: use the loads builder contract
    # only for the zero-source path here
    loads = cli._build_loads({"source": {"type": "none"}}, _Space(), None, None, problems)
    assert not problems
    assert np.max(np.abs(loads(7))) == 0.0


def test_projected_source_stride(tmp_path):
    vecs = []
    for i in range(3):
        path = tmp_path / f"v{i}.npy"
        np.save(path, np.full(5, float(i)))
        vecs.append(str(path))
    problems = []
    loads = cli._build_loads(
        {"source": {"type": "projected", "files": vecs, "stride": 4}},
        type("S", (), {"ndof": 5})(), None, None, problems,
    )
    assert not problems
    # piecewise constant between mappings, clamped at the end
    assert loads(0)[0] == 0.0 and loads(3)[0] == 0.0
    assert loads(4)[0] == 1.0 and loads(7)[0] == 1.0
    assert loads(8)[0] == 2.0 and loads(100)[0] == 2.0


def test_unknown_source_type():
    problems = []
    out = cli._build_loads({"source": {"type": "magic"}}, type("S", (), {"ndof": 1})(), None, None, problems)
    assert out is None and problems


def test_mms_report_and_reproducibility(tmp_path):
    cfg = {
        "version": "1",
        "degrees": [1],
        "divisions": [2, 4],
        "time": {"dt": 5e-3, "t_final": 2.5e-2},
    }
    path = _write_config(tmp_path, cfg)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert cli.main(["mms", "--config", path, "--out", str(out1), "--seed", "3"]) == 0
    assert cli.main(["mms", "--config", path, "--out", str(out2), "--seed", "3"]) == 0
    rows = list(csv.reader((out1 / "mms_report.csv").open()))
    assert rows[0] == ["degree", "h", "ndof", "E2", "observed_order", "runtime_s"]
    assert len(rows) == 3
    assert float(rows[2][3]) < float(rows[1][3])  # error decreases with h
    # identical config and seed: byte-identical report apart from timings
    strip = lambda r: r[:5]  # noqa: E731
    r1 = [strip(r) for r in csv.reader((out1 / "mms_report.csv").open())]
    r2 = [strip(r) for r in csv.reader((out2 / "mms_report.csv").open())]
    assert r1 == r2
    manifest = json.loads((out1 / "manifest.json").read_text())
    assert manifest["seed"] == 3
    assert "mms_report.csv" in manifest["outputs"]


def test_fv_source_synthetic(tmp_path):
    out = tmp_path / "out"
    cfg = {
        "version": "1", "rho0": 2.0,
        "synthetic": {"box": [[0, 1], [0, 1], [0, 1]], "div": [6, 6, 6], "field": "shear_xy"},
    }
    assert cli.main(["fv-source", "--config", _write_config(tmp_path, cfg), "--out", str(out)]) == 0
    mesh, fields = load_fv(out / "fv_source.json")
    assert mesh.num_cells == 216
    exact = np.stack([mesh.centers[:, 0], mesh.centers[:, 1], np.zeros(216)], axis=1)
    np.testing.assert_allclose(fields[0].values, 2.0 * exact, atol=1e-10)


def test_fv_source_spanwise(tmp_path):
    out = tmp_path / "out"
    cfg = {
        "version": "1", "rho0": 1.0, "spanwise_axis": 2,
        "synthetic": {"box": [[0, 1], [0, 1], [0, 0.2]], "div": [4, 4, 2], "field": "shear_xy"},
    }
    assert cli.main(["fv-source", "--config", _write_config(tmp_path, cfg), "--out", str(out)]) == 0
    mesh, fields = load_fv(out / "fv_source.json")
    assert mesh.num_cells == 16
    assert mesh.num_faces == 0


def test_fv_source_bad_field(tmp_path, capsys):
    cfg = {"version": "1", "rho0": 1.0, "synthetic": {"box": [[0, 1]] * 3, "div": [2, 2, 2], "field": "vortex"}}
    assert cli.main(["fv-source", "--config", _write_config(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 2
    assert "shear_xy" in " ".join(json.loads(capsys.readouterr().err)["problems"])


def test_project_pipeline(tmp_path):
    fv_out = tmp_path / "fv"
    fv_cfg = {
        "version": "1", "rho0": 1.0,
        "synthetic": {"box": [[0, 1], [0, 1], [0, 1]], "div": [4, 4, 4], "field": "shear_xy"},
    }
    assert cli.main(["fv-source", "--config", _write_config(tmp_path, fv_cfg, "fv.json"), "--out", str(fv_out)]) == 0

    pr_out = tmp_path / "proj"
    pr_cfg = {
        "version": "1", "fv_file": str(fv_out / "fv_source.json"), "degree": 1,
        "mesh": {"generator": {"box": [[0, 1], [0, 1], [0, 1]], "div": [2, 2, 2]}},
    }
    assert cli.main(["project", "--config", _write_config(tmp_path, pr_cfg, "pr.json"), "--out", str(pr_out)]) == 0
    report = json.loads((pr_out / "conservation_report.json").read_text())
    assert report["empty_columns"] == 0
    assert report["column_sum_max_rel_error"] < 5e-3
    load = np.load(pr_out / "load_0000.npy")
    assert load.shape == (27,)
    assert np.all(np.isfinite(load))
    for axis in "xyz":
        assert (pr_out / f"projected_0000_{axis}.npy").exists()


def test_curle_driver(tmp_path):
    force_path = tmp_path / "force.csv"
    with open(force_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "fx", "fy", "fz"])
        for k in range(64):
            w.writerow([k * 1e-3, 0.0, 0.0, 1.0])
    out = tmp_path / "out"
    cfg = {
        "version": "1", "c0": 343.0,
        "forces": [{"file": str(force_path)}],
        "observers": {"axial": [0.0, 0.0, 1.0]},
        "psd_segment": 32,
    }
    assert cli.main(["curle", "--config", _write_config(tmp_path, cfg), "--out", str(out)]) == 0
    rows = np.loadtxt(out / "curle_axial.csv", delimiter=",", skiprows=1)
    np.testing.assert_allclose(rows[:, 1], 1.0 / (4.0 * np.pi), atol=1e-12)
    spec_rows = np.loadtxt(out / "curle_axial_psd.csv", delimiter=",", skiprows=1)
    assert spec_rows.shape[1] == 2


def test_curle_missing_force_file(tmp_path, capsys):
    cfg = {
        "version": "1", "c0": 343.0,
        "forces": [{"file": str(tmp_path / "nope.csv")}],
        "observers": {"a": [1.0, 0.0, 0.0]},
    }
    assert cli.main(["curle", "--config", _write_config(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 2


def test_newmark_from_config_defaults():
    problems = []
    nm = cli._newmark_from_config({"time": {"dt": 0.1, "t_final": 1.0}}, problems)
    assert isinstance(nm, NewmarkConfig)
    assert nm.beta == 0.25 and nm.gamma == 0.5


def test_gaussian_plane_initial(cube2_space_r2):
    init = cli._initial_from_config(
        {"initial": {"type": "gaussian_plane", "axis": 0, "center": 0.5, "sigma": 0.1}},
        cube2_space_r2, c0=2.0,
    )
    rho, vel = init
    peak = np.argmax(rho)
    assert abs(cube2_space_r2.node_coords[peak, 0] - 0.5) < 0.3
    assert np.max(np.abs(vel)) > 0.0
