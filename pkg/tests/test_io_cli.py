import copy
import json
import math
from pathlib import Path

import numpy as np
import pytest

from dgk.cli import main, run_command
from dgk.io import config_hash, dumps, lattice_table, read_csv, read_json, write_csv
from dgk.lattice import Lattice

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def load(name):
    return json.loads((CONFIGS / f"{name}.json").read_text())


def dump(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def tree_bytes(d):
    return {p.name: p.read_bytes() for p in sorted(Path(d).iterdir())}


class TestIO:
    def test_csv_round_trip_exact(self, tmp_path, rng):
        data = rng.standard_normal((20, 3)) * np.logspace(-300, 300, 20)[:, None]
        data[0] = [np.pi, 1 / 3, -0.0]
        write_csv(tmp_path / "t.csv", ["a", "b", "c"], data)
        cols, back = read_csv(tmp_path / "t.csv")
        assert cols == ["a", "b", "c"]
        assert np.array_equal(back, data)

    def test_csv_format(self, tmp_path):
        write_csv(tmp_path / "t.csv", ["x", "y"], [[0.1, 2.0]], sidecar={"k": 1})
        raw = (tmp_path / "t.csv").read_bytes()
        assert raw == b"x,y\n0.10000000000000001,2\n"
        side = read_json(tmp_path / "t.json")
        assert side == {"file": "t.csv", "columns": ["x", "y"], "k": 1}

    def test_csv_column_mismatch(self, tmp_path):
        with pytest.raises(ValueError):
            write_csv(tmp_path / "t.csv", ["x"], [[1.0, 2.0]])

    def test_lattice_table(self):
        lat = Lattice((5, 6), (0.5, 1.0), (1.0, 0.0))
        cols, data = lattice_table(lat, {"s": np.arange(30.0).reshape(5, 6), "v": np.ones((5, 6, 2))})
        assert cols == ["i0", "i1", "x0", "x1", "s", "v_0", "v_1"]
        assert data.shape == (30, 7)
        np.testing.assert_array_equal(data[7, :5], [1, 1, 1.5, 1.0, 7.0])

    def test_json_nonfinite_and_sorted(self):
        text = dumps({"b": np.float64(np.nan), "a": np.arange(2), "c": 1 + 2j})
        assert json.loads(text) == {"a": [0, 1], "b": None, "c": {"im": 2.0, "re": 1.0}}
        assert text.index('"a"') < text.index('"b"') and text.endswith("}\n")

    def test_hash_key_order_invariant(self):
        assert config_hash({"a": 1, "b": [1.0, 2]}) == config_hash({"b": [1.0, 2], "a": 1})
        assert config_hash({"a": 1}) != config_hash({"a": 2})


class TestExitCodes:
    def test_success(self, tmp_path, capsys):
        assert main(["qgt", "--config", str(CONFIGS / "qgt_q.json"), "--out", str(tmp_path)]) == 0
        line = json.loads(capsys.readouterr().out)
        assert line["command"] == "qgt" and line["status"] == "ok"

    def test_bad_width_matrix_names_field(self, tmp_path, capsys):
        cfg = load("qgt_q")
        cfg["state"]["A"] = [[1.0, 0.0], [0.0, -1.0]]
        assert main(["qgt", "--config", dump(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 2
        assert "state.A" in capsys.readouterr().err

    def test_missing_field(self, tmp_path, capsys):
        cfg = load("volume_sphere")
        del cfg["r"]
        assert main(["volume", "--config", dump(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 2
        assert "'r'" in capsys.readouterr().err

    def test_invalid_json(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        assert main(["qgt", "--config", str(p)]) == 2
        assert "invalid JSON" in capsys.readouterr().err

    def test_unknown_chart_coordinate(self, tmp_path, capsys):
        cfg = load("qgt_q")
        cfg["chart"] = ["q7"]
        assert main(["qgt", "--config", dump(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 2

    def test_degenerate_reconstruction_is_numerical_failure(self, tmp_path, capsys):
        cfg = load("reconstruct_phase")
        cfg["spatial"]["profiles"][2] = {"const": 0.0}
        out = tmp_path / "o"
        assert main(["reconstruct", "--config", dump(tmp_path, cfg), "--out", str(out)]) == 1
        rep = read_json(out / "reconstruct.json")
        assert rep["status"] == "numerical-failure"
        assert rep["results"]["flagged_sites"] == math.prod(cfg["lattice"]["dims"])
        cfg["allow_degenerate"] = True
        assert main(["reconstruct", "--config", dump(tmp_path, cfg), "--out", str(out)]) == 0

    def test_degenerate_curvature_input(self, tmp_path):
        cfg = load("reconstruct_phase")
        cfg["spatial"]["profiles"][2] = {"const": 0.0}
        assert main(["curvature", "--config", dump(tmp_path, {"reconstruct": cfg}), "--out", str(tmp_path / "o")]) == 1

    def test_frw_collapse_exit(self, tmp_path):
        cfg = load("frw_stiff")
        cfg["ics"]["branch"] = "contracting"
        out = tmp_path / "o"
        code = main(["frw", "--config", dump(tmp_path, cfg), "--out", str(out)])
        assert code == 1
        assert read_json(out / "frw.json")["results"]["integration_status"] == "collapse"


class TestReproducibility:
    @pytest.mark.parametrize("name", ["qgt_qp", "reconstruct_phase", "curvature_sphere", "residuals_vacuum", "sigma_affine"])
    def test_byte_identical(self, tmp_path, name):
        cmd = name.split("_")[0]
        for d in ("a", "b"):
            assert main([cmd, "--config", str(CONFIGS / f"{name}.json"), "--out", str(tmp_path / d)]) == 0
        a, b = tree_bytes(tmp_path / "a"), tree_bytes(tmp_path / "b")
        assert a == b and len(a) >= 3

    def test_rerun_from_embedded_config(self, tmp_path):
        code, rep = run_command("curvature", load("curvature_sphere"), tmp_path / "a")
        assert code == 0
        code2, rep2 = run_command("curvature", rep["config"], tmp_path / "b")
        assert rep2["config"] == rep["config"] and rep2["config_hash"] == rep["config_hash"]
        assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")

    def test_rerun_from_csv_sidecar(self, tmp_path):
        run_command("sigma", load("sigma_affine"), tmp_path / "a")
        side = read_json(tmp_path / "a" / "sigma_residual.json")
        run_command("sigma", side["config"], tmp_path / "b")
        assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")

    def test_seed_changes_hash(self, tmp_path):
        cfg = load("volume_sphere")
        cfg.update(n_samples=10_000, steps=20)
        _, r1 = run_command("volume", cfg, tmp_path / "a")
        _, r2 = run_command("volume", cfg, tmp_path / "b", seed=8)
        assert r1["seed"] == 7 and r2["seed"] == 8
        assert r1["config_hash"] != r2["config_hash"]
        assert r1["results"]["volume"] != r2["results"]["volume"]

    def test_bad_seed(self, tmp_path):
        with pytest.raises(Exception) as info:
            run_command("qgt", load("qgt_q"), tmp_path, seed=-1)
        assert getattr(info.value, "field", None) == "seed"


class TestReports:
    def test_report_schema(self, tmp_path):
        _, rep = run_command("qgt", load("qgt_q"), tmp_path)
        assert set(rep) == {"command", "version", "status", "config", "config_hash", "seed", "lattice", "tolerances", "results", "outputs"}
        assert rep["outputs"] == sorted(p.name for p in tmp_path.iterdir() if p.name != "qgt.json")

    def test_qgt_values(self, tmp_path):
        _, rep = run_command("qgt", load("qgt_qp"), tmp_path)
        res = rep["results"]
        assert res["psd"] and res["max_abs_closed_minus_numeric"] < 1e-8
        g = np.array(res["metric"])
        np.testing.assert_allclose(g[:2, :2], np.array(res["closed_form_label_metric"]), atol=1e-8)

    def test_reconstruct_values(self, tmp_path):
        _, rep = run_command("reconstruct", load("reconstruct_phase"), tmp_path)
        res = rep["results"]
        assert res["flagged_sites"] == 0
        assert res["N2_min"] == pytest.approx(1.0) and res["N2_max"] == pytest.approx(1.0)
        cols, data = read_csv(tmp_path / "metric.csv")
        assert data.shape == (math.prod(rep["lattice"]["dims"]), len(cols))

    def test_curvature_probe(self, tmp_path):
        _, rep = run_command("curvature", load("curvature_sphere"), tmp_path)
        assert rep["results"]["R_probe"] == pytest.approx(2.0, rel=1e-4)

    def test_residuals_vacuum(self, tmp_path):
        _, rep = run_command("residuals", load("residuals_vacuum"), tmp_path)
        for key in ("sigma_residual_max_abs", "einstein_residual_max_abs", "conservation_max_abs", "T_max_abs_interior"):
            assert rep["results"][key] == 0.0

    def test_frw_series(self, tmp_path):
        _, rep = run_command("frw", load("frw_stiff"), tmp_path)
        cols, data = read_csv(tmp_path / "frw_series.csv")
        assert cols[:6] == ["t", "a", "phi", "phidot", "H", "constraint"]
        t, a = data[:, 0], data[:, 1]
        assert np.polyfit(np.log(t), np.log(a), 1)[0] == pytest.approx(1 / 3, abs=1e-6)
        assert rep["results"]["max_relative_drift"] < 1e-8

    def test_volume_rejects_few_samples(self, tmp_path):
        cfg = load("volume_sphere")
        cfg["n_samples"] = 500
        assert main(["volume", "--config", dump(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 2

    def test_volume_flat(self, tmp_path):
        cfg = {"metric": {"preset": "euclidean", "dim": 2}, "center": [0.0, 0.0], "r": 0.5, "n_samples": 10_000, "steps": 20, "seed": 3}
        _, rep = run_command("volume", cfg, tmp_path)
        assert rep["results"]["volume"] == pytest.approx(math.pi / 4, rel=1e-9)
        assert rep["results"]["consistent_2sigma"]
