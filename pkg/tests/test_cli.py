import json
import shutil
import subprocess
from pathlib import Path

import pytest
import yaml

from flagdyn.cli import main

CONFIGS = str(Path(__file__).resolve().parent.parent / "configs")


def run_cli(*argv):
    return main(list(argv))


class TestValidate:
    def test_structured_system_passes(self, tmp_path, capsys):
        rc = run_cli(
            "validate", "--config", f"{CONFIGS}/fig2_jump.cfg", "--out-dir", str(tmp_path)
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out
        # jump-only systems additionally get the criticality check
        assert "criticality" in out
        payload = json.loads((tmp_path / "validate.json").read_text())
        assert payload["passed"] is True
        assert payload["dim"] == 3
        assert len(payload["checks"]) == 5

    def test_random_system_passes_without_criticality(self, capsys):
        rc = run_cli("validate", "--config", f"{CONFIGS}/fig1_random.cfg")
        assert rc == 0
        assert "criticality" not in capsys.readouterr().out

    def test_four_level_config(self):
        assert run_cli("validate", "--config", f"{CONFIGS}/fig3.cfg") == 0
        assert run_cli("validate", "--config", f"{CONFIGS}/fig4.cfg") == 0

    def test_bad_operator_index_exits_1(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text(
            "system:\n  n: 3\n  operators:\n    - jump: {from: 7, to: 1, rate: 2.0}\n"
        )
        rc = run_cli("validate", "--config", str(cfg))
        assert rc == 1
        assert "from" in capsys.readouterr().err

    def test_malformed_yaml_exits_2(self, tmp_path, capsys):
        cfg = tmp_path / "broken.cfg"
        cfg.write_text("system:\n  n: [3\n")
        rc = run_cli("validate", "--config", str(cfg))
        assert rc == 2
        assert "ParseError" in capsys.readouterr().err

    def test_missing_file_exits_2(self, tmp_path):
        assert run_cli("validate", "--config", str(tmp_path / "nope.cfg")) == 2


class TestFlags:
    def test_outputs(self, tmp_path):
        rc = run_cli(
            "flags", "--config", f"{CONFIGS}/fig2_jump.cfg", "--out-dir", str(tmp_path)
        )
        assert rc == 0
        lines = (tmp_path / "flags.csv").read_text().splitlines()
        assert lines[0].startswith("flag,perm,gamma_1")
        assert len(lines) == 1 + 6  # header + 3! flags
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["num_flags"] == 6
        gamma = summary["a_iota_spectrum"]
        assert gamma == sorted(gamma, reverse=True)
        assert sum(gamma) == pytest.approx(0.0, abs=1e-8)

    def test_json_format(self, tmp_path):
        rc = run_cli(
            "flags", "--config", f"{CONFIGS}/fig2_jump.cfg",
            "--out-dir", str(tmp_path), "--format", "json",
        )
        assert rc == 0
        rows = json.loads((tmp_path / "flags.json").read_text())
        assert len(rows) == 6
        assert rows[0]["perm"] == "1|2|3"


class TestOmega:
    def test_identity_source(self, tmp_path):
        rc = run_cli(
            "omega", "--config", f"{CONFIGS}/fig2_jump.cfg",
            "--out-dir", str(tmp_path), "--flag-source", "identity",
        )
        assert rc == 0
        lines = (tmp_path / "omega.csv").read_text().splitlines()
        assert lines[0] == "flag,perm,row,col,w,omega"
        assert len(lines) == 1 + 9  # one flag, 3x3 entries
        # w[1,2] row: the 2->1 jump rate from the config
        entries = {
            (r.split(",")[2], r.split(",")[3]): r.split(",")[4] for r in lines[1:]
        }
        assert float(entries[("1", "2")]) == 6561.0
        assert float(entries[("2", "1")]) == 6561.0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["flag_source"] == "identity"
        assert len(summary["det_a"]) == 1

    def test_iota_source_covers_all_flags(self, tmp_path):
        rc = run_cli(
            "omega", "--config", f"{CONFIGS}/fig2_jump.cfg", "--out-dir", str(tmp_path)
        )
        assert rc == 0
        lines = (tmp_path / "fields.csv").read_text().splitlines()
        assert len(lines) == 1 + 6
        dets = [float(r.split(",")[2]) for r in lines[1:]]
        assert all(abs(d) > 1.0 for d in dets)


class TestSlc:
    def test_three_level_outputs(self, tmp_path):
        out = tmp_path / "a"
        rc = run_cli(
            "slc", "--config", f"{CONFIGS}/fig2_jump.cfg",
            "--out-dir", str(out), "--resolution", "20", "--format", "svg",
        )
        assert rc == 0
        for name in ("grid.csv", "arcs.csv", "summary.json", "region.svg", "region.png"):
            assert (out / name).exists(), name
        summary = json.loads((out / "summary.json").read_text())
        assert summary["resolution"] == 20
        assert summary["num_patches"] == 15
        assert summary["max_patch_residual"] < 1e-8
        counts = summary["counts"]
        assert counts["interior"] > 0 and counts["exterior"] > 0
        grid_lines = (out / "grid.csv").read_text().splitlines()
        assert len(grid_lines) == 1 + (20 + 1) * (20 + 2) // 2

    def test_runs_are_byte_identical(self, tmp_path):
        args = ["slc", "--config", f"{CONFIGS}/fig2_jump.cfg", "--resolution", "20"]
        outs = []
        for sub, extra in (("a", []), ("b", []), ("c", ["--threads", "3"])):
            out = tmp_path / sub
            assert run_cli(*args, "--out-dir", str(out), *extra) == 0
            outs.append(out)
        for name in ("grid.csv", "arcs.csv", "summary.json"):
            ref = (outs[0] / name).read_bytes()
            assert (outs[1] / name).read_bytes() == ref, name
            assert (outs[2] / name).read_bytes() == ref, name

    def test_four_level_svg_is_refused(self, tmp_path, capsys):
        rc = run_cli(
            "slc", "--config", f"{CONFIGS}/fig3.cfg",
            "--out-dir", str(tmp_path), "--format", "svg",
        )
        assert rc == 1
        assert "UnsupportedDimensionForSvg" in capsys.readouterr().err
        assert not (tmp_path / "grid.csv").exists()

    def test_four_level_csv_and_png(self, tmp_path):
        rc = run_cli(
            "slc", "--config", f"{CONFIGS}/fig3.cfg",
            "--out-dir", str(tmp_path), "--resolution", "16",
        )
        assert rc == 0
        assert (tmp_path / "region.png").exists()
        assert not (tmp_path / "region.svg").exists()
        header = (tmp_path / "grid.csv").read_text().splitlines()[0]
        assert header.startswith("lambda_1,lambda_2,lambda_3,lambda_4,x_1,x_2,x_3")

    def test_empty_system_is_all_exterior(self, tmp_path, capsys):
        cfg = tmp_path / "empty.cfg"
        cfg.write_text("system:\n  n: 3\n  operators: []\n")
        out = tmp_path / "out"
        rc = run_cli("slc", "--config", str(cfg), "--out-dir", str(out), "--resolution", "16")
        assert rc == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["counts"]["interior"] == 0
        assert summary["counts"]["boundary"] == 0
        assert summary["num_patches"] == 0


class TestSimulate:
    def test_roundtrip_demo(self, tmp_path, capsys):
        rc = run_cli(
            "simulate", "--config", f"{CONFIGS}/transport_demo.cfg",
            "--out-dir", str(tmp_path),
        )
        assert rc == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["mode"] == "roundtrip"
        assert summary["eig_deviation"] < 1e-8
        assert summary["projector_deviation"] < 1e-8
        assert summary["min_gap"] > 0.01
        lines = (tmp_path / "checkpoints.csv").read_text().splitlines()
        assert lines[0] == "t,lambda_1,lambda_2,lambda_3,x_1,x_2,min_gap,h_norm,d_to_target"
        assert len(lines) > 10
        last = lines[-1].split(",")
        assert float(last[-1]) < 1e-8  # driven state ends on target
        assert (tmp_path / "trajectory.png").exists()

    def test_bookend_mode(self, tmp_path):
        doc = yaml.safe_load(open(f"{CONFIGS}/transport_demo.cfg"))
        doc["plan"]["mode"] = "bookend"
        doc["plan"]["deltas"] = [0.1]
        cfg = tmp_path / "bookend.cfg"
        cfg.write_text(yaml.safe_dump(doc))
        out = tmp_path / "out"
        rc = run_cli("simulate", "--config", str(cfg), "--out-dir", str(out))
        assert rc == 0
        lines = (out / "bound.csv").read_text().splitlines()
        assert lines[0] == "delta,distance,bound,ratio"
        delta, distance, bound, ratio = map(float, lines[1].split(","))
        assert delta == 0.1
        assert 0.0 <= distance <= bound
        assert ratio == pytest.approx(distance / bound)
        assert (out / "bound.png").exists()

    def test_plan_required(self, tmp_path, capsys):
        rc = run_cli("simulate", "--config", f"{CONFIGS}/fig2_jump.cfg")
        assert rc == 1
        assert "plan block" in capsys.readouterr().err


class TestConsoleScript:
    def test_installed_entry_point(self):
        exe = shutil.which("flagdyn")
        if exe is None:
            pytest.skip("console script not on PATH")
        proc = subprocess.run(
            [exe, "validate", "--config", f"{CONFIGS}/fig2_jump.cfg"],
            capture_output=True, text=True, cwd=".",
        )
        assert proc.returncode == 0
        assert "ok:" in proc.stdout
