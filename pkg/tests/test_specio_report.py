import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import numpy.testing as npt
import pytest

import flagdyn as fd
from flagdyn.errors import ParseError, UnsupportedDimensionForSvgError, ValidationError
from flagdyn.randsys import SeededStream, random_dense_operators
from flagdyn.report import fmt, render_region_svg, write_csv, write_json
from flagdyn.specio import (
    parse_document,
    parse_plan,
    parse_run,
    parse_system,
    resolve_frame,
)

GOOD_DOC = """
system:
  n: 3
  operators:
    - jump: {from: 2, to: 1, rate: 25.0}
    - dephasing: {diag: [0.0, 1.5, [0.5, -0.5]]}
    - dense:
        real: [[0, 1, 0], [0, 0, 0], [0, 0, 0]]
        imag: [[0, 0, 0], [1, 0, 0], [0, 0, 0]]
run:
  resolution: 32
plan:
  lambda0: [0.5, 0.3, 0.2]
  duration: 1.0
  mode: roundtrip
  flag_path:
    kind: geodesic
    frames: [identity, {haar_seed: 11}]
    durations: [1.0]
"""


class TestParseDocument:
    def test_reports_yaml_error_position(self):
        with pytest.raises(ParseError, match=r"line \d+"):
            parse_document("system:\n  n: [3\n")

    def test_rejects_empty_and_non_mapping(self):
        with pytest.raises(ParseError, match="empty"):
            parse_document("")
        with pytest.raises(ParseError, match="mapping"):
            parse_document("- a\n- b\n")


class TestParseSystem:
    def test_full_document(self):
        spec = parse_system(parse_document(GOOD_DOC))
        assert spec.dim == 3
        assert spec.labels == ("jump 2->1 rate 25.0", "dephasing", "dense")
        npt.assert_allclose(spec.operators[0][0, 1], 5.0)
        npt.assert_allclose(spec.operators[1], np.diag([0.0, 1.5, 0.5 - 0.5j]))
        assert spec.operators[2][1, 0] == 1j
        assert spec.drift is None and spec.rng is None
        sys = spec.build()
        assert sys.dim == 3 and len(sys.lindblad_ops) == 3

    def test_unknown_keys_rejected_everywhere(self):
        with pytest.raises(ValidationError, match="unknown key"):
            parse_system({"system": {"n": 3, "typo": 1}})
        with pytest.raises(ValidationError, match="unknown key"):
            parse_system({"system": {"n": 3}, "extra": {}})
        with pytest.raises(ValidationError, match="unknown key"):
            parse_system(
                {"system": {"n": 3, "operators": [{"jump": {"from": 1, "to": 2, "rate": 1, "x": 0}}]}}
            )

    def test_jump_index_and_rate_guards(self):
        base = {"system": {"n": 3, "operators": [None]}}
        base["system"]["operators"][0] = {"jump": {"from": 4, "to": 1, "rate": 1.0}}
        with pytest.raises(ValidationError, match="from"):
            parse_system(base)
        base["system"]["operators"][0] = {"jump": {"from": 2, "to": 1, "rate": -3.0}}
        with pytest.raises(ValidationError, match="rate"):
            parse_system(base)

    def test_operator_kind_and_shape_guards(self):
        with pytest.raises(ValidationError, match="unknown operator kind"):
            parse_system({"system": {"n": 3, "operators": [{"pump": {}}]}})
        with pytest.raises(ValidationError, match="diag"):
            parse_system({"system": {"n": 3, "operators": [{"dephasing": {"diag": [1.0, 2.0]}}]}})
        with pytest.raises(ValidationError, match="3x3"):
            parse_system({"system": {"n": 3, "operators": [{"dense": {"real": [[1.0]]}}]}})

    def test_dimension_guard(self):
        with pytest.raises(ValidationError, match="n must be"):
            parse_system({"system": {"n": 1}})

    def test_rng_block(self):
        doc = {"system": {"n": 3, "rng": {"seed": 42, "count": 2, "magnitude": 100.0}}}
        spec = parse_system(doc)
        sys = spec.build()
        assert len(sys.lindblad_ops) == 2
        expected = random_dense_operators(42, 3, 2, 100.0)
        npt.assert_array_equal(sys.lindblad_ops[0], expected[0])
        overridden = spec.build(seed_override=43)
        assert np.abs(overridden.lindblad_ops[0] - expected[0]).max() > 1.0

    def test_rng_validation(self):
        for bad in ({"seed": -1, "count": 2, "magnitude": 1.0},
                    {"seed": 1, "count": 0, "magnitude": 1.0},
                    {"seed": 1, "count": 2, "magnitude": 0.0}):
            with pytest.raises(ValidationError):
                parse_system({"system": {"n": 3, "rng": bad}})

    def test_drift_must_be_matrix(self):
        doc = {"system": {"n": 2, "drift": {"real": [[0.0, 1.0], [1.0, 0.0]]}}}
        spec = parse_system(doc)
        npt.assert_allclose(spec.drift, [[0, 1], [1, 0]])


class TestParseRun:
    def test_defaults(self):
        cfg = parse_run({"system": {"n": 3}})
        assert cfg.resolution == 64
        assert cfg.membership_tol == 1e-7
        assert cfg.dedup is True

    def test_unknown_key(self):
        with pytest.raises(ValidationError, match="unknown key"):
            parse_run({"run": {"resolutoin": 32}})

    def test_value_guards(self):
        with pytest.raises(ValidationError, match="resolution"):
            parse_run({"run": {"resolution": 4}})
        with pytest.raises(ValidationError, match="checkpoint_stride"):
            parse_run({"run": {"checkpoint_stride": -1}})
        with pytest.raises(ValidationError, match="membership_tol"):
            parse_run({"run": {"membership_tol": 0.0}})


class TestParsePlan:
    def test_good_plan(self):
        plan = parse_plan(parse_document(GOOD_DOC), 3)
        assert plan.mode == "roundtrip"
        assert plan.path_kind == "geodesic"
        assert plan.frames == ("identity", {"haar_seed": 11})
        assert plan.deltas == (0.1, 0.05, 0.025)

    def test_missing_plan(self):
        with pytest.raises(ValidationError, match="plan block"):
            parse_plan({"system": {"n": 3}}, 3)

    def test_lambda0_guards(self):
        doc = parse_document(GOOD_DOC)
        doc["plan"]["lambda0"] = [0.9, 0.3, -0.2]
        with pytest.raises(ValidationError, match="probability"):
            parse_plan(doc, 3)
        doc["plan"]["lambda0"] = [0.5, 0.5]
        with pytest.raises(ValidationError, match="entries"):
            parse_plan(doc, 3)

    def test_mode_and_frame_count_guards(self):
        doc = parse_document(GOOD_DOC)
        doc["plan"]["mode"] = "sideways"
        with pytest.raises(ValidationError, match="mode"):
            parse_plan(doc, 3)
        doc["plan"]["mode"] = "roundtrip"
        doc["plan"]["flag_path"] = {"kind": "constant", "frames": ["identity", "iota"]}
        with pytest.raises(ValidationError, match="one frame"):
            parse_plan(doc, 3)

    def test_bookend_needs_deltas(self):
        doc = parse_document(GOOD_DOC)
        doc["plan"]["mode"] = "bookend"
        doc["plan"]["deltas"] = []
        with pytest.raises(ValidationError, match="deltas"):
            parse_plan(doc, 3)


class TestResolveFrame:
    def test_variants(self):
        base = SeededStream(77).haar_unitary(3)
        npt.assert_array_equal(resolve_frame("identity", 3, base, "t"), np.eye(3))
        npt.assert_array_equal(resolve_frame("iota", 3, base, "t"), base)
        h1 = resolve_frame({"haar_seed": 5}, 3, base, "t")
        h2 = resolve_frame({"haar_seed": 5}, 3, base, "t")
        npt.assert_array_equal(h1, h2)
        npt.assert_allclose(h1 @ h1.conj().T, np.eye(3), atol=1e-12)
        perm = resolve_frame({"permute_iota": [3, 1, 2]}, 3, base, "t")
        npt.assert_array_equal(perm[:, 0], base[:, 2])
        explicit = resolve_frame({"real": np.eye(3).tolist()}, 3, base, "t")
        npt.assert_array_equal(explicit, np.eye(3))

    def test_guards(self):
        base = np.eye(3, dtype=complex)
        with pytest.raises(ValidationError, match="permute_iota"):
            resolve_frame({"permute_iota": [1, 1, 2]}, 3, base, "t")
        with pytest.raises(ValidationError, match="frame spec"):
            resolve_frame("sideways", 3, base, "t")


class TestStreams:
    def test_uniform_golden_values(self):
        s = SeededStream(12345)
        assert float(s.uniform()) == 0.22733602246716966
        assert float(s.uniform()) == 0.31675833970975287
        assert float(SeededStream(12345).uniform()) == 0.22733602246716966

    def test_normal_moments(self):
        z = SeededStream(50).normal(20000)
        assert abs(z.mean()) < 0.03
        assert abs(z.std() - 1.0) < 0.03

    def test_haar_unitary_properties(self):
        for seed in (1, 2, 3):
            u = SeededStream(seed).haar_unitary(4)
            npt.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-12)
            assert abs(abs(np.linalg.det(u)) - 1.0) < 1e-12
        npt.assert_array_equal(
            SeededStream(9).haar_unitary(3), SeededStream(9).haar_unitary(3)
        )

    def test_simplex_point(self):
        for seed in range(5):
            p = SeededStream(seed).simplex_point(4)
            assert p.min() >= 0.0
            assert p.sum() == pytest.approx(1.0, abs=1e-12)

    def test_tangent_off_diagonal(self):
        h = SeededStream(8).tangent_off_diagonal(4)
        npt.assert_allclose(h, -h.conj().T, atol=1e-15)
        npt.assert_array_equal(np.diag(h), 0.0)
        assert np.linalg.norm(h) == pytest.approx(1.0)

    def test_dense_operator_golden_value(self):
        ops = random_dense_operators(42, 3, 2, 100.0)
        assert ops[0][0, 0] == 77.39560485559633 + 45.038593789556714j


class TestWriters:
    def test_fmt_round_trips(self):
        for x in (0.1, 1.0 / 3.0, 1e-17, 2.0, -0.75, 6561.0, np.float64(0.1)):
            assert float(fmt(x)) == float(x)
            assert "np." not in fmt(x)

    def test_csv_bytes(self, tmp_path):
        path = tmp_path / "out.csv"
        write_csv(path, ["a", "b", "c"], [[1, 0.5, "x"], [np.int64(2), np.float64(0.1), "y"]])
        data = path.read_bytes()
        assert data == b"a,b,c\n1,0.5,x\n2,0.1,y\n"
        assert b"\r" not in data

    def test_json_deterministic(self, tmp_path):
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        write_json(p1, {"b": np.float64(0.5), "a": np.int32(3), "c": np.arange(3)})
        write_json(p2, {"c": np.arange(3), "a": np.int32(3), "b": np.float64(0.5)})
        assert p1.read_bytes() == p2.read_bytes()
        payload = json.loads(p1.read_text())
        assert payload == {"a": 3, "b": 0.5, "c": [0, 1, 2]}
        assert p1.read_text().endswith("\n")


class TestSvg:
    def test_region_drawing(self, tmp_path, three_level_jump_system):
        sys = three_level_jump_system
        fset = fd.build_field_set(sys, fd.iota_flag_set(sys).flags)
        region = fd.rasterize_region(fset, resolution=16, samples_per_facet=12)
        arcs = [p.points for p in region.patches]
        path = tmp_path / "region.svg"
        render_region_svg(path, region, fset.pmap, arcs=arcs)
        root = ET.parse(path).getroot()
        assert root.tag.endswith("svg")
        ns = {"s": "http://www.w3.org/2000/svg"}
        circles = root.findall(".//s:circle", ns)
        counts = region.counts()
        # one dot per interior/boundary point, none for exterior
        assert len(circles) == counts["interior"] + counts["boundary"]
        assert len(root.findall(".//s:polygon", ns)) == 2  # outline + chamber shade
        # 3 chamber walls + 15 arcs
        assert len(root.findall(".//s:polyline", ns)) == 3 + 15

    def test_dimension_guard(self, tmp_path, cascade_system):
        sys = cascade_system
        fset = fd.build_field_set(sys, fd.iota_flag_set(sys).flags)
        region = fd.rasterize_region(fset, resolution=16, include_boundaries=False)
        with pytest.raises(UnsupportedDimensionForSvgError):
            render_region_svg(tmp_path / "r.svg", region, fset.pmap)


class TestPng:
    def test_figure_smoke(self, tmp_path, three_level_jump_system):
        from flagdyn.report import render_bound_png, render_region_png, render_trajectory_png

        sys = three_level_jump_system
        fset = fd.build_field_set(sys, fd.iota_flag_set(sys).flags)
        region = fd.rasterize_region(fset, resolution=16)
        p = render_region_png(tmp_path / "region.png", region, fset.pmap,
                              arcs=[p.points for p in region.patches])
        assert (tmp_path / "region.png").stat().st_size > 1000
        ts = np.linspace(0, 1, 30)
        lams = np.column_stack([0.5 + 0.1 * ts, 0.3 - 0.05 * ts, 0.2 - 0.05 * ts])
        render_trajectory_png(tmp_path / "traj.png", ts, lams)
        assert (tmp_path / "traj.png").stat().st_size > 1000
        render_bound_png(tmp_path / "bound.png", [0.1, 0.05], [0.01, 0.005], [0.6, 0.3])
        assert (tmp_path / "bound.png").stat().st_size > 1000
