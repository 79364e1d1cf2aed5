import json

import numpy as np
import pytest

from fdc.cli import run
from fdc.dataset import load_labeled, save_points_csv, PointSet


def _strip_timestamp(path):
    doc = json.loads(path.read_text())
    doc.pop("timestamp", None)
    return json.dumps(doc, sort_keys=True)


class TestGen:
    def test_gen_writes_labeled_csv(self, tmp_path):
        out = tmp_path / "data.csv"
        code = run(["gen", "--dim", "4", "--n", "500", "--bits", "16", "--eta", "0.2",
                    "--seed", "3", "--out", str(out), "--support", "60"])
        assert code == 0
        ds = load_labeled(out)
        assert ds.base.dim == 4 and ds.n == 500
        assert set(np.unique(ds.labels)) <= {-1, 1}

    def test_gen_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["gen", "--dim", "3", "--n", "100", "--bits", "8", "--eta", "0.1",
                "--seed", "9", "--support", "40"]
        assert run(args + ["--out", str(a)]) == 0
        assert run(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_gen_requires_seed(self, tmp_path):
        code = run(["gen", "--dim", "3", "--n", "10", "--bits", "8", "--eta", "0.1",
                    "--out", str(tmp_path / "x.csv")])
        assert code == 1


class TestTransformDecompose:
    def _write_points(self, tmp_path):
        p = tmp_path / "pts.csv"
        save_points_csv(p, PointSet(2, np.array([[1, 0], [0, 1], [1, 1], [1, -1]])))
        return p

    def test_transform_and_verification(self, tmp_path):
        pts = self._write_points(tmp_path)
        out = tmp_path / "piece.json"
        assert run(["transform", "--input", str(pts), "--delta", "1e-3",
                    "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["verification"]["passed"] is True
        assert len(doc["members"]) == 4

    def test_decompose_roundtrip_verify(self, tmp_path):
        pts = self._write_points(tmp_path)
        out = tmp_path / "dec.json"
        assert run(["decompose", "--input", str(pts), "--delta", "1e-3",
                    "--out", str(out)]) == 0
        assert run(["eval", "--verify-decomposition", str(out),
                    "--input", str(pts)]) == 0

    def test_decompose_deterministic_output(self, tmp_path):
        pts = self._write_points(tmp_path)
        o1, o2 = tmp_path / "d1.json", tmp_path / "d2.json"
        run(["decompose", "--input", str(pts), "--delta", "1e-3", "--out", str(o1)])
        run(["decompose", "--input", str(pts), "--delta", "1e-3", "--out", str(o2)])
        assert _strip_timestamp(o1) == _strip_timestamp(o2)

    def test_verify_rejects_tampered_decomposition(self, tmp_path):
        pts = self._write_points(tmp_path)
        out = tmp_path / "dec.json"
        run(["decompose", "--input", str(pts), "--delta", "1e-3", "--out", str(out)])
        doc = json.loads(out.read_text())
        doc["pieces"][0]["transform"] = [[1.0, 0.9], [0.0, 0.3]]
        out.write_text(json.dumps(doc))
        assert run(["eval", "--verify-decomposition", str(out),
                    "--input", str(pts)]) == 2

    def test_missing_input_usage_error(self, tmp_path):
        assert run(["transform", "--out", str(tmp_path / "x.json")]) == 1
        assert run(["transform", "--input", str(tmp_path / "nope.csv"),
                    "--out", str(tmp_path / "x.json")]) == 1


class TestLearnEval:
    def test_learn_then_eval(self, tmp_path):
        train = tmp_path / "train.csv"
        test = tmp_path / "test.csv"
        run(["gen", "--dim", "3", "--n", "40000", "--bits", "12", "--eta", "0.1",
             "--seed", "3", "--out", str(train), "--support", "150"])
        run(["gen", "--dim", "3", "--n", "20000", "--bits", "12", "--eta", "0.1",
             "--seed", "4", "--out", str(test), "--support", "150"])
        model_out = tmp_path / "h.json"
        code = run(["learn", "--train-oracle", str(train), "--eta", "0.1",
                    "--eps", "0.15", "--delta", "0.2", "--seed", "7",
                    "--out", str(model_out), "--c-const", "8"])
        assert code == 0
        result = tmp_path / "eval.json"
        code = run(["eval", "--model", str(model_out), "--test", str(test),
                    "--out", str(result)])
        assert code == 0
        doc = json.loads(result.read_text())
        # same support + same w*: error should beat the noise budget comfortably
        assert doc["total_error"] <= 0.1 + 0.15

    def test_config_file_defaults(self, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("delta = 1e-3\n# comment\n")
        pts = tmp_path / "pts.csv"
        save_points_csv(pts, PointSet(2, np.array([[1, 0], [0, 1], [1, 1], [1, -1]])))
        out = tmp_path / "piece.json"
        assert run(["transform", "--input", str(pts), "--config", str(cfg),
                    "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["certificate"]["delta"] == pytest.approx(1e-3)


def test_json_floats_roundtrip_17g(tmp_path):
    from fdc.cli import dump_json

    value = 0.1 + 0.2  # 0.30000000000000004
    path = tmp_path / "x.json"
    dump_json({"v": value, "arr": [1.0 / 3.0]}, path)
    doc = json.loads(path.read_text())
    assert doc["v"] == value
    assert doc["arr"][0] == 1.0 / 3.0


def test_no_verb_usage():
    assert run([]) == 1
