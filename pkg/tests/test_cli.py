import csv
import json

import pytest

from elicitrec.cli import main, render_hulls_svg
from elicitrec.data_model import (
    PROVENANCE_COLUMN,
    SyntheticSpec,
    generate_synthetic,
    write_csv,
)
from elicitrec.evaluation import RocPoint


@pytest.fixture(scope="module")
def input_csv(tmp_path_factory):
    d = generate_synthetic(SyntheticSpec(n_majority=90, n_minority=20, p=8, n_informative=4, seed=3))
    path = tmp_path_factory.mktemp("data") / "data.csv"
    write_csv(d, path)
    return str(path)


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def fast_config(tmp_path, **extra):
    doc = {"target": "target", "forest": {"n_trees": 15}, "seed": 7}
    doc.update(extra)
    return write_config(tmp_path, doc)


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def no_tmp_leftovers(dirpath):
    return not [p for p in dirpath.iterdir() if p.suffix == ".tmp"]


class TestBalance:
    def test_writes_balanced_csv(self, tmp_path, input_csv, capsys):
        cfg = fast_config(tmp_path)
        rc = main(["balance", "--config", cfg, "--input", input_csv, "--out-dir", str(tmp_path)])
        assert rc == 0
        rows = read_rows(tmp_path / "balanced.csv")
        header, body = rows[0], rows[1:]
        assert header[-1] == PROVENANCE_COLUMN
        assert header[-2] == "target"
        labels = [r[-2] for r in body]
        assert labels.count("0") == labels.count("1") == 90
        flags = [r[-1] for r in body]
        assert flags.count("1") == 70  # the oversampled rows
        assert "-> " in capsys.readouterr().out
        assert no_tmp_leftovers(tmp_path)

    def test_already_balanced_input_passes_through(self, tmp_path, input_csv):
        cfg = fast_config(tmp_path)
        main(["balance", "--config", cfg, "--input", input_csv, "--out-dir", str(tmp_path)])
        first = read_rows(tmp_path / "balanced.csv")
        # rebalance the balanced output: counts are already equal, so the
        # rows pass through unchanged
        out2 = tmp_path / "second"
        rc = main([
            "balance", "--config", cfg,
            "--input", str(tmp_path / "balanced.csv"), "--out-dir", str(out2),
        ])
        assert rc == 0
        second = read_rows(out2 / "balanced.csv")
        assert second == first  # synthetic flags survive the round trip too

    def test_missing_input(self, tmp_path, capsys):
        cfg = fast_config(tmp_path)
        rc = main(["balance", "--config", cfg, "--input", "/nope.csv", "--out-dir", str(tmp_path)])
        assert rc == 2
        assert "error" in capsys.readouterr().err


class TestTrainEvaluate:
    def test_train_writes_model(self, tmp_path, input_csv):
        cfg = fast_config(tmp_path)
        rc = main(["train", "--config", cfg, "--input", input_csv, "--out-dir", str(tmp_path)])
        assert rc == 0
        doc = json.loads((tmp_path / "model.json").read_text())
        assert doc["format_version"] == 1
        assert doc["n_trees"] == 15
        assert doc["target_name"] == "target"
        assert len(doc["schema"]) == 8
        assert doc["target_levels"] == ["0", "1"]

    def test_evaluate_round_trip(self, tmp_path, input_csv):
        cfg = fast_config(tmp_path)
        main(["train", "--config", cfg, "--input", input_csv, "--out-dir", str(tmp_path)])
        rc = main([
            "evaluate", "--config", cfg, "--input", input_csv,
            "--model", str(tmp_path / "model.json"), "--out-dir", str(tmp_path),
        ])
        assert rc == 0
        doc = json.loads((tmp_path / "evaluation.json").read_text())
        conf = doc["confusion"]
        assert conf["tp"] + conf["fp"] + conf["tn"] + conf["fn"] == doc["n_rows"] == 110
        for key in ("accuracy", "auc", "auch"):
            assert 0.0 <= doc[key] <= 1.0
        # forests memorize their own training data almost perfectly
        assert doc["accuracy"] > 0.9

    def test_evaluate_missing_model(self, tmp_path, input_csv, capsys):
        cfg = fast_config(tmp_path)
        rc = main([
            "evaluate", "--config", cfg, "--input", input_csv,
            "--model", str(tmp_path / "absent.json"), "--out-dir", str(tmp_path),
        ])
        assert rc == 2
        assert "model" in capsys.readouterr().err


class TestRun:
    def run_once(self, tmp_path, input_csv, out_name, extra=()):
        cfg = fast_config(tmp_path)
        out = tmp_path / out_name
        rc = main([
            "run", "--config", cfg, "--input", input_csv, "--out-dir", str(out), *extra,
        ])
        assert rc == 0
        return out

    def test_artifacts_present_and_consistent(self, tmp_path, input_csv):
        out = self.run_once(tmp_path, input_csv, "out")
        for name in ("report.json", "roc_imbalanced.csv", "roc_balanced.csv", "roc_hulls.svg"):
            assert (out / name).exists()
        report = json.loads((out / "report.json").read_text())
        assert report["format_version"] == 1
        assert report["mode"] == "sound"
        assert report["comparison"]["hull_verdict"] in ("balanced", "imbalanced", "neither")
        svg = (out / "roc_hulls.svg").read_text()
        assert svg.count("<polyline") == 2
        assert 'id="hull-imbalanced"' in svg and 'id="hull-balanced"' in svg
        for arm, csv_name in (("imbalanced", "roc_imbalanced.csv"), ("balanced", "roc_balanced.csv")):
            rows = read_rows(out / csv_name)
            assert rows[0] == ["fpr", "tpr", "threshold", "on_hull"]
            n_hull = sum(1 for r in rows[1:] if r[3] == "true")
            poly = svg.split(f'id="hull-{arm}"')[1].split('points="')[1].split('"')[0]
            assert len(poly.split()) == n_hull
        assert no_tmp_leftovers(out)

    def test_report_byte_identical_across_runs(self, tmp_path, input_csv):
        a = self.run_once(tmp_path, input_csv, "a")
        b = self.run_once(tmp_path, input_csv, "b")
        assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
        assert (a / "roc_hulls.svg").read_bytes() == (b / "roc_hulls.svg").read_bytes()

    def test_mode_flag_overrides_config(self, tmp_path, input_csv):
        out = self.run_once(tmp_path, input_csv, "bf", extra=("--mode", "balance-first"))
        report = json.loads((out / "report.json").read_text())
        assert report["mode"] == "balance-first"

    def test_seed_changes_report(self, tmp_path, input_csv):
        a = self.run_once(tmp_path, input_csv, "s1", extra=("--seed", "1"))
        b = self.run_once(tmp_path, input_csv, "s2", extra=("--seed", "2"))
        assert (a / "report.json").read_bytes() != (b / "report.json").read_bytes()


class TestScore:
    def test_all_methods_and_marker(self, tmp_path, input_csv, capsys):
        cfg = write_config(
            tmp_path,
            {"target": "target", "forest": {"n_trees": 10}, "filter": {"top_k": 4}, "seed": 1},
        )
        out = tmp_path / "scores"
        rc = main(["score", "--config", cfg, "--input", input_csv, "--out-dir", str(out)])
        assert rc == 0
        for m in ("Chi2", "AnovaF", "MutualInfo"):
            rows = read_rows(out / f"scores_{m}.csv")
            assert rows[0] == ["feature", "role", "score"]
            assert len(rows) == 9
        best = (out / "best_method.txt").read_text().strip()
        assert best in ("Chi2", "AnovaF", "MutualInfo")
        assert "best filter" in capsys.readouterr().out

    def test_single_method_skips_marker(self, tmp_path, input_csv):
        cfg = write_config(
            tmp_path, {"target": "target", "filter": {"methods": ["Chi2"]}}, "single.json"
        )
        out = tmp_path / "single"
        rc = main(["score", "--config", cfg, "--input", input_csv, "--out-dir", str(out)])
        assert rc == 0
        assert (out / "scores_Chi2.csv").exists()
        assert not (out / "best_method.txt").exists()
        assert not (out / "scores_MutualInfo.csv").exists()


class TestRecommend:
    @pytest.fixture()
    def trained(self, tmp_path, input_csv):
        cfg = fast_config(tmp_path)
        main(["train", "--config", cfg, "--input", input_csv, "--out-dir", str(tmp_path)])
        main([
            "score", "--config",
            write_config(tmp_path, {"target": "target", "filter": {"methods": ["MutualInfo"]}}, "sc.json"),
            "--input", input_csv, "--out-dir", str(tmp_path),
        ])
        header, first = read_rows(input_csv)[:2]
        row = dict(zip(header[:-1], first[:-1]))
        row_path = tmp_path / "row.json"
        row_path.write_text(json.dumps(row), encoding="utf-8")
        return {
            "model": str(tmp_path / "model.json"),
            "scores": str(tmp_path / "scores_MutualInfo.csv"),
            "row": str(row_path),
            "dir": tmp_path,
        }

    def base_args(self, t):
        return [
            "recommend", "--model", t["model"], "--scores", t["scores"],
            "--row", t["row"], "--out-dir", str(t["dir"]),
        ]

    def test_recommendations_written(self, trained, capsys):
        rc = main(self.base_args(trained) + ["--threshold", "0.01"])
        assert rc == 0
        doc = json.loads((trained["dir"] / "recommendations.json").read_text())
        assert doc["format_version"] == 1
        assert doc["predicted"]["label"] == "target"
        assert 0.0 <= doc["predicted"]["probability"] <= 1.0
        assert doc["threshold"] == 0.01
        for entry in doc["collaborative"] + doc["content_based"]:
            assert entry["score"] > 0.01
        out = capsys.readouterr().out
        assert "prediction:" in out

    def test_high_threshold_gives_empty_lists(self, trained):
        rc = main(self.base_args(trained) + ["--threshold", "1e9"])
        assert rc == 0
        doc = json.loads((trained["dir"] / "recommendations.json").read_text())
        assert doc["collaborative"] == [] and doc["content_based"] == []

    def test_threshold_required(self, trained, capsys):
        rc = main(self.base_args(trained))
        assert rc == 2
        assert "threshold" in capsys.readouterr().err

    def test_unknown_level_names_feature(self, trained, capsys):
        row = json.loads(open(trained["row"]).read())
        bad_feature = sorted(row)[0]
        row[bad_feature] = "never-seen"
        open(trained["row"], "w").write(json.dumps(row))
        rc = main(self.base_args(trained) + ["--threshold", "0.1"])
        assert rc == 2
        assert bad_feature in capsys.readouterr().err

    def test_missing_feature_rejected(self, trained, capsys):
        row = json.loads(open(trained["row"]).read())
        removed = sorted(row)[0]
        del row[removed]
        open(trained["row"], "w").write(json.dumps(row))
        rc = main(self.base_args(trained) + ["--threshold", "0.1"])
        assert rc == 2
        assert removed in capsys.readouterr().err


class TestConfigErrors:
    def test_unknown_key(self, tmp_path, input_csv, capsys):
        cfg = write_config(tmp_path, {"target": "target", "tress": 5})
        rc = main(["train", "--config", cfg, "--input", input_csv, "--out-dir", str(tmp_path)])
        assert rc == 2
        assert "tress" in capsys.readouterr().err

    def test_unknown_nested_key(self, tmp_path, input_csv, capsys):
        cfg = write_config(tmp_path, {"target": "target", "forest": {"ntrees": 5}})
        rc = main(["train", "--config", cfg, "--input", input_csv, "--out-dir", str(tmp_path)])
        assert rc == 2
        assert "ntrees" in capsys.readouterr().err

    def test_bad_mode(self, tmp_path, input_csv):
        cfg = write_config(tmp_path, {"target": "target", "mode": "fast"})
        rc = main(["run", "--config", cfg, "--input", input_csv, "--out-dir", str(tmp_path)])
        assert rc == 2

    def test_wrong_type(self, tmp_path, input_csv):
        cfg = write_config(tmp_path, {"target": "target", "seed": "seven"})
        rc = main(["train", "--config", cfg, "--input", input_csv, "--out-dir", str(tmp_path)])
        assert rc == 2

    def test_bool_is_not_int(self, tmp_path, input_csv):
        cfg = write_config(tmp_path, {"target": "target", "forest": {"n_trees": True}})
        rc = main(["train", "--config", cfg, "--input", input_csv, "--out-dir", str(tmp_path)])
        assert rc == 2

    def test_invalid_json(self, tmp_path, input_csv):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        rc = main(["train", "--config", str(path), "--input", input_csv, "--out-dir", str(tmp_path)])
        assert rc == 2

    def test_missing_target(self, tmp_path, input_csv, capsys):
        rc = main(["train", "--input", input_csv, "--out-dir", str(tmp_path)])
        assert rc == 2
        assert "target" in capsys.readouterr().err

    def test_smote_null_disables_balancing(self, tmp_path, input_csv):
        cfg = write_config(
            tmp_path,
            {"target": "target", "smote": None, "forest": {"n_trees": 10}},
        )
        out = tmp_path / "off"
        rc = main(["run", "--config", cfg, "--input", input_csv, "--out-dir", str(out)])
        assert rc == 0
        report = json.loads((out / "report.json").read_text())
        assert report["comparison"]["hull_verdict"] == "neither"
        assert report["comparison"]["auc_delta"] == 0.0


class TestSvgRendering:
    def test_polyline_coordinates(self):
        hull = [RocPoint(0.0, 0.0, 1.0), RocPoint(0.25, 0.75, 0.5), RocPoint(1.0, 1.0, 0.0)]
        svg = render_hulls_svg(hull, hull)
        # fpr 0.25 -> x 150, tpr 0.75 -> y 150 in the 600 square
        assert "150.0,150.0" in svg
        assert svg.count("0.0,600.0 150.0,150.0 600.0,0.0") == 2
        assert "false positive rate" in svg and "true positive rate" in svg
