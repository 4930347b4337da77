"""End-to-end CLI runs over the synthetic archive: artifact contents,
manifest determinism, and error reporting."""

from __future__ import annotations

import json
from collections import Counter

import pytest

import synth
from debtlens.cli import main as cli_main
from debtlens.corpus import load_bundle
from debtlens.labeling import CATEGORIES


def read_jsonl(path):
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


class TestMine:
    def test_stats_match_fixture_composition(self, pipeline_dir):
        manifest = json.loads((pipeline_dir / "mined" / "mine_manifest.json").read_text())
        stats = manifest["stats"]
        assert stats["lines_read"] == synth.ARCHIVE_TOTAL_LINES
        assert stats["records_emitted"] == synth.EXPECTED_RECORDS
        assert stats["lines_skipped_malformed"] == synth.EXPECTED_MALFORMED
        assert stats["events_skipped_wrong_type"] == synth.EXPECTED_WRONG_TYPE
        rows = read_jsonl(pipeline_dir / "mined" / "issues.jsonl")
        assert len(rows) == synth.EXPECTED_RECORDS


class TestCurate:
    def test_td_dataset_balanced_at_fixture_counts(self, pipeline_dir):
        rows = read_jsonl(pipeline_dir / "curated" / "td.jsonl")
        labels = Counter(r["label"] for r in rows)
        assert labels[True] == synth.TD_UNIQUE_CLEANED
        assert labels[False] == synth.TD_UNIQUE_CLEANED

    def test_every_category_dataset_present_and_balanced(self, pipeline_dir):
        for cat in CATEGORIES:
            rows = read_jsonl(pipeline_dir / "curated" / f"cat_{cat.value.lower()}.jsonl")
            labels = Counter(r["label"] for r in rows)
            expected = synth.CATEGORY_POSITIVES[cat]
            assert labels[True] == expected, cat
            assert labels[False] == expected, cat

    def test_multiclass_counts(self, pipeline_dir):
        rows = read_jsonl(pipeline_dir / "curated" / "multiclass.jsonl")
        assert len(rows) == sum(synth.CATEGORY_POSITIVES.values())
        by_cat = Counter(r["label"] for r in rows)
        for cat in CATEGORIES:
            assert by_cat[cat.value] == synth.CATEGORY_POSITIVES[cat]

    def test_ground_truth_file(self, pipeline_dir):
        rows = read_jsonl(pipeline_dir / "curated" / "ground_truth.jsonl")
        assert len(rows) == synth.GROUND_TRUTH_PER_CATEGORY * len(CATEGORIES)
        assert all(row["categories"] for row in rows)

    def test_no_ground_truth_text_leaks_into_datasets(self, pipeline_dir):
        gt_texts = {r["text"] for r in read_jsonl(pipeline_dir / "curated" / "ground_truth.jsonl")}
        for name in ["td.jsonl", "multiclass.jsonl"] + [
            f"cat_{c.value.lower()}.jsonl" for c in CATEGORIES
        ]:
            texts = {r["text"] for r in read_jsonl(pipeline_dir / "curated" / name)}
            assert not (texts & gt_texts), name

    def test_ruleset_written_verbatim(self, pipeline_dir):
        from debtlens.labeling import TD_PATTERN, TYPE_PATTERN

        config = json.loads((pipeline_dir / "curated" / "ruleset.json").read_text())
        assert config["td_pattern"] == TD_PATTERN
        assert config["type_pattern"] == TYPE_PATTERN

    def test_manifest_records_both_count_views(self, pipeline_dir):
        manifest = json.loads((pipeline_dir / "curated" / "curate_manifest.json").read_text())
        assert manifest["matched_counts"]["td_positives"] == synth.TD_POSITIVE_EVENTS
        assert manifest["matched_counts"]["ground_truth"] == 130
        assert manifest["dataset_counts"]["td"]["positive"] == synth.TD_UNIQUE_CLEANED

    def test_rerun_manifest_byte_identical(self, pipeline_dir, tmp_path):
        out2 = tmp_path / "curated2"
        assert (
            cli_main(
                [
                    "curate",
                    "--input", str(pipeline_dir / "mined" / "issues.jsonl"),
                    "--out", str(out2),
                    "--seed", "0",
                ]
            )
            == 0
        )
        a = (pipeline_dir / "curated" / "curate_manifest.json").read_bytes()
        b = (out2 / "curate_manifest.json").read_bytes()
        assert a == b
        assert (pipeline_dir / "curated" / "td.jsonl").read_bytes() == (out2 / "td.jsonl").read_bytes()


class TestSplit:
    def test_bundle_partitions(self, pipeline_dir, td_bundle_dir):
        bundle = load_bundle(td_bundle_dir)
        total = len(bundle.train) + len(bundle.test) + len(bundle.ood)
        assert total == 2 * synth.TD_UNIQUE_CLEANED
        assert bundle.manifest["withheld_repos"] == ["mega/app"]
        assert all(e.repo_name != "mega/app" for e in bundle.train + bundle.test)
        assert all(e.repo_name == "mega/app" for e in bundle.ood)

    def test_fold_balance(self, td_bundle_dir):
        bundle = load_bundle(td_bundle_dir)
        for label in (True, False):
            sizes = Counter(
                bundle.folds[i] for i, e in enumerate(bundle.train) if e.label is label
            )
            counts = [sizes.get(f, 0) for f in range(5)]
            assert max(counts) - min(counts) <= 1

    def test_stratified_ratio(self, td_bundle_dir):
        bundle = load_bundle(td_bundle_dir)
        train_pos = sum(1 for e in bundle.train if e.label)
        test_pos = sum(1 for e in bundle.test if e.label)
        main_pos = train_pos + test_pos
        assert train_pos == int(0.85 * main_pos)

    def test_temporal_mode(self, pipeline_dir, tmp_path):
        out = tmp_path / "temporal"
        assert (
            cli_main(
                [
                    "split",
                    "--input", str(pipeline_dir / "curated" / "td.jsonl"),
                    "--out", str(out),
                    "--seed", "0",
                    "--cutoff", "2020-01-01T00:00:00Z",
                ]
            )
            == 0
        )
        bundle = load_bundle(out)
        cutoff = "2020-01-01"
        assert all(e.created_at.isoformat() < cutoff for e in bundle.train)
        assert all(e.created_at.isoformat() >= cutoff for e in bundle.test)
        assert bundle.ood == []

    def test_purges_ground_truth_when_given(self, pipeline_dir, tmp_path):
        out = tmp_path / "purged"
        assert (
            cli_main(
                [
                    "split",
                    "--input", str(pipeline_dir / "curated" / "td.jsonl"),
                    "--out", str(out),
                    "--seed", "0",
                    "--ground-truth", str(pipeline_dir / "curated" / "ground_truth.jsonl"),
                ]
            )
            == 0
        )
        bundle = load_bundle(out)
        # curate already purged, so nothing is lost here
        assert len(bundle.train) + len(bundle.test) + len(bundle.ood) == 2 * synth.TD_UNIQUE_CLEANED


@pytest.fixture(scope="module")
def model_dir(td_bundle_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("model")
    assert (
        cli_main(
            [
                "train-baseline",
                "--input", str(td_bundle_dir),
                "--out", str(out),
                "--epochs", "5",
                "--seed", "0",
            ]
        )
        == 0
    )
    return out


class TestTrainAndEvaluate:
    def test_artifacts_written(self, model_dir):
        assert (model_dir / "model.npz").is_file()
        cv = json.loads((model_dir / "cv_reports.json").read_text())
        assert len(cv) == 5

    def test_evaluate_writes_report(self, td_bundle_dir, model_dir, tmp_path):
        out = tmp_path / "eval"
        assert (
            cli_main(
                [
                    "evaluate",
                    "--input", str(td_bundle_dir),
                    "--model-dir", str(model_dir / "model.npz"),
                    "--out", str(out),
                    "--split", "test",
                ]
            )
            == 0
        )
        report = json.loads((out / "report.json").read_text())[0]
        assert report["split"] == "test"
        assert set(report["metrics"]) == {"precision", "recall", "accuracy", "f1", "mcc", "auc"}

    def test_missing_model_path_errors_with_single_line(self, td_bundle_dir, tmp_path, capsys):
        rc = cli_main(
            [
                "evaluate",
                "--input", str(td_bundle_dir),
                "--model-dir", str(tmp_path / "nope.npz"),
                "--out", str(tmp_path / "eval"),
            ]
        )
        assert rc != 0
        err_lines = [l for l in capsys.readouterr().err.strip().splitlines() if l]
        assert len(err_lines) == 1
        payload = json.loads(err_lines[0])
        assert "nope.npz" in payload["message"]


@pytest.fixture(scope="module")
def ensemble_dir(pipeline_dir, tmp_path_factory):
    """Train the TD model + two category models into one directory."""
    models = tmp_path_factory.mktemp("ensemble_models")
    jobs = [("td.jsonl", "td"), ("cat_test.jsonl", "cat_test"), ("cat_build.jsonl", "cat_build")]
    for dataset, name in jobs:
        bundle_out = models / f"{name}_bundle"
        assert (
            cli_main(
                [
                    "split",
                    "--input", str(pipeline_dir / "curated" / dataset),
                    "--out", str(bundle_out),
                    "--seed", "0",
                ]
            )
            == 0
        )
        train_out = models / f"{name}_train"
        assert (
            cli_main(
                ["train-baseline", "--input", str(bundle_out), "--out", str(train_out), "--epochs", "5"]
            )
            == 0
        )
        (models / f"{name}.npz").write_bytes((train_out / "model.npz").read_bytes())
    return models


class TestEnsembleCommands:
    def test_ensemble_verdicts(self, pipeline_dir, ensemble_dir, tmp_path):
        out = tmp_path / "verdicts"
        rc = cli_main(
            [
                "ensemble",
                "--input", str(pipeline_dir / "curated" / "td.jsonl"),
                "--model-dir", str(ensemble_dir),
                "--out", str(out),
            ]
        )
        assert rc == 0
        rows = [json.loads(l) for l in (out / "verdicts.jsonl").read_text().splitlines()]
        assert len(rows) == 2 * synth.TD_UNIQUE_CLEANED
        for row in rows:
            assert set(row["typed_debt"]) <= {"Test", "Build"}
            if not row["is_td"]:
                assert row["typed_debt"] == []

    def test_ground_truth_eval(self, pipeline_dir, ensemble_dir, tmp_path):
        out = tmp_path / "gt"
        rc = cli_main(
            [
                "ground-truth-eval",
                "--input", str(pipeline_dir / "curated" / "ground_truth.jsonl"),
                "--model-dir", str(ensemble_dir),
                "--out", str(out),
            ]
        )
        assert rc == 0
        rows = json.loads((out / "ground_truth_recall.json").read_text())
        assert len(rows) == 13
        by_cat = {r["category"]: r for r in rows}
        assert by_cat["Test"]["support"] == synth.GROUND_TRUTH_PER_CATEGORY
        assert by_cat["Test"]["recalls"]["td_only"] is not None
        table = (out / "ground_truth_recall.txt").read_text()
        assert "Architecture" in table


class TestUnknownInputs:
    def test_unreadable_input_single_line_error(self, tmp_path, capsys):
        rc = cli_main(["mine", "--input", str(tmp_path / "absent.gz"), "--out", str(tmp_path / "o")])
        assert rc != 0
        err = capsys.readouterr().err.strip()
        assert len(err.splitlines()) == 1
        json.loads(err)
