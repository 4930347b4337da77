"""Fine-tuning jobs on small bundles: protocol, reports, failure modes."""

from __future__ import annotations

import pytest

from debtlens_finetune.metrics_lite import class_weights
from debtlens_finetune.trainer import FinetuneError, FinetuneJob, fine_tune

REPORT_KEYS = {"model", "split", "confusion", "metrics", "support"}
METRIC_KEYS = {"precision", "recall", "accuracy", "f1", "mcc", "auc"}


class TestJobValidation:
    def test_unknown_task(self):
        with pytest.raises(ValueError, match="unknown task"):
            FinetuneJob(bundle_dir=".", task="regression")

    def test_category_task_needs_name(self):
        with pytest.raises(ValueError, match="category"):
            FinetuneJob(bundle_dir=".", task="category")


@pytest.fixture(scope="module")
def result(small_bundle):
    return fine_tune(
        FinetuneJob(bundle_dir=small_bundle, task="td", epochs=1, seed=0, run_cv=True)
    )


class TestBinaryJob:
    def test_fold_reports_in_primary_schema(self, result):
        assert len(result.fold_reports) == 3
        for report in result.fold_reports:
            assert set(report) == REPORT_KEYS
            assert set(report["metrics"]) == METRIC_KEYS
            assert report["split"] == "cv"

    def test_final_report_on_test_split(self, result):
        assert result.final_report is not None
        assert result.final_report["split"] == "test"
        assert set(result.final_report["metrics"]) == METRIC_KEYS

    def test_config_records_provenance_and_deviations(self, result):
        assert result.config["base_weights"] == "random-init"
        assert result.config["optimizer"] == "adamw"
        assert "epochs=1" in result.config["protocol_deviations"]

    def test_parity_texts_are_64(self, result):
        assert len(result.parity_texts) == 64

    def test_scores_are_probabilities(self, result):
        probs = result.score_texts(["payment refactor cache release window queue"])
        assert probs.shape == (1,)
        assert 0.0 <= float(probs[0]) <= 1.0


class TestEpochsZero:
    def test_untrained_flag(self, small_bundle):
        result = fine_tune(
            FinetuneJob(bundle_dir=small_bundle, task="td", epochs=0, run_cv=False)
        )
        assert not result.trained
        assert result.loss_trace == []


class TestDivergence:
    def test_divergent_loss_reports_context(self, small_bundle):
        with pytest.raises(FinetuneError, match="divergent loss"):
            fine_tune(
                FinetuneJob(
                    bundle_dir=small_bundle, task="td", epochs=2,
                    learning_rate=1e30, run_cv=False,
                )
            )


class TestMulticlassJob:
    def test_class_weight_formula_shared_with_primary(self):
        weights = class_weights([90, 10])
        assert weights[0] == pytest.approx(100 / (2 * 90))
        assert weights[1] == pytest.approx(100 / (2 * 10))

    def test_multiclass_trains_and_reports(self, multiclass_bundle):
        result = fine_tune(
            FinetuneJob(
                bundle_dir=multiclass_bundle, task="multiclass", epochs=1, run_cv=False
            )
        )
        assert result.num_labels == 13
        assert result.config["class_weighted"] is True
        probs = result.score_texts(["payment sigtest sigtest cache"])
        assert probs.shape == (1, 13)
        assert probs.sum() == pytest.approx(1.0, abs=1e-5)

    def test_unknown_label_rejected(self, tmp_path):
        import synth_ft

        rows = synth_ft.make_multiclass_rows(per_category=3, seed=1)
        for row in rows[:2]:
            row["label"] = "NotACategory"
        corpus = synth_ft.write_corpus_jsonl(rows, tmp_path / "bad.jsonl")
        bundle_dir = tmp_path / "bundle"
        bundle_dir.mkdir()
        (bundle_dir / "manifest.json").write_text('{"seed": 0, "folds": {"k": 2}}')
        import shutil

        shutil.copy(corpus, bundle_dir / "dataset.jsonl")
        with pytest.raises(FinetuneError, match="NotACategory"):
            fine_tune(
                FinetuneJob(bundle_dir=bundle_dir, task="multiclass", epochs=1, run_cv=False)
            )
