"""Export contract emission and the reload self-check."""

from __future__ import annotations

import json

import pytest

from debtlens_finetune.export import export_model
from debtlens_finetune.data import CATEGORY_ORDER
from debtlens_finetune.trainer import FinetuneError, FinetuneJob, fine_tune


@pytest.fixture(scope="module")
def binary_result(small_bundle):
    return fine_tune(FinetuneJob(bundle_dir=small_bundle, task="td", epochs=1, run_cv=False))


class TestExportDirectory:
    def test_contract_files_written(self, binary_result, tmp_path):
        out = export_model(binary_result, tmp_path / "td")
        for name in ("model.pt", "tokenizer.json", "parity.jsonl", "card.json"):
            assert (out / name).is_file(), name

    def test_card_fields(self, binary_result, tmp_path):
        out = export_model(binary_result, tmp_path / "td")
        card = json.loads((out / "card.json").read_text())
        assert card["task"] == "td"
        assert card["label_order"] is None
        assert card["exported_at"]
        assert card["base_weights"] == "random-init"
        assert "epochs=1" in card["protocol_deviations"]

    def test_parity_has_64_rows_with_scores(self, binary_result, tmp_path):
        out = export_model(binary_result, tmp_path / "td")
        rows = [json.loads(l) for l in (out / "parity.jsonl").read_text().splitlines()]
        assert len(rows) == 64
        assert all(0.0 <= r["score"] <= 1.0 for r in rows)

    def test_untrained_export_refused(self, small_bundle, tmp_path, caplog):
        result = fine_tune(
            FinetuneJob(bundle_dir=small_bundle, task="td", epochs=0, run_cv=False)
        )
        with caplog.at_level("WARNING"):
            with pytest.raises(FinetuneError, match="untrained"):
                export_model(result, tmp_path / "refused")
        assert "refusing to export" in caplog.text
        assert not (tmp_path / "refused").exists()


class TestPrimaryConsumesExport:
    def test_adapter_loads_and_matches_parity(self, binary_result, tmp_path):
        out = export_model(binary_result, tmp_path / "td")

        from debtlens.classifier.export_adapter import check_parity, load_exported_model

        clf = load_exported_model(out)
        assert clf.kind == "binary"
        assert check_parity(clf, out / "parity.jsonl") <= 1e-3

    def test_multiclass_head_and_label_order(self, multiclass_bundle, tmp_path):
        result = fine_tune(
            FinetuneJob(bundle_dir=multiclass_bundle, task="multiclass", epochs=1, run_cv=False)
        )
        out = export_model(result, tmp_path / "mc")
        card = json.loads((out / "card.json").read_text())
        assert card["label_order"] == CATEGORY_ORDER

        from debtlens.classifier.export_adapter import check_parity, load_exported_model

        clf = load_exported_model(out)
        probs = clf.score_multi("payment sigbuild sigbuild cache")
        assert probs.shape == (13,)
        assert check_parity(clf, out / "parity.jsonl") <= 1e-3
