"""Shared fixtures for the finetune suite.

HF_HUB_OFFLINE makes base-model resolution fail fast into the random-init
fallback instead of retrying network calls.
"""

from __future__ import annotations

import os

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TOKENIZERS_PARALLELISM", "false")

import pytest

import synth_ft
from debtlens.cli import main as debtlens_cli


@pytest.fixture(scope="session")
def small_bundle(tmp_path_factory):
    """120-example order-task bundle built through the primary split stage."""
    work = tmp_path_factory.mktemp("small")
    corpus = work / "corpus.jsonl"
    synth_ft.write_corpus_jsonl(synth_ft.make_order_rows(60, seed=3), corpus)
    assert debtlens_cli(
        ["split", "--input", str(corpus), "--out", str(work / "bundle"), "--seed", "0", "--k", "3"]
    ) == 0
    return work / "bundle"


@pytest.fixture(scope="session")
def multiclass_bundle(tmp_path_factory):
    work = tmp_path_factory.mktemp("mc")
    corpus = work / "corpus.jsonl"
    synth_ft.write_corpus_jsonl(synth_ft.make_multiclass_rows(per_category=12, seed=5), corpus)
    assert debtlens_cli(
        ["split", "--input", str(corpus), "--out", str(work / "bundle"), "--seed", "0", "--k", "2"]
    ) == 0
    return work / "bundle"
