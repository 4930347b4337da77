"""Shared fixtures: the synthetic archive and a once-per-session pipeline run."""

from __future__ import annotations

import pytest

import synth
from debtlens.cli import main as cli_main


@pytest.fixture(scope="session")
def archive_path(tmp_path_factory):
    return synth.write_archive(tmp_path_factory.mktemp("archive") / "events.json.gz", seed=0)


@pytest.fixture(scope="session")
def pipeline_dir(tmp_path_factory, archive_path):
    """mine + curate executed once; tests read the artifacts."""
    root = tmp_path_factory.mktemp("pipeline")
    assert cli_main(["mine", "--input", str(archive_path), "--out", str(root / "mined")]) == 0
    assert (
        cli_main(
            [
                "curate",
                "--input", str(root / "mined" / "issues.jsonl"),
                "--out", str(root / "curated"),
                "--seed", "0",
            ]
        )
        == 0
    )
    return root


@pytest.fixture(scope="session")
def td_bundle_dir(pipeline_dir):
    out = pipeline_dir / "td_bundle"
    assert (
        cli_main(
            [
                "split",
                "--input", str(pipeline_dir / "curated" / "td.jsonl"),
                "--out", str(out),
                "--seed", "0",
                "--ratio", "0.85",
                "--k", "5",
                "--ood-top-n", "1",
            ]
        )
        == 0
    )
    return out
