"""Pipeline CLI: mine, curate, split, train-baseline, evaluate, ensemble,
ground-truth-eval.

Every run is seeded and writes a manifest capturing the effective config,
rule-set version, and sha256 digests of its inputs; identical invocations
produce byte-identical manifests. Artifacts are written atomically.
The DEBTLENS_LOG env var sets the log level.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import corpus, ingest, metrics
from .classifier import baseline, ensemble as ensemble_mod, export_adapter
from .errors import DebtlensError
from .labeling import (
    CATEGORIES,
    DEFAULT_RULES,
    Category,
    RULESET_VERSION,
    partition_by_verdict,
)

logger = logging.getLogger(__name__)


def _atomic_write_text(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_jsonl(path: Path, rows) -> int:
    lines = [json.dumps(row, ensure_ascii=False, sort_keys=True) for row in rows]
    _atomic_write_text(path, "".join(line + "\n" for line in lines))
    return len(lines)


def _digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir: Path, command: str, config: dict, inputs: list[Path], outputs: list[str], extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "config": config,
        "ruleset_version": RULESET_VERSION,
        "input_digests": {str(p): _digest(p) for p in sorted(inputs)},
        "outputs": sorted(outputs),
    }
    if extra:
        manifest.update(extra)
    _atomic_write_text(
        out_dir / f"{command.replace('-', '_')}_manifest.json",
        json.dumps(manifest, indent=2, sort_keys=True) + "\n",
    )


def _cat_slug(cat: Category) -> str:
    return cat.value.lower()


def cmd_mine(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    inputs = [Path(p) for p in args.input]
    total = ingest.IngestStats()
    records: list[ingest.IssueRecord] = []
    for path in inputs:
        recs, stats = ingest.parse_event_stream(path)
        logger.info(
            "%s: %d lines, %d records, %d malformed, %d wrong-type",
            path, stats.lines_read, stats.records_emitted,
            stats.lines_skipped_malformed, stats.events_skipped_wrong_type,
        )
        records.extend(recs)
        total = total.merge(stats)
    if args.start or args.end:
        start = ingest.parse_timestamp(args.start) if args.start else ingest.parse_timestamp("1970-01-01T00:00:00Z")
        end = ingest.parse_timestamp(args.end) if args.end else ingest.parse_timestamp("9999-01-01T00:00:00Z")
        records = ingest.filter_by_date(records, start, end)
    n = _atomic_write_jsonl(out / "issues.jsonl", (r.to_dict() for r in records))
    _write_manifest(
        out, "mine",
        {"input": [str(p) for p in inputs], "start": args.start, "end": args.end},
        inputs, ["issues.jsonl"],
        extra={"stats": {
            "lines_read": total.lines_read,
            "records_emitted": total.records_emitted,
            "lines_skipped_malformed": total.lines_skipped_malformed,
            "events_skipped_wrong_type": total.events_skipped_wrong_type,
            "records_written": n,
        }},
    )
    return 0


def _clean_records(records, min_len: int, verdicts=None) -> list[corpus.LabeledExample]:
    out = []
    for rec in records:
        text = corpus.clean_text(rec.title, rec.body, min_len=min_len)
        if text is None:
            continue
        verdict = verdicts.get(id(rec)) if verdicts else None
        out.append(
            corpus.LabeledExample(
                text=text, label=False, repo_name=rec.repo_name,
                created_at=rec.created_at, source_verdict=verdict,
            )
        )
    return out


def cmd_curate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    input_path = Path(args.input)
    records = ingest.read_records_jsonl(input_path)
    part = partition_by_verdict(records)

    selected = (
        [c for c in CATEGORIES if c.value.lower() == args.category.lower()]
        if args.category
        else list(CATEGORIES)
    )
    if args.category and not selected:
        raise DebtlensError(f"unknown category {args.category!r}")

    td_pos = corpus.deduplicate(_clean_records(part.td_positives, args.min_len, part.verdicts))
    gt = corpus.deduplicate(_clean_records(part.ground_truth, args.min_len, part.verdicts))
    residual = corpus.deduplicate(_clean_records(part.residual, args.min_len, part.verdicts))
    cat_pos = {
        c: corpus.deduplicate(_clean_records(part.category_positives[c], args.min_len, part.verdicts))
        for c in CATEGORIES
    }

    # Leakage guards: nothing ground-truth-textual in any pool; the negative
    # pool must not share text with any positive pool.
    td_pos = corpus.purge_ground_truth(td_pos, gt)
    residual = corpus.purge_ground_truth(residual, gt)
    cat_pos = {c: corpus.purge_ground_truth(v, gt) for c, v in cat_pos.items()}
    positive_texts = {e.text for e in td_pos}
    for v in cat_pos.values():
        positive_texts |= {e.text for e in v}
    negative_pool = [e for e in residual if e.text not in positive_texts]

    outputs: list[str] = []
    dataset_counts: dict[str, dict] = {}

    balanced_td = corpus.build_balanced_dataset(td_pos, negative_pool, args.seed)
    corpus.write_examples_jsonl(balanced_td, out / "td.jsonl")
    outputs.append("td.jsonl")
    dataset_counts["td"] = {
        "positive": sum(1 for e in balanced_td if e.label is True),
        "negative": sum(1 for e in balanced_td if e.label is False),
    }

    empty_categories: list[str] = []
    for cat in selected:
        if not cat_pos[cat]:
            empty_categories.append(cat.value)
            logger.warning("category %s has no cleaned positives; dataset skipped", cat.value)
            continue
        balanced = corpus.build_balanced_dataset(cat_pos[cat], negative_pool, args.seed)
        name = f"cat_{_cat_slug(cat)}.jsonl"
        corpus.write_examples_jsonl(balanced, out / name)
        outputs.append(name)
        dataset_counts[cat.value] = {
            "positive": sum(1 for e in balanced if e.label is True),
            "negative": sum(1 for e in balanced if e.label is False),
        }

    if not args.category:
        if all(cat_pos[c] for c in CATEGORIES):
            multi = corpus.build_multiclass_dataset(cat_pos, args.seed)
            corpus.write_examples_jsonl(multi, out / "multiclass.jsonl")
            outputs.append("multiclass.jsonl")
            dataset_counts["multiclass"] = {
                c.value: sum(1 for e in multi if e.label is c) for c in CATEGORIES
            }
        else:
            logger.warning(
                "multiclass dataset skipped; empty categories: %s", ", ".join(empty_categories)
            )

    gt_rows = [
        {
            "text": e.text,
            "repo": e.repo_name,
            "created_at": e.created_at.isoformat().replace("+00:00", "Z") if e.created_at else None,
            "categories": sorted(c.value for c in (e.source_verdict.categories if e.source_verdict else ())),
        }
        for e in gt
    ]
    _atomic_write_jsonl(out / "ground_truth.jsonl", gt_rows)
    outputs.append("ground_truth.jsonl")

    DEFAULT_RULES.save(out / "ruleset.json")
    outputs.append("ruleset.json")

    matched_counts = {
        "td_positives": len(part.td_positives),
        "ground_truth": len(part.ground_truth),
        "residual": len(part.residual),
        **{c.value: len(part.category_positives[c]) for c in CATEGORIES},
    }
    _write_manifest(
        out, "curate",
        {
            "input": str(input_path), "seed": args.seed,
            "min_len": args.min_len, "category": args.category,
        },
        [input_path], outputs,
        extra={
            "matched_counts": matched_counts,
            "dataset_counts": dataset_counts,
            "empty_categories": sorted(empty_categories),
        },
    )
    return 0


def cmd_split(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    input_path = Path(args.input)
    examples = corpus.read_examples_jsonl(input_path)
    inputs = [input_path]
    if args.ground_truth:
        gt_path = Path(args.ground_truth)
        gt_texts = [json.loads(line)["text"] for line in gt_path.read_text().splitlines() if line.strip()]
        examples = corpus.purge_ground_truth(examples, gt_texts)
        inputs.append(gt_path)

    if args.cutoff:
        cutoff = ingest.parse_timestamp(args.cutoff)
        train, test = corpus.temporal_split(examples, cutoff)
        ood: list[corpus.LabeledExample] = []
        withheld: list[str] = []
    else:
        main, ood, withheld = corpus.carve_ood(examples, args.ood_top_n)
        train, test = corpus.split_train_test(main, args.ratio, args.seed)
    folds = corpus.stratified_folds(train, args.k, args.seed)
    bundle = corpus.DatasetBundle(train=train, test=test, ood=ood, folds=folds, seed=args.seed)
    bundle.build_manifest(
        extra={
            "withheld_repos": withheld,
            "ratio": args.ratio,
            "k": args.k,
            "ood_top_n": args.ood_top_n,
            "cutoff": args.cutoff,
        }
    )
    corpus.save_bundle(bundle, out)
    _write_manifest(
        out, "split",
        {
            "input": str(input_path), "seed": args.seed, "ratio": args.ratio,
            "k": args.k, "ood_top_n": args.ood_top_n, "cutoff": args.cutoff,
            "ground_truth": args.ground_truth,
        },
        inputs, ["dataset.jsonl", "manifest.json"],
    )
    return 0


def _bundle_is_multiclass(bundle: corpus.DatasetBundle) -> bool:
    sample = bundle.train or bundle.test or bundle.ood
    return bool(sample) and isinstance(sample[0].label, Category)


def cmd_train_baseline(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    bundle_dir = Path(args.input)
    bundle = corpus.load_bundle(bundle_dir)
    if _bundle_is_multiclass(bundle):
        model, fold_reports = baseline.train_baseline_multiclass(
            bundle.train, folds=bundle.folds, epochs=args.epochs,
            learning_rate=args.learning_rate, seed=args.seed,
            classes=list(CATEGORIES),
        )
    else:
        model, fold_reports = baseline.train_baseline_binary(
            bundle.train, folds=bundle.folds, epochs=args.epochs,
            learning_rate=args.learning_rate, seed=args.seed,
            threshold=args.threshold,
        )
    model.save(out / "model.npz")
    json_text, table = metrics.render_report(fold_reports)
    _atomic_write_text(out / "cv_reports.json", json_text + "\n")
    _atomic_write_text(out / "cv_reports.txt", table)
    _write_manifest(
        out, "train-baseline",
        {
            "input": str(bundle_dir), "seed": args.seed, "epochs": args.epochs,
            "learning_rate": args.learning_rate, "threshold": args.threshold,
        },
        [bundle_dir / "dataset.jsonl", bundle_dir / "manifest.json"],
        ["model.npz", "cv_reports.json", "cv_reports.txt"],
        extra={"kind": model.kind, "loss_trace": model.loss_trace},
    )
    return 0


def _load_any_model(path: Path, threshold: float):
    if not path.exists():
        raise DebtlensError(f"model path does not exist: {path}")
    if path.is_dir():
        return export_adapter.load_exported_model(path, threshold=threshold)
    model = baseline.BaselineModel.load(path)
    model.threshold = threshold
    return model


def cmd_evaluate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    bundle_dir = Path(args.input)
    bundle = corpus.load_bundle(bundle_dir)
    examples = bundle.partition(args.split)
    if not examples:
        raise DebtlensError(f"partition {args.split!r} is empty in {bundle_dir}")
    model_path = Path(args.model_dir)
    model = _load_any_model(model_path, args.threshold)
    texts = [e.text for e in examples]
    model_name = model_path.stem if model_path.is_file() else model_path.name
    if getattr(model, "kind", "binary") == "multiclass":
        probs = model.score_many(texts)
        class_names = list(model.class_names)
        name_to_idx = {n: i for i, n in enumerate(class_names)}
        truth_idx = [
            name_to_idx[e.label.value if isinstance(e.label, Category) else str(e.label)]
            for e in examples
        ]
        macro, per_class = metrics.evaluate_multiclass(
            np.asarray(probs), truth_idx, class_names, model_name, args.split
        )
        reports = [macro] + per_class
    else:
        scores = model.score_many(texts)
        truths = [bool(e.label) for e in examples]
        reports = [
            metrics.build_report(scores, truths, args.threshold, model_name, args.split)
        ]
    json_text, table = metrics.render_report(reports)
    _atomic_write_text(out / "report.json", json_text + "\n")
    _atomic_write_text(out / "report.txt", table)
    _write_manifest(
        out, "evaluate",
        {
            "input": str(bundle_dir), "model_dir": str(model_path),
            "split": args.split, "threshold": args.threshold,
        },
        [bundle_dir / "dataset.jsonl"], ["report.json", "report.txt"],
    )
    return 0


def _collect_ensemble_models(model_dir: Path, threshold: float):
    td_model = None
    for cand in (model_dir / "td.npz", model_dir / "td"):
        if cand.exists():
            td_model = _load_any_model(cand, threshold)
            break
    if td_model is None:
        raise DebtlensError(f"no TD model (td.npz or td/) under {model_dir}")
    type_models = {}
    for cat in CATEGORIES:
        for cand in (model_dir / f"cat_{_cat_slug(cat)}.npz", model_dir / f"cat_{_cat_slug(cat)}"):
            if cand.exists():
                type_models[cat] = _load_any_model(cand, threshold)
                break
    return td_model, type_models


def _texts_from_jsonl(path: Path, min_len: int) -> list[str]:
    texts = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            if "text" in row:
                texts.append(row["text"])
            else:
                cleaned = corpus.clean_text(row.get("title", ""), row.get("body", ""), min_len=min_len)
                if cleaned is not None:
                    texts.append(cleaned)
    return texts


def cmd_ensemble(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model_dir = Path(args.model_dir)
    input_path = Path(args.input)
    td_model, type_models = _collect_ensemble_models(model_dir, args.threshold)
    ens = ensemble_mod.DebtEnsemble(td_model, type_models, threshold=args.threshold)
    texts = _texts_from_jsonl(input_path, args.min_len)
    rows = []
    for i, text in enumerate(texts):
        verdict = ens.classify(text)
        rows.append({"id": i, "text": text, **verdict.to_dict()})
    _atomic_write_jsonl(out / "verdicts.jsonl", rows)
    _write_manifest(
        out, "ensemble",
        {
            "input": str(input_path), "model_dir": str(model_dir),
            "threshold": args.threshold, "min_len": args.min_len,
        },
        [input_path], ["verdicts.jsonl"],
        extra={"n_type_models": len(type_models)},
    )
    return 0


def cmd_ground_truth_eval(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model_dir = Path(args.model_dir)
    input_path = Path(args.input)
    td_model, type_models = _collect_ensemble_models(model_dir, args.threshold)
    mc_model = None
    for cand in (model_dir / "multiclass.npz", model_dir / "multiclass"):
        if cand.exists():
            mc_model = _load_any_model(cand, args.threshold)
            break

    from .labeling import LabelVerdict

    ground_truth: dict[Category, list] = {c: [] for c in CATEGORIES}
    with open(input_path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            cats = frozenset(Category(v) for v in row.get("categories", []))
            ex = corpus.LabeledExample(
                text=row["text"], label=True, repo_name=row.get("repo", ""),
                source_verdict=LabelVerdict(is_td=True, categories=cats),
            )
            for cat in cats:
                ground_truth[cat].append(ex)
    rows = metrics.ground_truth_recall(
        ground_truth, td_model=td_model, type_models=type_models,
        multiclass_model=mc_model, threshold=args.threshold,
    )
    json_text, table = metrics.render_ground_truth_table(rows)
    _atomic_write_text(out / "ground_truth_recall.json", json_text + "\n")
    _atomic_write_text(out / "ground_truth_recall.txt", table)
    _write_manifest(
        out, "ground-truth-eval",
        {
            "input": str(input_path), "model_dir": str(model_dir),
            "threshold": args.threshold,
        },
        [input_path], ["ground_truth_recall.json", "ground_truth_recall.txt"],
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="debtlens", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", help="parse archive files into issue records")
    p.add_argument("--input", nargs="+", required=True, help="archive file(s), gzip or plain JSONL")
    p.add_argument("--out", required=True)
    p.add_argument("--start", default=None, help="keep records at/after this instant")
    p.add_argument("--end", default=None, help="keep records before this instant")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("curate", help="label, clean, and balance datasets")
    p.add_argument("--input", required=True, help="issues.jsonl from mine")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-len", type=int, default=corpus.DEFAULT_MIN_LEN)
    p.add_argument("--category", default=None, help="curate only this category")
    p.set_defaults(func=cmd_curate)

    p = sub.add_parser("split", help="carve OOD, split train/test, assign folds")
    p.add_argument("--input", required=True, help="a dataset JSONL from curate")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ratio", type=float, default=0.85)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--ood-top-n", type=int, default=1)
    p.add_argument("--cutoff", default=None, help="temporal mode: train before, test at/after")
    p.add_argument("--ground-truth", default=None, help="purge texts in this ground-truth file")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train-baseline", help="train the bag-of-words baseline on a bundle")
    p.add_argument("--input", required=True, help="bundle directory from split")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=baseline.DEFAULT_EPOCHS)
    p.add_argument("--learning-rate", type=float, default=baseline.DEFAULT_LEARNING_RATE)
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_train_baseline)

    p = sub.add_parser("evaluate", help="evaluate a model on one bundle partition")
    p.add_argument("--input", required=True, help="bundle directory")
    p.add_argument("--model-dir", required=True, help="baseline .npz or export directory")
    p.add_argument("--out", required=True)
    p.add_argument("--split", default="test", choices=["train", "test", "ood"])
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ensemble", help="run the 14-model ensemble over texts")
    p.add_argument("--input", required=True, help="JSONL with text (or title/body) rows")
    p.add_argument("--model-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--min-len", type=int, default=corpus.DEFAULT_MIN_LEN)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("ground-truth-eval", help="recall table over the ground-truth set")
    p.add_argument("--input", required=True, help="ground_truth.jsonl from curate")
    p.add_argument("--model-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_ground_truth_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("DEBTLENS_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DebtlensError, OSError, ValueError) as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
