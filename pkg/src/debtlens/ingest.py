"""Stream GitHub-Archive-format event logs into issue records.

Archives are newline-delimited JSON, one event per line, usually gzip
compressed. A single malformed line never aborts the stream; a corrupt
compression container does.
"""

from __future__ import annotations

import gzip
import io
import json
import logging
import zlib
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import StreamError

logger = logging.getLogger(__name__)

# Issue events carrying the label state the rule sets consume.
ACCEPTED_EVENT_TYPE = "IssuesEvent"
ACCEPTED_ACTIONS = frozenset({"opened", "labeled"})

GZIP_MAGIC = b"\x1f\x8b"


@dataclass(frozen=True)
class RawEventLine:
    """One line of an archive stream; line numbers are 1-based and strictly
    increasing within a source file."""

    payload: bytes
    source: str
    line_no: int


@dataclass(frozen=True)
class IssueRecord:
    """One issue event mined from an archive stream."""

    repo_name: str
    issue_id: int
    title: str
    body: str
    labels: tuple[str, ...]
    created_at: datetime
    action: str

    def to_dict(self) -> dict:
        return {
            "repo": self.repo_name,
            "issue_id": self.issue_id,
            "title": self.title,
            "body": self.body,
            "labels": list(self.labels),
            "created_at": self.created_at.isoformat().replace("+00:00", "Z"),
            "action": self.action,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IssueRecord":
        return cls(
            repo_name=d["repo"],
            issue_id=int(d["issue_id"]),
            title=d["title"],
            body=d.get("body", ""),
            labels=tuple(d.get("labels", ())),
            created_at=parse_timestamp(d["created_at"]),
            action=d.get("action", "opened"),
        )


@dataclass
class IngestStats:
    """Per-stream outcome counters; the three outcomes always sum to lines_read."""

    lines_read: int = 0
    records_emitted: int = 0
    lines_skipped_malformed: int = 0
    events_skipped_wrong_type: int = 0

    @property
    def balanced(self) -> bool:
        return self.lines_read == (
            self.records_emitted + self.lines_skipped_malformed + self.events_skipped_wrong_type
        )

    def merge(self, other: "IngestStats") -> "IngestStats":
        return IngestStats(
            lines_read=self.lines_read + other.lines_read,
            records_emitted=self.records_emitted + other.records_emitted,
            lines_skipped_malformed=self.lines_skipped_malformed + other.lines_skipped_malformed,
            events_skipped_wrong_type=self.events_skipped_wrong_type
            + other.events_skipped_wrong_type,
        )


def parse_timestamp(value: str) -> datetime:
    """RFC 3339 to an aware UTC datetime; naive inputs are taken as UTC."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def _open_stream(source: str | Path | IO[bytes]) -> tuple[IO[bytes], str]:
    """Open a path or binary file object, sniffing gzip by magic bytes."""
    if isinstance(source, (str, Path)):
        name = str(source)
        raw: IO[bytes] = open(source, "rb")
    else:
        name = getattr(source, "name", "<stream>")
        raw = source
    if not raw.seekable():
        raw = io.BufferedReader(raw)  # need peek for magic sniffing
    head = raw.peek(2)[:2] if hasattr(raw, "peek") else raw.read(2)
    if not hasattr(raw, "peek"):
        raw.seek(0)
    if head == GZIP_MAGIC:
        return gzip.GzipFile(fileobj=raw, mode="rb"), name  # type: ignore[return-value]
    return raw, name


def _record_from_event(event: dict) -> IssueRecord | None:
    """Map one well-formed issues event to a record; None when fields are missing."""
    payload = event.get("payload")
    if not isinstance(payload, dict):
        return None
    issue = payload.get("issue")
    if not isinstance(issue, dict):
        return None
    repo = event.get("repo")
    repo_name = repo.get("name") if isinstance(repo, dict) else None
    if not isinstance(repo_name, str) or repo_name.count("/") != 1 or not repo_name:
        return None
    title = issue.get("title")
    if not isinstance(title, str):
        return None
    issue_id = issue.get("id", issue.get("number"))
    if not isinstance(issue_id, int):
        return None
    created = issue.get("created_at")
    if not isinstance(created, str):
        return None
    try:
        created_at = parse_timestamp(created)
    except ValueError:
        return None
    body = issue.get("body")
    if not isinstance(body, str):
        body = ""  # labels alone can still decide the verdict
    raw_labels = issue.get("labels", [])
    if not isinstance(raw_labels, list):
        return None
    labels = tuple(
        lab["name"]
        for lab in raw_labels
        if isinstance(lab, dict) and isinstance(lab.get("name"), str) and lab["name"]
    )
    return IssueRecord(
        repo_name=repo_name,
        issue_id=issue_id,
        title=title,
        body=body,
        labels=labels,
        created_at=created_at,
        action=payload.get("action", ""),
    )


def _skip_malformed(raw: RawEventLine, stats: IngestStats) -> None:
    stats.lines_skipped_malformed += 1
    logger.debug("skipping malformed line %d of %s: %r", raw.line_no, raw.source, raw.payload)


def iter_event_stream(
    source: str | Path | IO[bytes], stats: IngestStats | None = None
) -> Iterator[IssueRecord]:
    """Lazily yield issue records from one archive stream, updating stats in place."""
    if stats is None:
        stats = IngestStats()
    stream, name = _open_stream(source)
    raw = getattr(stream, "fileobj", None) or stream  # underlying file for byte offsets
    line_iter = iter(stream)
    line_no = 0
    while True:
        try:
            line = next(line_iter)
        except StopIteration:
            break
        except (OSError, EOFError, zlib.error) as exc:
            offset = None
            try:
                offset = raw.tell()
            except (OSError, ValueError):
                pass
            raise StreamError(f"corrupt archive stream: {exc}", source=name, offset=offset)
        line_no += 1
        stats.lines_read += 1
        try:
            event = json.loads(line)
        except (json.JSONDecodeError, UnicodeDecodeError):
            _skip_malformed(RawEventLine(line[:200], name, line_no), stats)
            continue
        if not isinstance(event, dict):
            _skip_malformed(RawEventLine(line[:200], name, line_no), stats)
            continue
        if event.get("type") != ACCEPTED_EVENT_TYPE:
            stats.events_skipped_wrong_type += 1
            continue
        payload = event.get("payload")
        action = payload.get("action") if isinstance(payload, dict) else None
        if action not in ACCEPTED_ACTIONS:
            stats.events_skipped_wrong_type += 1
            continue
        record = _record_from_event(event)
        if record is None:
            _skip_malformed(RawEventLine(line[:200], name, line_no), stats)
            continue
        stats.records_emitted += 1
        yield record


def parse_event_stream(
    source: str | Path | IO[bytes],
) -> tuple[list[IssueRecord], IngestStats]:
    """Consume one archive stream; returns (records in input order, stats)."""
    stats = IngestStats()
    records = list(iter_event_stream(source, stats))
    return records, stats


def filter_by_date(
    records: Iterable[IssueRecord], start: datetime, end: datetime
) -> list[IssueRecord]:
    """Records with start <= created_at < end, in input order."""
    start = start if start.tzinfo else start.replace(tzinfo=timezone.utc)
    end = end if end.tzinfo else end.replace(tzinfo=timezone.utc)
    if start > end:
        raise ValueError(f"start {start.isoformat()} is after end {end.isoformat()}")
    return [r for r in records if start <= r.created_at < end]


def write_records_jsonl(records: Iterable[IssueRecord], path: str | Path) -> int:
    """Serialize records one JSON object per line; returns the row count."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
            n += 1
    return n


def read_records_jsonl(path: str | Path) -> list[IssueRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        return [IssueRecord.from_dict(json.loads(line)) for line in fh if line.strip()]
