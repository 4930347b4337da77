"""Label-based TD detection: the two regex rule sets and the verdict logic.

Everything here operates on issue *label* texts only, never on title/body.
Matching is pure and the rule set is immutable, so all functions are safe
to call concurrently.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

if TYPE_CHECKING:
    from .ingest import IssueRecord

RULESET_VERSION = "1.0"

# Case-insensitive pattern for TD indicators in a label. Quirks are kept
# on purpose: "TDD" and "tdebt" match (T + optional infix + D + (ebt|D)),
# and standalone "debt" matches inside hyphenated labels ("debt-collector").
TD_PATTERN = r"(?i)\b(T(echnical[-_\s]?|ech[-_\s]?)?D(ebt|D)|\b(TD|td)\b|debt)\b"

# Case-insensitive pattern for the 13 debt-type keywords, word-bounded at
# both ends ("docs", "defective", "requirements" do not match).
TYPE_PATTERN = (
    r"(?i)\b(architect(ure|ural)?|build|code|defect|design|doc(umentation)?"
    r"|infrastructure|people|process|requirement|service|test(ing)?|automation)\b"
)


class Category(Enum):
    """The 13 debt-type categories, in canonical (alphabetical) order."""

    ARCHITECTURE = "Architecture"
    AUTOMATION = "Automation"
    BUILD = "Build"
    CODE = "Code"
    DEFECT = "Defect"
    DESIGN = "Design"
    DOCUMENTATION = "Documentation"
    INFRASTRUCTURE = "Infrastructure"
    PEOPLE = "People"
    PROCESS = "Process"
    REQUIREMENT = "Requirement"
    SERVICE = "Service"
    TEST = "Test"

    def __lt__(self, other: "Category") -> bool:
        if not isinstance(other, Category):
            return NotImplemented
        return self.value < other.value


CATEGORIES: tuple[Category, ...] = tuple(Category)

# Every string the type pattern can produce, mapped to its category.
_ALTERNATION_TO_CATEGORY: dict[str, Category] = {
    "architect": Category.ARCHITECTURE,
    "architecture": Category.ARCHITECTURE,
    "architectural": Category.ARCHITECTURE,
    "build": Category.BUILD,
    "code": Category.CODE,
    "defect": Category.DEFECT,
    "design": Category.DESIGN,
    "doc": Category.DOCUMENTATION,
    "documentation": Category.DOCUMENTATION,
    "infrastructure": Category.INFRASTRUCTURE,
    "people": Category.PEOPLE,
    "process": Category.PROCESS,
    "requirement": Category.REQUIREMENT,
    "service": Category.SERVICE,
    "test": Category.TEST,
    "testing": Category.TEST,
    "automation": Category.AUTOMATION,
}


@dataclass(frozen=True)
class LabelRuleSet:
    """The pair of label patterns plus the alternation-to-category map."""

    td_pattern: str = TD_PATTERN
    type_pattern: str = TYPE_PATTERN
    version: str = RULESET_VERSION
    category_map: dict[str, Category] = field(
        default_factory=lambda: dict(_ALTERNATION_TO_CATEGORY)
    )

    def __post_init__(self) -> None:
        object.__setattr__(self, "_td_re", re.compile(self.td_pattern))
        object.__setattr__(self, "_type_re", re.compile(self.type_pattern))

    @property
    def td_regex(self) -> re.Pattern[str]:
        return self._td_re  # type: ignore[attr-defined]

    @property
    def type_regex(self) -> re.Pattern[str]:
        return self._type_re  # type: ignore[attr-defined]

    def to_config(self) -> dict:
        """Serializable form so audits can diff the patterns verbatim."""
        return {
            "version": self.version,
            "td_pattern": self.td_pattern,
            "type_pattern": self.type_pattern,
            "category_map": {k: v.value for k, v in sorted(self.category_map.items())},
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_config(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_config(cls, config: dict) -> "LabelRuleSet":
        return cls(
            td_pattern=config["td_pattern"],
            type_pattern=config["type_pattern"],
            version=config.get("version", "unknown"),
            category_map={k: Category(v) for k, v in config["category_map"].items()},
        )

    @classmethod
    def load(cls, path: str | Path) -> "LabelRuleSet":
        return cls.from_config(json.loads(Path(path).read_text()))


DEFAULT_RULES = LabelRuleSet()


@dataclass(frozen=True)
class LabelVerdict:
    """Outcome of running both rule sets over one record's labels."""

    is_td: bool
    categories: frozenset[Category]
    matched_label_texts: tuple[tuple[str, str], ...] = ()  # (label text, "td"|"type")

    @property
    def is_ground_truth(self) -> bool:
        return self.is_td and bool(self.categories)


def match_td_labels(
    labels: Sequence[str], rules: LabelRuleSet = DEFAULT_RULES
) -> tuple[bool, list[str]]:
    """True iff any label contains a TD-pattern match; matched labels verbatim."""
    matched = [lab for lab in labels if rules.td_regex.search(lab)]
    return bool(matched), matched


def match_type_labels(
    labels: Sequence[str], rules: LabelRuleSet = DEFAULT_RULES
) -> set[Category]:
    """Union of categories whose alternation matches any label."""
    cats: set[Category] = set()
    for lab in labels:
        for m in rules.type_regex.finditer(lab):
            cats.add(rules.category_map[m.group(1).lower()])
    return cats


def classify_labels(
    record: "IssueRecord | Sequence[str]", rules: LabelRuleSet = DEFAULT_RULES
) -> LabelVerdict:
    """Combine both matchers into a verdict for one record (or raw label list)."""
    labels = record if isinstance(record, (list, tuple)) else record.labels
    is_td, td_hits = match_td_labels(labels, rules)
    cats: set[Category] = set()
    type_hits: list[str] = []
    for lab in labels:
        found = {rules.category_map[m.group(1).lower()] for m in rules.type_regex.finditer(lab)}
        if found:
            cats |= found
            type_hits.append(lab)
    matched = tuple((lab, "td") for lab in td_hits) + tuple((lab, "type") for lab in type_hits)
    return LabelVerdict(is_td=is_td, categories=frozenset(cats), matched_label_texts=matched)


@dataclass
class VerdictPartition:
    """Leakage-safe partition of records by their label verdicts.

    Ground-truth records (both TD and type labels) appear only in
    ``ground_truth``; everything else lands in exactly one of the TD
    positives, one or more category-positive lists, or the residual pool.
    """

    td_positives: list = field(default_factory=list)
    category_positives: dict[Category, list] = field(
        default_factory=lambda: {c: [] for c in CATEGORIES}
    )
    ground_truth: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    verdicts: dict[int, LabelVerdict] = field(default_factory=dict)  # id(record) -> verdict


def partition_by_verdict(
    records: Iterable["IssueRecord"], rules: LabelRuleSet = DEFAULT_RULES
) -> VerdictPartition:
    """Split records into ground truth, TD positives, category positives, residual."""
    part = VerdictPartition()
    for rec in records:
        verdict = classify_labels(rec, rules)
        part.verdicts[id(rec)] = verdict
        if verdict.is_ground_truth:
            part.ground_truth.append(rec)
        elif verdict.is_td:
            part.td_positives.append(rec)
        elif verdict.categories:
            for cat in verdict.categories:
                part.category_positives[cat].append(rec)
        else:
            part.residual.append(rec)
    return part
