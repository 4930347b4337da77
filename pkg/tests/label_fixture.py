"""Curated 40-entry label fixture with hand-derived verdicts.

Each row: (label text, expected is_td, expected category names). Expected
values were derived by evaluating the rule-set patterns with the stdlib
regex engine one label at a time and checking each outcome against a manual
reading of the alternations; they are frozen here as literals. Quirks are
intentional: "TDD" and "tdebt" satisfy the TD pattern, standalone "debt"
matches inside hyphenated labels, and trailing word characters defeat the
type pattern's boundaries ("docs", "defective", "requirements", "tester").
"""

LABEL_FIXTURE: list[tuple[str, bool, set[str]]] = [
    ("Technical debt", True, set()),
    ("Tech_debt", True, set()),
    ("TD", True, set()),
    ("td", True, set()),
    ("debt", True, set()),
    ("TDD", True, set()),
    ("technical-debt", True, set()),
    ("TechDebt", True, set()),
    ("tech debt", True, set()),
    ("tdebt", True, set()),
    ("pay down debt", True, set()),
    ("debt-collector", True, set()),
    ("TDs", False, set()),
    ("debts", False, set()),
    ("enhancement", False, set()),
    ("bug-report", False, set()),
    ("architecture", False, {"Architecture"}),
    ("architectural", False, {"Architecture"}),
    ("architect", False, {"Architecture"}),
    ("Documentation", False, {"Documentation"}),
    ("doc", False, {"Documentation"}),
    ("docs", False, set()),
    ("testing", False, {"Test"}),
    ("test", False, {"Test"}),
    ("defect", False, {"Defect"}),
    ("defective", False, set()),
    ("infra", False, set()),
    ("infrastructure", False, {"Infrastructure"}),
    ("build", False, {"Build"}),
    ("code-quality", False, {"Code"}),
    ("people", False, {"People"}),
    ("process", False, {"Process"}),
    ("requirements", False, set()),
    ("requirement", False, {"Requirement"}),
    ("service", False, {"Service"}),
    ("automation", False, {"Automation"}),
    ("design", False, {"Design"}),
    ("td: architecture", True, {"Architecture"}),
    ("test debt", True, {"Test"}),
    ("design-debt", True, {"Design"}),
]

assert len(LABEL_FIXTURE) == 40
