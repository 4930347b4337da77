"""Rule-based ensemble: an issue gets a typed-debt verdict only when the TD
classifier and that type's classifier both fire positive.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping

from ..labeling import CATEGORIES, Category

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnsembleVerdict:
    is_td: bool
    typed_debt: frozenset[Category]
    td_score: float
    category_scores: tuple[tuple[Category, float], ...]

    def to_dict(self) -> dict:
        return {
            "is_td": self.is_td,
            "typed_debt": sorted(c.value for c in self.typed_debt),
            "td_score": self.td_score,
            "category_scores": {c.value: s for c, s in self.category_scores},
        }


def ensemble_combine(
    td_score: float,
    category_scores: Mapping[Category, float],
    threshold: float = 0.5,
) -> EnsembleVerdict:
    """Apply the both-must-fire rule to one TD score and per-category scores."""
    is_td = td_score >= threshold
    typed = frozenset(
        c for c, s in category_scores.items() if is_td and s >= threshold
    )
    return EnsembleVerdict(
        is_td=is_td,
        typed_debt=typed,
        td_score=float(td_score),
        category_scores=tuple(sorted(category_scores.items(), key=lambda kv: kv[0].value)),
    )


class DebtEnsemble:
    """One TD model plus up to 13 type models behind a single classify() call.

    Missing type models degrade the verdict to untyped TD for those
    categories; this is logged once at construction.
    """

    def __init__(
        self,
        td_model,
        type_models: Mapping[Category, object],
        threshold: float = 0.5,
    ):
        self.td_model = td_model
        self.type_models = dict(type_models)
        self.threshold = threshold
        missing = [c.value for c in CATEGORIES if c not in self.type_models]
        if missing:
            logger.warning(
                "ensemble has no model for %d categories (%s); their verdicts "
                "degrade to untyped TD",
                len(missing),
                ", ".join(missing),
            )

    def classify(self, text: str) -> EnsembleVerdict:
        td_score = self.td_model.score(text)
        category_scores = {c: m.score(text) for c, m in self.type_models.items()}
        return ensemble_combine(td_score, category_scores, self.threshold)
