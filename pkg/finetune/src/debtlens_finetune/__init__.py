"""debtlens-finetune: transformer fine-tuning jobs over debtlens bundles,
exported under the model-export contract."""

__version__ = "0.1.0"

from .adapt import AdaptResult, project_adapt
from .data import CATEGORY_ORDER, Bundle, Example, assign_folds, load_bundle
from .export import export_model
from .trainer import FinetuneError, FinetuneJob, FinetuneResult, fine_tune

__all__ = [
    "AdaptResult",
    "Bundle",
    "CATEGORY_ORDER",
    "Example",
    "FinetuneError",
    "FinetuneJob",
    "FinetuneResult",
    "assign_folds",
    "export_model",
    "fine_tune",
    "load_bundle",
    "project_adapt",
]
