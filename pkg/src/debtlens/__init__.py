"""debtlens: mine technical-debt issues from GitHub-Archive event streams,
curate datasets, and train/evaluate TD classifiers."""

__version__ = "0.1.0"

from .labeling import CATEGORIES, Category  # noqa: F401
