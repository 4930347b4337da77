"""Exception types shared across the pipeline stages."""


class DebtlensError(Exception):
    """Base class for all pipeline errors."""


class StreamError(DebtlensError):
    """Fatal error reading an archive stream (corrupt container, unreadable file)."""

    def __init__(self, message: str, source: str = "<stream>", offset: int | None = None):
        self.source = source
        self.offset = offset
        where = source if offset is None else f"{source} @ byte {offset}"
        super().__init__(f"{message} ({where})")


class CurationError(DebtlensError):
    """Dataset curation cannot proceed (empty pool, class too small, ...)."""


class TrainingError(DebtlensError):
    """Model training failed (non-finite loss, missing class, ...)."""


class MetricError(DebtlensError):
    """A metric is undefined for the given inputs (e.g. single-class AUC)."""


class ModelLoadError(DebtlensError):
    """An exported model artifact violates the export contract."""
