"""Exception types. Every error carries a short machine-readable ``code``."""


class FarxError(Exception):
    code = "error"


class InvalidArgumentError(FarxError, ValueError):
    code = "invalid-argument"


class OutOfDomainError(FarxError, ValueError):
    code = "out-of-domain"


class ShapeError(FarxError, ValueError):
    code = "shape"


class AlignmentError(FarxError, ValueError):
    code = "alignment"


class IllConditionedBasisError(FarxError, ArithmeticError):
    code = "ill-conditioned-basis"


class UnderdeterminedFitError(FarxError, ValueError):
    code = "underdetermined-fit"


class RankDeficientError(FarxError, ArithmeticError):
    code = "rank-deficient"


class DegeneratePredictorError(FarxError, ArithmeticError):
    code = "degenerate-predictor"


class SearchFailedError(FarxError, RuntimeError):
    code = "search-failed"


class SelectionFailedError(FarxError, RuntimeError):
    code = "selection-failed"


class BootstrapFailedError(FarxError, RuntimeError):
    code = "bootstrap-failed"


class NoValidPointsError(FarxError, ValueError):
    code = "no-valid-points"


class ExperimentFailedError(FarxError, RuntimeError):
    code = "experiment-failed"


class IngestionError(FarxError, ValueError):
    code = "ingestion"


class InsufficientDataError(FarxError, ValueError):
    code = "insufficient-data"
