"""Exception hierarchy. Every error carries a short machine-readable ``code``."""


class BurkholderError(Exception):
    code = "error"


class InvalidParams(BurkholderError, ValueError):
    code = "invalid-params"


class SeriesBudgetExceeded(BurkholderError):
    code = "series-budget-exceeded"


class OutOfRange(BurkholderError, ValueError):
    code = "range"


class IntegrationDiverged(BurkholderError):
    code = "integration-diverged"


class RootBeyondRange(BurkholderError):
    code = "root-beyond-range"


class InternalInconsistency(BurkholderError):
    code = "internal-inconsistency"


class Z1NotFound(BurkholderError):
    code = "z1-not-found"


class UnknownPair(BurkholderError, KeyError):
    code = "unknown-pair"
