"""Exception taxonomy.

Input errors map to CLI exit status 2, domain failures to exit status 1.
"""


class InputError(ValueError):
    """Caller supplied something outside an operation's preconditions."""


class DomainFailure(RuntimeError):
    """An algorithm ran correctly but did not reach its goal."""

    stage = "domain"

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class SelectionInfeasible(DomainFailure):
    stage = "landmarks"


class PatternOutOfRange(DomainFailure):
    stage = "classify"


class PartitionFailure(DomainFailure):
    stage = "partition"


class BadSetFailure(DomainFailure):
    stage = "bad-set"


class HierarchyFailure(DomainFailure):
    stage = "cover"


class HallFailure(DomainFailure):
    stage = "cover"


class CoverFailure(DomainFailure):
    stage = "cover"


class ConnectionFailure(DomainFailure):
    stage = "connect"


class PosaFailure(DomainFailure):
    stage = "posa"


class ContractionFailure(DomainFailure):
    stage = "contract"


class ExactFailure(DomainFailure):
    stage = "exact"
