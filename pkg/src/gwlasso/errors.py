"""Exception types raised across the package."""


class GwlassoError(Exception):
    """Base class for all package-specific errors."""


class DisconnectedGraphError(GwlassoError):
    """Raised when a graph operation requires connectivity and some
    stations are unreachable.  Carries the unreachable component."""

    def __init__(self, unreachable, source=None):
        self.unreachable = tuple(unreachable)
        self.source = source
        where = f" from {source!r}" if source is not None else ""
        super().__init__(
            f"graph is disconnected: {len(self.unreachable)} station(s) "
            f"unreachable{where}: {list(self.unreachable)}"
        )


class DegenerateDesignError(GwlassoError):
    """All candidate columns are constant under the active weighting."""


class NumericalRankLossError(GwlassoError):
    """The active-set system became singular beyond tolerance."""


class NonConvergenceError(GwlassoError):
    """Iterative solver exhausted its sweep budget."""


class RankDeficientError(GwlassoError):
    """Global design matrix is rank deficient."""


class LocalSingularFitError(GwlassoError):
    """A local weighted fit is numerically singular."""

    def __init__(self, station, condition):
        self.station = station
        self.condition = condition
        super().__init__(
            f"local weighted design singular at station {station!r} "
            f"(condition estimate {condition:.3e})"
        )


class InsufficientEffectiveWeightError(GwlassoError):
    """Effective local sample size fell below the parameter count."""

    def __init__(self, station, effective, required):
        self.station = station
        self.effective = effective
        self.required = required
        super().__init__(
            f"effective sample {effective:.3f} < {required} at station "
            f"{station!r}; bandwidth too small for this kernel"
        )


class ConstantVariableError(GwlassoError):
    """Spatial statistic requested on a constant value vector."""


class EmptyNeighborhoodError(GwlassoError):
    """A spatial-weights row has no neighbors (zero row sum)."""


class DataValidationError(GwlassoError):
    """Base class for ingestion failures."""


class DuplicateStationIdError(DataValidationError):
    pass


class MissingColumnError(DataValidationError):
    pass


class NonNumericCellError(DataValidationError):
    pass


class UnknownStationError(DataValidationError):
    pass


class NonPositiveLengthError(DataValidationError):
    pass
