"""Exception types shared across the flowlab modules."""


class FlowLabError(Exception):
    """Base class for all domain errors raised by flowlab."""


# panel ingestion / cleaning

class MissingColumn(FlowLabError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"required column missing from CSV: {name!r}")


class DuplicateKey(FlowLabError):
    def __init__(self, ticker, date):
        self.ticker = ticker
        self.date = date
        super().__init__(f"duplicate (ticker, date) pair: ({ticker!r}, {date})")


class UnparseableRow(FlowLabError):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"unparseable CSV row at line {line}: {reason}")


class EmptyAfterCleaning(FlowLabError):
    pass


# flow normalization

class NonpositiveMarketCap(FlowLabError):
    pass


class WindowTooShort(FlowLabError):
    pass


class DegenerateSeries(FlowLabError):
    pass


# synthetic generator

class SingularMixing(FlowLabError):
    pass


# ICA

class RankDeficient(FlowLabError):
    pass


class InsufficientOverlap(FlowLabError):
    pass


class NotConvergedWarning(RuntimeWarning):
    """Fixed-point iteration hit the iteration cap; partial result returned."""


# wavelet

class ConstantSeries(FlowLabError):
    pass


class TooShort(FlowLabError):
    pass


class EmptyBand(FlowLabError):
    pass


# prediction

class EmptyDataset(FlowLabError):
    pass


class NonFiniteParameter(FlowLabError):
    pass


class DivergedLoss(FlowLabError):
    pass


class SingularSystem(FlowLabError):
    pass


class NotConverged(FlowLabError):
    """Coordinate descent failed to converge within the sweep budget."""

    def __init__(self, sweeps, max_delta):
        self.sweeps = sweeps
        self.max_delta = max_delta
        super().__init__(
            f"coordinate descent not converged after {sweeps} sweeps "
            f"(last max coefficient change {max_delta:.3e})"
        )


# backtest

class TooFewStocks(FlowLabError):
    pass


class ZeroVolatility(FlowLabError):
    pass


class SeriesTooShort(FlowLabError):
    pass


# CLI / reporting

class MissingArtifact(FlowLabError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"expected artifact missing from run directory: {name}")


class ConfigError(FlowLabError):
    pass
