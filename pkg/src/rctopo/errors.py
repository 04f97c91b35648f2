"""Exception hierarchy shared by all modules."""


class RcTopoError(Exception):
    """Base class for errors raised by this package."""


class InvalidNetwork(RcTopoError):
    def __init__(self, findings):
        self.findings = list(findings)
        super().__init__("invalid network: " + "; ".join(self.findings))


class UnstableDiscretization(RcTopoError):
    pass


class NonStationaryFilter(RcTopoError):
    pass


class DimensionMismatch(RcTopoError):
    pass


class MalformedFile(RcTopoError):
    pass


class InsufficientSamples(RcTopoError):
    pass


class SolverDiverged(RcTopoError):
    pass


class NonConvergence(RcTopoError):
    pass


class UnknownPair(RcTopoError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class SingularAtFrequency(RcTopoError):
    pass


class EmptyTruth(RcTopoError):
    pass
