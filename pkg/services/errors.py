"""
Exceptions raised by the capacity services.

Management commands map these onto exit codes; controllers onto HTTP status.
"""


class CapacityError(RuntimeError):
    """Base class for every error raised by the capacity services"""
    pass


class DomainError(CapacityError, ValueError):
    """An argument lies outside the domain of the operation"""
    pass


class EvaluationError(CapacityError):
    """A closed form cannot be evaluated at the requested point"""
    pass


class ExcludedPointError(CapacityError):
    """The point lies outside P2, i.e. h2(p) vanishes within TOL_H2"""
    pass


class DegenerateChannelError(CapacityError):
    """The channel is excluded from the weighted-sum-rate problem"""
    pass


class NotThreeParamError(CapacityError):
    """A 3-parameter routine received a channel with a != b"""
    pass


class ConsistencyError(CapacityError):
    """Internal numerical invariant violated (e.g. clearly negative MI)"""
    pass


class ParseError(DomainError):
    """Text could not be parsed into channel parameters or weights"""
    pass


class FixtureError(CapacityError):
    """The verification fixture file is missing or malformed"""
    pass
