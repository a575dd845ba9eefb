"""Exception hierarchy shared by all modules."""


class QBrownianError(Exception):
    """Base class for every error raised by this package."""


class DomainError(QBrownianError, ValueError):
    """An argument lies outside the region where the quantity is defined."""


class PoleError(QBrownianError, ZeroDivisionError):
    """A factor or denominator vanishes."""


class NonConvergence(QBrownianError, ArithmeticError):
    """A series, product or continued fraction failed to settle within budget."""


class RegimeError(QBrownianError):
    """Tail hypotheses needed for a continued-fraction evaluation were not certified."""


class MembershipError(QBrownianError, ValueError):
    """A point is not a member of the time scale."""


class OrderError(QBrownianError, ValueError):
    """Interval endpoints are not in increasing order."""


class UnboundedError(QBrownianError):
    """A neighbour required by an exit computation does not exist."""


class MissingDerivative(QBrownianError):
    """A dense side of a point needs a derivative the caller did not supply."""
