"""Brownian motion on the time scale {+-q^k} u {0}: q-series, continued fractions,
hitting-time transforms, excursion quantities and exact Monte Carlo."""

from .errors import (
    DomainError,
    MembershipError,
    MissingDerivative,
    NonConvergence,
    OrderError,
    PoleError,
    QBrownianError,
    RegimeError,
    UnboundedError,
)
from .tq import TqParams, TqState
from .values import LaplaceValue

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "MembershipError",
    "MissingDerivative",
    "NonConvergence",
    "OrderError",
    "PoleError",
    "QBrownianError",
    "RegimeError",
    "UnboundedError",
    "TqParams",
    "TqState",
    "LaplaceValue",
]
