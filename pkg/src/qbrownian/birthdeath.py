"""Hitting-time Laplace transforms of bilateral birth-and-death chains.

Rates come either from a scattered piece of a time scale, listed as an
increasing sequence ``t_n``, or directly as callables.  Downward transforms
solve the recurrence

    U_{k+1} = (1 + rho_k + lam/beta_k) U_k - rho_k U_{k-1}

in the positive direction after rescaling by ``c_k = beta_k`` (which makes the
fraction limit-periodic when the rates vanish upward).  Upward transforms use
the mirrored recurrence in the negative direction, seeded at the attractive
fixed point ``-1/rho``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .contfrac import (
    RecurrenceSpec,
    equivalence_transform,
    minimal_solution_ratio,
    tail_fixed_points,
)
from .errors import DomainError, RegimeError
from .values import LaplaceValue

__all__ = [
    "TailRegime",
    "BirthDeathRates",
    "rates_from_scattered_scale",
    "geometric_rates",
    "down_recurrence",
    "down_recurrence_scaled",
    "up_recurrence",
    "h_down",
    "h_up",
    "h_path",
]


@dataclass(frozen=True)
class TailRegime:
    """Analytic facts about the tails, certified by the caller.

    ``rho_limit_down`` is the limit of rho_n as n -> -inf, where beta_n
    diverges (``beta_divergence_down``).  ``rates_vanish_up`` states that
    beta_n, delta_n -> 0 with rho_n converging (to ``rho_limit_up``, which
    defaults to the lower limit) as n -> +inf.
    """

    rho_limit_down: float
    beta_divergence_down: bool
    rates_vanish_up: bool
    rho_limit_up: float | None = None

    def __post_init__(self) -> None:
        if not 1 < self.rho_limit_down < math.inf:
            raise DomainError(f"rho limit must lie in (1, inf), got {self.rho_limit_down}")


@dataclass(frozen=True)
class BirthDeathRates:
    beta: Callable[[int], float]
    delta: Callable[[int], float]
    regime: TailRegime | None = None

    def rho(self, n: int) -> float:
        return self.delta(n) / self.beta(n)


def rates_from_scattered_scale(points: Callable[[int], float],
                               regime: TailRegime | None = None) -> BirthDeathRates:
    """Jump rates of the time-changed Brownian motion on ``{t_n}``.

    delta_n = 1/((t_n - t_{n-1})(t_{n+1} - t_{n-1})),
    beta_n  = 1/((t_{n+1} - t_n)(t_{n+1} - t_{n-1})).
    """

    def gaps(n: int) -> tuple[float, float]:
        lo, mid, hi = points(n - 1), points(n), points(n + 1)
        if not lo < mid < hi:
            raise DomainError(f"points are not strictly increasing around index {n}")
        return mid - lo, hi - mid

    def delta(n: int) -> float:
        left, right = gaps(n)
        return 1.0 / (left * (left + right))

    def beta(n: int) -> float:
        left, right = gaps(n)
        return 1.0 / (right * (left + right))

    return BirthDeathRates(beta=beta, delta=delta, regime=regime)


def geometric_rates(q: float, scale: float = 1.0) -> BirthDeathRates:
    """Rates delta_n = scale q^{1-2n}, beta_n = scale q^{-2n} with the tails certified.

    ``scale = 1`` gives the chain of X on the positive half of T_q;
    ``scale = 1/c_q`` gives the chain of the unnormalised process.
    """
    if q <= 1:
        raise DomainError(f"q must exceed 1, got {q}")
    return BirthDeathRates(
        beta=lambda n: scale * q ** (-2 * n),
        delta=lambda n: scale * q ** (1 - 2 * n),
        regime=TailRegime(rho_limit_down=q, beta_divergence_down=True, rates_vanish_up=True),
    )


def down_recurrence(rates: BirthDeathRates, lam: float) -> RecurrenceSpec:
    """U_{k+1} = (1 + rho_k + lam/beta_k) U_k - rho_k U_{k-1}."""
    return RecurrenceSpec(
        a=rates.rho,
        b=lambda k: 1.0 + rates.rho(k) + lam / rates.beta(k),
        direction="positive",
    )


def down_recurrence_scaled(rates: BirthDeathRates, lam: float) -> RecurrenceSpec:
    """V_{k+1} = (beta_k + delta_k + lam) V_k - beta_{k-1} delta_k V_{k-1}.

    Obtained from :func:`down_recurrence` by the equivalence transform with
    c_k = beta_k; its limiting map has fixed points 0 (attractive) and -lam.
    """
    return equivalence_transform(down_recurrence(rates, lam), rates.beta,
                                 tail=tail_fixed_points(0.0, lam))


def up_recurrence(rates: BirthDeathRates, lam: float) -> RecurrenceSpec:
    """U_{k-1} = (1 + 1/rho_k + lam/delta_k) U_k - (1/rho_k) U_{k+1}, negative direction."""
    tail = None
    if rates.regime is not None:
        inv = 1.0 / rates.regime.rho_limit_down
        tail = tail_fixed_points(inv, 1.0 + inv)
    return RecurrenceSpec(
        a=lambda k: 1.0 / rates.rho(k),
        b=lambda k: 1.0 + 1.0 / rates.rho(k) + lam / rates.delta(k),
        direction="negative",
        tail=tail,
    )


def _check_lambda(lam: float) -> None:
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")


def h_down(rates: BirthDeathRates, n: int, lam: float, tol: float = 1e-13) -> LaplaceValue:
    """E^n[exp(-lam tau_{n-1})]."""
    _check_lambda(lam)
    if rates.regime is None or not rates.regime.rates_vanish_up:
        raise RegimeError("downward transform needs rates vanishing at the upper end")
    cf = minimal_solution_ratio(down_recurrence_scaled(rates, lam), n, tol=tol)
    # the scaled ratio is beta_{n-1} * H_n
    b = rates.beta(n - 1)
    return LaplaceValue(cf.value / b, "continued_fraction", cf.error_estimate / b)


def h_up(rates: BirthDeathRates, n: int, lam: float, tol: float = 1e-13) -> LaplaceValue:
    """E^n[exp(-lam tau_{n+1})] for the chain killed at the lower accumulation point."""
    _check_lambda(lam)
    if rates.regime is None or not rates.regime.beta_divergence_down:
        raise RegimeError("upward transform needs diverging rates at the lower end")
    cf = minimal_solution_ratio(up_recurrence(rates, lam), n, tol=tol)
    return LaplaceValue(cf.value, "continued_fraction", cf.error_estimate)


def h_path(rates: BirthDeathRates, n: int, m: int, lam: float, tol: float = 1e-13) -> LaplaceValue:
    """E^n[exp(-lam tau_m)] as a telescoped product of one-step transforms."""
    if m == n:
        return LaplaceValue(1.0, "continued_fraction", 0.0)
    if m > n:
        factors = [h_up(rates, k, lam, tol) for k in range(n, m)]
    else:
        factors = [h_down(rates, k, lam, tol) for k in range(n, m, -1)]
    log_total = sum(math.log(f.value) for f in factors)
    rel_err = sum(f.error_estimate / f.value for f in factors)
    value = math.exp(log_total)
    return LaplaceValue(value, "continued_fraction", value * rel_err)
