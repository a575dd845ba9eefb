"""Continued fractions attached to three-term recurrences.

A recurrence ``U_{n+1} = b_n U_n - a_n U_{n-1}`` is paired with the maps
``s_n(z) = -a_n / (b_n + z)``.  Approximants compose these maps starting at
an index and walking in the recurrence's direction (upwards for
``"positive"``, downwards for ``"negative"``).  Consecutive ratios of the
minimal solution are ``W = -lim s_n o s_{n+1} o ... (w)`` for any tail seed
that stays away from the repulsive fixed point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Literal

from .errors import DomainError, NonConvergence, PoleError

__all__ = [
    "LoxodromicTail",
    "RecurrenceSpec",
    "CFValue",
    "classical_approximant",
    "modified_approximant",
    "wallis_approximant",
    "tail_fixed_points",
    "minimal_solution_ratio",
    "equivalence_transform",
]

_POLE_EPS = 1e-300


@dataclass(frozen=True)
class LoxodromicTail:
    """Limits of ``(b_n -/+ sqrt(b_n^2 - 4 a_n)) / 2`` with ``|beta_minus| < |beta_plus|``."""

    beta_minus: float
    beta_plus: float

    def __post_init__(self) -> None:
        if not abs(self.beta_minus) < abs(self.beta_plus):
            raise DomainError("loxodromic tail needs |beta_minus| < |beta_plus|")

    @property
    def attractive_seed(self) -> float:
        """Attractive fixed point of the limiting map s*(z) = -a/(b + z)."""
        return -self.beta_minus

    @property
    def repulsive_seed(self) -> float:
        return -self.beta_plus


@dataclass(frozen=True)
class RecurrenceSpec:
    a: Callable[[int], float]
    b: Callable[[int], float]
    direction: Literal["positive", "negative"] = "positive"
    tail: LoxodromicTail | None = None

    def __post_init__(self) -> None:
        if self.direction not in ("positive", "negative"):
            raise DomainError(f"direction must be 'positive' or 'negative', got {self.direction!r}")

    @property
    def step(self) -> int:
        return 1 if self.direction == "positive" else -1

    def indices(self, start: int, depth: int) -> range:
        """Indices of the maps composed by a depth-``depth`` approximant, outermost first."""
        if depth < 1:
            raise DomainError(f"depth must be positive, got {depth}")
        return range(start, start + self.step * depth, self.step)


@dataclass(frozen=True)
class CFValue:
    value: float
    depth_used: int
    tail_seed: float
    error_estimate: float


def modified_approximant(rec: RecurrenceSpec, start: int, depth: int, tail: float) -> float:
    """``s_start o ... o s_last(tail)`` by backward substitution."""
    z = float(tail)
    for k in reversed(rec.indices(start, depth)):
        den = rec.b(k) + z
        if abs(den) < _POLE_EPS:
            raise PoleError(f"denominator b_{k} + z vanishes")
        z = -rec.a(k) / den
    return z


def classical_approximant(rec: RecurrenceSpec, start: int, depth: int) -> float:
    return modified_approximant(rec, start, depth, 0.0)


def wallis_approximant(rec: RecurrenceSpec, start: int, depth: int, tail: float = 0.0) -> float:
    """Same quantity as :func:`modified_approximant`, via forward P/Q recurrences.

    P and Q start from P_{-1} = 1, P_0 = 0, Q_{-1} = 0, Q_0 = 1 and the value is
    ``(P_n + z P_{n-1}) / (Q_n + z Q_{n-1})``.
    """
    p_prev, p = 1.0, 0.0
    q_prev, q = 0.0, 1.0
    for k in rec.indices(start, depth):
        a, b = rec.a(k), rec.b(k)
        p_prev, p = p, b * p - a * p_prev
        q_prev, q = q, b * q - a * q_prev
        # keep the pair well scaled; the ratio is all that matters
        scale = max(abs(q), abs(q_prev), abs(p), abs(p_prev))
        if scale > 1e150 or 0 < scale < 1e-150:
            p_prev, p, q_prev, q = p_prev / scale, p / scale, q_prev / scale, q / scale
    den = q + tail * q_prev
    if abs(den) < _POLE_EPS:
        raise PoleError("Wallis denominator vanishes")
    return (p + tail * p_prev) / den


def tail_fixed_points(a_lim: float, b_lim: float) -> LoxodromicTail:
    """Roots of w^2 - b w + a = 0, ordered by modulus (real loxodromic case only)."""
    disc = b_lim * b_lim - 4.0 * a_lim
    if disc <= 0:
        raise DomainError(f"non-loxodromic limit: discriminant {disc} <= 0")
    root = math.sqrt(disc)
    r1, r2 = (b_lim - root) / 2.0, (b_lim + root) / 2.0
    if abs(r1) == abs(r2):
        raise DomainError("fixed points have equal modulus")
    if abs(r1) > abs(r2):
        r1, r2 = r2, r1
    return LoxodromicTail(r1, r2)


def minimal_solution_ratio(rec: RecurrenceSpec, at: int, depth: int = 16, tol: float = 1e-13,
                           max_depth: int = 2**16) -> CFValue:
    """Ratio of consecutive terms of the minimal solution.

    Returns ``U_at / U_{at-1}`` for a positive-direction recurrence and
    ``U_at / U_{at+1}`` for a negative one.  The tail is seeded at the
    attractive fixed point when ``rec.tail`` is known, otherwise at 0.  Depth
    doubles until two successive approximant differences fall below ``tol``
    (relative).
    """
    seed = rec.tail.attractive_seed if rec.tail is not None else 0.0
    d = depth
    prev = modified_approximant(rec, at, d, seed)
    hits = 0
    while d < max_depth:
        d *= 2
        cur = modified_approximant(rec, at, d, seed)
        err = abs(cur - prev)
        if err <= tol * abs(cur):
            hits += 1
            if hits >= 2:
                return CFValue(-cur, d, seed, err)
        else:
            hits = 0
        prev = cur
    raise NonConvergence(f"continued fraction at index {at} not converged by depth {max_depth}")


def equivalence_transform(rec: RecurrenceSpec, c: Callable[[int], float],
                          tail: LoxodromicTail | None = None) -> RecurrenceSpec:
    """a'_k = c_prev(k) c_k a_k and b'_k = c_k b_k.

    ``prev(k)`` is the index one step against the recurrence's direction.  The
    approximants then satisfy ``S'(c_last * w) = c_prev(start) * S(w)``,
    so with ``c_prev(start) = 1`` they coincide.
    """
    step = rec.step

    def checked(k: int) -> float:
        ck = c(k)
        if ck == 0:
            raise DomainError(f"equivalence factor c_{k} is zero")
        return ck

    def a(k: int) -> float:
        return checked(k - step) * checked(k) * rec.a(k)

    def b(k: int) -> float:
        return checked(k) * rec.b(k)

    return replace(rec, a=a, b=b, tail=tail)
