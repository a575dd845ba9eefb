"""Closed subsets of the line, their speed measure and the generator.

A :class:`TimeScale` is a union of symbolic blocks (intervals, arithmetic
lattices, geometric lattices and isolated points).  Neighbour queries are
answered block by block, so classification of points never depends on
enumerating the set.

Text format, one block per line (``#`` starts a comment)::

    interval lo hi        # lo/hi may be -inf/inf
    geometric q sign      # {sign * q^k : k in Z}, together with its limit 0
    lattice step offset   # {offset + k * step : k in Z}
    point v
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal, Union

from .errors import DomainError, MembershipError, MissingDerivative, OrderError, UnboundedError

__all__ = [
    "Interval",
    "ArithmeticLattice",
    "GeometricLattice",
    "Point",
    "TimeScale",
    "SpeedMeasure",
    "PointClass",
    "real_line",
    "integers",
    "tq_scale",
    "parse_timescale",
    "format_timescale",
    "rho_sigma",
    "classify",
    "mu_mass",
    "mu_first_moment",
    "speed_measure",
    "jump_rates",
    "generator_apply",
    "exit_law",
    "moment_formula",
]

PointClass = Literal["ss", "sd", "ds", "dd"]

_REL = 1e-12


def _close(x: float, y: float) -> bool:
    return abs(x - y) <= _REL * max(abs(x), abs(y), 1e-300)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not self.lo <= self.hi:
            raise OrderError(f"interval [{self.lo}, {self.hi}] is empty")

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def sup_below(self, x: float) -> float | None:
        if x <= self.lo:
            return None
        return min(x, self.hi)

    def inf_above(self, x: float) -> float | None:
        if x >= self.hi:
            return None
        return max(x, self.lo)


@dataclass(frozen=True)
class ArithmeticLattice:
    step: float
    offset: float = 0.0

    def __post_init__(self) -> None:
        if not self.step > 0:
            raise DomainError(f"lattice step must be positive, got {self.step}")

    def _index(self, x: float) -> tuple[int, bool]:
        u = (x - self.offset) / self.step
        k = round(u)
        return k, _close(self.offset + k * self.step, x) or abs(u - k) < _REL

    def contains(self, x: float) -> bool:
        return self._index(x)[1]

    def sup_below(self, x: float) -> float:
        k, exact = self._index(x)
        if not exact:
            k = math.ceil((x - self.offset) / self.step)
        return self.offset + (k - 1) * self.step

    def inf_above(self, x: float) -> float:
        k, exact = self._index(x)
        if not exact:
            k = math.floor((x - self.offset) / self.step)
        return self.offset + (k + 1) * self.step


@dataclass(frozen=True)
class GeometricLattice:
    """{sign * q^k : k in Z} together with its accumulation point 0."""

    q: float
    sign: int = 1

    def __post_init__(self) -> None:
        if not self.q > 1:
            raise DomainError(f"geometric ratio must exceed 1, got {self.q}")
        if self.sign not in (1, -1):
            raise DomainError(f"sign must be +1 or -1, got {self.sign}")

    def exponent(self, x: float) -> int | None:
        """k with x == sign * q^k, or None."""
        y = x * self.sign
        if y <= 0:
            return None
        k = round(math.log(y) / math.log(self.q))
        return k if _close(self.q**k, y) else None

    def contains(self, x: float) -> bool:
        return x == 0 or self.exponent(x) is not None

    def _floor_exp(self, y: float) -> tuple[int, bool]:
        k = round(math.log(y) / math.log(self.q))
        if _close(self.q**k, y):
            return k, True
        return math.floor(math.log(y) / math.log(self.q)), False

    def _pos_sup_below(self, y: float) -> float | None:
        # sup of {q^k} u {0} strictly below y, in the positive orientation
        if y <= 0:
            return None
        k, exact = self._floor_exp(y)
        return self.q ** (k - 1) if exact else self.q**k

    def _pos_inf_above(self, y: float) -> float:
        if y < 0:
            return 0.0
        if y == 0:
            return 0.0  # infimum of the positive powers, not attained
        k, exact = self._floor_exp(y)
        return self.q ** (k + 1)

    def sup_below(self, x: float) -> float | None:
        if self.sign == 1:
            return self._pos_sup_below(x)
        r = self._pos_inf_above(-x)
        return -r

    def inf_above(self, x: float) -> float | None:
        if self.sign == 1:
            return self._pos_inf_above(x)
        r = self._pos_sup_below(-x)
        return None if r is None else -r


@dataclass(frozen=True)
class Point:
    v: float

    def contains(self, x: float) -> bool:
        return x == self.v or _close(x, self.v)

    def sup_below(self, x: float) -> float | None:
        return self.v if self.v < x and not _close(self.v, x) else None

    def inf_above(self, x: float) -> float | None:
        return self.v if self.v > x and not _close(self.v, x) else None


Block = Union[Interval, ArithmeticLattice, GeometricLattice, Point]


@dataclass(frozen=True)
class TimeScale:
    blocks: tuple[Block, ...]

    def __post_init__(self) -> None:
        if not self.blocks:
            raise DomainError("a time scale needs at least one block")

    @property
    def unbounded_above(self) -> bool:
        return self.sup_below(math.inf) == math.inf

    @property
    def unbounded_below(self) -> bool:
        return self.inf_above(-math.inf) == -math.inf

    def contains(self, x: float) -> bool:
        return any(b.contains(x) for b in self.blocks)

    def sup_below(self, x: float) -> float | None:
        """sup{y in T : y < x}, or None when no such y exists."""
        if x == math.inf:
            vals = [self._top(b) for b in self.blocks]
        else:
            vals = [b.sup_below(x) for b in self.blocks]
        vals = [v for v in vals if v is not None]
        return max(vals) if vals else None

    def inf_above(self, x: float) -> float | None:
        if x == -math.inf:
            vals = [self._bottom(b) for b in self.blocks]
        else:
            vals = [b.inf_above(x) for b in self.blocks]
        vals = [v for v in vals if v is not None]
        return min(vals) if vals else None

    @staticmethod
    def _top(b: Block) -> float:
        if isinstance(b, Interval):
            return b.hi
        if isinstance(b, Point):
            return b.v
        if isinstance(b, GeometricLattice):
            return math.inf if b.sign == 1 else 0.0
        return math.inf

    @staticmethod
    def _bottom(b: Block) -> float:
        if isinstance(b, Interval):
            return b.lo
        if isinstance(b, Point):
            return b.v
        if isinstance(b, GeometricLattice):
            return -math.inf if b.sign == -1 else 0.0
        return -math.inf

    def require(self, x: float) -> None:
        if not self.contains(x):
            raise MembershipError(f"{x} is not a point of the time scale")


def real_line() -> TimeScale:
    return TimeScale((Interval(-math.inf, math.inf),))


def integers() -> TimeScale:
    return TimeScale((ArithmeticLattice(1.0, 0.0),))


def tq_scale(q: float) -> TimeScale:
    """{+-q^k} u {0}."""
    return TimeScale((GeometricLattice(q, 1), GeometricLattice(q, -1), Point(0.0)))


def parse_timescale(text: str) -> TimeScale:
    blocks: list[Block] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kind, *args = line.split()
        try:
            vals = [float(a) for a in args]
            if kind == "interval" and len(vals) == 2:
                blocks.append(Interval(*vals))
            elif kind == "geometric" and len(vals) == 2:
                blocks.append(GeometricLattice(vals[0], int(vals[1])))
            elif kind == "lattice" and len(vals) == 2:
                blocks.append(ArithmeticLattice(*vals))
            elif kind == "point" and len(vals) == 1:
                blocks.append(Point(vals[0]))
            else:
                raise ValueError
        except ValueError as exc:
            raise DomainError(f"line {lineno}: cannot parse block {raw!r}") from exc
    return TimeScale(tuple(blocks))


def format_timescale(ts: TimeScale) -> str:
    lines = []
    for b in ts.blocks:
        if isinstance(b, Interval):
            lines.append(f"interval {b.lo!r} {b.hi!r}")
        elif isinstance(b, GeometricLattice):
            lines.append(f"geometric {b.q!r} {b.sign}")
        elif isinstance(b, ArithmeticLattice):
            lines.append(f"lattice {b.step!r} {b.offset!r}")
        else:
            lines.append(f"point {b.v!r}")
    return "\n".join(lines) + "\n"


def rho_sigma(ts: TimeScale, x: float) -> tuple[float, float]:
    """Backward and forward jump points of a member x (equal to x on dense sides)."""
    ts.require(x)
    lo = ts.sup_below(x)
    hi = ts.inf_above(x)
    return (-math.inf if lo is None else lo), (math.inf if hi is None else hi)


def classify(ts: TimeScale, x: float) -> PointClass:
    lo, hi = rho_sigma(ts, x)
    left = "d" if lo == x else "s"
    right = "d" if hi == x else "s"
    return left + right  # type: ignore[return-value]


def _check_window(ts: TimeScale, u: float, v: float) -> tuple[float, float]:
    ts.require(u)
    ts.require(v)
    if not u < v:
        raise OrderError(f"need u < v, got u={u}, v={v}")
    _, sigma_u = rho_sigma(ts, u)
    rho_v, _ = rho_sigma(ts, v)
    return sigma_u, rho_v


def mu_mass(ts: TimeScale, u: float, v: float) -> float:
    """mu of the open interval (u, v)."""
    sigma_u, rho_v = _check_window(ts, u, v)
    return v - u - (sigma_u - u) / 2 - (v - rho_v) / 2


def mu_first_moment(ts: TimeScale, u: float, v: float) -> float:
    """Integral of a over (u, v) against mu."""
    sigma_u, rho_v = _check_window(ts, u, v)
    return v * v / 2 - u * u / 2 - u * (sigma_u - u) / 2 - v * (v - rho_v) / 2


@dataclass
class SpeedMeasure:
    """mu restricted to a window: point masses plus Lebesgue pieces."""

    atom: dict[float, float] = field(default_factory=dict)
    lebesgue_on: list[tuple[float, float]] = field(default_factory=list)

    def mass(self) -> float:
        return sum(self.atom.values()) + sum(b - a for a, b in self.lebesgue_on)

    def first_moment(self) -> float:
        return (sum(x * m for x, m in self.atom.items())
                + sum((b * b - a * a) / 2 for a, b in self.lebesgue_on))


def speed_measure(ts: TimeScale, u: float, v: float, max_points: int = 100_000) -> SpeedMeasure:
    """Enumerate mu on (u, v) straight from its definition.

    Every point that is scattered on at least one side carries mass
    (sigma - rho)/2; dense stretches contribute Lebesgue measure.
    """
    _check_window(ts, u, v)
    out = SpeedMeasure()
    x = u
    for _ in range(max_points):
        nxt = ts.inf_above(x)
        if nxt is None or nxt >= v:
            return out
        if nxt == x:
            # right-dense: run to the end of the dense stretch
            end = _dense_end(ts, x, v)
            out.lebesgue_on.append((x, end))
            x = end
            if x >= v:
                return out
            lo, hi = rho_sigma(ts, x)
            if hi != x and lo != hi:
                out.atom[x] = (hi - lo) / 2
            continue
        x = nxt
        lo, hi = rho_sigma(ts, x)
        if not (lo == x and hi == x):
            out.atom[x] = (hi - lo) / 2
    raise DomainError(f"more than {max_points} scattered points in the window")


def _dense_end(ts: TimeScale, x: float, v: float) -> float:
    ends = [min(b.hi, v) for b in ts.blocks if isinstance(b, Interval) and b.lo <= x < b.hi]
    if not ends:
        raise DomainError(f"cannot locate the dense stretch starting at {x}")
    return max(ends)


def jump_rates(ts: TimeScale, x: float) -> tuple[float, float]:
    """Rates (to rho(x), to sigma(x)) of the chain at a two-sided scattered point."""
    lo, hi = rho_sigma(ts, x)
    if lo == x or hi == x or math.isinf(lo) or math.isinf(hi):
        raise DomainError(f"{x} is not scattered on both sides")
    return 1.0 / ((x - lo) * (hi - lo)), 1.0 / ((hi - x) * (hi - lo))


def generator_apply(ts: TimeScale, f: Callable[[float], float], x: float,
                    df: Callable[[float], float] | None = None,
                    d2f: Callable[[float], float] | None = None) -> float:
    """(Gf)(x) using the four-case formula; dense sides need caller-supplied derivatives."""
    lo, hi = rho_sigma(ts, x)
    if math.isinf(lo) or math.isinf(hi):
        raise UnboundedError(f"{x} is an end point of the time scale; the generator needs both neighbours")
    kind = classify(ts, x)
    if kind == "ss":
        return (f(lo) / ((x - lo) * (hi - lo))
                - f(x) / ((x - lo) * (hi - x))
                + f(hi) / ((hi - x) * (hi - lo)))
    if kind == "dd":
        if d2f is None:
            raise MissingDerivative(f"{x} is dense on both sides; second derivative required")
        return 0.5 * d2f(x)
    if df is None:
        raise MissingDerivative(f"{x} is dense on one side; first derivative required")
    if kind == "sd":
        return (f(lo) - f(x)) / (x - lo) ** 2 + df(x) / (x - lo)
    return -df(x) / (hi - x) + (f(hi) - f(x)) / (hi - x) ** 2


def exit_law(ts: TimeScale, x: float, r: float) -> tuple[float, float, float]:
    """Exit from [x - r, x + r]: (P(exit low), P(exit high), mean exit time)."""
    ts.require(x)
    if not r > 0:
        raise DomainError(f"radius must be positive, got {r}")
    y = ts.sup_below(x - r)
    z = ts.inf_above(x + r)
    if y is None or z is None or math.isinf(y) or math.isinf(z):
        raise UnboundedError(f"no exit point on one side of [{x - r}, {x + r}]")
    return (z - x) / (z - y), (x - y) / (z - y), (x - y) * (z - x)


def _qfactorial_ratio(q: float, k: int, m: int) -> float:
    # (q;q)_k / (q;q)_m = prod_{i=m+1}^{k} (1 - q^i), with 1 - q^i = -expm1(i log q)
    lq = math.log(q)
    out = 1.0
    for i in range(m + 1, k + 1):
        out *= -math.expm1(i * lq)
    return out


def moment_formula(x: float, k: int, t: float, q: float) -> float:
    """E^x[xi_t^k] for the process on T_q in its natural clock."""
    if not q > 1:
        raise DomainError(f"q must exceed 1, got {q}")
    if k < 0:
        raise DomainError(f"moment order must be nonnegative, got {k}")
    if x != 0 and GeometricLattice(q, 1 if x > 0 else -1).exponent(x) is None:
        raise MembershipError(f"{x} is not a point of T_q")
    c_q = (q - 1) ** 2 * (1 + q) / q
    total = 0.0
    for m in range(k % 2, k + 1, 2):
        j = (k - m) // 2
        term = (c_q ** (-j) * _qfactorial_ratio(q, k, m) * q ** ((m * m - k * k) / 4)
                * t**j / math.factorial(j))
        total += term * x**m
    return total
