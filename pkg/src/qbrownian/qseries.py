"""q-shifted factorials, basic hypergeometric series and q-exponentials.

Everything here works with a base ``0 < q < 1``.  Products that can over- or
underflow are returned as :class:`LogSigned` values; callers convert to a
plain float only once a well-scaled ratio has been formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Real
from typing import Iterable, Sequence

from .errors import DomainError, NonConvergence, PoleError

__all__ = [
    "LogSigned",
    "SeriesControl",
    "DEFAULT_CONTROL",
    "check_base",
    "qpoch",
    "qpoch_value",
    "qpoch_multi",
    "rphis",
    "rphis_log",
    "eq_exp",
    "Eq_exp",
    "eq_exp_series",
    "Eq_exp_series",
    "psi01",
    "psi01_sum",
]

# Below this size an infinite-product factor is indistinguishable from 1.
_PRODUCT_CUTOFF = 1e-17
_RESCALE = 1e200
_LOG_RESCALE = math.log(_RESCALE)


@dataclass(frozen=True)
class LogSigned:
    """The number ``sign * exp(log_magnitude)``; ``sign == 0`` encodes zero."""

    log_magnitude: float
    sign: int

    @classmethod
    def from_float(cls, x: float) -> "LogSigned":
        if x == 0:
            return ZERO
        return cls(math.log(abs(x)), 1 if x > 0 else -1)

    @property
    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        try:
            return self.sign * math.exp(self.log_magnitude)
        except OverflowError:
            return self.sign * math.inf

    def __float__(self) -> float:
        return self.value

    def __mul__(self, other: "LogSigned | float") -> "LogSigned":
        if not isinstance(other, LogSigned):
            other = LogSigned.from_float(float(other))
        if self.sign == 0 or other.sign == 0:
            return ZERO
        return LogSigned(self.log_magnitude + other.log_magnitude, self.sign * other.sign)

    __rmul__ = __mul__

    def __truediv__(self, other: "LogSigned | float") -> "LogSigned":
        if not isinstance(other, LogSigned):
            other = LogSigned.from_float(float(other))
        if other.sign == 0:
            raise PoleError("division by an exact zero")
        if self.sign == 0:
            return ZERO
        return LogSigned(self.log_magnitude - other.log_magnitude, self.sign * other.sign)

    def __rtruediv__(self, other: float) -> "LogSigned":
        return LogSigned.from_float(float(other)) / self

    def __neg__(self) -> "LogSigned":
        return LogSigned(self.log_magnitude, -self.sign)

    def __pow__(self, k: int) -> "LogSigned":
        if self.sign == 0:
            if k < 0:
                raise PoleError("negative power of zero")
            return ONE if k == 0 else ZERO
        return LogSigned(self.log_magnitude * k, self.sign**k if k >= 0 else self.sign ** (-k))


ZERO = LogSigned(0.0, 0)
ONE = LogSigned(0.0, 1)


@dataclass(frozen=True)
class SeriesControl:
    """Truncation settings for series and infinite products."""

    rel_tol: float = 1e-14
    max_terms: int = 10_000

    def __post_init__(self) -> None:
        if not 0 < self.rel_tol < 1:
            raise DomainError(f"rel_tol must lie in (0, 1), got {self.rel_tol}")
        if self.max_terms < 8:
            raise DomainError(f"max_terms must be >= 8, got {self.max_terms}")


DEFAULT_CONTROL = SeriesControl()


def _check_real(*xs: object) -> None:
    for x in xs:
        if isinstance(x, complex) or not isinstance(x, Real):
            raise DomainError(f"only real arguments are supported, got {x!r}")


def check_base(q: float) -> float:
    _check_real(q)
    if not 0 < q < 1:
        raise DomainError(f"base must satisfy 0 < q < 1, got {q}")
    return float(q)


def _log_factor(x: float) -> tuple[float, int]:
    """log|1 - x| and sign(1 - x)."""
    if abs(x) < 0.5:
        return math.log1p(-x), 1
    f = 1.0 - x
    if f == 0:
        return 0.0, 0
    return math.log(abs(f)), 1 if f > 0 else -1


def qpoch(z: float, q: float, n: float = math.inf, ctrl: SeriesControl = DEFAULT_CONTROL) -> LogSigned:
    """(z; q)_n for integer ``n`` (any sign) or ``n = inf``."""
    _check_real(z)
    q = check_base(q)
    if n == math.inf:
        log_mag, sign = 0.0, 1
        small = 0
        zk = float(z)
        for _ in range(ctrl.max_terms):
            lf, s = _log_factor(zk)
            if s == 0:
                return ZERO
            log_mag += lf
            sign *= s
            if abs(zk) < _PRODUCT_CUTOFF:
                small += 1
                if small >= 3:
                    return LogSigned(log_mag, sign)
            else:
                small = 0
            zk *= q
        raise NonConvergence(f"(z; q)_inf with z={z}, q={q} still moving after {ctrl.max_terms} factors")
    if n != int(n):
        raise DomainError(f"index must be an integer or inf, got {n}")
    n = int(n)
    log_mag, sign = 0.0, 1
    if n >= 0:
        zk = float(z)
        for _ in range(n):
            lf, s = _log_factor(zk)
            if s == 0:
                return ZERO
            log_mag += lf
            sign *= s
            zk *= q
        return LogSigned(log_mag, sign)
    # (z; q)_{-m} = 1 / prod_{k=1}^{m} (1 - z q^{-k})
    zk = float(z)
    for _ in range(-n):
        zk /= q
        if abs(1.0 - zk) <= 4 * math.ulp(1.0):
            raise PoleError(f"(z; q)_n has a pole: z q^-k = 1 for z={z}, q={q}")
        lf, s = _log_factor(zk)
        log_mag -= lf
        sign *= s
    return LogSigned(log_mag, sign)


def qpoch_value(z: float, q: float, n: float = math.inf, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    return qpoch(z, q, n, ctrl).value


def qpoch_multi(zs: Iterable[float], q: float, n: float = math.inf,
                ctrl: SeriesControl = DEFAULT_CONTROL) -> LogSigned:
    """(z_1, ..., z_r; q)_n as a single product."""
    out = ONE
    for z in zs:
        out = out * qpoch(z, q, n, ctrl)
    return out


def _is_denominator_pole(b: float, q: float) -> bool:
    # b = q^{-k}, k >= 0  <=>  b q^k = 1
    if b < 1:
        return False
    k = round(-math.log(b) / math.log(q))
    return abs(b * q**k - 1.0) < 1e-13


def _sum_series(ratio, ctrl: SeriesControl, what: str) -> LogSigned:
    """Sum t_0 = 1, t_{k+1} = ratio(k) t_k with rescaling against overflow.

    Stops after three consecutive terms below ``rel_tol`` times the partial sum.
    """
    term = 1.0
    total = 1.0
    offset = 0.0
    small = 0
    for k in range(ctrl.max_terms):
        r = ratio(k)
        if r == 0:
            break
        term *= r
        if abs(term) > _RESCALE:
            term /= _RESCALE
            total /= _RESCALE
            offset += _LOG_RESCALE
        total += term
        if abs(term) <= ctrl.rel_tol * abs(total):
            small += 1
            if small >= 3:
                break
        else:
            small = 0
    else:
        raise NonConvergence(f"{what}: no convergence within {ctrl.max_terms} terms")
    if total == 0:
        return ZERO
    return LogSigned(math.log(abs(total)) + offset, 1 if total > 0 else -1)


def rphis_log(a: Sequence[float], b: Sequence[float], q: float, z: float,
              ctrl: SeriesControl = DEFAULT_CONTROL) -> LogSigned:
    """Overflow-safe r-phi-s; see :func:`rphis`."""
    q = check_base(q)
    _check_real(z, *a, *b)
    r, s = len(a), len(b)
    if r > s + 1 and z != 0:
        raise DomainError(f"{r}phi{s} diverges for z != 0")
    if r == s + 1 and abs(z) >= 1:
        raise DomainError(f"{r}phi{s} needs |z| < 1, got z={z}")
    for bj in b:
        if _is_denominator_pole(bj, q):
            raise DomainError(f"denominator parameter {bj} is of the form q^-k")
    if z == 0:
        return ONE
    power = 1 + s - r
    a = [float(x) for x in a]
    b = [float(x) for x in b]
    qk = [1.0]  # q^k, updated in place

    def ratio(k: int) -> float:
        x = qk[0]
        num = z
        for ai in a:
            num *= 1.0 - ai * x
        den = 1.0 - x * q
        for bj in b:
            den *= 1.0 - bj * x
        if power:
            num *= (-x) ** power
        qk[0] = x * q
        return num / den

    return _sum_series(ratio, ctrl, f"{r}phi{s}")


def rphis(a: Sequence[float], b: Sequence[float], q: float, z: float,
          ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Basic hypergeometric series r-phi-s(a; b; q; z), with (q; q)_k in the denominator."""
    return rphis_log(a, b, q, z, ctrl).value


def eq_exp(z: float, q: float) -> float:
    """e_q(z) = 1 / (z; q)_inf for |z| < 1."""
    _check_real(z)
    if abs(z) >= 1:
        raise DomainError(f"e_q(z) needs |z| < 1, got {z}")
    return (1.0 / qpoch(z, q)).value


def Eq_exp(z: float, q: float) -> float:
    """E_q(z) = (-z; q)_inf."""
    return qpoch(-z, q).value


def eq_exp_series(z: float, q: float, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    # sum z^k / (q; q)_k
    if abs(z) >= 1:
        raise DomainError(f"e_q(z) needs |z| < 1, got {z}")
    return rphis([0.0], [], q, z, ctrl)


def Eq_exp_series(z: float, q: float, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    # sum q^{k(k-1)/2} z^k / (q; q)_k
    return rphis([], [], q, -z, ctrl)


def psi01(c: float, q: float, z: float, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Bilateral 0-psi-1(-; c; q; z) through the triple-product closed form.

    Requires |z| > |c|.
    """
    q = check_base(q)
    _check_real(c, z)
    if abs(z) <= abs(c):
        raise DomainError(f"0psi1 needs |z| > |c|, got z={z}, c={c}")
    den = qpoch_multi([c, c / z], q, math.inf, ctrl)
    if den.sign == 0:
        raise PoleError(f"(c, c/z; q)_inf vanishes for c={c}, z={z}")
    num = qpoch_multi([q, z, q / z], q, math.inf, ctrl)
    return (num / den).value


def psi01_sum(c: float, q: float, z: float, k_max: int | None = None,
              ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Direct bilateral summation of 0-psi-1, either to |k| <= k_max or adaptively."""
    q = check_base(q)
    _check_real(c, z)
    if abs(z) <= abs(c):
        raise DomainError(f"0psi1 needs |z| > |c|, got z={z}, c={c}")
    limit = ctrl.max_terms if k_max is None else k_max

    def one_side(step) -> float:
        term, total, small = 1.0, 0.0, 0
        for k in range(limit):
            term *= step(k)
            total += term
            if k_max is None:
                if abs(term) <= ctrl.rel_tol * max(abs(total), 1.0):
                    small += 1
                    if small >= 3:
                        return total
                else:
                    small = 0
        if k_max is None:
            raise NonConvergence("0psi1 bilateral sum did not settle")
        return total

    def up(k: int) -> float:
        # t_{k+1} / t_k = -q^k z / (1 - c q^k)
        d = 1.0 - c * q**k
        if d == 0:
            raise PoleError(f"(c; q)_k vanishes for c={c}")
        return -(q**k) * z / d

    def down(m: int) -> float:
        # t_{-(m+1)} / t_{-m} = (c - q^{m+1}) / z
        return (c - q ** (m + 1)) / z

    return 1.0 + one_side(up) + one_side(down)
