"""Closed-form analytics for the unit-rate process X on T_q = {+-q^k} u {0}.

X moves on the positive half by a birth-and-death chain with death rate
``q^{1-2n}`` and birth rate ``q^{-2n}`` at ``q^n``; zero is reached after
infinitely many jumps in finite time.  All series are taken at the base
``q^-2`` (occasionally ``q^-1``) and every prefactor that can overflow is
carried in log space.

The basic building block is

    r_n(lam) = 1phi1(0; -q^{-2n-1}/lam; q^-2; -q^{-2n-2}/lam) / (-lam q^{2n-1}; q^-2)_inf,

which is (up to a constant) the decreasing solution of the hitting
recurrence: E^n[exp(-lam tau_m)] = r_n / r_m for m < n and
E^n[exp(-lam tau_0)] = r_n (1/q; q^-2)_inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from .contfrac import RecurrenceSpec, minimal_solution_ratio, tail_fixed_points
from .errors import DomainError, NonConvergence
from .qseries import DEFAULT_CONTROL, LogSigned, SeriesControl, qpoch, rphis_log
from .values import LaplaceValue

__all__ = [
    "TqParams",
    "TqState",
    "h0_down",
    "h0_down_alt",
    "h0_down_fraction",
    "h0_up",
    "h0_up_alt",
    "h0_up_fraction",
    "h_down",
    "h_nm",
    "h_to_zero",
    "q_poisson_pmf",
    "q_poisson_table",
    "hitting_density_kernel",
    "tau_zero_density",
    "speed_atom",
    "psi_exponent",
    "psi_exponent_sum",
    "entrance_law_lt",
    "resolvent_killed",
    "resolvent_full",
    "resolvent_row_mass",
]


@dataclass(frozen=True)
class TqParams:
    """Process parameter ``q > 1`` with the derived series base and rate constant."""

    q: float

    def __post_init__(self) -> None:
        if not (isinstance(self.q, (int, float)) and self.q > 1 and math.isfinite(self.q)):
            raise DomainError(f"q must be a finite real > 1, got {self.q!r}")

    @property
    def base(self) -> float:
        """Series base q^-2."""
        return self.q**-2

    @property
    def half_base(self) -> float:
        """Series base q^-1, used by the 0phi1 forms."""
        return 1.0 / self.q

    @property
    def c_q(self) -> float:
        """Rate constant (q-1)^2 (1+q) / q linking X to the natural clock."""
        q = self.q
        return (q - 1) ** 2 * (1 + q) / q

    def death_rate(self, n: int) -> float:
        return self.q ** (1 - 2 * n)

    def birth_rate(self, n: int) -> float:
        return self.q ** (-2 * n)


@dataclass(frozen=True)
class TqState:
    kind: Literal["zero", "positive", "negative"]
    exponent: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("zero", "positive", "negative"):
            raise DomainError(f"unknown state kind {self.kind!r}")
        if self.kind == "zero" and self.exponent != 0:
            raise DomainError("the zero state carries no exponent")

    @classmethod
    def zero(cls) -> "TqState":
        return cls("zero")

    @classmethod
    def pos(cls, n: int) -> "TqState":
        return cls("positive", int(n))

    @classmethod
    def neg(cls, n: int) -> "TqState":
        return cls("negative", int(n))

    @property
    def sign(self) -> int:
        return {"zero": 0, "positive": 1, "negative": -1}[self.kind]

    def mirror(self) -> "TqState":
        if self.kind == "zero":
            return self
        return TqState("negative" if self.kind == "positive" else "positive", self.exponent)

    def value(self, p: TqParams) -> float:
        if self.kind == "zero":
            return 0.0
        return self.sign * p.q**self.exponent


def _check_lambda(lam: float) -> float:
    if isinstance(lam, complex) or not lam > 0 or not math.isfinite(lam):
        raise DomainError(f"lambda must be a positive finite real, got {lam!r}")
    return float(lam)


def _phi01_log(z: float, base: float, ctrl: SeriesControl) -> LogSigned:
    # 0phi1(-; 0; base; z) = sum base^{k(k-1)} z^k / (base; base)_k
    return rphis_log([], [0.0], base, z, ctrl)


def _phi11_log(b: float, z: float, base: float, ctrl: SeriesControl) -> LogSigned:
    return rphis_log([0.0], [b], base, z, ctrl)


def _r_log(n: int, lam: float, p: TqParams, ctrl: SeriesControl = DEFAULT_CONTROL) -> LogSigned:
    """log r_n(lam); see the module docstring."""
    q, base = p.q, p.base
    series = _phi11_log(-(q ** (-2 * n - 1)) / lam, -(q ** (-2 * n - 2)) / lam, base, ctrl)
    return series / qpoch(-lam * q ** (2 * n - 1), base, math.inf, ctrl)


def _ratio_value(num: LogSigned, den: LogSigned) -> float:
    return (num / den).value


def h0_down(lam: float, p: TqParams, form: Literal["phi01", "phi11"] = "phi11",
            ctrl: SeriesControl = DEFAULT_CONTROL) -> LaplaceValue:
    """E^1[exp(-lam tau_{1/q})] for X."""
    lam = _check_lambda(lam)
    q = p.q
    if form == "phi01":
        num = _phi01_log(1.0 / (lam * q), p.half_base, ctrl)
        den = _phi01_log(q / lam, p.half_base, ctrl)
        value = (q / lam) * _ratio_value(num, den)
        return LaplaceValue(value, "phi01_ratio")
    if form == "phi11":
        return LaplaceValue(_ratio_value(_r_log(0, lam, p, ctrl), _r_log(-1, lam, p, ctrl)),
                            "phi11_ratio")
    raise DomainError(f"form must be 'phi01' or 'phi11', got {form!r}")


def h0_down_alt(lam: float, p: TqParams, ctrl: SeriesControl = DEFAULT_CONTROL) -> LaplaceValue:
    """q / (q + lam * 1phi1(0; -1/(q lam); q^-2; -1/lam) / 1phi1(0; -1/(q lam); q^-2; -1/(q^2 lam)))."""
    lam = _check_lambda(lam)
    q, base = p.q, p.base
    b = -1.0 / (q * lam)
    ratio = _ratio_value(_phi11_log(b, -1.0 / lam, base, ctrl),
                         _phi11_log(b, -1.0 / (q * q * lam), base, ctrl))
    return LaplaceValue(q / (q + lam * ratio), "phi11_ratio")


def h0_down_fraction(lam: float, p: TqParams, tol: float = 1e-13) -> LaplaceValue:
    """The downward fraction q/(1+q+lam - q/(1+q+lam q^2 - ...)) by backward recurrence."""
    lam = _check_lambda(lam)
    q = p.q
    rec = RecurrenceSpec(a=lambda k: q, b=lambda k: 1.0 + q + lam * q ** (2 * k),
                          direction="positive")
    cf = minimal_solution_ratio(rec, 0, tol=tol)
    return LaplaceValue(cf.value, "continued_fraction", cf.error_estimate)


def h0_up(lam: float, p: TqParams, ctrl: SeriesControl = DEFAULT_CONTROL) -> LaplaceValue:
    """E^1[exp(-lam tau_q); tau_q < tau_0] for X killed at zero."""
    lam = _check_lambda(lam)
    q, base = p.q, p.base
    z = q**-3
    ratio = _ratio_value(_phi11_log(-lam * q**-3, z, base, ctrl),
                         _phi11_log(-lam / q, z, base, ctrl))
    return LaplaceValue(ratio / (q + lam), "phi11_ratio")


def h0_up_alt(lam: float, p: TqParams, ctrl: SeriesControl = DEFAULT_CONTROL) -> LaplaceValue:
    """1 - 1phi1(0; -lam/q; q^-2; 1/q) / 1phi1(0; -lam/q; q^-2; q^-3)."""
    lam = _check_lambda(lam)
    q, base = p.q, p.base
    b = -lam / q
    ratio = _ratio_value(_phi11_log(b, 1.0 / q, base, ctrl), _phi11_log(b, q**-3, base, ctrl))
    return LaplaceValue(1.0 - ratio, "phi11_ratio")


def h0_up_fraction(lam: float, p: TqParams, tol: float = 1e-13) -> LaplaceValue:
    """The upward fraction 1/(1+q+lam - q/(1+q+lam q^-2 - ...)), seeded at its attractive tail."""
    lam = _check_lambda(lam)
    q = p.q
    rec = RecurrenceSpec(a=lambda k: 1.0 if k == 0 else q,
                          b=lambda k: 1.0 + q + lam * q ** (2 * k),
                          direction="negative",
                          tail=tail_fixed_points(q, 1.0 + q))
    cf = minimal_solution_ratio(rec, 0, tol=tol)
    return LaplaceValue(cf.value, "continued_fraction", cf.error_estimate)


def h_down(n: int, lam: float, p: TqParams, form: Literal["phi01", "phi11"] = "phi11",
           ctrl: SeriesControl = DEFAULT_CONTROL) -> LaplaceValue:
    """E^{q^n}[exp(-lam tau_{q^{n-1}})], through the self-similar rescaling lam -> q^{2n} lam."""
    return h0_down(_check_lambda(lam) * p.q ** (2 * n), p, form, ctrl)


def _h_down_steps_log(n: int, m: int, lam: float, p: TqParams, ctrl: SeriesControl) -> LogSigned:
    # E^n[exp(-lam tau_m)], m < n, as r_n / r_m
    return _r_log(n, lam, p, ctrl) / _r_log(m, lam, p, ctrl)


def _h_down_phi01_log(n: int, m: int, lam: float, p: TqParams, ctrl: SeriesControl) -> LogSigned:
    # q^{M^2 - 2Mn} lam^-M 0phi1(1/(lam q^{2n+1})) / 0phi1(1/(lam q^{2m+1})), M = n - m
    q = p.q
    steps = n - m
    log_pref = (steps * steps - 2 * steps * n) * math.log(q) - steps * math.log(lam)
    num = _phi01_log(1.0 / (lam * q ** (2 * n + 1)), p.half_base, ctrl)
    den = _phi01_log(1.0 / (lam * q ** (2 * m + 1)), p.half_base, ctrl)
    return LogSigned(log_pref, 1) * (num / den)


def _h_up_log(n: int, m: int, lam: float, p: TqParams, ctrl: SeriesControl) -> LogSigned:
    # E^n[exp(-lam tau_m); tau_m < tau_0], m > n
    q, base = p.q, p.base
    steps = m - n
    z = q**-3
    pref = qpoch(-lam * q ** (2 * m - 3), base, steps, ctrl)
    num = _phi11_log(-lam * q ** (2 * n - 3), z, base, ctrl)
    den = _phi11_log(-lam * q ** (2 * m - 3), z, base, ctrl)
    return LogSigned(-steps * math.log(q), 1) / pref * (num / den)


def h_nm(n: int, m: int, lam: float, p: TqParams, form: Literal["phi01", "phi11"] = "phi11",
         ctrl: SeriesControl = DEFAULT_CONTROL) -> LaplaceValue:
    """E^{q^n}[exp(-lam tau_{q^m})]; for m > n the process is killed at zero.

    ``form`` selects between the two closed forms when m < n and is ignored
    otherwise.
    """
    lam = _check_lambda(lam)
    if m == n:
        return LaplaceValue(1.0, "product")
    if m > n:
        return LaplaceValue(_h_up_log(n, m, lam, p, ctrl).value, "phi11_ratio")
    if form == "phi01":
        return LaplaceValue(_h_down_phi01_log(n, m, lam, p, ctrl).value, "phi01_ratio")
    if form == "phi11":
        return LaplaceValue(_h_down_steps_log(n, m, lam, p, ctrl).value, "phi11_ratio")
    raise DomainError(f"form must be 'phi01' or 'phi11', got {form!r}")


def _log_inv_eq_exp_at_inv_q(p: TqParams, ctrl: SeriesControl) -> LogSigned:
    # 1 / e_{q^-2}(1/q) = (1/q; q^-2)_inf
    return qpoch(1.0 / p.q, p.base, math.inf, ctrl)


def _h_to_zero_log(n: int, lam: float, p: TqParams, ctrl: SeriesControl) -> LogSigned:
    return _r_log(n, lam, p, ctrl) * _log_inv_eq_exp_at_inv_q(p, ctrl)


def h_to_zero(n: int, lam: float, p: TqParams, ctrl: SeriesControl = DEFAULT_CONTROL) -> LaplaceValue:
    """E^{q^n}[exp(-lam tau_0)]."""
    lam = _check_lambda(lam)
    return LaplaceValue(_h_to_zero_log(n, lam, p, ctrl).value, "phi11_ratio")


# ---------------------------------------------------------------------------
# hitting time of zero: mixture law and density


def q_poisson_pmf(k: int, p: TqParams) -> float:
    """P{N = k} = q^-k / ((q^-2; q^-2)_k e_{q^-2}(1/q))."""
    if k < 0:
        return 0.0
    base = p.base
    log_val = (-k * math.log(p.q) - qpoch(base, base, k).log_magnitude
               + _log_inv_eq_exp_at_inv_q(p, DEFAULT_CONTROL).log_magnitude)
    return math.exp(log_val)


@lru_cache(maxsize=64)
def _q_poisson_table(q: float, tail_tol: float) -> tuple[float, ...]:
    p = TqParams(q)
    base = p.base
    log_w = _log_inv_eq_exp_at_inv_q(p, DEFAULT_CONTROL).log_magnitude
    pmf = []
    total = 0.0
    prev = 0.0
    for k in range(DEFAULT_CONTROL.max_terms * 10):
        if k:
            # w_k / w_{k-1} = q^-1 / (1 - base^k)
            log_w += -math.log(q) - math.log1p(-(base**k))
        w = math.exp(log_w)
        pmf.append(w)
        total += w
        # past the mode the weights only shrink, so the remaining tail is small
        if 1.0 - total < tail_tol or (w < prev and w < tail_tol * 1e-3):
            break
        prev = w
    else:
        raise NonConvergence(f"q-Poisson table for q={q} did not close")
    cdf = np.cumsum(pmf)
    cdf /= cdf[-1]
    return tuple(cdf.tolist())


def q_poisson_table(p: TqParams, tail_tol: float = 1e-15) -> np.ndarray:
    """Cumulative distribution of N, renormalised after dropping a tail below ``tail_tol``.

    The table is cached per (q, tail_tol) and returned as a read-only array.
    """
    arr = np.array(_q_poisson_table(float(p.q), float(tail_tol)))
    arr.setflags(write=False)
    return arr


def hitting_density_kernel(t: float, p: TqParams, ctrl: SeriesControl = DEFAULT_CONTROL,
                           strict: bool = False) -> float:
    """Density of S = sum_i q^{-2i} T_i, with T_i independent unit exponentials.

    Uses the partial-fraction expansion
    ``(q^-2; q^-2)_inf^-1 sum_j (-1)^j q^{-j(j-1)} exp(-q^{2j} t) / (q^-2; q^-2)_j``.
    For very small t the alternating sum cancels below rounding level; the
    result is then 0.0 (the true value is far below double resolution), or
    :class:`NonConvergence` is raised when ``strict`` is set.
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    q, base = p.q, p.base
    lq = math.log(q)
    log_pochs = 0.0  # log (base; base)_j
    total = 0.0
    abs_total = 0.0
    for j in range(ctrl.max_terms):
        if j:
            log_pochs += math.log1p(-(base**j))
        expo = -j * (j - 1) * lq - math.exp(2 * j * lq) * t - log_pochs
        term = math.exp(expo) if expo > -745 else 0.0
        total += term if j % 2 == 0 else -term
        abs_total += term
        # terms decrease monotonically, so the first negligible one bounds the tail
        if term <= ctrl.rel_tol * abs(total) * 1e-2 or (j > 0 and term == 0.0):
            break
    else:
        raise NonConvergence("density kernel series did not terminate")
    if abs(total) <= 64 * 2.2e-16 * abs_total:
        if strict:
            raise NonConvergence(f"alternating series loses all precision at t={t}")
        return 0.0
    return max(total, 0.0) / qpoch(base, base).value


def tau_zero_density(n: int, t: float, p: TqParams, ctrl: SeriesControl = DEFAULT_CONTROL,
                     strict: bool = False) -> float:
    """Density at t of the hitting time of zero from q^n.

    The hitting time equals q^{2n+2N-1} S with N q-Poisson and S as in
    :func:`hitting_density_kernel`, so the density is the corresponding
    scale mixture.
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    q, base = p.q, p.base
    lq = math.log(q)
    log_norm = _log_inv_eq_exp_at_inv_q(p, ctrl).log_magnitude
    log_pochs = 0.0
    total = 0.0
    small = 0
    for m in range(ctrl.max_terms):
        if m:
            log_pochs += math.log1p(-(base**m))
        log_scale = -(2 * (n + m) - 1) * lq  # 1 / q^{2(n+m)-1}
        log_weight = -m * lq - log_pochs + log_norm
        # the kernel is a density bounded by 1, so weight * scale bounds the term
        bound = math.exp(log_weight + log_scale)
        term = 0.0
        if bound > 0:
            term = bound * hitting_density_kernel(t * math.exp(log_scale), p, ctrl, strict)
        total += term
        if bound <= ctrl.rel_tol * total or bound < 1e-300:
            small += 1
            if small >= 3:
                return total
        else:
            small = 0
    raise NonConvergence("q-Poisson mixture did not terminate")


# ---------------------------------------------------------------------------
# excursions, local time and resolvents


def speed_atom(n: int, p: TqParams) -> float:
    """Speed-measure mass of the point +-q^n: (q^{n+1} - q^{n-1}) / 2."""
    return (p.q ** (n + 1) - p.q ** (n - 1)) / 2


def psi_exponent(lam: float, p: TqParams, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Laplace exponent of the inverse local time at zero, in product form."""
    lam = _check_lambda(lam)
    q, base = p.q, p.base
    num = qpoch(-1.0 / lam, base, math.inf, ctrl) * qpoch(-lam * base, base, math.inf, ctrl)
    den = qpoch(-lam / q, base, math.inf, ctrl) * qpoch(-1.0 / (lam * q), base, math.inf, ctrl)
    return lam * (q * q - 1) / q * (num / den).value


def entrance_law_lt(n: int, lam: float, p: TqParams, sign: int = 1,
                    ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Laplace transform in t of the excursion entrance law at +-q^n."""
    if sign not in (1, -1):
        raise DomainError(f"sign must be +1 or -1, got {sign}")
    lam = _check_lambda(lam)
    return speed_atom(n, p) * _h_to_zero_log(n, lam, p, ctrl).value


def psi_exponent_sum(lam: float, p: TqParams, n_max: int = 40,
                     ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Cross-check of :func:`psi_exponent`: 2 lam times the entrance transforms over |n| <= n_max."""
    lam = _check_lambda(lam)
    return 2 * lam * sum(entrance_law_lt(n, lam, p, 1, ctrl) for n in range(-n_max, n_max + 1))


def _killed_diagonal(n: int, lam: float, p: TqParams, ctrl: SeriesControl) -> float:
    q = p.q
    up = _h_up_log(n - 1, n, lam, p, ctrl).value
    down = _h_down_steps_log(n + 1, n, lam, p, ctrl).value
    rate = p.death_rate(n) + p.birth_rate(n)
    return 1.0 / (lam + rate * (1.0 - (q / (q + 1)) * up - (1.0 / (q + 1)) * down))


def resolvent_killed(m: int, n: int, lam: float, p: TqParams,
                     ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Expected discounted time at q^n, from q^m, before the process hits zero."""
    lam = _check_lambda(lam)
    diag = _killed_diagonal(n, lam, p, ctrl)
    if m == n:
        return diag
    if m > n:
        return _h_down_steps_log(m, n, lam, p, ctrl).value * diag
    return _h_up_log(m, n, lam, p, ctrl).value * diag


def resolvent_full(x: TqState, y: TqState, lam: float, p: TqParams,
                   ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Expected discounted time at y from x for the process continued through zero."""
    lam = _check_lambda(lam)
    if y.kind == "zero":
        return 0.0  # zero is instantaneous and carries no speed mass
    if x.kind == "negative":
        return resolvent_full(x.mirror(), y.mirror(), lam, p, ctrl)
    from_zero = entrance_law_lt(y.exponent, lam, p, y.sign, ctrl) / psi_exponent(lam, p, ctrl)
    if x.kind == "zero":
        return from_zero
    hit_zero = _h_to_zero_log(x.exponent, lam, p, ctrl).value
    same_side = 0.0
    if y.kind == "positive":
        same_side = resolvent_killed(x.exponent, y.exponent, lam, p, ctrl)
    return same_side + hit_zero * from_zero


def resolvent_row_mass(x: TqState, lam: float, p: TqParams, tol: float = 1e-12,
                       max_exponent: int = 400, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """lam * sum_y R(x, y), widening the exponent window until the added mass is below ``tol``.

    Equals 1 for the conservative resolvent; the truncation is reported
    by how far the result falls short.
    """
    lam = _check_lambda(lam)
    centre = x.exponent
    total = 0.0
    for width in range(max_exponent + 1):
        exps = {centre - width, centre + width}
        added = 0.0
        for k in exps:
            for state in (TqState.pos(k), TqState.neg(k)):
                added += lam * resolvent_full(x, state, lam, p, ctrl)
        total += added
        if width > 4 and added < tol:
            return total
    raise NonConvergence(f"resolvent mass not settled within exponent window {max_exponent}")
