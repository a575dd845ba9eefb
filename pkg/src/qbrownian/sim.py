"""Monte Carlo for X on T_q: embedded-chain paths and exact hitting-of-zero draws.

The chain needs infinitely many jumps to reach zero, so paths are run down
to a floor level ``q^floor`` and the remaining time to zero is added as a
single exact draw from the q-Poisson mixture representation

    tau_0 from q^n  =  q^{2n + 2N - 1} sum_i q^{-2i} T_i      (in law),

with N q-Poisson and T_i independent unit exponentials.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np
from scipy import integrate

from .errors import DomainError
from .tq import TqParams, TqState, q_poisson_table

__all__ = [
    "RngStream",
    "PathRecord",
    "McEstimate",
    "simulate_path",
    "simulate_batch",
    "BatchResult",
    "sample_tau_zero",
    "sample_q_poisson",
    "estimate_laplace",
    "stopped_martingale_samples",
    "gumbel_density",
    "gumbel_cdf",
    "gumbel_limit_check",
    "path_to_csv",
    "estimate_to_json",
]

_CHUNK = 20_000


@dataclass
class RngStream:
    """Reproducible random substream identified by (master_seed, stream_index).

    Streams with different indices are derived through numpy's SeedSequence
    spawn keys and are statistically independent; ``sub_key`` extends the key
    for children created by :meth:`substream`.
    """

    master_seed: int
    stream_index: int = 0
    sub_key: tuple[int, ...] = ()
    _generator: np.random.Generator | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not 0 <= self.master_seed < 2**64:
            raise DomainError(f"master seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if self.stream_index < 0:
            raise DomainError(f"stream index must be nonnegative, got {self.stream_index}")

    @property
    def generator(self) -> np.random.Generator:
        if self._generator is None:
            seq = np.random.SeedSequence(self.master_seed,
                                         spawn_key=(self.stream_index, *self.sub_key))
            self._generator = np.random.Generator(np.random.PCG64(seq))
        return self._generator

    def substream(self, i: int) -> "RngStream":
        """Child stream, independent of this one and of its siblings."""
        return RngStream(self.master_seed, self.stream_index, (*self.sub_key, int(i)))


@dataclass
class PathRecord:
    jump_times: list[float]
    states: list[TqState]
    terminated_by: Literal["time_horizon", "hit_target", "hit_floor_spliced"]

    def state_at(self, t: float) -> TqState:
        """State occupied at time t (the last recorded state after the final jump)."""
        idx = int(np.searchsorted(self.jump_times, t, side="right"))
        return self.states[idx]


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_samples: int

    @classmethod
    def from_samples(cls, x: np.ndarray) -> "McEstimate":
        x = np.asarray(x, dtype=float)
        n = x.size
        if n < 2:
            raise DomainError("need at least two samples for a standard error")
        return cls(float(x.mean()), float(x.std(ddof=1) / math.sqrt(n)), n)

    @staticmethod
    def combine(parts: Sequence["McEstimate"]) -> "McEstimate":
        """Count-weighted pooling of independent estimates."""
        n = sum(e.n_samples for e in parts)
        mean = sum(e.mean * e.n_samples for e in parts) / n
        # recover each part's sum of squares, then pool
        ss = 0.0
        for e in parts:
            var = e.std_error**2 * e.n_samples
            ss += var * (e.n_samples - 1) + e.n_samples * (e.mean - mean) ** 2
        return McEstimate(mean, math.sqrt(ss / (n - 1) / n), n)

    def within(self, target: float, n_se: float = 3.0) -> bool:
        return abs(self.mean - target) <= n_se * self.std_error


# ---------------------------------------------------------------------------
# hitting time of zero


def sample_q_poisson(p: TqParams, rng: RngStream, size: int | None = None) -> np.ndarray | int:
    """Draws of N with P{N = k} proportional to q^-k / (q^-2; q^-2)_k, by inverse CDF."""
    cdf = q_poisson_table(p)
    u = rng.generator.random(size)
    out = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
    return int(out) if size is None else out


def sample_tau_zero(n: int, p: TqParams, rng: RngStream, tail_tol: float = 1e-12,
                    size: int | None = None) -> np.ndarray | float:
    """Exact-in-law draws of the hitting time of zero from q^n.

    The exponential series is cut once the expected remainder
    ``q^{-2(I+1)} / (1 - q^-2)`` drops below ``tail_tol`` times the partial sum.
    """
    if not tail_tol > 0:
        raise DomainError(f"tail_tol must be positive, got {tail_tol}")
    count = 1 if size is None else int(size)
    gen = rng.generator
    levels = np.asarray(sample_q_poisson(p, rng, count))
    base = p.base
    total = gen.standard_exponential(count)
    weight = 1.0
    while True:
        remainder = weight * base / (1.0 - base)
        need = remainder >= tail_tol * total
        if not need.any():
            break
        weight *= base
        # draw for every sample to keep the stream layout independent of the data
        total += np.where(need, weight * gen.standard_exponential(count), 0.0)
    tau = np.exp((2 * n + 2 * levels - 1) * math.log(p.q)) * total
    return float(tau[0]) if size is None else tau


# ---------------------------------------------------------------------------
# path simulation


def _check_start(start: TqState, floor_exponent: int) -> None:
    if start.kind == "zero":
        raise DomainError("paths must start away from zero")
    if floor_exponent >= start.exponent:
        raise DomainError(f"floor exponent {floor_exponent} must lie below the start exponent {start.exponent}")


def simulate_path(start: TqState, horizon: float, floor_exponent: int, p: TqParams,
                  rng: RngStream, target: int | None = None) -> PathRecord:
    """One path of X up to ``horizon``, stopping early at exponent ``target`` or at zero.

    At q^k the holding time is exponential with rate q^{-2k}(1 + q); the next
    state is q^{k-1} with probability q/(1+q).  Reaching the floor triggers the
    exact splice of the remaining time to zero.
    """
    if not horizon > 0:
        raise DomainError(f"horizon must be positive, got {horizon}")
    _check_start(start, floor_exponent)
    gen = rng.generator
    q = p.q
    p_down = q / (1.0 + q)
    kind = start.kind
    k = start.exponent
    t = 0.0
    times: list[float] = []
    states = [start]
    while True:
        rate = q ** (-2 * k) * (1.0 + q)
        t += gen.standard_exponential() / rate
        if t > horizon:
            return PathRecord(times, states, "time_horizon")
        k += -1 if gen.random() < p_down else 1
        times.append(t)
        states.append(TqState(kind, k))
        if target is not None and k == target:
            return PathRecord(times, states, "hit_target")
        if k <= floor_exponent:
            t += sample_tau_zero(k, p, rng)
            if t > horizon:
                # zero is reached after the horizon; the path sits below the floor
                return PathRecord(times, states, "time_horizon")
            times.append(t)
            states.append(TqState.zero())
            return PathRecord(times, states, "hit_floor_spliced")


@dataclass(frozen=True)
class BatchResult:
    """Final exponents, stopping times and outcome codes of a lockstep batch.

    ``outcome`` is 0 for the time horizon, 1 for the target and 2 for zero
    (reached through the floor splice).  ``time`` is the stopping time, capped
    at the horizon.
    """

    exponent: np.ndarray
    time: np.ndarray
    outcome: np.ndarray

    HORIZON = 0
    TARGET = 1
    ZERO = 2


def simulate_batch(start_exponent: int, n_paths: int, floor_exponent: int, p: TqParams,
                   rng: RngStream, target: int | None = None, horizon: float = math.inf,
                   splice: bool = True, max_steps: int = 1_000_000) -> BatchResult:
    """Vectorised version of :func:`simulate_path` recording only where each path stopped.

    With ``splice=False`` the floor acts as an absorbing level (outcome 2,
    time of reaching the floor).
    """
    if floor_exponent >= start_exponent:
        raise DomainError("floor exponent must lie below the start exponent")
    gen = rng.generator
    q = p.q
    p_down = q / (1.0 + q)
    lq2 = 2.0 * math.log(q)
    k = np.full(n_paths, start_exponent, dtype=np.int64)
    t = np.zeros(n_paths)
    outcome = np.full(n_paths, -1, dtype=np.int8)
    active = np.arange(n_paths)
    for _ in range(max_steps):
        if active.size == 0:
            break
        ka = k[active]
        hold = gen.standard_exponential(active.size) * np.exp(lq2 * ka) / (1.0 + q)
        ta = t[active] + hold
        over = ta > horizon
        ka = ka + np.where(gen.random(active.size) < p_down, -1, 1)
        t[active] = np.where(over, horizon, ta)
        k[active] = np.where(over, k[active], ka)
        done = over.copy()
        outcome[active[over]] = BatchResult.HORIZON
        if target is not None:
            hit = ~over & (ka == target)
            outcome[active[hit]] = BatchResult.TARGET
            done |= hit
        low = ~done & (ka <= floor_exponent)
        if low.any():
            idx = active[low]
            if splice:
                extra = sample_tau_zero(floor_exponent, p, rng, size=idx.size)
                reach = t[idx] + extra
                late = reach > horizon
                t[idx] = np.where(late, horizon, reach)
                outcome[idx] = np.where(late, BatchResult.HORIZON, BatchResult.ZERO)
            else:
                outcome[idx] = BatchResult.ZERO
            done |= low
        active = active[~done]
    else:
        raise DomainError(f"batch did not finish within {max_steps} lockstep steps")
    return BatchResult(k, t, outcome)


def estimate_laplace(kind: Literal["down", "up", "to_zero"], n: int, m: int, lam: float, p: TqParams,
                     n_samples: int, rng: RngStream, floor_exponent: int | None = None) -> McEstimate:
    """Monte Carlo estimate of E^{q^n}[exp(-lam tau)] with its standard error.

    ``down`` targets q^m with m < n; ``up`` targets q^m with m > n and gives
    paths that reach zero first (detected at the floor) the value 0;
    ``to_zero`` ignores m.  Samples are drawn in chunks on independent
    substreams and pooled by count.
    """
    if n_samples < 100:
        raise DomainError(f"need at least 100 samples, got {n_samples}")
    if not lam >= 0 or not math.isfinite(lam):
        raise DomainError(f"lambda must be a nonnegative finite real, got {lam}")
    if kind == "down" and not m < n:
        raise DomainError("downward hitting needs m < n")
    if kind == "up" and not m > n:
        raise DomainError("upward hitting needs m > n")
    if kind not in ("down", "up", "to_zero"):
        raise DomainError(f"unknown kind {kind!r}")
    if floor_exponent is None:
        # far enough that returning to the target from the floor is negligible
        floor_exponent = n - 30 if kind == "up" else min(n, m) - 10 if kind == "down" else n - 10
    parts = []
    for i, start in enumerate(range(0, n_samples, _CHUNK)):
        size = min(_CHUNK, n_samples - start)
        sub = rng.substream(i)
        if kind == "to_zero":
            res = simulate_batch(n, size, floor_exponent, p, sub)
            vals = np.exp(-lam * res.time)
        else:
            res = simulate_batch(n, size, floor_exponent, p, sub, target=m, splice=False)
            hit = res.outcome == BatchResult.TARGET
            vals = np.where(hit, np.exp(-lam * res.time), 0.0)
        parts.append(McEstimate.from_samples(vals))
    return McEstimate.combine(parts)


def stopped_martingale_samples(start_exponent: int, horizon: float, p: TqParams, n_paths: int,
                               rng: RngStream, floor_exponent: int = -25) -> tuple[np.ndarray, np.ndarray]:
    """Samples of X at ``horizon`` stopped at zero, and of xi^2 - (elapsed xi-time), both stopped.

    xi runs c_q times slower than X, so the xi-clock of a stopping time s of X
    is c_q s.  A path still below the floor at the horizon is given the floor
    value q^floor, which biases the first sample by at most that amount.
    """
    res = simulate_batch(start_exponent, n_paths, floor_exponent, p, rng, horizon=horizon)
    at_zero = res.outcome == BatchResult.ZERO
    value = np.where(at_zero, 0.0, p.q ** res.exponent.astype(float))
    quad = value**2 - p.c_q * res.time
    return value, quad


# ---------------------------------------------------------------------------
# limit law of the q-Poisson variable as q -> 1


def gumbel_density(x: float) -> float:
    """(2 pi)^{-1/2} exp(-(x + e^{-x}) / 2)."""
    if x < -700:
        return 0.0  # e^{-x} overflows; the density is far below the smallest double
    return math.exp(-(x + math.exp(-x)) / 2) / math.sqrt(2 * math.pi)


def gumbel_cdf(points: Iterable[float]) -> np.ndarray:
    """Distribution function of :func:`gumbel_density` at increasing points, by quadrature."""
    pts = np.asarray(list(points), dtype=float)
    if np.any(np.diff(pts) < 0):
        raise DomainError("points must be nondecreasing")
    out = np.empty(pts.size)
    acc = 0.0
    prev = -math.inf
    for i, x in enumerate(pts):
        if x > prev:
            acc += integrate.quad(gumbel_density, prev, x, epsabs=1e-13, limit=200)[0]
            prev = x
        out[i] = acc
    return out


def gumbel_limit_check(q_values: Sequence[float], n_samples: int, rng: RngStream) -> dict[float, float]:
    """KS distance between 2 log(q) N + log(q - 1) and its limit law, per q."""
    if n_samples < 10_000:
        raise DomainError(f"need at least 10^4 samples, got {n_samples}")
    out = {}
    for i, q in enumerate(q_values):
        if not 1 < q <= 1.2:
            raise DomainError(f"q must lie in (1, 1.2], got {q}")
        levels = sample_q_poisson(TqParams(q), rng.substream(i), n_samples)
        y = np.sort(2 * math.log(q) * levels + math.log(q - 1))
        uniq, inverse = np.unique(y, return_inverse=True)
        cdf_vals = gumbel_cdf(uniq)[inverse]
        n = y.size
        ecdf_hi = np.arange(1, n + 1) / n
        ecdf_lo = np.arange(0, n) / n
        # ties: only the last (first) index of a run counts for the upper (lower) gap
        last = np.r_[y[1:] != y[:-1], True]
        first = np.r_[True, y[1:] != y[:-1]]
        d_plus = np.max((ecdf_hi - cdf_vals)[last])
        d_minus = np.max((cdf_vals - ecdf_lo)[first])
        out[q] = float(max(d_plus, d_minus))
    return out


# ---------------------------------------------------------------------------
# serialisation


def path_to_csv(path: PathRecord, p: TqParams) -> str:
    """``jump_time,state_value,exponent,sign``; the start state is written at time 0."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["jump_time", "state_value", "exponent", "sign"])
    for t, s in zip([0.0, *path.jump_times], path.states):
        w.writerow([repr(float(t)), repr(s.value(p)), s.exponent if s.kind != "zero" else "", s.sign])
    return buf.getvalue()


def estimate_to_json(kind: str, params: dict, est: McEstimate, seed: int) -> str:
    record = {
        "kind": kind,
        "params": params,
        "estimate": est.mean,
        "std_error": est.std_error,
        "n_samples": est.n_samples,
        "seed": seed,
    }
    return json.dumps(record, sort_keys=True)
