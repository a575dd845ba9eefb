"""Named self-check suites exposed through ``qbrownian validate``.

Each suite returns a list of :class:`Check` records; a suite passes when
every record does.  Randomised draws use fixed seeds so repeated runs give
identical reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from . import qseries as qs
from . import tq
from .sim import McEstimate, RngStream, estimate_laplace, sample_tau_zero, stopped_martingale_samples

__all__ = ["Check", "SUITES", "run_suite"]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    worst: float
    tolerance: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: worst={self.worst:.3e} tol={self.tolerance:.1e}"


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def _check(name: str, errors, tol: float) -> Check:
    worst = float(max(errors))
    return Check(name, worst < tol, worst, tol)


def identities(draws: int = 200, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    qb, lim1, lim2, recip, series, triple = [], [], [], [], [], []
    big = 1e8
    for _ in range(draws):
        # an alternating series near base 1 cancels far below double precision,
        # so negative arguments are paired with bases away from 1
        z = rng.uniform(-0.9, 0.9)
        base = rng.uniform(0.05, 0.95 if z > 0 else 0.7)
        a = rng.uniform(-1.0, 1.0)
        lhs = qs.rphis([a], [], base, z)
        rhs = (qs.qpoch(a * z, base) / qs.qpoch(z, base)).value
        qb.append(_rel(lhs, rhs))

        # the surrogate parameter must dominate every q^-k that the series still resolves;
        # a negative argument keeps the numerator-limit series free of cancellation
        lb = rng.uniform(0.5, 0.95)
        a1, b1 = rng.uniform(-1.0, 1.0), rng.uniform(-3.0, -0.1)
        w, small_z = rng.uniform(-2.0, 0.0), rng.uniform(-0.5, 0.5)
        lim1.append(_rel(qs.rphis([big, a1], [b1], lb, w / big), qs.rphis([a1], [b1], lb, w)))
        lim2.append(_rel(qs.rphis([a1], [big], lb, big * small_z), qs.rphis([a1], [], lb, small_z)))

        recip.append(abs(qs.eq_exp(z, base) * qs.Eq_exp(-z, base) - 1.0))
        series.append(_rel(qs.eq_exp_series(z, base), qs.eq_exp(z, base)))

        c = rng.uniform(-0.5, 0.5)
        zz = -rng.uniform(abs(c) + 0.1, 3.0)
        triple.append(_rel(qs.psi01_sum(c, base, zz), qs.psi01(c, base, zz)))
    return [
        _check("q-binomial theorem", qb, 1e-9),
        _check("limit relation, numerator parameter to infinity", lim1, 1e-6),
        _check("limit relation, denominator parameter to infinity", lim2, 1e-6),
        _check("e_q(z) E_q(-z) = 1", recip, 1e-9),
        _check("e_q product vs series", series, 1e-9),
        _check("bilateral sum vs triple product", triple, 1e-9),
    ]


def hitting() -> list[Check]:
    down, up = [], []
    for q in (1.5, 2.0, 4.0):
        p = tq.TqParams(q)
        for lam in (0.1, 1.0, 10.0):
            frac = tq.h0_down_fraction(lam, p).value
            down += [abs(frac - tq.h0_down(lam, p, "phi01").value),
                     abs(frac - tq.h0_down(lam, p, "phi11").value)]
            up.append(abs(tq.h0_up_fraction(lam, p).value - tq.h0_up(lam, p).value))
    p = tq.TqParams(2.0)
    limits = [abs(tq.h0_down(1e-8, p).value - 1.0), abs(tq.h0_up(1e-8, p).value - 0.5)]
    shift = [_rel(tq.h_nm(n + 1, m + 1, lam, p).value, tq.h_nm(n, m, 4 * lam, p).value)
             for n, m in ((0, -2), (1, 3), (2, -1)) for lam in (0.5, 1.0)]
    markov = [_rel(tq.h_to_zero(n, 1.0, p).value,
                   tq.h_nm(n, n - 6, 1.0, p).value * tq.h_to_zero(n - 6, 1.0, p).value)
              for n in (-2, 0, 3)]
    return [
        _check("downward fraction vs closed forms", down, 1e-9),
        _check("upward fraction vs closed form", up, 1e-9),
        _check("small-lambda limits", limits, 1e-4),
        _check("exponent shift", shift, 1e-12),
        _check("strong Markov telescoping to zero", markov, 1e-9),
    ]


def excursion() -> list[Check]:
    p = tq.TqParams(2.0)
    psi = lambda lam: tq.psi_exponent(lam, p)  # noqa: E731
    scaling = [_rel(psi(lam / 4), psi(lam) / 2) for lam in (0.3, 1.0, 7.0)]
    inversion = [_rel(psi(1 / lam), psi(lam) / lam) for lam in (0.3, 3.0)]
    sums = [_rel(tq.psi_exponent_sum(lam, p), psi(lam)) for lam in (0.5, 1.0, 2.0)]
    window = range(-2, 3)
    balance = [abs(tq.speed_atom(m, p) * tq.resolvent_killed(m, n, 1.0, p)
                   - tq.speed_atom(n, p) * tq.resolvent_killed(n, m, 1.0, p))
               for m in window for n in window]
    killed = [abs(sum(tq.resolvent_killed(0, n, 1.0, p) for n in range(-60, 61))
                  - (1.0 - tq.h_to_zero(0, 1.0, p).value))]
    mass = [abs(tq.resolvent_row_mass(tq.TqState.pos(0), 1.0, p) - 1.0)]
    return [
        _check("subordinator exponent scaling", scaling, 1e-12),
        _check("subordinator exponent inversion", inversion, 1e-12),
        _check("entrance-law sum vs product form", sums, 1e-8),
        _check("killed resolvent detailed balance", balance, 1e-9),
        _check("killed resolvent mass", killed, 1e-6),
        _check("full resolvent mass", mass, 1e-5),
    ]


def density() -> list[Check]:
    p = tq.TqParams(2.0)
    f = lambda t: tq.tau_zero_density(0, t, p)  # noqa: E731
    norm = [abs(integrate.quad(f, 0, math.inf, limit=200, epsabs=1e-12)[0] - 1.0)]
    lt = [abs(integrate.quad(lambda t: math.exp(-lam * t) * f(t), 0, math.inf, limit=200,
                             epsabs=1e-12)[0] - tq.h_to_zero(0, lam, p).value)
          for lam in (0.5, 1.0, 2.0)]
    return [_check("density normalisation", norm, 1e-6),
            _check("density Laplace transform", lt, 1e-6)]


def montecarlo(samples: int = 20_000, seed: int = 2024) -> list[Check]:
    p = tq.TqParams(2.0)
    rng = RngStream(seed)
    cases = [("down", 0, -1, tq.h0_down(1.0, p).value),
             ("up", 0, 1, tq.h0_up(1.0, p).value),
             ("to_zero", 0, 0, tq.h_to_zero(0, 1.0, p).value)]
    out = []
    for i, (kind, n, m, exact) in enumerate(cases):
        est = estimate_laplace(kind, n, m, 1.0, p, samples, rng.substream(i))
        z = abs(est.mean - exact) / est.std_error
        out.append(Check(f"Monte Carlo {kind} transform (in SE)", z < 3, z, 3.0))
    draws = sample_tau_zero(0, p, rng.substream(10), size=samples)
    est = McEstimate.from_samples(np.exp(-draws))
    z = abs(est.mean - tq.h_to_zero(0, 1.0, p).value) / est.std_error
    out.append(Check("direct hitting-time draws (in SE)", z < 3, z, 3.0))
    value, quad = stopped_martingale_samples(0, 1.0, p, samples, rng.substream(11))
    for name, x in (("stopped martingale", value), ("stopped quadratic martingale", quad)):
        est = McEstimate.from_samples(x)
        z = abs(est.mean - 1.0) / est.std_error
        out.append(Check(f"{name} (in SE)", z < 3, z, 3.0))
    return out


SUITES: dict[str, Callable[[], list[Check]]] = {
    "identities": identities,
    "hitting": lambda: hitting() + density(),
    "excursion": excursion,
    "montecarlo": montecarlo,
}


def run_suite(name: str) -> list[Check]:
    if name == "all":
        return [c for key in ("identities", "hitting", "excursion", "montecarlo") for c in SUITES[key]()]
    return SUITES[name]()
