"""The twelve acceptance criteria, each at its stated size and tolerance."""

import math
import time

from scipy import integrate, stats

from qbrownian import timescale as ts
from qbrownian import tq
from qbrownian.sim import (
    McEstimate,
    RngStream,
    estimate_laplace,
    gumbel_limit_check,
    simulate_batch,
    stopped_martingale_samples,
)
from qbrownian.validate import identities

P2 = tq.TqParams(2.0)


def rel(a, b):
    return abs(a - b) / abs(b)


def test_criterion_01_qseries_identities(report):
    start = time.perf_counter()
    checks = identities(draws=200, seed=0)
    elapsed = time.perf_counter() - start
    ok = all(c.passed for c in checks) and elapsed < 10
    worst = ", ".join(f"{c.name}={c.worst:.1e}" for c in checks)
    assert report(1, ok, f"{worst}; {elapsed:.2f}s (< 10s)")


def test_criterion_02_fraction_vs_closed_forms(report):
    start = time.perf_counter()
    worst_down = worst_up = 0.0
    for q in (1.5, 2.0, 4.0):
        p = tq.TqParams(q)
        for lam in (0.1, 1.0, 10.0):
            frac = tq.h0_down_fraction(lam, p).value
            for form in ("phi01", "phi11"):
                worst_down = max(worst_down, abs(frac - tq.h0_down(lam, p, form).value))
            worst_up = max(worst_up, abs(tq.h0_up_fraction(lam, p).value - tq.h0_up(lam, p).value))
    elapsed = time.perf_counter() - start
    ok = worst_down < 1e-9 and worst_up < 1e-9 and elapsed < 5
    assert report(2, ok, f"down={worst_down:.1e} up={worst_up:.1e} (< 1e-9); {elapsed:.2f}s (< 5s)")


def test_criterion_03_small_lambda_limits(report):
    down = abs(tq.h0_down(1e-8, P2).value - 1.0)
    up = abs(tq.h0_up(1e-8, P2).value - 1 / P2.q)
    assert report(3, down < 1e-4 and up < 1e-4, f"|H_down - 1|={down:.1e} |H_up - 1/q|={up:.1e} (< 1e-4)")


def test_criterion_04_scaling_laws(report):
    shift = max(rel(tq.h_nm(n + 1, m + 1, lam, P2).value, tq.h_nm(n, m, 4 * lam, P2).value)
                for n, m in ((0, -2), (1, 3), (2, -1), (-3, 0)) for lam in (0.3, 1.0, 5.0))
    psi = lambda lam: tq.psi_exponent(lam, P2)  # noqa: E731
    scaling = max(rel(psi(lam / 4), psi(lam) / 2) for lam in (0.3, 1.0, 7.0))
    inversion = max(rel(psi(1 / lam), psi(lam) / lam) for lam in (0.3, 3.0))
    ok = max(shift, scaling, inversion) < 1e-12
    assert report(4, ok, f"shift={shift:.1e} psi-scaling={scaling:.1e} psi-inversion={inversion:.1e} (< 1e-12)")


def test_criterion_05_excursion_consistency(report):
    worst = max(rel(tq.psi_exponent_sum(lam, P2, n_max=40), tq.psi_exponent(lam, P2))
                for lam in (0.5, 1.0, 2.0))
    assert report(5, worst < 1e-8, f"entrance sum vs product={worst:.1e} (< 1e-8)")


def test_criterion_06_density(report):
    start = time.perf_counter()
    f = lambda t: tq.tau_zero_density(0, t, P2)  # noqa: E731
    norm = abs(integrate.quad(f, 0, math.inf, limit=200, epsabs=1e-12)[0] - 1)
    lt = max(abs(integrate.quad(lambda t: math.exp(-lam * t) * f(t), 0, math.inf, limit=200,
                                epsabs=1e-12)[0] - tq.h_to_zero(0, lam, P2).value)
             for lam in (0.5, 1.0, 2.0))
    elapsed = time.perf_counter() - start
    ok = norm < 1e-6 and lt < 1e-6 and elapsed < 30
    assert report(6, ok, f"normalisation={norm:.1e} laplace={lt:.1e} (< 1e-6); {elapsed:.2f}s (< 30s)")


def test_criterion_07_resolvents(report):
    states = [s(n) for n in range(-2, 3) for s in (tq.TqState.pos, tq.TqState.neg)]
    balance = max(abs(tq.speed_atom(x.exponent, P2) * tq.resolvent_full(x, y, 1.0, P2)
                      - tq.speed_atom(y.exponent, P2) * tq.resolvent_full(y, x, 1.0, P2))
                  for x in states for y in states)
    mass = abs(tq.resolvent_row_mass(tq.TqState.pos(0), 1.0, P2) - 1)
    killed = abs(sum(tq.resolvent_killed(0, n, 1.0, P2) for n in range(-60, 61))
                 - (1 - tq.h_to_zero(0, 1.0, P2).value))
    ok = balance < 1e-9 and mass < 1e-5 and killed < 1e-6
    assert report(7, ok, f"detailed balance={balance:.1e} (< 1e-9) mass={mass:.1e} (< 1e-5) "
                         f"killed mass={killed:.1e} (< 1e-6)")


def test_criterion_08_monte_carlo(report):
    start = time.perf_counter()
    rng = RngStream(20240601)
    n = 100_000
    cases = [("down", 0, -1, tq.h0_down(1.0, P2).value),
             ("up", 0, 1, tq.h0_up(1.0, P2).value),
             ("to_zero", 0, 0, tq.h_to_zero(0, 1.0, P2).value)]
    zs = {}
    for i, (kind, start_exp, target, exact) in enumerate(cases):
        est = estimate_laplace(kind, start_exp, target, 1.0, P2, n, rng.substream(i))
        zs[kind] = abs(est.mean - exact) / est.std_error
    value, quad = stopped_martingale_samples(0, 1.0, P2, n, rng.substream(10))
    for name, x in (("martingale", value), ("xi^2 - t", quad)):
        est = McEstimate.from_samples(x)
        zs[name] = abs(est.mean - 1.0) / est.std_error
    elapsed = time.perf_counter() - start
    ok = all(z < 3 for z in zs.values()) and elapsed < 120
    detail = " ".join(f"{k}={v:.2f}SE" for k, v in zs.items())
    assert report(8, ok, f"{detail} (< 3SE); {elapsed:.1f}s (< 120s)")


def test_criterion_09_floor_splice_invariance(report):
    rng = RngStream(99)
    shallow = simulate_batch(0, 10_000, -6, P2, rng.substream(0)).time
    deep = simulate_batch(0, 10_000, -10, P2, rng.substream(1)).time
    ks = stats.ks_2samp(shallow, deep).statistic
    assert report(9, ks < 0.02, f"KS(floor -6, floor -10)={ks:.4f} (< 0.02)")


def test_criterion_10_brownian_moments(report):
    q = 1 + 1e-4
    gaussian = [1, 0, 1, 0, 3, 0, 15]
    errors = []
    for k, target in enumerate(gaussian):
        value = ts.moment_formula(0.0, k, 1.0, q)
        errors.append(abs(value - target) / target if target else abs(value))
    worst = max(errors)
    assert report(10, worst < 1e-3, f"worst moment error (k <= 6)={worst:.1e} (< 1e-3)")


def test_criterion_11_gumbel_limit(report):
    ks = gumbel_limit_check([1.01], 100_000, RngStream(11))[1.01]
    assert report(11, ks < 0.05, f"KS at q=1.01 with 1e5 samples={ks:.4f} (< 0.05, statistical)")


def test_criterion_12_time_scale_identities(report):
    windows = [(ts.integers(), -4.0, 5.0), (ts.integers(), 0.0, 3.0),
               (ts.tq_scale(2.0), 1.0, 4.0), (ts.tq_scale(2.0), 0.125, 64.0),
               (ts.tq_scale(2.0), -8.0, -0.25)]
    measure_err = 0.0
    for scale, u, v in windows:
        oracle = ts.speed_measure(scale, u, v)
        measure_err = max(measure_err, abs(ts.mu_mass(scale, u, v) - oracle.mass()),
                          abs(ts.mu_first_moment(scale, u, v) - oracle.first_moment()))
    exits = [
        (ts.exit_law(ts.integers(), 0.0, 0.5), (0.5, 0.5, 1.0)),
        (ts.exit_law(ts.real_line(), 0.0, 1.0), (0.5, 0.5, 1.0)),
        (ts.exit_law(ts.tq_scale(2.0), 1.0, 0.4), (2 / 3, 1 / 3, 0.5)),
    ]
    exit_err = max(abs(a - b) for got, want in exits for a, b in zip(got, want))
    scale = ts.tq_scale(2.0)
    gen_err = max(max(abs(ts.generator_apply(scale, lambda y: y, x)),
                      abs(ts.generator_apply(scale, lambda y: y * y, x) - 1))
                  for x in [s * 2.0**n for n in range(-6, 7) for s in (1, -1)])
    ok = measure_err < 1e-12 and exit_err < 1e-12 and gen_err < 1e-12
    assert report(12, ok, f"measure={measure_err:.1e} exit={exit_err:.1e} generator={gen_err:.1e} (< 1e-12)")


def test_every_criterion_has_a_test():
    names = [name for name in globals() if name.startswith("test_criterion_")]
    assert sorted(int(n.split("_")[2]) for n in names) == list(range(1, 13))
