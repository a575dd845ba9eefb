import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from qbrownian.contfrac import RecurrenceSpec, classical_approximant
from qbrownian.errors import DomainError, NonConvergence
from qbrownian.tq import (
    TqParams,
    TqState,
    entrance_law_lt,
    h0_down,
    h0_down_alt,
    h0_down_fraction,
    h0_up,
    h0_up_alt,
    h0_up_fraction,
    h_down,
    h_nm,
    h_to_zero,
    hitting_density_kernel,
    psi_exponent,
    psi_exponent_sum,
    q_poisson_pmf,
    q_poisson_table,
    resolvent_full,
    resolvent_killed,
    resolvent_row_mass,
    speed_atom,
    tau_zero_density,
)

# 40-digit oracles (backward recursion of the rate recurrences and direct products)
P2 = TqParams(2.0)
H0_DOWN = 0.5390956629898770158530160994577503
H0_UP = 0.3200498010876382155189803149708712690
PSI_1 = 1.783805999854899103772220730905693834
TO_ZERO_0 = 0.2947202856337351884937429869374691849

GRID_ORACLES = [
    # q, lam, down, up
    (1.5, 0.1, 0.79011447271905146700, 0.60969592963276202597),
    (2.0, 1.0, H0_DOWN, H0_UP),
    (4.0, 10.0, 0.26709834483922922505, 0.070736524991598904652),
]


def rel(a, b):
    return abs(a - b) / abs(b)


def test_params_validation_and_constants():
    assert P2.c_q == 1.5
    assert P2.base == 0.25 and P2.half_base == 0.5
    assert P2.death_rate(1) == 0.5 and P2.birth_rate(1) == 0.25
    for bad in (1.0, 0.5, math.inf, math.nan):
        with pytest.raises(DomainError):
            TqParams(bad)


def test_state_values_and_mirror():
    assert TqState.zero().value(P2) == 0.0
    assert TqState.pos(3).value(P2) == 8.0
    assert TqState.neg(-1).value(P2) == -0.5
    assert TqState.pos(2).mirror() == TqState.neg(2)
    assert TqState.zero().mirror() == TqState.zero()
    with pytest.raises(DomainError):
        TqState("zero", 2)
    with pytest.raises(DomainError):
        TqState("sideways", 0)


@pytest.mark.parametrize("q,lam,down,up", GRID_ORACLES)
def test_hitting_transforms_match_frozen_oracles(q, lam, down, up):
    p = TqParams(q)
    for form in ("phi01", "phi11"):
        assert rel(h0_down(lam, p, form).value, down) < 1e-12
    assert rel(h0_down_alt(lam, p).value, down) < 1e-12
    assert rel(h0_down_fraction(lam, p).value, down) < 1e-11
    assert rel(h0_up(lam, p).value, up) < 1e-12
    assert rel(h0_up_alt(lam, p).value, up) < 1e-9
    assert rel(h0_up_fraction(lam, p).value, up) < 1e-11


def test_method_tags():
    assert h0_down(1.0, P2, "phi01").method == "phi01_ratio"
    assert h0_down(1.0, P2).method == "phi11_ratio"
    frac = h0_down_fraction(1.0, P2)
    assert frac.method == "continued_fraction" and frac.error_estimate is not None


def test_down_fraction_at_fixed_depth():
    rec = RecurrenceSpec(a=lambda k: 2.0, b=lambda k: 3.0 + 4.0**k)
    assert abs(-classical_approximant(rec, 0, 60) - h0_down(1.0, P2).value) < 1e-10


def test_small_lambda_limits():
    assert abs(h0_down(1e-8, P2).value - 1) < 1e-4
    assert abs(h0_up(1e-8, P2).value - 0.5) < 1e-4


def test_hitting_zero_limit_is_square_root_slow():
    # tau_0 has infinite mean, so 1 - E[exp(-lam tau_0)] decays like sqrt(lam), not lam
    gaps = [1 - h_to_zero(0, lam, P2).value for lam in (1e-8, 1e-10, 1e-12)]
    assert gaps[0] < 1.2e-4
    for a, b in zip(gaps, gaps[1:]):
        assert abs(a / b - 10) < 0.01


def test_lambda_domain():
    for bad in (0.0, -1.0, math.nan, math.inf, 1j):
        with pytest.raises(DomainError):
            h0_down(bad, P2)
    with pytest.raises(DomainError):
        h0_down(1.0, P2, form="series")


@pytest.mark.parametrize("q", [1.5, 2.0, 4.0])
def test_transforms_decrease_in_lambda(q):
    p = TqParams(q)
    lams = np.geomspace(1e-3, 1e3, 25)
    for fn in (lambda l: h0_down(l, p).value, lambda l: h0_up(l, p).value,
               lambda l: h_to_zero(0, l, p).value):
        vals = [fn(l) for l in lams]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert all(0 < v < 1 for v in vals)


def test_h_nm_frozen_values():
    assert rel(h_nm(2, 0, 1.0, P2).value, 0.03058313926207936274) < 1e-12
    assert rel(h_nm(0, 2, 1.0, P2).value, 0.05032308386419146340) < 1e-12
    assert rel(h_nm(1, -1, 0.7, P2).value, 0.2112229867756659881) < 1e-12
    assert h_nm(3, 3, 1.0, P2).value == 1.0


def test_h_nm_telescoping_and_forms():
    lam = 1.0
    lhs = h_nm(2, 0, lam, P2).value
    assert abs(lhs - h0_down(16 * lam, P2).value * h0_down(4 * lam, P2).value) < 1e-10
    for n, m in ((1, -1), (3, -2), (0, -5)):
        assert rel(h_nm(n, m, 0.7, P2, "phi01").value, h_nm(n, m, 0.7, P2, "phi11").value) < 1e-10


def test_h_down_is_rescaled_h0_down():
    assert h_down(2, 1.0, P2).value == h0_down(16.0, P2).value
    assert h_down(0, 1.0, P2).value == h0_down(1.0, P2).value


@settings(max_examples=30, deadline=None)
@given(st.integers(-4, 4), st.integers(-4, 4), st.floats(0.05, 20.0), st.sampled_from([1.5, 2.0, 3.0]))
def test_exponent_shift_identity(n, m, lam, q):
    p = TqParams(q)
    lhs = h_nm(n + 1, m + 1, lam, p).value
    rhs = h_nm(n, m, q * q * lam, p).value
    assert rel(lhs, rhs) < 1e-12


def test_h_to_zero_frozen_values():
    assert rel(h_to_zero(0, 1.0, P2).value, TO_ZERO_0) < 1e-12
    assert rel(h_to_zero(3, 1.0, P2).value, 0.0002690898657826582009) < 1e-11
    assert rel(h_to_zero(-2, 1.0, P2).value, 0.7410173698098899183) < 1e-12
    assert rel(h_to_zero(0, 0.5, P2).value, 0.4237684506794791722) < 1e-12
    assert rel(h_to_zero(0, 2.0, P2).value, 0.1759385698031040953) < 1e-12


@pytest.mark.parametrize("n", [-3, 0, 2])
def test_h_to_zero_strong_markov(n):
    lhs = h_to_zero(n, 1.0, P2).value
    rhs = h_nm(n, n - 6, 1.0, P2).value * h_to_zero(n - 6, 1.0, P2).value
    assert rel(lhs, rhs) < 1e-9


def test_q_poisson_weights():
    total = sum(q_poisson_pmf(k, P2) for k in range(80))
    assert abs(total - 1) < 1e-14
    assert q_poisson_pmf(-1, P2) == 0.0
    table = q_poisson_table(P2)
    assert table[-1] == 1.0 and np.all(np.diff(table) >= 0)
    assert not table.flags.writeable
    assert abs(table[0] - q_poisson_pmf(0, P2)) < 1e-14


def test_q_poisson_table_near_one_covers_the_mode():
    table = q_poisson_table(TqParams(1.01))
    assert len(table) > 100 and table[0] < 1e-10


def test_density_kernel_is_a_density():
    f = lambda t: hitting_density_kernel(t, P2)  # noqa: E731
    total = integrate.quad(f, 0, math.inf, limit=200, epsabs=1e-13)[0]
    assert abs(total - 1) < 1e-8
    # mean of sum_i q^{-2i} T_i is 1 / (1 - q^-2)
    mean = integrate.quad(lambda t: t * f(t), 0, math.inf, limit=200)[0]
    assert abs(mean - 4 / 3) < 1e-8


def test_density_small_time_clamp():
    assert hitting_density_kernel(1e-4, P2) == 0.0
    with pytest.raises(NonConvergence):
        hitting_density_kernel(1e-4, P2, strict=True)
    with pytest.raises(DomainError):
        tau_zero_density(0, 0.0, P2)


def test_tau_zero_density_normalisation_and_transform():
    f = lambda t: tau_zero_density(0, t, P2)  # noqa: E731
    assert abs(integrate.quad(f, 0, math.inf, limit=200, epsabs=1e-12)[0] - 1) < 1e-6
    for lam in (0.5, 1.0, 2.0):
        lt = integrate.quad(lambda t: math.exp(-lam * t) * f(t), 0, math.inf, limit=200, epsabs=1e-12)[0]
        assert abs(lt - h_to_zero(0, lam, P2).value) < 1e-6


def test_tau_zero_density_scaling():
    # tau_0 from q^{n+1} is q^2 times tau_0 from q^n in law
    for t in (0.3, 1.0, 4.0):
        assert rel(tau_zero_density(1, 4 * t, P2), tau_zero_density(0, t, P2) / 4) < 1e-10


def test_psi_frozen_values():
    assert rel(psi_exponent(1.0, P2), PSI_1) < 1e-13
    assert rel(psi_exponent(3.0, P2), 3.089648581183559276) < 1e-13
    assert rel(psi_exponent(1 / 3, P2), 1.029882860394519759) < 1e-13
    assert rel(psi_exponent(0.5, P2), 1.261347926951149797) < 1e-13
    assert rel(psi_exponent(2.0, P2), 2.522695853902299594) < 1e-13


def test_psi_scaling_and_inversion():
    assert rel(psi_exponent(0.25, P2), psi_exponent(1.0, P2) / 2) < 1e-12
    assert rel(psi_exponent(1 / 3, P2), psi_exponent(3.0, P2) / 3) < 1e-12


def test_psi_positive_increasing_and_vanishing():
    lams = np.geomspace(1e-8, 1e4, 40)
    vals = [psi_exponent(l, P2) for l in lams]
    assert all(v > 0 for v in vals)
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert vals[0] < 1e-3


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_entrance_sum_matches_product(lam):
    assert rel(psi_exponent_sum(lam, P2), psi_exponent(lam, P2)) < 1e-8


def test_entrance_law_structure():
    assert speed_atom(0, P2) == 0.75
    lhs = entrance_law_lt(0, 1.0, P2)
    assert abs(lhs - 0.75 * h_to_zero(0, 1.0, P2).value) < 1e-12
    assert entrance_law_lt(2, 1.0, P2, sign=-1) == entrance_law_lt(2, 1.0, P2, sign=1)
    with pytest.raises(DomainError):
        entrance_law_lt(0, 1.0, P2, sign=0)


def test_killed_resolvent_identities():
    window = range(-2, 3)
    for m in window:
        for n in window:
            lhs = speed_atom(m, P2) * resolvent_killed(m, n, 1.0, P2)
            rhs = speed_atom(n, P2) * resolvent_killed(n, m, 1.0, P2)
            assert abs(lhs - rhs) < 1e-10
    mass = sum(resolvent_killed(0, n, 1.0, P2) for n in range(-60, 61))
    assert abs(mass - (1 - h_to_zero(0, 1.0, P2).value)) < 1e-6
    assert abs(1e6 * resolvent_killed(0, 0, 1e6, P2) - 1) < 1e-4


def test_full_resolvent_identities():
    states = [TqState.zero()] + [s(n) for n in range(-2, 3) for s in (TqState.pos, TqState.neg)]
    for x in states[1:]:
        assert resolvent_full(x, TqState.zero(), 1.0, P2) == 0.0
        for y in states[1:]:
            lhs = speed_atom(x.exponent, P2) * resolvent_full(x, y, 1.0, P2)
            rhs = speed_atom(y.exponent, P2) * resolvent_full(y, x, 1.0, P2)
            assert abs(lhs - rhs) < 1e-9
            assert resolvent_full(x, y, 1.0, P2) == resolvent_full(x.mirror(), y.mirror(), 1.0, P2)


def test_full_resolvent_from_zero_is_entrance_over_psi():
    y = TqState.pos(1)
    direct = resolvent_full(TqState.zero(), y, 1.0, P2)
    assert rel(direct, entrance_law_lt(1, 1.0, P2) / psi_exponent(1.0, P2)) < 1e-12
    # from x the process either stays on its side or passes through zero
    x = TqState.pos(0)
    assembled = resolvent_killed(0, 1, 1.0, P2) + h_to_zero(0, 1.0, P2).value * direct
    assert rel(resolvent_full(x, y, 1.0, P2), assembled) < 1e-9
    opposite = resolvent_full(x, y.mirror(), 1.0, P2)
    assert rel(opposite, h_to_zero(0, 1.0, P2).value * direct) < 1e-12


def test_full_resolvent_mass():
    for x in (TqState.pos(0), TqState.neg(2), TqState.pos(-3)):
        assert abs(resolvent_row_mass(x, 1.0, P2) - 1) < 1e-5
