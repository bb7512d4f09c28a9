import cmath
import math
from fractions import Fraction

import mpmath as mp
import pytest
from flint import acb
from hypothesis import given, settings, strategies as st

from pitlab import hp
from pitlab.coeffs import (CoefficientSequence, SequenceError, coefficient, combine_Q, fit_order_constants,
                           log_majorant_sum, majorant_tail, make_exponential, make_explicit, make_hardy,
                           make_psi_phase, make_quadratic_phase, make_rational_phase, make_theorem5,
                           parse_alpha, parseval_m2)


def cval(seq, n):
    return hp.to_complex(coefficient(seq, n))


def close(a, b, tol=1e-15):
    return abs(complex(a) - complex(b)) <= tol * max(1.0, abs(complex(b)))


# -------------------------------------------------------------- alpha parsing

@pytest.mark.parametrize("text, expected", [
    ("sqrt2", "sqrt2"), ("golden", "golden"), ("1/3", "1/3"), ("2/6", "1/3"), ("0.25", "1/4"), (0.5, "1/2"),
])
def test_parse_alpha(text, expected):
    assert parse_alpha(text) == expected


@pytest.mark.parametrize("bad", ["nan", "inf", "x/2", "1/0", "bogus"])
def test_parse_alpha_rejects(bad):
    with pytest.raises(SequenceError):
        parse_alpha(bad)


# -------------------------------------------------------------- quadratic

def test_quadratic_first_coefficient_is_one():
    assert cval(make_quadratic_phase("sqrt2"), 0) == 1


def test_half_as_quadratic_gives_parity():
    assert close(cval(make_quadratic_phase("0.5"), 3), -1 / 6)


def test_sqrt2_n5_against_high_precision_reduction():
    mp.mp.prec = 200
    frac = mp.frac(25 * mp.sqrt(2))
    expected = complex(mp.expjpi(2 * frac) / 120)
    assert close(cval(make_quadratic_phase("sqrt2"), 5), expected, 1e-15)


def test_large_index_phase_keeps_precision():
    # n^2 alpha ~ 1.4e12: the reduction must not lose the fractional part
    seq = make_quadratic_phase("sqrt2", precision=128)
    n = 10**6
    mp.mp.prec = 300
    expected = mp.frac(mp.mpf(n) ** 2 * mp.sqrt(2))
    with hp.workprec(128):
        got = seq.phase.reduced_turns(n)
        assert abs(float(got.mid()) - float(expected)) < 1e-25


def test_quadratic_rejects_low_precision():
    with pytest.raises(SequenceError):
        make_quadratic_phase("sqrt2", precision=32)


# -------------------------------------------------------------- rational

def test_rational_half():
    seq = make_rational_phase(1, 2)
    assert seq.period == 2
    assert [round((cval(seq, n) * math.factorial(n)).real) for n in range(6)] == [1, -1, 1, -1, 1, -1]
    assert close(cval(seq, 7), -1 / 5040)


def test_rational_quarter_enumeration():
    seq = make_rational_phase(1, 4)
    assert seq.period == 2
    got = [cval(seq, n) * math.factorial(n) for n in range(6)]
    for n, g in enumerate(got):
        assert close(g, 1 if n % 2 == 0 else 1j)


def test_rational_one():
    seq = make_rational_phase(1, 1)
    assert seq.period == 1
    assert all(close(cval(seq, n) * math.factorial(n), 1) for n in range(8))


@given(st.integers(1, 40), st.integers(-40, 40))
@settings(max_examples=60, deadline=None)
def test_rational_period_is_minimal(q, p):
    if math.gcd(p, q) != 1:
        return
    seq = make_rational_phase(p, q)
    T = seq.period
    res = [(n * n * p) % q for n in range(3 * q)]
    assert all(res[n] == res[n + T] for n in range(2 * q))
    assert all(any(res[n] != res[n + d] for n in range(2 * q)) for d in range(1, T))


# -------------------------------------------------------------- psi, hardy, theorem5

def test_psi_zero_is_exponential():
    seq = make_psi_phase([0.0], [1.0])
    assert all(close(cval(seq, n) * math.factorial(n), 1) for n in range(6))


def test_psi_examples():
    seq = make_psi_phase([1.0], [1.0])
    assert close(cval(seq, 0), cmath.exp(1j))
    assert close(cval(seq, 1), cmath.exp(1j / math.e))
    seq2 = make_psi_phase([2.0, -1.0], [1.0, 2.0])
    assert close(cval(seq2, 2) * 2, cmath.exp(1j * (2 * math.exp(-2) - math.exp(-4))))


def test_psi_rejects_nonpositive_rate():
    with pytest.raises(SequenceError):
        make_psi_phase([1.0], [0.0])


def test_hardy_examples():
    assert close(cval(make_hardy(0j, 1.0), 4), 1 / 24)
    assert cval(make_hardy(1j, 1.0), 0) == 0
    assert close(cval(make_hardy(1j, 1.0), 1), cmath.exp(1j * math.log(2)))
    assert close(cval(make_hardy(1j, 0.5), 3), cmath.exp(1j * math.log(3.5)) / 6)


def test_hardy_rejects_real_part():
    with pytest.raises(SequenceError):
        make_hardy(0.5 + 1j, 1.0)


def test_theorem5_recurrence():
    seq = make_theorem5(0.5, "sqrt2")
    mods = [float(seq.modulus.value(n).mid()) for n in range(4)]
    assert mods == [1.0, 1.0, 0.5, 3 / 16]
    assert seq.rho == 2.0
    assert close(cval(make_theorem5(0.5, "0"), 2), 0.5)


@pytest.mark.parametrize("s", [0.0, 1.0, -0.2, 1.5])
def test_theorem5_rejects_s(s):
    with pytest.raises(SequenceError):
        make_theorem5(s, "sqrt2")


def test_theorem5_order_fit():
    fit = fit_order_constants(make_theorem5(0.5, "sqrt2"), 1000, 100_000)
    assert abs(fit.ratio_at_max - 0.5) <= 0.025
    assert fit.residual_rel <= 0.02
    # c = 1/2 - log Gamma(1/2) analytically, so sigma = 1/(2 pi)
    assert abs(fit.c - (0.5 - math.lgamma(0.5))) < 1e-3
    assert abs(fit.sigma - 1 / (2 * math.pi)) < 1e-3


# -------------------------------------------------------------- combine, explicit

def test_combine_identity_and_reflection():
    ez = make_exponential()
    same = combine_Q(ez, ez, 0.0, 0.0)
    flip = combine_Q(ez, ez, 0.0, math.pi)
    for n in range(8):
        assert close(cval(same, n) * math.factorial(n), 1)
        assert close(cval(flip, n) * math.factorial(n), (-1) ** n, 1e-14)


def test_combine_requires_factorial():
    with pytest.raises(SequenceError):
        combine_Q(make_theorem5(0.5, "sqrt2"), make_exponential(), 0.0, 0.0)


def test_explicit_periodic_extension():
    seq = make_explicit([0.0, math.pi / 2])
    assert close(cval(seq, 3) * 6, 1j, 1e-14)


# -------------------------------------------------------------- serialisation

@pytest.mark.parametrize("seq", [
    make_quadratic_phase("sqrt2"), make_rational_phase(3, 7), make_psi_phase([2.0, -1.0], [1.0, 2.0]),
    make_hardy(1j, 0.5), make_theorem5(0.5, "golden"), make_explicit([0.1, 0.2, 0.3]),
    combine_Q(make_quadratic_phase("sqrt2"), make_hardy(1j, 1.0), 0.3, 1.1),
])
def test_json_round_trip(seq):
    back = CoefficientSequence.from_json(seq.to_json())
    assert back.to_json() == seq.to_json()
    for n in (0, 1, 5, 17):
        assert close(cval(back, n), cval(seq, n))


# -------------------------------------------------------------- majorants

@given(st.floats(0.5, 40.0), st.integers(0, 3))
@settings(max_examples=40, deadline=None)
def test_factorial_tail_bounds_direct_sum(r, k):
    seq = make_exponential()
    N = int(2 * r) + 5
    mp.mp.dps = 30
    direct = mp.nsum(lambda n: mp.mpf(r) ** (n - k) / mp.factorial(n - k), [N + 1, mp.inf])
    assert majorant_tail(seq, N, r, k) >= float(direct) * (1 - 1e-12)


def test_theorem5_tail_bounds_direct_sum():
    seq = make_theorem5(0.5, "sqrt2")
    for N in (20, 40, 80):
        mp.mp.dps = 30
        direct = sum(mp.mpf(seq.modulus.value(n).mid().str(25, radius=False)) * mp.mpf(5) ** n
                     for n in range(N + 1, N + 300))
        assert majorant_tail(seq, N, 5.0) >= float(direct)


def test_log_majorant_sum_exponential():
    assert log_majorant_sum(make_exponential(), 7.0) == pytest.approx(7.0)


def test_parseval_exponential_is_bessel():
    mp.mp.dps = 30
    expected = float(mp.sqrt(mp.besseli(0, 2)))
    got = parseval_m2(make_exponential(), 1.0)
    assert abs(float(got.mid()) - expected) < 1e-15
    assert float(got.rad()) < 1e-15
    assert abs(expected - 1.50983) < 1e-5


def test_parseval_phase_independent_and_small_r():
    a = parseval_m2(make_exponential(), 3.0)
    b = parseval_m2(make_quadratic_phase("sqrt2"), 3.0)
    assert abs(float(a.mid()) - float(b.mid())) < 1e-12
    assert float(parseval_m2(make_quadratic_phase("sqrt2"), 1e-9).mid()) == pytest.approx(1.0)
