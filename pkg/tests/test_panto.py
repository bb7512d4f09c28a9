import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pitlab import hp
from pitlab.coeffs import make_exponential, make_psi_phase, make_quadratic_phase, make_rational_phase, make_theorem5
from pitlab.evaluate import eval_f
from pitlab.gamma import gamma, loggamma
from pitlab.panto import (ContourSpec, PantoError, cyclotomic, eval_trig_sum, funk2_residual, hadamard_compose,
                          hadamard_estimate_check, hadamard_multipliers, hadamard_series, mellin_barnes_eval,
                          pantograph_residual, reduce_mod_cyclotomic, trig_sum_reduction)


# -------------------------------------------------------------- pantograph

def test_pantograph_at_origin():
    chk = pantograph_residual(make_quadratic_phase("sqrt2"), 0.0)
    assert chk.ok and chk.residual <= 1e-18


@pytest.mark.parametrize("x", [0.5, 3.0, 7.25])
def test_pantograph_parity_family_real_axis(x):
    chk = pantograph_residual(make_quadratic_phase("1/2"), x)
    assert chk.ok and chk.residual <= 1e-15


def test_pantograph_sqrt2_high_precision():
    z = 7 * cmath.exp(1j * math.pi / 5)
    chk = pantograph_residual(make_quadratic_phase("sqrt2"), z, precision=160, eps=1e-32)
    assert chk.ok
    assert chk.residual <= 1e-25


@given(st.floats(0.0, 2 * math.pi), st.floats(0.1, 20.0), st.sampled_from(["sqrt2", "golden", "1/3", "0.3"]))
@settings(max_examples=30, deadline=None)
def test_pantograph_holds_within_bounds(theta, r, alpha):
    assert pantograph_residual(make_quadratic_phase(alpha), cmath.rect(r, theta)).ok


def test_pantograph_rejects_other_families():
    with pytest.raises(PantoError):
        pantograph_residual(make_theorem5(0.5, "sqrt2"), 1.0)


# -------------------------------------------------------------- trigonometric sums

def test_cyclotomic_small():
    assert cyclotomic(1) == [-1, 1]
    assert cyclotomic(4) == [1, 0, 1]
    assert cyclotomic(6) == [1, -1, 1]


def test_trigsum_half():
    ts = trig_sum_reduction(1, 2)
    assert [(round(c.real, 15), round(b.real, 15)) for c, b in ts.pairs()] == [(1.0, -1.0)]


def test_trigsum_quarter_matches_two_point_dft():
    ts = trig_sum_reduction(1, 4)
    pairs = sorted(ts.pairs(), key=lambda cb: -cb[1].real)
    # 2-point DFT of (1, i): ((1 + i)/2, (1 - i)/2) at exponents (+1, -1)
    for (c, b), (c0, b0) in zip(pairs, [((1 + 1j) / 2, 1), ((1 - 1j) / 2, -1)]):
        assert abs(c - c0) < 1e-30
        assert abs(b - b0) < 1e-30


def test_trigsum_one():
    ts = trig_sum_reduction(1, 1)
    assert len(ts.terms) == 1
    c, b = ts.pairs()[0]
    assert abs(c - 1) < 1e-30 and abs(b - 1) < 1e-30


@given(st.integers(1, 24), st.integers(-30, 30))
@settings(max_examples=40, deadline=None)
def test_trigsum_exponents_are_roots_of_unity(q, p):
    if math.gcd(p, q) != 1:
        return
    ts = trig_sum_reduction(p, q)
    for _, b in ts.pairs():
        assert abs(b ** ts.Q - 1) < 1e-12


@given(st.integers(1, 16), st.integers(-20, 20), st.integers(0, 40))
@settings(max_examples=40, deadline=None)
def test_trigsum_inverts_to_exact_phases(q, p, j):
    # the inverse DFT of the exact coefficients returns Q e^{2 pi i j^2 p/q}
    if math.gcd(p, q) != 1:
        return
    ts = trig_sum_reduction(p, q)
    L = ts.L
    vec = [0] * L
    vec[((j * j * p) % q) * (L // q)] = ts.Q
    assert ts.exact_coefficient(j) == reduce_mod_cyclotomic(vec, L)


def test_eval_trig_sum_examples():
    assert abs(hp.to_complex(eval_trig_sum(trig_sum_reduction(1, 2), 3.0)) - math.exp(-3)) < 1e-16
    ts = trig_sum_reduction(1, 4)
    want = ((1 + 1j) * math.e + (1 - 1j) / math.e) / 2
    got = eval_trig_sum(ts, 1.0)
    ser = eval_f(make_rational_phase(1, 4), 1.0)
    assert abs(hp.to_complex(got) - want) < 1e-15
    assert abs(hp.to_complex(got) - ser.complex) <= ser.total_bound + hp.radius(got) + 1e-30
    ts.terms = []
    assert hp.to_complex(eval_trig_sum(ts, 2.0 + 1j)) == 0


@pytest.mark.parametrize("p, q", [(1, 3), (2, 5), (3, 8), (5, 12)])
def test_trig_sum_matches_series(p, q):
    ts = trig_sum_reduction(p, q)
    seq = make_rational_phase(p, q)
    for z in (1.0, 4 - 3j, -6j, 8 * cmath.exp(0.3j)):
        tv = eval_trig_sum(ts, z, 200)
        sv = eval_f(seq, z)
        with hp.workprec(200):
            diff = hp.abs_mid(tv - sv.value)
        assert diff <= sv.total_bound + hp.radius(tv)


def test_trigsum_rejects_non_coprime():
    with pytest.raises(PantoError):
        trig_sum_reduction(2, 4)


# -------------------------------------------------------------- Hadamard composition

def test_hadamard_multipliers_are_central_binomials():
    bs = hadamard_multipliers(0.5, 10)
    for n, b in enumerate(bs):
        assert float(b.mid()) == pytest.approx(math.comb(2 * n, n) / 4 ** n, rel=1e-15)


def test_hadamard_identity_element():
    seq = make_quadratic_phase("sqrt2")
    z = 3 - 2j
    assert abs(hadamard_series(seq, 1.0, z).complex - eval_f(seq, z).complex) < 1e-13
    assert abs(hadamard_compose(seq, 1.0, z).complex - eval_f(seq, z).complex) < 1e-11


def test_hadamard_exponential_half_against_binomial_series():
    mp.mp.dps = 40
    ref = mp.fsum(mp.binomial(2 * n, n) / mp.mpf(4) ** n / mp.factorial(n) for n in range(40))
    assert abs(hadamard_series(make_exponential(), 0.5, 1.0).complex - float(ref)) < 1e-15
    assert abs(hadamard_compose(make_exponential(), 0.5, 1.0).complex - float(ref)) < 1e-12


def test_hadamard_contour_convergence():
    seq = make_quadratic_phase("golden")
    z = 2 + 1j
    a = hadamard_compose(seq, 0.5, z, ContourSpec(0j, 1.5 * abs(z), 64))
    b = hadamard_compose(seq, 0.5, z, ContourSpec(0j, 1.5 * abs(z), 128))
    assert abs(a.complex - b.complex) < 1e-12


def test_hadamard_rejects_bad_contour():
    with pytest.raises(PantoError):
        hadamard_compose(make_exponential(), 0.5, 1.0, ContourSpec(0j, 0.9))
    with pytest.raises(ValueError):
        ContourSpec(0j, 2.0, 100)


def test_funk2_at_origin():
    chk = funk2_residual(make_theorem5(0.5, "sqrt2"), 0.0)
    assert chk.ok and chk.residual_series == 0


def test_funk2_sqrt2():
    chk = funk2_residual(make_theorem5(0.5, "sqrt2"), 2 * cmath.exp(1j * math.pi / 7))
    assert chk.ok
    assert chk.residual_series <= 1e-15
    assert chk.residual_contour <= 1e-12
    assert chk.composition_gap <= 1e-12


def test_funk2_needs_theorem5():
    with pytest.raises(PantoError):
        funk2_residual(make_exponential(), 1.0)


def test_estimate_identity_element():
    rep = hadamard_estimate_check(make_quadratic_phase("sqrt2"), 1.0, 2.0, 0.5)
    assert rep.K >= 1 and rep.passed


@pytest.mark.parametrize("z, r", [(3.0, 0.5), (10 * cmath.exp(1j * math.pi / 3), 0.25)])
def test_estimate_examples(z, r):
    assert hadamard_estimate_check(make_quadratic_phase("sqrt2"), 0.5, z, r).passed


# -------------------------------------------------------------- Mellin-Barnes

def test_loggamma_against_scipy():
    from scipy import special
    rng = np.random.default_rng(3)
    w = rng.uniform(-12, 12, 400) + 1j * rng.uniform(-40, 40, 400)
    assert np.allclose(loggamma(w).real, special.loggamma(w).real, rtol=1e-13, atol=1e-12)
    small = w[np.abs(w.imag) < 5]
    assert np.allclose(gamma(small), special.gamma(small), rtol=1e-11)



def test_mellin_barnes_zero_psi():
    assert abs(mellin_barnes_eval(make_psi_phase([0.0], [1.0]), 1.0) - math.exp(-1)) < 1e-8


def test_mellin_barnes_single_exponential():
    seq = make_psi_phase([1.0], [1.0])
    assert abs(mellin_barnes_eval(seq, 2.0) - eval_f(seq, -2.0).complex) < 1e-6


def test_mellin_barnes_two_exponentials():
    seq = make_psi_phase([2.0, -1.0], [1.0, 2.0])
    z = 5 * cmath.exp(1j * math.pi / 4)
    assert abs(mellin_barnes_eval(seq, z, A=1.0) - eval_f(seq, -z).complex) < 1e-5


@pytest.mark.parametrize("kw", [dict(tol=1e-12), dict(eps0=0.01), dict(A=-1.0)])
def test_mellin_barnes_rejections(kw):
    with pytest.raises(PantoError):
        mellin_barnes_eval(make_psi_phase([1.0], [1.0]), 2.0, **kw)


def test_mellin_barnes_rejects_wide_angle():
    with pytest.raises(PantoError):
        mellin_barnes_eval(make_psi_phase([1.0], [1.0]), 1j)
