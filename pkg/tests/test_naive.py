from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from certtheta import ball as B
from certtheta.errors import DomainError, PrecisionError
from certtheta.naive import (INFINITY, Characteristic, PeriodPoint, all_characteristics,
                             lambda_det_trace, tail_bound_g1, tail_bound_g2, theta_naive,
                             theta_naive_relative, theta_squares_naive)

from conftest import agree_bits, contains_value, exact

C00 = Characteristic((0,), (0,))
C01 = Characteristic((0,), (1,))
C10 = Characteristic((1,), (0,))
C11 = Characteristic((1,), (1,))
JT = {C00: 3, C01: 4, C10: 2, C11: 1}


def mp_theta(ch: Characteristic, z, tau):
    """theta_{a,b}(z, tau) up to sign, from mpmath's Jacobi theta functions."""
    q = mpmath.exp(mpmath.pi * 1j * tau)
    return mpmath.jtheta(JT[ch], mpmath.pi * z, q)


def mp_of(x: B.ComplexBall):
    fr, fi = x.mid_re.to_fraction(), x.mid_im.to_fraction()
    return mpmath.mpc(mpmath.mpf(fr.numerator) / fr.denominator, mpmath.mpf(fi.numerator) / fi.denominator)


# ---------------------------------------------------------------------------
# examples
# ---------------------------------------------------------------------------

def test_theta00_at_i():
    p = PeriodPoint(1, (exact(0, 1),))
    v = theta_naive(C00, p, 64)
    assert v.rad <= B._pow2(-64)
    with mpmath.workprec(200):
        assert contains_value(v, mpmath.mpf("1.08643481121330801457531612151022345707020570724521"), 200)


def test_odd_constant_is_zero():
    p = PeriodPoint(1, (exact(Fraction(1, 4), Fraction(5, 4)),))
    v = theta_naive(C11, p, 100)
    assert v.is_exact and v.contains(exact(0))


def test_genus2_diagonal_splits():
    p2 = PeriodPoint(2, (exact(0, 4), exact(0), exact(0, 4)))
    p1 = PeriodPoint(1, (exact(0, 4),))
    v2 = theta_naive(Characteristic((0, 0), (0, 0)), p2, 128)
    v1 = theta_naive(C00, p1, 140)
    assert v2.overlaps(B.sqr(v1, 200))
    assert agree_bits(v2, B.sqr(v1, 200)) >= 126


def test_tail_g1_examples():
    b = tail_bound_g1(1, 0, 2)
    closed = 2 * math.exp(-4 * math.pi) / (1 - math.exp(-5 * math.pi))
    assert float(b) <= closed * (1 + 1e-12)
    assert float(b) <= 6.98e-6
    # must dominate the true tail sum_{|n| >= 2} exp(-pi n^2)
    true_tail = 2 * sum(math.exp(-math.pi * n * n) for n in range(2, 40))
    assert float(b) >= true_tail


def test_tail_g1_small_R_consistent_with_half_period_bound():
    y = Fraction(433, 1000)  # a lower bound for sqrt(3)/4
    b = tail_bound_g1(B.Dyadic.from_fraction(Fraction(int(y * 1024), 1024)), 0, 1)
    assert float(b) < 0.53


def test_tail_g1_decreases_to_zero():
    vals = [tail_bound_g1(1, 0, R).to_fraction() for R in (2, 4, 8, 16, 32)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < Fraction(1, 2 ** 4000)


def test_tail_g1_divergent_sentinel():
    assert tail_bound_g1(1, 100, 2) == INFINITY


def test_tail_g2_dominates_dropped_terms():
    for R in range(2, 7):
        b = float(tail_bound_g2((1, 0, 1), (0, 0), R))
        dropped = 0.0
        for m1 in range(-30, 31):
            for m2 in range(-30, 31):
                if max(abs(m1), abs(m2)) >= R:
                    dropped += math.exp(-math.pi * (m1 * m1 + m2 * m2))
        assert b >= dropped


def test_tail_g2_vanishes():
    assert tail_bound_g2((1, 0, 1), (0, 0), 200).to_fraction() < Fraction(1, 2 ** 1000)


def test_lambda_min_det_trace():
    lam = float(lambda_det_trace(1, Fraction(1, 2), 2))
    assert lam >= 0.583
    true_min = (3 - math.sqrt(1 + 4 * 0.25)) / 2
    assert lam <= true_min


def test_precision_error_reports_achievable():
    t = B.ball("0.1+1.3i", 80)
    p = PeriodPoint(1, (t,))
    with pytest.raises(PrecisionError) as exc:
        theta_naive(C00, p, 200)
    assert exc.value.achievable is not None and 60 <= exc.value.achievable <= 90


def test_genus_mismatch():
    with pytest.raises(DomainError):
        theta_naive(C00, PeriodPoint(2, (exact(0, 1), exact(0), exact(0, 1))), 32)


def test_period_point_validation():
    with pytest.raises(DomainError):
        PeriodPoint(1, (exact(0, -1),))
    with pytest.raises(DomainError):
        PeriodPoint(2, (exact(0, 1), exact(0, 2), exact(0, 1)))


def test_relative_mode():
    p = PeriodPoint(1, (exact(0, 40),))
    v = theta_naive_relative(C10, p, 32)
    assert not v.contains_zero()
    assert v.rad <= B._DN.mul(v.abs_lower(), B._pow2(-32))


# ---------------------------------------------------------------------------
# oracle and identities
# ---------------------------------------------------------------------------

fr = st.fractions
tau_re = fr(-1, 1, max_denominator=64)
tau_im = fr(Fraction(1, 2), 3, max_denominator=64)


def dyadic_of(q: Fraction, k: int = 12) -> Fraction:
    return Fraction(round(q * 2 ** k), 2 ** k)


@settings(max_examples=25, deadline=None)
@given(tau_re, tau_im, fr(-1, 1, max_denominator=32), fr(-1, 1, max_denominator=32),
       st.sampled_from([64, 200, 400]))
def test_matches_mpmath(x, y, zx, zy, prec):
    x, y, zx, zy = (dyadic_of(v) for v in (x, y, zx, zy))
    zy = zy * y / 2
    p = PeriodPoint(1, (exact(x, y),), (exact(zx, zy),))
    with mpmath.workprec(prec + 80):
        tau, z = mp_of(p.tau[0]), mp_of(p.z[0])
        for ch in all_characteristics(1):
            v = theta_naive(ch, p, prec)
            assert v.rad <= B._pow2(-prec)
            ref = mp_theta(ch, z, tau)
            assert contains_value(v, ref, prec + 80) or contains_value(v, -ref, prec + 80)


@settings(max_examples=15, deadline=None)
@given(tau_re, tau_im)
def test_self_consistency(x, y):
    p = PeriodPoint(1, (exact(dyadic_of(x), dyadic_of(y)),))
    for ch in (C00, C01, C10):
        hi = theta_naive(ch, p, 256)
        lo = theta_naive(ch, p, 128)
        d = B.sub(hi.midpoint(), lo.midpoint(), 400).abs_upper()
        assert d <= max(hi.rad, lo.rad)


def _sq(p, N=512):
    return theta_squares_naive(p, N)


@settings(max_examples=15, deadline=None)
@given(tau_re, tau_im)
def test_duplication_identity(x, y):
    x, y = dyadic_of(x), dyadic_of(y)
    s1 = _sq(PeriodPoint(1, (exact(x, y),)))
    s2 = _sq(PeriodPoint(1, (exact(2 * x, 2 * y),)))
    res = B.sub(s2[C00], B.add(s1[C00], s1[C01], 600).mul_2exp(-1), 600)
    assert res.contains(exact(0))


@settings(max_examples=15, deadline=None)
@given(tau_re, tau_im)
def test_jacobi_identity(x, y):
    s = _sq(PeriodPoint(1, (exact(dyadic_of(x), dyadic_of(y)),)))
    res = B.sub(B.sub(B.sqr(s[C00], 600), B.sqr(s[C01], 600), 600), B.sqr(s[C10], 600), 600)
    assert res.contains(exact(0))


@settings(max_examples=15, deadline=None)
@given(tau_re, tau_im)
def test_inversion_identity(x, y):
    tau = exact(dyadic_of(x), dyadic_of(y), 700)
    minus_inv = -B.inv(tau, 700)
    s = _sq(PeriodPoint(1, (tau,)))
    s_inv = _sq(PeriodPoint(1, (minus_inv,)), 480)
    rhs = B.mul(B.mul(tau, exact(0, -1), 700), s[C00], 700)
    assert B.sub(s_inv[C00], rhs, 700).contains(exact(0))


@settings(max_examples=15, deadline=None)
@given(fr(-1, 1), fr(-1, 1), tau_re, tau_im)
def test_evenness_in_z(zx, zy, x, y):
    p = PeriodPoint(1, (exact(dyadic_of(x), dyadic_of(y)),), (exact(dyadic_of(zx), dyadic_of(zy)),))
    q = PeriodPoint(1, p.tau, (-p.z[0],))
    for ch in (C00, C01):
        assert theta_naive(ch, p, 128).overlaps(theta_naive(ch, q, 128))


def _lemma_bounds(y_tau: float, y_z: float):
    q = math.exp(-math.pi * y_tau)
    b1 = 2 * q * math.cosh(2 * math.pi * y_z) + 2 * q ** 4 * math.exp(4 * math.pi * abs(y_z)) / (
        1 - q ** 5 * math.exp(2 * math.pi * abs(y_z)))
    b2 = 2 * q ** 2 * math.exp(3 * math.pi * abs(y_z)) / (1 - q ** 4 * math.exp(2 * math.pi * abs(y_z)))
    return b1, b2


def test_near_one_inequalities_on_grid(rng):
    from conftest import random_S1
    for _ in range(100):
        p = random_S1(rng)
        tau, z = p.tau[0], p.z[0]
        b1, b2 = _lemma_bounds(float(tau.mid_im), float(z.mid_im))
        for ch in (C00, C01):
            d = B.sub(theta_naive(ch, p, 64), exact(1), 80)
            assert float(d.abs_upper()) < b1
        t10 = theta_naive(C10, p, 64)
        e = B.exp_pi_i(tau.mul_2exp(-2), 80)
        lhs = B.sub(B.div(t10, e, 80), B.add(B.exp_pi_i(z, 80), B.exp_pi_i(-z, 80), 80), 80)
        assert float(lhs.abs_upper()) < b2
