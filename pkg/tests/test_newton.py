from __future__ import annotations

import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from certtheta import ball as B
from certtheta.ball import ComplexBall, Dyadic
from certtheta.errors import DomainError, SingularJacobian
from certtheta.newton import (SchemeConstants, cauchy_bound, fd_jacobian, inverse_matrix,
                              newton_refine, start_precision)

from conftest import exact


def const(r, rho, M, B3):
    return SchemeConstants(r, rho, M, B3)


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------

def test_cauchy_bound_examples():
    assert cauchy_bound(1, 1, 1, 1).to_fraction() == 4
    assert cauchy_bound(0, 2, Fraction(1, 8), 7).to_fraction() == 7
    assert cauchy_bound(2, 3, Fraction(1, 2), 1).to_fraction() == 320


def test_start_precision_examples():
    assert start_precision(const(1, "1.4e-4", 27, 125)) == 58
    g2 = start_precision(const(3, "1.9e-23", 45000, 13000))
    assert g2 == 220 and g2 <= 300
    g1f = start_precision(const(2, "2.9e-5", Fraction(43 * 10 ** 220), 86000))
    assert g1f == 1546 and g1f <= 1600


def test_constant_invariants():
    with pytest.raises(DomainError):
        const(1, 2, 1, 1)
    with pytest.raises(DomainError):
        const(1, Fraction(1, 2), Fraction(1, 2), 1)
    with pytest.raises(DomainError):
        const(4, Fraction(1, 2), 1, 1)
    c = const(1, "1.4e-4", 27, 125)
    assert 2 ** c.log_rho <= c.rho < 2 ** (c.log_rho + 1)
    assert 2 ** c.lb1 >= c.B1 > 2 ** (c.lb1 - 1)
    assert 2 ** c.lb2 >= c.B2 > 2 ** (c.lb2 - 1)


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------

def square(x, p):
    return [B.sqr(x[0], p + 8)]


def test_fd_square():
    M = fd_jacobian(square, [exact(1)], 20, 200)
    assert M[0][0].contains(exact(2 + Fraction(1, 2 ** 20)))
    assert M[0][0].rad <= B._pow2(-150)


def test_fd_decoupled():
    f = lambda x, p: [B.sqr(x[0], p + 8), B.mul(B.sqr(x[1], p + 8), x[1], p + 8)]
    eta = Fraction(1, 2 ** 16)
    M = fd_jacobian(f, [exact(1), exact(1)], 16, 200)
    assert M[0][0].contains(exact(2 + eta))
    assert M[1][1].contains(exact(3 + 3 * eta + eta * eta))
    assert M[0][1].contains(exact(0)) and M[1][0].contains(exact(0))


def test_fd_linear():
    A = [[exact(2), exact(-1)], [exact(Fraction(1, 2)), exact(3)]]

    def f(x, p):
        return [B.add(B.mul(A[i][0], x[0], p), B.mul(A[i][1], x[1], p), p) for i in range(2)]
    M = fd_jacobian(f, [exact(Fraction(3, 8)), exact(-1)], 30, 200)
    for i in range(2):
        for j in range(2):
            assert M[i][j].contains(A[i][j])


def test_inverse_matrix_3x3():
    A = [[exact(2), exact(1), exact(0)], [exact(0), exact(1), exact(1)], [exact(1), exact(0), exact(3)]]
    inv = inverse_matrix(A, 128)
    for i in range(3):
        for j in range(3):
            acc = exact(0)
            for k in range(3):
                acc = B.add(acc, B.mul(A[i][k], inv[k][j], 128), 128)
            assert acc.contains(exact(1 if i == j else 0))


def test_singular_jacobian():
    f = lambda x, p: [exact(1, 0, p)]
    with pytest.raises(SingularJacobian):
        newton_refine(f, const(1, Fraction(1, 2), 1, 1), [exact(1)], [exact(1)], 64)


# ---------------------------------------------------------------------------
# the iteration
# ---------------------------------------------------------------------------

def identity_map(x, p):
    return [v.with_prec(p) for v in x]


def test_identity_map():
    c = const(1, Fraction(1, 2), 1, 1)
    x0 = exact(Fraction(5, 16), Fraction(-3, 64), 600)
    res = newton_refine(identity_map, c, [x0], [B.add(x0, exact(Fraction(1, 2 ** 30)), 64)], 512)
    assert res.x[0].contains(x0)
    assert res.precision >= 512 - c.lb3 - 2


SQ = const(1, Fraction(1, 2), Fraction(9, 4), 1)


def test_square_root_by_newton():
    res = newton_refine(square, SQ, [exact(1)], [exact(1 + Fraction(1, 2 ** 64))], 256, trace=True)
    assert res.x[0].contains(exact(1))
    assert res.precision >= 254
    lines = [json.loads(l) for l in res.trace_jsonl().splitlines()]
    assert lines and set(lines[0]) >= {"n", "m", "p", "p_prime", "n_prime", "eta_log2"}
    assert all(b["n"] == a["n_prime"] for a, b in zip(lines, lines[1:]))


def test_start_precision_enforced():
    with pytest.raises(DomainError):
        newton_refine(square, SQ, [exact(1)], [exact(1)], 256, n_start=SQ.n0 - 1)


def _sqrt_oracle(z: Fraction, prec: int) -> ComplexBall:
    return B.sqrt_principal(ComplexBall.from_fraction(z, 0, prec + 64), prec + 32)


@settings(max_examples=25, deadline=None)
@given(st.fractions(Fraction(7, 8), Fraction(9, 8), max_denominator=997), st.integers(0, 10 ** 6))
def test_one_step_contraction(target, seed):
    """One loop from precision n lands within 2^-(2n - lb2 - lb3 - 2) of the root."""
    z0 = Dyadic.from_fraction(Fraction(round(target * 2 ** 300), 2 ** 300))
    x0 = _sqrt_oracle(z0.to_fraction(), 400)
    n = SQ.n0 + random.Random(seed).randint(0, 20)
    off = Fraction(random.Random(seed + 1).randint(-2 ** 20, 2 ** 20), 2 ** (n + 21))
    xi = ComplexBall.from_fraction(x0.mid_re.to_fraction() + off, 0, n + 40)
    xi = ComplexBall(xi.re, xi.im, xi.exp, B._ZERO, n + 40)
    res = newton_refine(square, SQ, [ComplexBall.exact(z0, 0, 400)], [xi], n + 1, n_start=n)
    assert res.loops == 1
    n_new = 2 * n - SQ.lb2 - SQ.lb3 - 2
    err = B.sub(res.x[0].midpoint(), x0, 500).abs_upper()
    assert err <= B._pow2(-n_new)


@settings(max_examples=10, deadline=None)
@given(st.fractions(Fraction(7, 8), Fraction(9, 8), max_denominator=997), st.sampled_from([40, 100, 300, 700]))
def test_schedule_soundness(target, N):
    z0 = Dyadic.from_fraction(Fraction(round(target * 2 ** 800), 2 ** 800))
    x0 = _sqrt_oracle(z0.to_fraction(), 900)
    seed = ComplexBall(x0.re, x0.im, x0.exp, B._ZERO, 64)
    seed = B.add(seed, exact(Fraction(1, 2 ** 20)), 64)
    res = newton_refine(square, SQ, [ComplexBall.exact(z0, 0, 900)], [seed], N)
    assert res.x[0].overlaps(x0)
    assert res.x[0].rad <= B._pow2(-(N - SQ.lb3 - 2))
