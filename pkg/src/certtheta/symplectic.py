"""Integer symplectic matrices and the transformation law of theta constants.

For gamma = [[A, B], [C, D]] in Sp_2g(Z) and an even characteristic m,

    theta_{gamma.m}(0, gamma tau)^2
        = kappa(gamma)^2 * exp(4 pi i phi_m(gamma)) * det(C tau + D) * theta_m(0, tau)^2

where gamma.m is the usual affine action on characteristics reduced to
{0,1}, phi_m is an explicit rational number (including the sign picked up
by the reduction), and kappa(gamma)^2 is a fourth root of unity that only
depends on gamma.  kappa^2 is obtained once per matrix by a low-precision
certified evaluation and cached.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from . import ball as B
from .ball import ComplexBall
from .errors import DomainError, PrecisionError
from .naive import Characteristic, PeriodPoint, theta_naive

Matrix = tuple


def as_matrix(rows: Sequence[Sequence[int]]) -> Matrix:
    return tuple(tuple(int(x) for x in r) for r in rows)


def identity(g: int) -> Matrix:
    n = 2 * g
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def J(g: int) -> Matrix:
    n = 2 * g
    rows = [[0] * n for _ in range(n)]
    for i in range(g):
        rows[i][g + i] = 1
        rows[g + i][i] = -1
    return as_matrix(rows)


def matmul(x: Matrix, y: Matrix) -> Matrix:
    n = len(x)
    return tuple(tuple(sum(x[i][k] * y[k][j] for k in range(n)) for j in range(n)) for i in range(n))


def transpose(x: Matrix) -> Matrix:
    return tuple(zip(*x))


def blocks(gamma: Matrix):
    g = len(gamma) // 2
    A = [[gamma[i][j] for j in range(g)] for i in range(g)]
    Bm = [[gamma[i][j + g] for j in range(g)] for i in range(g)]
    C = [[gamma[i + g][j] for j in range(g)] for i in range(g)]
    D = [[gamma[i + g][j + g] for j in range(g)] for i in range(g)]
    return A, Bm, C, D


def from_blocks(A, Bm, C, D) -> Matrix:
    g = len(A)
    rows = [list(A[i]) + list(Bm[i]) for i in range(g)] + [list(C[i]) + list(D[i]) for i in range(g)]
    return as_matrix(rows)


def is_symplectic(gamma: Matrix) -> bool:
    g = len(gamma) // 2
    j = J(g)
    return matmul(matmul(transpose(gamma), j), gamma) == j


def inverse(gamma: Matrix) -> Matrix:
    """Inverse of a symplectic matrix: [[D^T, -B^T], [-C^T, A^T]]."""
    A, Bm, C, D = blocks(gamma)
    t = lambda m: [list(r) for r in zip(*m)]  # noqa: E731
    neg = lambda m: [[-x for x in r] for r in m]  # noqa: E731
    return from_blocks(t(D), neg(t(Bm)), neg(t(C)), t(A))


def translation(S: Sequence[Sequence[int]]) -> Matrix:
    """[[I, S], [0, I]] for a symmetric integer matrix S."""
    g = len(S)
    I = [[1 if i == j else 0 for j in range(g)] for i in range(g)]
    Z = [[0] * g for _ in range(g)]
    return from_blocks(I, S, Z, I)


def embed_g1(gamma1: Matrix, slot: int) -> Matrix:
    """Embed a 2x2 matrix acting on coordinate ``slot`` (0 or 1) of genus 2."""
    (a, b), (c, d) = gamma1
    rows = [list(r) for r in identity(2)]
    i = slot
    rows[i][i], rows[i][2 + i], rows[2 + i][i], rows[2 + i][2 + i] = a, b, c, d
    return as_matrix(rows)


# The matrices used by the genus-2 feedback scheme and the duplication ladder.
M1 = as_matrix([[-1, 0, -1, 0], [0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1]])
M2 = as_matrix([[-1, 0, 0, 0], [0, -1, 0, -1], [0, 0, -1, 0], [0, 1, 0, 0]])
N12 = as_matrix([[-1, 0, 0, -1], [0, -1, -1, 0], [0, 1, 0, 0], [1, 0, 0, 0]])
S1 = as_matrix([[0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1]])
N_G1 = as_matrix([[0, -1], [1, 0]])


# ---------------------------------------------------------------------------
# characteristics
# ---------------------------------------------------------------------------

def _mv(M, v):
    return [sum(M[i][k] * v[k] for k in range(len(v))) for i in range(len(M))]


def _bil(u, M, v):
    n = len(u)
    return sum(u[i] * M[i][j] * v[j] for i in range(n) for j in range(n))


def _mm(X, Y):
    n = len(X)
    return [[sum(X[i][k] * Y[k][j] for k in range(n)) for j in range(n)] for i in range(n)]


def _tr(X):
    return [list(r) for r in zip(*X)]


def char_action(gamma: Matrix, ch: Characteristic) -> tuple[Characteristic, Fraction]:
    """Image characteristic and phase phi (a rational number) for ``gamma``."""
    A, Bm, C, D = blocks(gamma)
    g = len(A)
    if ch.g != g:
        raise DomainError("characteristic genus does not match the matrix")
    m1 = [Fraction(x, 2) for x in ch.a]
    m2 = [Fraction(x, 2) for x in ch.b]
    dCD = [_mm(C, _tr(D))[i][i] for i in range(g)]
    dAB = [_mm(A, _tr(Bm))[i][i] for i in range(g)]
    n1 = [x - y + Fraction(z, 2) for x, y, z in zip(_mv(D, m1), _mv(C, m2), dCD)]
    n2 = [-x + y + Fraction(z, 2) for x, y, z in zip(_mv(Bm, m1), _mv(A, m2), dAB)]
    BtD, AtC, BtC = _mm(_tr(Bm), D), _mm(_tr(A), C), _mm(_tr(Bm), C)
    phi = -Fraction(1, 2) * (_bil(m1, BtD, m1) + _bil(m2, AtC, m2) - 2 * _bil(m1, BtC, m2))
    w = [x - y for x, y in zip(_mv(D, m1), _mv(C, m2))]
    phi += Fraction(1, 2) * sum(w[i] * dAB[i] for i in range(g))
    a2 = [int(2 * x) for x in n1]
    b2 = [int(2 * x) for x in n2]
    ar = [x % 2 for x in a2]
    br = [x % 2 for x in b2]
    # b -> b + 2n'' multiplies theta by (-1)^{a.n''}; the shift in a is free
    npp = [(x - y) // 2 for x, y in zip(b2, br)]
    sign = sum(ar[i] * npp[i] for i in range(g)) % 2
    return Characteristic(tuple(ar), tuple(br)), phi + Fraction(sign, 2)


def root_of_unity(r: Fraction, prec: int) -> ComplexBall:
    """exp(2 pi i r) for r with denominator dividing 8."""
    k = r * 8
    if k.denominator != 1:
        raise ValueError("only eighth roots of unity are supported")
    return B.omega8(int(k), prec)


# ---------------------------------------------------------------------------
# action on tau
# ---------------------------------------------------------------------------

def _int_ball(n: int, prec: int) -> ComplexBall:
    return ComplexBall(n, 0, 0, B._ZERO, prec)


def _lin(coeffs, balls, const, prec):
    """sum c_i * x_i + const with small integer coefficients."""
    acc = _int_ball(const, prec)
    for c, x in zip(coeffs, balls):
        if c:
            acc = B.add(acc, B.mul(_int_ball(c, prec), x, prec), prec)
    return acc


def tau_matrix(p: PeriodPoint):
    if p.g == 1:
        return [[p.tau[0]]]
    t11, t12, t22 = p.tau
    return [[t11, t12], [t12, t22]]


def _matprod_int_ball(M, T, prec):
    g = len(M)
    return [[_lin([M[i][k] for k in range(g)], [T[k][j] for k in range(g)], 0, prec) for j in range(g)]
            for i in range(g)]


def _add_int(X, M, prec):
    g = len(X)
    return [[B.add(X[i][j], _int_ball(M[i][j], prec), prec) for j in range(g)] for i in range(g)]


def act(gamma: Matrix, p: PeriodPoint, prec: int):
    """Return ``(gamma tau, det(C tau + D))`` as a PeriodPoint and a ball."""
    A, Bm, C, D = blocks(gamma)
    T = tau_matrix(p)
    num = _add_int(_matprod_int_ball(A, T, prec), Bm, prec)
    den = _add_int(_matprod_int_ball(C, T, prec), D, prec)
    if p.g == 1:
        det = den[0][0]
        out = B.div(num[0][0], det, prec)
        return PeriodPoint(1, (out,)), det
    det = B.sub(B.mul(den[0][0], den[1][1], prec), B.mul(den[0][1], den[1][0], prec), prec)
    # (A tau + B) (C tau + D)^{-1} via the adjugate
    adj = [[den[1][1], -den[0][1]], [-den[1][0], den[0][0]]]
    res = [[B.div(B.add(B.mul(num[i][0], adj[0][j], prec), B.mul(num[i][1], adj[1][j], prec), prec), det, prec)
            for j in range(2)] for i in range(2)]
    # the result is symmetric; use the average of the off-diagonal entries
    off = B.union(res[0][1], res[1][0], prec)
    return PeriodPoint(2, (res[0][0], off, res[1][1])), det


def det_factor(gamma: Matrix, p: PeriodPoint, prec: int) -> ComplexBall:
    A, Bm, C, D = blocks(gamma)
    T = tau_matrix(p)
    den = _add_int(_matprod_int_ball(C, T, prec), D, prec)
    if p.g == 1:
        return den[0][0]
    return B.sub(B.mul(den[0][0], den[1][1], prec), B.mul(den[0][1], den[1][0], prec), prec)


# ---------------------------------------------------------------------------
# kappa^2
# ---------------------------------------------------------------------------

_REF_TAU = {
    1: ("0.1+1.1i",),
    2: ("0.1+1.1i", "0.2+0.3i", "-0.1+1.3i"),
}


@lru_cache(maxsize=None)
def kappa2(gamma: Matrix) -> int:
    """kappa(gamma)^2 as an exponent k with kappa^2 = i^k.

    Computed from one certified evaluation of both sides of the
    transformation law at a fixed reference point.
    """
    g = len(gamma) // 2
    if not is_symplectic(gamma):
        raise DomainError("matrix is not symplectic")
    prec = 64
    p = PeriodPoint(g, [B.ball(t, prec) for t in _REF_TAU[g]])
    gp, det = act(gamma, p, prec + 32)
    ch = Characteristic((0,) * g, (0,) * g)
    ch2, phi = char_action(gamma, ch)
    lhs = B.sqr(theta_naive(ch2, gp, 40), 64)
    rhs = B.sqr(theta_naive(ch, p, 40), 64)
    rhs = B.mul(B.mul(rhs, det, 64), root_of_unity(2 * phi, 64), 64)
    q = B.div(lhs, rhs, 64)
    units = [(1, 0), (0, 1), (-1, 0), (0, -1)]
    for k, (re, im) in enumerate(units):
        if q.overlaps(ComplexBall(re, im, 0, B._ZERO, 64)):
            return k
    raise PrecisionError("could not identify kappa^2 for the given matrix")


def transform_squares(gamma: Matrix, squares: dict, p: PeriodPoint, prec: int,
                      det: ComplexBall | None = None) -> dict:
    """Squared theta constants at gamma tau from those at tau.

    ``squares`` maps characteristics to squared values at ``p``; every
    characteristic present is transported.
    """
    if det is None:
        det = det_factor(gamma, p, prec)
    k = kappa2(gamma)
    out = {}
    for ch, val in squares.items():
        ch2, phi = char_action(gamma, ch)
        factor = B.mul(root_of_unity(2 * phi + Fraction(k, 4), prec), det, prec)
        out[ch2] = B.mul(factor, val, prec)
    return out


def transform_factor(gamma: Matrix, ch: Characteristic, det: ComplexBall, prec: int):
    """(image characteristic, factor) with theta^2_{image}(gamma tau) = factor * theta^2_ch(tau)."""
    ch2, phi = char_action(gamma, ch)
    k = kappa2(gamma)
    return ch2, B.mul(root_of_unity(2 * phi + Fraction(k, 4), prec), det, prec)
