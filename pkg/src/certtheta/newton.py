"""Certified Newton iterations with finite-difference Jacobians.

Given an analytic map f: C^r -> C^r, an approximation z0 of f(x0) and a
coarse approximation of x0, :func:`newton_refine` recovers x0 to high
precision.  Each loop doubles the number of correct bits (minus a constant
that depends on bounds for f near x0), with an explicit precision schedule
for every intermediate quantity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import gmpy2
from gmpy2 import mpz

from . import ball as B
from .ball import ComplexBall, Dyadic
from .errors import DivergentSchedule, DomainError, PrecisionError, SingularJacobian
from .naive import guard_bits

Evaluator = Callable[[Sequence[ComplexBall], int], Sequence[ComplexBall]]


def _frac(x) -> Fraction:
    if isinstance(x, Dyadic):
        return x.to_fraction()
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def _ceil_log2(q: Fraction) -> int:
    """Smallest k with 2**k >= q (q > 0)."""
    if q <= 0:
        raise ValueError("log of a non-positive number")
    k = q.numerator.bit_length() - q.denominator.bit_length()
    while Fraction(2) ** k < q:
        k += 1
    while Fraction(2) ** (k - 1) >= q:
        k -= 1
    return k


def _floor_log2(q: Fraction) -> int:
    k = _ceil_log2(q)
    return k if Fraction(2) ** k == q else k - 1


def _fmt(q: Fraction) -> str:
    if q.denominator == 1 and q < 10 ** 12:
        return str(q.numerator)
    return f"{float(q):.6g}"


def _up_mpfr(q: Fraction):
    return B._UP.div(mpz(q.numerator), mpz(q.denominator))


def cauchy_bound(n: int, r: int, rho, M) -> Dyadic:
    """Upper bound 2^n n! binom(n+r, r) M / rho^n on the n-th derivative."""
    if n < 0 or r < 1:
        raise ValueError("need n >= 0 and r >= 1")
    q = Fraction(2) ** n * math.factorial(n) * math.comb(n + r, r) * _frac(M) / _frac(rho) ** n
    return Dyadic.from_mpfr(_up_mpfr(q))


@dataclass(frozen=True)
class SchemeConstants:
    """Parameters of a Newton scheme: dimension, polydisk radius, bounds.

    ``rho``, ``M`` and ``B3`` may be given as decimal strings, fractions or
    dyadics; they are kept exactly.  The derived bounds B1, B2, B3 are stored
    through their base-2 logarithms after rounding up to powers of 2, and rho
    through the logarithm of its power-of-2 rounding down.
    """

    r: int
    rho: Fraction
    M: Fraction
    B3: Fraction

    def __post_init__(self):
        object.__setattr__(self, "rho", _frac(self.rho))
        object.__setattr__(self, "M", _frac(self.M))
        object.__setattr__(self, "B3", _frac(self.B3))
        if self.r not in (1, 2, 3):
            raise DomainError("only dimensions 1 to 3 are supported")
        if not (0 < self.rho <= 1 and self.M >= 1 and self.B3 >= 1):
            raise DomainError("constants must satisfy rho <= 1, M >= 1, B3 >= 1")

    @property
    def B1(self) -> Fraction:
        return 2 * (self.r + 1) * self.M / self.rho

    @property
    def B2(self) -> Fraction:
        return 2 * (self.r + 1) * (self.r + 2) * self.M / self.rho ** 2

    @property
    def log_rho(self) -> int:
        return _floor_log2(self.rho)

    @property
    def lb1(self) -> int:
        return _ceil_log2(self.B1)

    @property
    def lb2(self) -> int:
        return _ceil_log2(self.B2)

    @property
    def lb3(self) -> int:
        return _ceil_log2(self.B3)

    @property
    def lr(self) -> int:
        return _ceil_log2(Fraction(self.r)) if self.r > 1 else 0

    @property
    def n0(self) -> int:
        return start_precision(self)

    def as_dict(self) -> dict:
        return {"r": self.r, "rho": _fmt(self.rho), "M": _fmt(self.M), "B3": _fmt(self.B3),
                "log2_rho": self.log_rho, "log2_B1": self.lb1, "log2_B2": self.lb2,
                "log2_B3": self.lb3, "n0": self.n0}


def start_precision(c: SchemeConstants) -> int:
    """n0 = 2 ceil(log2(2(r+1)M/rho)) + 2 ceil(log2 B3) + 4."""
    return 2 * _ceil_log2(2 * (c.r + 1) * c.M / c.rho) + 2 * _ceil_log2(c.B3) + 4


# ---------------------------------------------------------------------------
# finite differences and small inverses
# ---------------------------------------------------------------------------

def _check_eval(vals, r: int, N: int):
    vals = list(vals)
    if len(vals) != r:
        raise DomainError("evaluator returned a vector of the wrong size")
    lim = B._pow2(-N)
    for v in vals:
        if v.rad > lim:
            raise PrecisionError(f"evaluator did not reach precision {N}")
    return vals


def fd_jacobian(f: Evaluator, x: Sequence[ComplexBall], eta_exp: int, p: int, fx=None):
    """Matrix with columns (f(x + eta e_j) - f(x)) / eta, eta = 2**-eta_exp."""
    r = len(x)
    if fx is None:
        fx = _check_eval(f(x, p), r, p)
    cols = []
    wp = p + eta_exp + 16
    for j in range(r):
        xj = list(x)
        xj[j] = B.add(x[j], ComplexBall(1, 0, -eta_exp, B._ZERO, wp), wp + 64)
        fj = _check_eval(f(xj, p), r, p)
        cols.append([B.sub(fj[i], fx[i], wp).mul_2exp(eta_exp) for i in range(r)])
    return [[cols[j][i] for j in range(r)] for i in range(r)]


def _det(Mx, prec):
    r = len(Mx)
    if r == 1:
        return Mx[0][0]
    if r == 2:
        return B.sub(B.mul(Mx[0][0], Mx[1][1], prec), B.mul(Mx[0][1], Mx[1][0], prec), prec)
    a = Mx
    t1 = B.sub(B.mul(a[1][1], a[2][2], prec), B.mul(a[1][2], a[2][1], prec), prec)
    t2 = B.sub(B.mul(a[1][0], a[2][2], prec), B.mul(a[1][2], a[2][0], prec), prec)
    t3 = B.sub(B.mul(a[1][0], a[2][1], prec), B.mul(a[1][1], a[2][0], prec), prec)
    return B.add(B.sub(B.mul(a[0][0], t1, prec), B.mul(a[0][1], t2, prec), prec), B.mul(a[0][2], t3, prec), prec)


def _minor(Mx, i, j):
    return [[Mx[a][b] for b in range(len(Mx)) if b != j] for a in range(len(Mx)) if a != i]


def inverse_matrix(Mx, prec: int):
    """Inverse of a 1x1, 2x2 or 3x3 ball matrix via the adjugate."""
    r = len(Mx)
    det = _det(Mx, prec)
    if det.contains_zero():
        raise SingularJacobian("finite-difference matrix is not certified invertible")
    if r == 1:
        return [[B.inv(det, prec)]]
    inv = [[None] * r for _ in range(r)]
    for i in range(r):
        for j in range(r):
            cof = _det(_minor(Mx, j, i), prec) if r > 2 else Mx[1 - j][1 - i]
            if (i + j) % 2:
                cof = -cof
            inv[i][j] = B.div(cof, det, prec)
    return inv


def _matvec(Mx, v, prec):
    out = []
    for row in Mx:
        acc = None
        for a, b in zip(row, v):
            t = B.mul(a, b, prec)
            acc = t if acc is None else B.add(acc, t, prec)
        out.append(acc)
    return out


def _round_to_grid(x: ComplexBall, k: int) -> ComplexBall:
    """Exact ball at the midpoint of x rounded to a multiple of 2**-k."""
    sh = -k - x.exp
    re, im, e = x.re, x.im, x.exp
    if sh > 0:
        half = mpz(1) << (sh - 1)
        re = (re + half) >> sh
        im = (im + half) >> sh
        e = -k
    return ComplexBall(re, im, e, B._ZERO, max(x.prec, k + 8))


# ---------------------------------------------------------------------------
# the iteration
# ---------------------------------------------------------------------------

@dataclass
class NewtonResult:
    x: list
    precision: int
    loops: int
    trace: list = field(default_factory=list)

    def trace_jsonl(self) -> str:
        return "\n".join(json.dumps(t) for t in self.trace)


def newton_refine(f: Evaluator, c: SchemeConstants, z0: Sequence[ComplexBall],
                  x_init: Sequence[ComplexBall], N: int, n_start: Optional[int] = None,
                  trace: bool = False) -> NewtonResult:
    """Refine ``x_init`` (accurate to ``n_start`` >= n0 bits) to a zero of f - z0.

    ``z0`` must approximate f(x0) within 2**-N.  The returned vector is a
    list of ComplexBalls whose radii bound the distance to x0.
    """
    r = c.r
    if len(z0) != r or len(x_init) != r:
        raise DomainError("dimension mismatch between constants and vectors")
    n0 = start_precision(c)
    n = n0 if n_start is None else int(n_start)
    if n < n0:
        raise DomainError(f"starting precision {n} is below the required {n0} bits")
    lb1, lb2, lb3, lr = c.lb1, c.lb2, c.lb3, c.lr
    if 2 * n - lb2 - lb3 - 2 <= n:
        raise DivergentSchedule("precision schedule does not increase")
    x = [ComplexBall(v.re, v.im, v.exp, B._ZERO, v.prec) for v in x_init]
    records = []
    loops = 0
    extra = guard_bits(0)
    while n < N:
        m = n + lb1 + lb3 + lr + 2
        p = 2 * n + 2 * lr + 2 * lb1 + 2 * lb3 + 9
        p_inv = p - m - 2 * lb3 - 7
        n_new = 2 * n - lb2 - lb3 - 2
        if n_new <= n:
            raise DivergentSchedule("precision schedule does not increase")
        for attempt in range(4):
            pe = p + extra
            fx = _check_eval(f(x, pe), r, pe)
            M1 = fd_jacobian(f, x, m, pe, fx)
            M2 = inverse_matrix(M1, pe + 16)
            resid = [B.sub(z0[i], fx[i], pe + 16) for i in range(r)]
            h = _matvec(M2, resid, pe + 16)
            hrad = max(v.rad for v in h)
            if hrad <= B._pow2(-(n_new + 2)):
                break
            extra += 16
        else:
            raise PrecisionError("Newton step could not be certified at the scheduled precision")
        x = [_round_to_grid(B.add(x[i], h[i], pe + 16), n_new + 2) for i in range(r)]
        if trace:
            records.append({"n": n, "m": m, "p": p, "p_prime": p_inv, "n_prime": n_new,
                            "eta_log2": -m, "extra_bits": extra})
        n = n_new
        loops += 1
    # distance to x0: 2^-n to f^{-1}(z0), plus at most 2 B3 2^-N from z0's error
    err = B._UP.add(B._pow2(-n), B._pow2(lb3 + 1 - N))
    out = [v.add_error(err) for v in x]
    prec = -int(gmpy2.get_exp(err))
    return NewtonResult(out, prec, loops, records)
