from __future__ import annotations

import math
import random
from fractions import Fraction

import gmpy2
import pytest

from certtheta import ball as B
from certtheta.ball import ComplexBall, Dyadic
from certtheta.naive import PeriodPoint

GRID = 1 << 12


def dy(q) -> Dyadic:
    return Dyadic.from_fraction(Fraction(q))


def exact(re, im=0, prec: int = 128) -> ComplexBall:
    """Radius-zero ball at a dyadic point given by two dyadic fractions."""
    return ComplexBall.exact(dy(re), dy(im), prec)


def grid(rng: random.Random, lo: float, hi: float) -> Fraction:
    """A random multiple of 1/GRID in [lo, hi]."""
    return Fraction(rng.randint(math.ceil(lo * GRID), math.floor(hi * GRID)), GRID)


def random_R1(rng: random.Random) -> PeriodPoint:
    while True:
        x = grid(rng, -0.5, 0.5)
        y = grid(rng, 0.8, 2.0)
        if x * x + y * y >= Fraction(101, 100):
            return PeriodPoint(1, (exact(x, y),))


def random_S1(rng: random.Random) -> PeriodPoint:
    p = random_R1(rng)
    y = Fraction(p.tau[0].mid_im.to_fraction())
    zx = grid(rng, -0.125, 0.125)
    zy = grid(rng, -float(y) / 8, float(y) / 8)
    return PeriodPoint(1, p.tau, (exact(zx, zy),))


def random_R2(rng: random.Random, y22_max: float = 8.0) -> PeriodPoint:
    while True:
        x11, x12, x22 = (grid(rng, -0.5, 0.5) for _ in range(3))
        y11 = grid(rng, 0.9, 2.0)
        y22 = grid(rng, float(y11), y22_max)
        y12 = grid(rng, -float(y11) / 2, float(y11) / 2)
        if x11 * x11 + y11 * y11 < 1 or x22 * x22 + y22 * y22 < 1:
            continue
        return PeriodPoint(2, (exact(x11, y11), exact(x12, y12), exact(x22, y22)))


def diff_upper(a: ComplexBall, b: ComplexBall):
    """Upper bound on |a - b| for every pair of points of the two balls."""
    d = B.sub(a.midpoint(), b.midpoint(), max(a.prec, b.prec, 64) + 64).abs_upper()
    return B._UP.add(B._UP.add(d, a.rad), b.rad)


def agree_bits(a: ComplexBall, b: ComplexBall) -> float:
    """Largest k with every point of a within 2^-k of every point of b."""
    d = diff_upper(a, b)
    if d == 0:
        return math.inf
    return -float(gmpy2.log2(d))


def assert_agree(a: dict, b: dict, bits: int):
    common = set(a) & set(b)
    assert common, "no common characteristics"
    for k in common:
        assert a[k].overlaps(b[k]), f"{k}: balls are disjoint"
        got = agree_bits(a[k], b[k])
        assert got >= bits, f"{k}: agree only to {got:.1f} bits (need {bits})"


def contains_value(x: ComplexBall, value, prec: int = 256) -> bool:
    """True if the ball contains the mpmath/complex value (given to high precision)."""
    import mpmath
    with mpmath.workprec(prec):
        v = mpmath.mpc(value)
        re = mpmath.mpf(x.mid_re.to_fraction().numerator) / x.mid_re.to_fraction().denominator
        im = mpmath.mpf(x.mid_im.to_fraction().numerator) / x.mid_im.to_fraction().denominator
        d = abs(v - mpmath.mpc(re, im))
        return d <= mpmath.mpf(str(x.rad)) * (1 + mpmath.mpf(2) ** -40) + mpmath.mpf(2) ** (-prec + 8)


@pytest.fixture
def rng():
    return random.Random(20240611)
