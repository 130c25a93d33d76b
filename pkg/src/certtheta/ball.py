"""Dyadic numbers and complex disk balls with rigorous error tracking.

A :class:`ComplexBall` stores an exact dyadic midpoint ``(re + i*im) * 2**exp``
with integer mantissas, and one radius shared by both components: the value
it represents lies in the closed disk of that radius around the midpoint.
Radii are kept as 53-bit ``mpfr`` numbers and every operation on them is
rounded upward, so the containment property is never lost.

Arithmetic is exact on mantissas and rounded once, to nearest, at the
requested working precision; the rounding error is then added to the radius.
Exponentials, logarithms and pi are delegated to Arb through python-flint,
on the exact midpoint, and input radii are propagated by hand.
"""

from __future__ import annotations

import re as _re
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from flint import acb, arb, ctx as _flint_ctx, fmpz
from gmpy2 import mpfr, mpz

from .errors import AmbiguousBranch, DomainError

_UP = gmpy2.context(round=gmpy2.RoundUp, precision=53)
_DN = gmpy2.context(round=gmpy2.RoundDown, precision=53)
_ZERO = mpfr(0)
_ONE = mpfr(1)

# Midpoint bits kept below the radius when a ball has become wide.
_SLACK_BITS = 32


# ---------------------------------------------------------------------------
# Dyadic numbers
# ---------------------------------------------------------------------------

_HEX_RE = _re.compile(r"^\s*([+-]?)0x([0-9a-fA-F]+)p([+-]?\d+)\s*$")


@dataclass(frozen=True)
class Dyadic:
    """The exact number ``mantissa * 2**exponent``, normalized to an odd mantissa."""

    mantissa: int
    exponent: int = 0

    def __post_init__(self):
        m = int(self.mantissa)
        e = int(self.exponent)
        if m == 0:
            e = 0
        else:
            tz = (m & -m).bit_length() - 1
            m >>= tz
            e += tz
        object.__setattr__(self, "mantissa", m)
        object.__setattr__(self, "exponent", e)

    # construction ---------------------------------------------------------
    @classmethod
    def from_fraction(cls, q) -> "Dyadic":
        q = Fraction(q)
        den = q.denominator
        if den & (den - 1):
            raise ValueError(f"{q} is not a dyadic rational")
        return cls(q.numerator, -(den.bit_length() - 1))

    @classmethod
    def from_float(cls, x: float) -> "Dyadic":
        return cls.from_fraction(Fraction(x))

    @classmethod
    def from_mpfr(cls, x) -> "Dyadic":
        if not gmpy2.is_finite(x):
            raise ValueError("infinite or NaN value has no dyadic form")
        if x == 0:
            return cls(0, 0)
        m, e = x.as_mantissa_exp()
        return cls(int(m), int(e))

    @classmethod
    def parse(cls, text: str) -> "Dyadic":
        """Read either ``0x<mant>p<exp>`` or an exact (dyadic) decimal."""
        mt = _HEX_RE.match(text)
        if mt:
            sign = -1 if mt.group(1) == "-" else 1
            return cls(sign * int(mt.group(2), 16), int(mt.group(3)))
        return cls.from_fraction(Fraction(text.strip()))

    # conversion -----------------------------------------------------------
    def to_fraction(self) -> Fraction:
        if self.exponent >= 0:
            return Fraction(self.mantissa << self.exponent)
        return Fraction(self.mantissa, 1 << -self.exponent)

    def to_mpfr(self):
        """Exact conversion (the precision is chosen to fit the mantissa)."""
        bits = max(2, abs(self.mantissa).bit_length())
        return gmpy2.mul_2exp(mpfr(self.mantissa, bits), self.exponent)

    def to_hex(self) -> str:
        sign = "-" if self.mantissa < 0 else ""
        return f"{sign}0x{abs(self.mantissa):x}p{self.exponent}"

    def to_decimal(self) -> str:
        """Exact decimal expansion (finite, since 2**-k = 5**k / 10**k)."""
        m, e = self.mantissa, self.exponent
        if e >= 0:
            return str(m << e)
        sign = "-" if m < 0 else ""
        digits = str(abs(m) * 5 ** (-e))
        k = -e
        if len(digits) <= k:
            digits = "0" * (k - len(digits) + 1) + digits
        out = digits[:-k] + "." + digits[-k:]
        out = out.rstrip("0").rstrip(".")
        return sign + out

    def __float__(self) -> float:
        return float(self.to_fraction())

    def __str__(self) -> str:
        return self.to_hex()

    # exact arithmetic and ordering -----------------------------------------
    def __neg__(self) -> "Dyadic":
        return Dyadic(-self.mantissa, self.exponent)

    def __add__(self, other) -> "Dyadic":
        other = _as_dyadic(other)
        e = min(self.exponent, other.exponent)
        return Dyadic((self.mantissa << (self.exponent - e)) + (other.mantissa << (other.exponent - e)), e)

    __radd__ = __add__

    def __sub__(self, other) -> "Dyadic":
        return self + (-_as_dyadic(other))

    def __rsub__(self, other) -> "Dyadic":
        return _as_dyadic(other) - self

    def __mul__(self, other) -> "Dyadic":
        other = _as_dyadic(other)
        return Dyadic(self.mantissa * other.mantissa, self.exponent + other.exponent)

    __rmul__ = __mul__

    def __lt__(self, other):
        return self.to_fraction() < _as_dyadic(other).to_fraction()

    def __le__(self, other):
        return self.to_fraction() <= _as_dyadic(other).to_fraction()

    def __gt__(self, other):
        return self.to_fraction() > _as_dyadic(other).to_fraction()

    def __ge__(self, other):
        return self.to_fraction() >= _as_dyadic(other).to_fraction()


def _as_dyadic(x) -> Dyadic:
    if isinstance(x, Dyadic):
        return x
    if isinstance(x, int):
        return Dyadic(x, 0)
    if isinstance(x, float):
        return Dyadic.from_float(x)
    if isinstance(x, Fraction):
        return Dyadic.from_fraction(x)
    if isinstance(x, str):
        return Dyadic.parse(x)
    if isinstance(x, type(mpz(0))):
        return Dyadic(int(x), 0)
    if isinstance(x, type(_ZERO)):
        return Dyadic.from_mpfr(x)
    raise TypeError(f"cannot read {x!r} as a dyadic number")


# ---------------------------------------------------------------------------
# directed bounds on mantissa values
# ---------------------------------------------------------------------------

def _abs_up(x, e: int):
    """Upper bound on ``|x| * 2**e`` as a 53-bit mpfr."""
    x = abs(x)
    n = x.bit_length()
    if n <= 53:
        return gmpy2.mul_2exp(mpfr(x, 53), e)
    s = n - 53
    return gmpy2.mul_2exp(mpfr((x >> s) + 1, 54), e + s)


def _abs_dn(x, e: int):
    x = abs(x)
    n = x.bit_length()
    if n <= 53:
        return gmpy2.mul_2exp(mpfr(x, 53), e)
    s = n - 53
    return gmpy2.mul_2exp(mpfr(x >> s, 53), e + s)


def _val_up(x, e: int):
    return _abs_up(x, e) if x >= 0 else -_abs_dn(x, e)


def _val_dn(x, e: int):
    return _abs_dn(x, e) if x >= 0 else -_abs_up(x, e)


def _hypot_up(a, b, e: int):
    ua = _abs_up(a, 0)
    ub = _abs_up(b, 0)
    return gmpy2.mul_2exp(_UP.sqrt(_UP.add(_UP.square(ua), _UP.square(ub))), e)


def _hypot_dn(a, b, e: int):
    la = _abs_dn(a, 0)
    lb = _abs_dn(b, 0)
    return gmpy2.mul_2exp(_DN.sqrt(_DN.add(_DN.square(la), _DN.square(lb))), e)


def _pow2(e: int):
    return gmpy2.mul_2exp(_ONE, e)


def _mag_bits(re, im) -> int:
    return max(re.bit_length(), im.bit_length())


# ---------------------------------------------------------------------------
# complex balls
# ---------------------------------------------------------------------------

class ComplexBall:
    """Closed disk ``{w : |w - mid| <= rad}`` with an exact dyadic midpoint.

    ``prec`` is the default working precision (in bits, relative to the
    midpoint magnitude) used by the arithmetic operators.
    """

    __slots__ = ("re", "im", "exp", "rad", "prec")

    def __init__(self, re=0, im=0, exp: int = 0, rad=_ZERO, prec: int = 64):
        self.re = mpz(re)
        self.im = mpz(im)
        self.exp = int(exp)
        self.rad = rad if isinstance(rad, type(_ZERO)) else mpfr(rad)
        self.prec = int(prec)

    # construction ---------------------------------------------------------
    @classmethod
    def exact(cls, re=0, im=0, prec: int = 64) -> "ComplexBall":
        """Radius-zero ball at the dyadic point ``re + i*im``."""
        dr = _as_dyadic(re)
        di = _as_dyadic(im)
        return cls.from_dyadics(dr, di, Dyadic(0), prec)

    @classmethod
    def from_dyadics(cls, re: Dyadic, im: Dyadic, rad: Dyadic = Dyadic(0), prec: int = 64) -> "ComplexBall":
        e = min(re.exponent if re.mantissa else im.exponent, im.exponent if im.mantissa else re.exponent)
        mr = re.mantissa << (re.exponent - e) if re.mantissa else 0
        mi = im.mantissa << (im.exponent - e) if im.mantissa else 0
        if rad.mantissa < 0:
            raise DomainError("negative radius")
        r = _ZERO if rad.mantissa == 0 else _abs_up(mpz(rad.mantissa), rad.exponent)
        return cls(mr, mi, e, r, prec)

    @classmethod
    def from_fraction(cls, re, im=0, prec: int = 64) -> "ComplexBall":
        """Ball containing the rational point ``re + i*im``, rounded outward."""
        rq, iq = Fraction(re), Fraction(im)
        mr, er, rr = _round_fraction(rq, prec)
        mi, ei, ri = _round_fraction(iq, prec)
        e = min(er, ei)
        mr <<= er - e
        mi <<= ei - e
        rad = _UP.add(rr, ri)
        return cls(mr, mi, e, rad, prec)

    @classmethod
    def from_complex(cls, z: complex, prec: int = 64) -> "ComplexBall":
        z = complex(z)
        return cls.exact(Dyadic.from_float(z.real), Dyadic.from_float(z.imag), prec)

    @classmethod
    def parse(cls, text: str, prec: int = 64) -> "ComplexBall":
        """Read a complex literal such as ``0.25+1.1i``, ``-i``, ``3e-2-0.5j``.

        Decimal parts that are not dyadic are rounded outward at ``prec`` bits.
        Hexadecimal dyadic parts ``0x..p..`` are read exactly.
        """
        re_part, im_part = parse_complex_literal(text)
        ball = cls.from_fraction(re_part, im_part, prec)
        return ball

    @classmethod
    def from_dict(cls, d: dict, prec: int = 64) -> "ComplexBall":
        return cls.from_dyadics(Dyadic.parse(d["re"]), Dyadic.parse(d["im"]),
                                Dyadic.parse(d.get("rad", "0")), prec)

    # accessors ------------------------------------------------------------
    @property
    def mid_re(self) -> Dyadic:
        return Dyadic(int(self.re), self.exp)

    @property
    def mid_im(self) -> Dyadic:
        return Dyadic(int(self.im), self.exp)

    @property
    def radius(self) -> Dyadic:
        return Dyadic.from_mpfr(self.rad)

    @property
    def is_exact(self) -> bool:
        return self.rad == 0

    def midpoint(self) -> "ComplexBall":
        return ComplexBall(self.re, self.im, self.exp, _ZERO, self.prec)

    def with_prec(self, prec: int) -> "ComplexBall":
        return ComplexBall(self.re, self.im, self.exp, self.rad, prec)

    def add_error(self, err) -> "ComplexBall":
        """Return the same midpoint with ``err`` (an upper bound) added to the radius."""
        return ComplexBall(self.re, self.im, self.exp, _UP.add(self.rad, err), self.prec)

    def to_dict(self, fmt: str = "hex") -> dict:
        conv = Dyadic.to_hex if fmt == "hex" else Dyadic.to_decimal
        return {"re": conv(self.mid_re), "im": conv(self.mid_im), "rad": conv(self.radius)}

    def __complex__(self) -> complex:
        return complex(float(self.mid_re), float(self.mid_im))

    def to_mpc(self, prec: int = 53):
        with gmpy2.context(gmpy2.get_context(), precision=prec):
            return gmpy2.mpc(_mid_component_mpfr(self.re, self.exp), _mid_component_mpfr(self.im, self.exp))

    def __repr__(self) -> str:
        z = complex(self)
        return f"ComplexBall({z.real:.17g}{z.imag:+.17g}i, rad={float(self.rad):.3g})"

    # magnitude bounds (53-bit mpfr) -----------------------------------------
    def abs_upper(self):
        return _UP.add(_hypot_up(self.re, self.im, self.exp), self.rad)

    def abs_lower(self):
        v = _DN.sub(_hypot_dn(self.re, self.im, self.exp), self.rad)
        return v if v > 0 else _ZERO

    def mid_abs_upper(self):
        return _hypot_up(self.re, self.im, self.exp)

    def re_lower(self):
        return _DN.sub(_val_dn(self.re, self.exp), self.rad)

    def re_upper(self):
        return _UP.add(_val_up(self.re, self.exp), self.rad)

    def im_lower(self):
        return _DN.sub(_val_dn(self.im, self.exp), self.rad)

    def im_upper(self):
        return _UP.add(_val_up(self.im, self.exp), self.rad)

    def contains_zero(self) -> bool:
        """True unless the ball provably excludes 0."""
        return _hypot_dn(self.re, self.im, self.exp) <= self.rad

    def meets_negative_axis(self) -> bool:
        """True unless the ball provably avoids the closed half-line (-inf, 0]."""
        if self.re >= 0:
            dist = _hypot_dn(self.re, self.im, self.exp)
        else:
            dist = _abs_dn(self.im, self.exp)
        return dist <= self.rad

    def overlaps(self, other) -> bool:
        other = _coerce(other, self.prec)
        d = sub(self, other.midpoint(), max(self.prec, other.prec) + 64)
        return d.abs_lower() <= _UP.add(self.rad, other.rad)

    def contains(self, other) -> bool:
        """True if every point of ``other`` provably lies in this ball."""
        other = _coerce(other, self.prec)
        d = sub(self.midpoint(), other.midpoint(), max(self.prec, other.prec) + 64)
        return _UP.add(d.abs_upper(), other.rad) <= self.rad

    # operators ------------------------------------------------------------
    def __neg__(self):
        return ComplexBall(-self.re, -self.im, self.exp, self.rad, self.prec)

    def conj(self):
        return ComplexBall(self.re, -self.im, self.exp, self.rad, self.prec)

    def mul_i(self):
        return ComplexBall(-self.im, self.re, self.exp, self.rad, self.prec)

    def mul_2exp(self, k: int):
        return ComplexBall(self.re, self.im, self.exp + k, gmpy2.mul_2exp(self.rad, k), self.prec)

    def __add__(self, other):
        other = _coerce(other, self.prec)
        return add(self, other, max(self.prec, other.prec))

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other, self.prec)
        return sub(self, other, max(self.prec, other.prec))

    def __rsub__(self, other):
        other = _coerce(other, self.prec)
        return sub(other, self, max(self.prec, other.prec))

    def __mul__(self, other):
        other = _coerce(other, self.prec)
        return mul(self, other, max(self.prec, other.prec))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other, self.prec)
        return div(self, other, max(self.prec, other.prec))

    def __rtruediv__(self, other):
        other = _coerce(other, self.prec)
        return div(other, self, max(self.prec, other.prec))

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise TypeError("only non-negative integer powers are supported")
        return power(self, n, self.prec)


def _coerce(x, prec: int) -> ComplexBall:
    if isinstance(x, ComplexBall):
        return x
    if isinstance(x, (int, Dyadic)) or isinstance(x, type(mpz(0))):
        return ComplexBall.exact(x, 0, prec)
    if isinstance(x, float):
        return ComplexBall.exact(Dyadic.from_float(x), 0, prec)
    if isinstance(x, complex):
        return ComplexBall.from_complex(x, prec)
    if isinstance(x, Fraction):
        return ComplexBall.from_fraction(x, 0, prec)
    raise TypeError(f"cannot convert {x!r} to a ComplexBall")


def ball(x, prec: int = 64) -> ComplexBall:
    """Convenience converter: numbers, fractions, literals, or balls."""
    if isinstance(x, str):
        return ComplexBall.parse(x, prec)
    return _coerce(x, prec)


def _round_fraction(q: Fraction, prec: int):
    """Round a rational to ``prec`` significant bits; returns (mant, exp, err)."""
    num, den = q.numerator, q.denominator
    if num == 0:
        return mpz(0), 0, _ZERO
    if den & (den - 1) == 0:
        return mpz(num), -(den.bit_length() - 1), _ZERO
    shift = prec + den.bit_length() - abs(num).bit_length() + 2
    scaled = Fraction(num * (1 << shift) if shift >= 0 else num, den * (1 if shift >= 0 else 1 << -shift))
    m = round(scaled)
    return mpz(m), -shift, _pow2(-shift - 1)


def _mid_component_mpfr(x, e: int):
    bits = max(2, x.bit_length())
    return gmpy2.mul_2exp(mpfr(x, bits), e)


def _finish(re, im, exp: int, rad, prec: int) -> ComplexBall:
    """Round the exact midpoint to ``prec`` bits and account for the error."""
    n = _mag_bits(re, im)
    k = n - prec
    if rad > 0:
        k = max(k, gmpy2.get_exp(rad) - _SLACK_BITS - exp)
        if k > 0 and n <= k:
            # midpoint entirely below the slack threshold: absorb it
            rad = _UP.add(rad, _hypot_up(re, im, exp))
            return ComplexBall(0, 0, 0, rad, prec)
    if k > 0:
        mask = (mpz(1) << k) - 1
        inexact = (re & mask) or (im & mask)
        half = mpz(1) << (k - 1)
        re = (re + half) >> k
        im = (im + half) >> k
        exp += k
        if inexact:
            rad = _UP.add(rad, _pow2(exp))
    return ComplexBall(re, im, exp, rad, prec)


# ---------------------------------------------------------------------------
# arithmetic
# ---------------------------------------------------------------------------

def add(a: ComplexBall, b: ComplexBall, prec: int) -> ComplexBall:
    """Ball sum; the midpoint is rounded to ``prec`` bits."""
    rad = _UP.add(a.rad, b.rad) if (a.rad or b.rad) else _ZERO
    if a.exp == b.exp:
        return _finish(a.re + b.re, a.im + b.im, a.exp, rad, prec)
    na = _mag_bits(a.re, a.im)
    nb = _mag_bits(b.re, b.im)
    if nb == 0:
        return _finish(a.re, a.im, a.exp, rad, prec)
    if na == 0:
        return _finish(b.re, b.im, b.exp, rad, prec)
    ta = a.exp + na
    tb = b.exp + nb
    if tb < ta - prec - 8:
        return _finish(a.re, a.im, a.exp, _UP.add(rad, _hypot_up(b.re, b.im, b.exp)), prec)
    if ta < tb - prec - 8:
        return _finish(b.re, b.im, b.exp, _UP.add(rad, _hypot_up(a.re, a.im, a.exp)), prec)
    if a.exp > b.exp:
        s = a.exp - b.exp
        return _finish((a.re << s) + b.re, (a.im << s) + b.im, b.exp, rad, prec)
    s = b.exp - a.exp
    return _finish(a.re + (b.re << s), a.im + (b.im << s), a.exp, rad, prec)


def sub(a: ComplexBall, b: ComplexBall, prec: int) -> ComplexBall:
    return add(a, -b, prec)


def mul(a: ComplexBall, b: ComplexBall, prec: int) -> ComplexBall:
    """Ball product: |x y - ma mb| <= |ma| rb + |mb| ra + ra rb."""
    if b.im == 0:
        re, im = a.re * b.re, a.im * b.re
    elif a.im == 0:
        re, im = a.re * b.re, a.re * b.im
    elif max(a.re.bit_length(), b.re.bit_length()) > 3000:
        k1 = b.re * (a.re + a.im)
        k2 = a.re * (b.im - b.re)
        k3 = a.im * (b.re + b.im)
        re, im = k1 - k3, k1 + k2
    else:
        re = a.re * b.re - a.im * b.im
        im = a.re * b.im + a.im * b.re
    if a.rad or b.rad:
        ma = _hypot_up(a.re, a.im, a.exp)
        mb = _hypot_up(b.re, b.im, b.exp)
        rad = _UP.add(_UP.add(_UP.mul(ma, b.rad), _UP.mul(mb, a.rad)), _UP.mul(a.rad, b.rad))
    else:
        rad = _ZERO
    return _finish(re, im, a.exp + b.exp, rad, prec)


def sqr(a: ComplexBall, prec: int) -> ComplexBall:
    re = a.re * a.re - a.im * a.im
    im = 2 * a.re * a.im
    if a.rad:
        ma = _hypot_up(a.re, a.im, a.exp)
        rad = _UP.add(_UP.mul(_UP.mul_2exp(ma, 1), a.rad), _UP.square(a.rad))
    else:
        rad = _ZERO
    return _finish(re, im, 2 * a.exp, rad, prec)


def power(a: ComplexBall, n: int, prec: int) -> ComplexBall:
    result = ComplexBall(1, 0, 0, _ZERO, prec)
    base = a
    first = True
    while n:
        if n & 1:
            result = base if first else mul(result, base, prec)
            first = False
        n >>= 1
        if n:
            base = sqr(base, prec)
    return result


def div(a: ComplexBall, b: ComplexBall, prec: int) -> ComplexBall:
    """Ball quotient; raises DomainError when ``b`` may contain 0."""
    mb_lo = _hypot_dn(b.re, b.im, b.exp)
    den_lo = _DN.sub(mb_lo, b.rad)
    if den_lo <= 0:
        raise DomainError("division by a ball that may contain zero")
    nre = a.re * b.re + a.im * b.im
    nim = a.im * b.re - a.re * b.im
    d = b.re * b.re + b.im * b.im
    nbits = max(nre.bit_length(), nim.bit_length())
    if nbits == 0:
        qre = qim = mpz(0)
        qexp = 0
        trunc = _ZERO
    else:
        s = prec + 4 - (nbits - d.bit_length())
        if s >= 0:
            qre = (nre << s) // d
            qim = (nim << s) // d
        else:
            qre = nre // (d << -s)
            qim = nim // (d << -s)
        qexp = a.exp - b.exp - s
        # floor division: each component is off by less than one unit
        trunc = _pow2(qexp + 1)
    rad = trunc
    if a.rad or b.rad:
        ma = _hypot_up(a.re, a.im, a.exp)
        q_up = _UP.div(ma, mb_lo)
        num = _UP.add(a.rad, _UP.mul(q_up, b.rad))
        rad = _UP.add(rad, _UP.div(num, den_lo))
    return _finish(qre, qim, qexp, rad, prec)


def inv(a: ComplexBall, prec: int) -> ComplexBall:
    return div(ComplexBall(1, 0, 0, _ZERO, prec), a, prec)


def re_dot(a: ComplexBall, b: ComplexBall):
    """Lower and upper bounds on Re(x * conj(y)) over x in a, y in b."""
    v = a.re * b.re + a.im * b.im
    e = a.exp + b.exp
    lo = _val_dn(v, e)
    hi = _val_up(v, e)
    if a.rad or b.rad:
        ma = _hypot_up(a.re, a.im, a.exp)
        mb = _hypot_up(b.re, b.im, b.exp)
        err = _UP.add(_UP.add(_UP.mul(ma, b.rad), _UP.mul(mb, a.rad)), _UP.mul(a.rad, b.rad))
        lo = _DN.sub(lo, err)
        hi = _UP.add(hi, err)
    return lo, hi


def real_part(a: ComplexBall) -> ComplexBall:
    return ComplexBall(a.re, 0, a.exp, a.rad, a.prec)


def imag_part(a: ComplexBall) -> ComplexBall:
    return ComplexBall(a.im, 0, a.exp, a.rad, a.prec)


def union(a: ComplexBall, b: ComplexBall, prec: int) -> ComplexBall:
    """A ball containing both ``a`` and ``b`` (centred at a's midpoint)."""
    d = sub(b.midpoint(), a.midpoint(), prec + 64)
    r = _UP.add(d.abs_upper(), b.rad)
    return ComplexBall(a.re, a.im, a.exp, max(a.rad, r), prec)


# ---------------------------------------------------------------------------
# square roots
# ---------------------------------------------------------------------------

def _mid_mpc(a: ComplexBall):
    bits = max(2, _mag_bits(a.re, a.im))
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        return gmpy2.mpc(_mid_component_mpfr(a.re, a.exp), _mid_component_mpfr(a.im, a.exp))


def _mpfr_to_mant(x):
    if x == 0:
        return mpz(0), 0
    m, e = x.as_mantissa_exp()
    return m, int(e)


def _from_mpc(w):
    mr, er = _mpfr_to_mant(w.real)
    mi, ei = _mpfr_to_mant(w.imag)
    if mr == 0:
        er = ei
    if mi == 0:
        ei = er
    e = min(er, ei)
    return mr << (er - e), mi << (ei - e), e


def sqrt_principal(a: ComplexBall, prec: int) -> ComplexBall:
    """Ball containing the principal square roots of every point of ``a``.

    When the ball meets the branch cut, a ball centred at 0 that contains
    both square roots of every point is returned instead.
    """
    if a.contains_zero():
        raise DomainError("square root of a ball containing zero")
    if a.rad and a.meets_negative_axis():
        r = _UP.sqrt(a.abs_upper())
        return ComplexBall(0, 0, 0, r, prec)
    m = _mid_mpc(a)
    work = prec + 8
    for _ in range(6):
        with gmpy2.context(gmpy2.get_context(), precision=work):
            w = gmpy2.sqrt(m)
        wr, wi, we = _from_mpc(w)
        # exact residual w^2 - m certifies the midpoint error
        rr = wr * wr - wi * wi
        ri = 2 * wr * wi
        e2 = 2 * we
        if e2 <= a.exp:
            dre = rr - (a.re << (a.exp - e2))
            dim = ri - (a.im << (a.exp - e2))
            de = e2
        else:
            dre = (rr << (e2 - a.exp)) - a.re
            dim = (ri << (e2 - a.exp)) - a.im
            de = a.exp
        res = _hypot_up(dre, dim, de)
        w_lo = _hypot_dn(wr, wi, we)
        err = _UP.div(res, w_lo)
        # the nearest root is the principal one when w is safely right of the axis
        if _val_dn(wr, we) > err or (wr == 0 and a.rad == 0 and a.re < 0 and a.im == 0):
            break
        work *= 2
    else:
        r = _UP.sqrt(a.abs_upper())
        return ComplexBall(0, 0, 0, r, prec)
    rad = err
    if a.rad:
        m_lo = _hypot_dn(a.re, a.im, a.exp)
        rad = _UP.add(rad, _UP.div(a.rad, _DN.sqrt(m_lo)))
    return _finish(mpz(wr), mpz(wi), we, rad, prec)


def sqrt_near(a: ComplexBall, anchor: ComplexBall, prec: int) -> ComplexBall:
    """The square root of ``a`` lying on the same side as ``anchor``.

    The result is +-sqrt(a), whichever satisfies Re(root * conj(anchor)) > 0.
    Raises AmbiguousBranch when the radii do not allow a decision.
    """
    if a.contains_zero():
        raise DomainError("square root of a ball containing zero")
    if anchor.contains_zero():
        raise DomainError("anchor ball contains zero")
    if a.rad and a.meets_negative_axis():
        r = sqrt_principal(-a, prec).mul_i()
    else:
        r = sqrt_principal(a, prec)
    lo, hi = re_dot(r, anchor)
    if lo > 0:
        return r
    if hi < 0:
        return -r
    raise AmbiguousBranch("square root branch is not determined by the anchor")


# ---------------------------------------------------------------------------
# transcendental functions (Arb on the exact midpoint)
# ---------------------------------------------------------------------------

def _arb_of(x, e: int):
    return arb(fmpz(int(x))) * arb(2) ** e if x else arb(0)


def _acb_of_mid(a: ComplexBall):
    return acb(_arb_of(a.re, a.exp), _arb_of(a.im, a.exp))


def _arb_rad_up(x):
    r = x.rad()
    m, e = r.mid().man_exp()
    m = int(m)
    if m == 0:
        return _ZERO
    return _abs_up(mpz(m), int(e))


def _arb_mid(x):
    m, e = x.mid().man_exp()
    return mpz(int(m)), int(e)


def _ball_from_acb(z, prec: int, extra=_ZERO) -> ComplexBall:
    mr, er = _arb_mid(z.real)
    mi, ei = _arb_mid(z.imag)
    if mr == 0:
        er = ei
    if mi == 0:
        ei = er
    e = min(er, ei)
    rr = _arb_rad_up(z.real)
    ri = _arb_rad_up(z.imag)
    rad = _UP.sqrt(_UP.add(_UP.square(rr), _UP.square(ri)))
    rad = _UP.add(rad, extra)
    return _finish(mr << (er - e), mi << (ei - e), e, rad, prec)


def ball_from_arb(x, prec: int) -> ComplexBall:
    """Convert a real flint ``arb`` to a ComplexBall."""
    return _ball_from_acb(acb(x), prec)


def arb_interval(lo, hi):
    """An ``arb`` enclosing the real interval [lo, hi] given as mpfr bounds."""
    lo_d = Dyadic.from_mpfr(lo)
    hi_d = Dyadic.from_mpfr(hi)
    a = _arb_of(mpz(lo_d.mantissa), lo_d.exponent)
    b = _arb_of(mpz(hi_d.mantissa), hi_d.exponent)
    return a.union(b)


def real_arb(a: ComplexBall, part: str = "re"):
    """``arb`` enclosing the real (or imaginary) part of every point of ``a``."""
    if part == "re":
        return arb_interval(a.re_lower(), a.re_upper())
    return arb_interval(a.im_lower(), a.im_upper())


def _mag_up_of_arb(x):
    """Upper bound on |x| for a real arb, as mpfr."""
    u = x.abs_upper()
    m, e = u.mid().man_exp()
    m = int(m)
    if m == 0:
        return _ZERO
    return _UP.add(_abs_up(mpz(m), int(e)), _arb_rad_up(u))


def arb_upper(x):
    """Upper bound of a real arb as mpfr."""
    u = x.upper()
    m, e = u.mid().man_exp()
    m = int(m)
    base = _val_up(mpz(m), int(e)) if m else _ZERO
    return _UP.add(base, _arb_rad_up(u))


def arb_lower(x):
    lo = x.lower()
    m, e = lo.mid().man_exp()
    m = int(m)
    base = _val_dn(mpz(m), int(e)) if m else _ZERO
    return _DN.sub(base, _arb_rad_up(lo))


def exp(a: ComplexBall, prec: int) -> ComplexBall:
    """Ball containing exp(w) for every w in ``a``."""
    with _flint_ctx.workprec(prec + 16):
        e = _acb_of_mid(a).exp()
    out = _ball_from_acb(e, prec)
    if a.rad:
        grow = _UP.mul(out.abs_upper(), _UP.expm1(a.rad))
        out = out.add_error(grow)
    return out


def exp_pi_i(a: ComplexBall, prec: int) -> ComplexBall:
    """Ball containing exp(pi*i*w) for every w in ``a``."""
    with _flint_ctx.workprec(prec + 16):
        e = _acb_of_mid(a).exp_pi_i()
    out = _ball_from_acb(e, prec)
    if a.rad:
        pi_up = mpfr("3.1415926535897935")
        grow = _UP.mul(out.abs_upper(), _UP.expm1(_UP.mul(pi_up, a.rad)))
        out = out.add_error(grow)
    return out


def log(a: ComplexBall, prec: int) -> ComplexBall:
    """Principal logarithm; the ball must avoid the half-line (-inf, 0]."""
    if a.meets_negative_axis():
        raise DomainError("logarithm of a ball meeting the branch cut")
    with _flint_ctx.workprec(prec + 16):
        lz = _acb_of_mid(a).log()
    out = _ball_from_acb(lz, prec)
    if a.rad:
        m_lo = _DN.sub(_hypot_dn(a.re, a.im, a.exp), a.rad)
        out = out.add_error(_UP.div(a.rad, m_lo))
    return out


def pi(prec: int) -> ComplexBall:
    with _flint_ctx.workprec(prec + 16):
        p = arb.pi()
    return _ball_from_acb(acb(p), prec)


def omega8(k: int, prec: int) -> ComplexBall:
    """The eighth root of unity exp(2*pi*i*k/8)."""
    k %= 8
    if k % 2 == 0:
        return ComplexBall(*[(1, 0), (0, 1), (-1, 0), (0, -1)][k // 2], 0, _ZERO, prec)
    half = sqrt_principal(ComplexBall(1, 0, -1, _ZERO, prec + 8), prec + 8)  # sqrt(1/2)
    base = ComplexBall(half.re, half.re, half.exp, _UP.mul_2exp(half.rad, 1), prec)
    rot = [(1, 0), (0, 1), (-1, 0), (0, -1)][k // 2]
    return mul(base, ComplexBall(rot[0], rot[1], 0, _ZERO, prec), prec)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_NUM = r"(?:0x[0-9a-fA-F]+p[+-]?\d+|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
_TERM_RE = _re.compile(rf"([+-]?)\s*({_NUM})?\s*(\*?\s*[ij])?")


def _parse_real(tok: str) -> Fraction:
    if tok.lower().startswith("0x"):
        return Dyadic.parse(tok).to_fraction()
    return Fraction(tok)


def parse_complex_literal(text: str) -> tuple[Fraction, Fraction]:
    """Split a complex literal into exact rational real and imaginary parts."""
    s = text.strip().replace(" ", "")
    if not s:
        raise DomainError("empty complex literal")
    if s.startswith("(") and s.endswith(")"):
        s = s[1:-1]
    re_part = Fraction(0)
    im_part = Fraction(0)
    pos = 0
    seen = False
    while pos < len(s):
        m = _TERM_RE.match(s, pos)
        if not m or m.end() == pos or (m.group(2) is None and m.group(3) is None):
            raise DomainError(f"cannot parse complex literal {text!r}")
        sign = -1 if m.group(1) == "-" else 1
        val = _parse_real(m.group(2)) if m.group(2) else Fraction(1)
        if m.group(3):
            im_part += sign * val
        else:
            re_part += sign * val
        pos = m.end()
        seen = True
    if not seen:
        raise DomainError(f"cannot parse complex literal {text!r}")
    return re_part, im_part
