"""Certified summation of the theta series in genus 1 and 2.

    theta_{a,b}(z, tau) = sum_{m in Z^g} exp(pi i (m + a/2)^T tau (m + a/2)
                                         + 2 pi i (m + a/2)^T (z + b/2))

Terms are generated by multiplying consecutive ratios, so that each term costs
a couple of ball multiplications.  Everything outside the box
``max|m_i| <= R`` is discarded and accounted for by an explicit geometric
tail bound; ``R`` is increased until that bound is below a quarter of the
requested absolute error.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from flint import arb, ctx as _flint_ctx

from . import ball as B
from .ball import ComplexBall, Dyadic
from .errors import DomainError, PrecisionError

INFINITY = float("inf")
_LOG2E = 1.4426950408889634


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Characteristic:
    """A theta characteristic ``(a, b)`` with entries in {0, 1}."""

    a: tuple
    b: tuple

    def __post_init__(self):
        a = tuple(int(x) for x in self.a)
        b = tuple(int(x) for x in self.b)
        if len(a) != len(b) or len(a) not in (1, 2):
            raise ValueError("characteristic vectors must both have length 1 or 2")
        if any(x not in (0, 1) for x in a + b):
            raise ValueError("characteristic entries must be 0 or 1")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def g(self) -> int:
        return len(self.a)

    @property
    def is_even(self) -> bool:
        return sum(x * y for x, y in zip(self.a, self.b)) % 2 == 0

    @property
    def label(self) -> str:
        return "".join(map(str, self.a)) + "," + "".join(map(str, self.b))

    def __str__(self) -> str:
        return self.label

    @classmethod
    def parse(cls, text: str) -> "Characteristic":
        """Read ``"01,10"`` style labels (a-part, then b-part)."""
        sa, sb = text.replace("(", "").replace(")", "").split(",")
        return cls(tuple(int(c) for c in sa.strip()), tuple(int(c) for c in sb.strip()))

    @classmethod
    def from_indices(cls, ia: int, ib: int, g: int) -> "Characteristic":
        """Characteristic whose parts have binary expansions ``ia`` and ``ib``.

        The first coordinate is the most significant bit, so index 1 in genus
        2 is the vector (0, 1).
        """
        return cls(index_to_vec(ia, g), index_to_vec(ib, g))

    @property
    def indices(self) -> tuple[int, int]:
        return vec_to_index(self.a), vec_to_index(self.b)


def index_to_vec(i: int, g: int) -> tuple:
    return tuple((i >> (g - 1 - k)) & 1 for k in range(g))


def vec_to_index(v: Sequence[int]) -> int:
    out = 0
    for x in v:
        out = 2 * out + (int(x) & 1)
    return out


def all_characteristics(g: int, even_only: bool = False) -> list[Characteristic]:
    out = [Characteristic.from_indices(ia, ib, g) for ia in range(2 ** g) for ib in range(2 ** g)]
    return [c for c in out if c.is_even] if even_only else out


class PeriodPoint:
    """A point ``(z, tau)`` of C^g x H_g with rigorously checked positivity.

    ``tau`` is given as ``(tau,)`` in genus 1 and ``(tau11, tau12, tau22)``
    in genus 2.  ``z`` is optional and defaults to the zero vector.
    """

    __slots__ = ("g", "tau", "z")

    def __init__(self, g: int, tau: Sequence[ComplexBall], z: Optional[Sequence[ComplexBall]] = None):
        if g not in (1, 2):
            raise DomainError("only genus 1 and 2 are supported")
        tau = tuple(tau)
        if len(tau) != (1 if g == 1 else 3):
            raise DomainError("tau must have 1 entry in genus 1 and 3 entries in genus 2")
        if z is not None:
            z = tuple(z)
            if len(z) != g:
                raise DomainError("z must have g entries")
        self.g = g
        self.tau = tau
        self.z = z
        if not self.im_positive():
            raise DomainError("Im tau is not certified positive definite")

    @classmethod
    def g1(cls, tau, z=None, prec: int = 128) -> "PeriodPoint":
        return cls(1, (B.ball(tau, prec) if not isinstance(tau, ComplexBall) else tau,),
                   None if z is None else (z if isinstance(z, ComplexBall) else B.ball(z, prec),))

    @classmethod
    def g2(cls, t11, t12, t22, z=None, prec: int = 128) -> "PeriodPoint":
        conv = [t if isinstance(t, ComplexBall) else B.ball(t, prec) for t in (t11, t12, t22)]
        zz = None
        if z is not None:
            zz = [w if isinstance(w, ComplexBall) else B.ball(w, prec) for w in z]
        return cls(2, conv, zz)

    def midpoint(self) -> "PeriodPoint":
        """The same point with every radius dropped."""
        return PeriodPoint(self.g, [t.midpoint() for t in self.tau],
                           None if self.z is None else [w.midpoint() for w in self.z])

    def halved(self) -> "PeriodPoint":
        """(z, tau/2), computed exactly."""
        return PeriodPoint(self.g, [t.mul_2exp(-1) for t in self.tau], self.z)

    @property
    def has_z(self) -> bool:
        return self.z is not None and any(not (w.re == 0 and w.im == 0 and w.rad == 0) for w in self.z)

    def z_or_zero(self) -> tuple:
        if self.z is None:
            return tuple(ComplexBall() for _ in range(self.g))
        return self.z

    def im_positive(self) -> bool:
        if self.g == 1:
            return self.tau[0].im_lower() > 0
        return self.tau[0].im_lower() > 0 and arb_lower_float(det_im_arb(self)) > 0

    def max_radius(self):
        rads = [t.rad for t in self.tau]
        if self.z is not None:
            rads += [w.rad for w in self.z]
        return max(rads)

    def __repr__(self) -> str:
        zs = "" if self.z is None else f", z={list(self.z)}"
        return f"PeriodPoint(g={self.g}, tau={list(self.tau)}{zs})"


def arb_lower_float(x) -> float:
    return float(B.arb_lower(x))


def im_arb(x: ComplexBall):
    return B.real_arb(x, "im")


def det_im_arb(p: PeriodPoint):
    t11, t12, t22 = (im_arb(t) for t in p.tau)
    return t11 * t22 - t12 * t12


def lambda_min_lower(p: PeriodPoint):
    """Rigorous lower bound (as mpfr) on the smallest eigenvalue of Im tau.

    Genus 2 uses det/trace, which never exceeds the smallest eigenvalue.
    """
    with _flint_ctx.workprec(64):
        if p.g == 1:
            lam = B.arb_lower(im_arb(p.tau[0]))
        else:
            t11, _, t22 = (im_arb(t) for t in p.tau)
            lam = B.arb_lower(det_im_arb(p) / (t11 + t22))
    if lam <= 0:
        raise DomainError("Im tau is not certified positive definite")
    return lam


def _im_z_upper(p: PeriodPoint):
    """Upper bound on the euclidean norm of Im z."""
    if p.z is None:
        return B.mpfr(0)
    with _flint_ctx.workprec(64):
        s = arb(0)
        for w in p.z:
            y = im_arb(w).abs_upper()
            s += y * y
        return B.arb_upper(s.sqrt())


# ---------------------------------------------------------------------------
# tail bounds
# ---------------------------------------------------------------------------

def _tail_g1_arb(t, y, K):
    """Bound on 2 * sum_{j>=0} f(K+j) with f(x) = exp(-pi t x^2 + 2 pi x y)."""
    pi = arb.pi()
    rho = (-pi * t * (2 * K + 1) + 2 * pi * y).exp()
    if not (rho < 1):
        return None
    f = (-pi * t * K * K + 2 * pi * K * y).exp()
    return 2 * f / (1 - rho)


def tail_bound_g1(im_tau_lower, im_z_upper, R: int):
    """Upper bound on |sum_{|n| >= R} exp(pi i n^2 tau + 2 pi i n z)|.

    ``im_tau_lower`` and ``im_z_upper`` may be Dyadic, int, float or mpfr.
    Returns a Dyadic, or ``INFINITY`` when the geometric majorant diverges
    (the caller should then increase ``R``).
    """
    if R < 1:
        raise ValueError("R must be positive")
    with _flint_ctx.workprec(64):
        t = _num_arb(im_tau_lower)
        y = abs(_num_arb(im_z_upper))
        if not (t > 0):
            raise DomainError("Im tau lower bound must be positive")
        out = _tail_g1_arb(t, y, arb(R))
        if out is None:
            return INFINITY
        return Dyadic.from_mpfr(B.arb_upper(out))


def _num_arb(x):
    if isinstance(x, arb):
        return x
    if isinstance(x, Dyadic):
        return arb(x.mantissa) * arb(2) ** x.exponent
    if isinstance(x, int):
        return arb(x)
    d = B._as_dyadic(x)
    return arb(d.mantissa) * arb(2) ** d.exponent


def _tail_g2_arb(lam, y, K):
    """Bound on the lattice sum over max-norm shells s = K, K+1, ... .

    Each shell holds at most 8s+4 points, every point has euclidean norm at
    least s, and exp(-pi lam r^2 + 2 pi r y) is decreasing for r >= y/lam.
    """
    if not (K * lam > y):
        return None
    pi = arb.pi()
    rho = ((K + 1) / K) * (-pi * lam * (2 * K + 1) + 2 * pi * y).exp()
    if not (rho < 1):
        return None
    h = (-pi * lam * K * K + 2 * pi * K * y).exp()
    return (8 * K + 4) * h / (1 - rho)


def tail_bound_g2(im_tau, im_z_upper, R: int):
    """Upper bound on the genus-2 tail over ``max(|m1|, |m2|) >= R``.

    ``im_tau`` is ``(y11, y12, y22)`` (exact numbers); ``im_z_upper`` is a
    pair of upper bounds on |Im z_i|.  The smallest eigenvalue of Im tau is
    bounded below by det/trace.  Returns a Dyadic or ``INFINITY``.
    """
    if R < 1:
        raise ValueError("R must be positive")
    with _flint_ctx.workprec(64):
        y11, y12, y22 = (_num_arb(v) for v in im_tau)
        det = y11 * y22 - y12 * y12
        if not (det > 0 and y11 > 0):
            raise DomainError("Im tau is not positive definite")
        lam = det / (y11 + y22)
        yz = arb(0)
        for v in im_z_upper:
            yz += _num_arb(v) ** 2
        out = _tail_g2_arb(lam, yz.sqrt(), arb(R))
        if out is None:
            return INFINITY
        return Dyadic.from_mpfr(B.arb_upper(out))


def lambda_det_trace(y11, y12, y22) -> Dyadic:
    """det/trace lower bound for the smallest eigenvalue, rounded down."""
    with _flint_ctx.workprec(64):
        a, b, c = (_num_arb(v) for v in (y11, y12, y22))
        return Dyadic.from_mpfr(B.arb_lower((a * c - b * b) / (a + c)))


def _choose_cutoff(p: PeriodPoint, target: int, lam, yz) -> int:
    """Smallest box half-width R (from a heuristic start) whose tail is small."""
    lam_f = float(lam)
    y_f = float(yz)
    est = math.sqrt(max(target, 1) / (math.pi * lam_f * _LOG2E)) + y_f / lam_f
    R = max(2, int(math.ceil(est)) + 2)
    goal = arb(2) ** (-(target + 2))
    with _flint_ctx.workprec(64):
        lam_a = _num_arb(lam)
        y_a = _num_arb(yz)
        while True:
            if p.g == 1:
                # dropped |c| = |n + a/2| >= R + 1/2 and each value occurs twice
                bnd = _tail_g1_arb(lam_a, y_a, arb(R) + arb(1) / 2)
            else:
                bnd = _tail_g2_arb(lam_a, y_a, arb(R) + arb(1) / 2)
            if bnd is not None and bnd < goal:
                return R
            R += 1 if R < 64 else R // 8


# ---------------------------------------------------------------------------
# summation
# ---------------------------------------------------------------------------

def _row_sum(t0: ComplexBall, up0: ComplexBall, dn0: ComplexBall, step: ComplexBall, R: int, wp: int) -> ComplexBall:
    """sum_{m=-R..R} T_m where T_{m+1}/T_m starts at up0 (and T_{m-1}/T_m at dn0)
    and each ratio is multiplied by ``step`` after use."""
    total = t0
    term, ratio = t0, up0
    for _ in range(R):
        term = B.mul(term, ratio, wp)
        total = B.add(total, term, wp)
        ratio = B.mul(ratio, step, wp)
    term, ratio = t0, dn0
    for _ in range(R):
        term = B.mul(term, ratio, wp)
        total = B.add(total, term, wp)
        ratio = B.mul(ratio, step, wp)
    return total


def _half(x: ComplexBall) -> ComplexBall:
    return x.mul_2exp(-1)


def _sum_g1(ch: Characteristic, tau: ComplexBall, z: ComplexBall, R: int, wp: int) -> ComplexBall:
    a, b = ch.a[0], ch.b[0]
    q = B.exp_pi_i(tau, wp)
    q2 = B.sqr(q, wp)
    one = ComplexBall(1, 0, 0, B._ZERO, wp)
    arg_w = B.add(z.mul_2exp(1), ComplexBall(b, 0, 0, B._ZERO, wp), wp)
    w = B.exp_pi_i(arg_w, wp)
    wi = B.exp_pi_i(-arg_w, wp)
    # T0 = exp(pi i (a^2 tau / 4 + a z + a b / 2))
    if a:
        arg0 = B.add(B.add(tau.mul_2exp(-2), z, wp), ComplexBall(b, 0, -1, B._ZERO, wp), wp)
        t0 = B.exp_pi_i(arg0, wp)
        up0 = B.mul(q2, w, wp)
        dn0 = wi
    else:
        t0 = one
        up0 = B.mul(q, w, wp)
        dn0 = B.mul(q, wi, wp)
    return _row_sum(t0, up0, dn0, q2, R, wp)


def _sum_g2(ch: Characteristic, tau, z, R: int, wp: int) -> ComplexBall:
    a1, a2 = ch.a
    b1, b2 = ch.b
    t11, t12, t22 = tau
    z1, z2 = z
    e = lambda x: B.exp_pi_i(x, wp)  # noqa: E731
    q11, q22 = e(t11), e(t22)
    q11s, q22s = B.sqr(q11, wp), B.sqr(q22, wp)
    E, Ei = e(t12), e(-t12)
    E2, Ei2 = B.sqr(E, wp), B.sqr(Ei, wp)
    w1a = B.add(z1.mul_2exp(1), ComplexBall(b1, 0, 0, B._ZERO, wp), wp)
    w2a = B.add(z2.mul_2exp(1), ComplexBall(b2, 0, 0, B._ZERO, wp), wp)
    W1, W1i, W2, W2i = e(w1a), e(-w1a), e(w2a), e(-w2a)
    one = ComplexBall(1, 0, 0, B._ZERO, wp)

    # value at c = (a1/2, a2/2)
    arg = ComplexBall(0, 0, 0, B._ZERO, wp)
    if a1:
        arg = B.add(arg, t11.mul_2exp(-2), wp)
        arg = B.add(arg, z1, wp)
    if a2:
        arg = B.add(arg, t22.mul_2exp(-2), wp)
        arg = B.add(arg, z2, wp)
    if a1 and a2:
        arg = B.add(arg, t12.mul_2exp(-1), wp)
    arg = B.add(arg, ComplexBall(a1 * b1 + a2 * b2, 0, -1, B._ZERO, wp), wp)
    t00 = e(arg)

    def powk(x, xi, k):
        if k == 0:
            return one
        return x if k == 1 else xi

    q11_up = q11s if a1 else q11          # q11^(a1+1)
    q11_dn = one if a1 else q11           # q11^(1-a1)
    Ea1, Eia1 = powk(E, Ei, a1), powk(Ei, E, a1)

    def row(start, P, Pi):
        up0 = B.mul(B.mul(q11_up, P, wp), W1, wp)
        dn0 = B.mul(B.mul(q11_dn, Pi, wp), W1i, wp)
        return _row_sum(start, up0, dn0, q11s, R, wp)

    # E^(2 c2) and its inverse on the starting row c2 = a2/2
    P0 = E if a2 else one
    Pi0 = Ei if a2 else one
    total = row(t00, P0, Pi0)

    # upward rows
    start, P, Pi = t00, P0, Pi0
    ratio = B.mul(B.mul(Ea1, q22s if a2 else q22, wp), W2, wp)
    for _ in range(R):
        start = B.mul(start, ratio, wp)
        P, Pi = B.mul(P, E2, wp), B.mul(Pi, Ei2, wp)
        total = B.add(total, row(start, P, Pi), wp)
        ratio = B.mul(ratio, q22s, wp)
    # downward rows
    start, P, Pi = t00, P0, Pi0
    ratio = B.mul(B.mul(Eia1, one if a2 else q22, wp), W2i, wp)
    for _ in range(R):
        start = B.mul(start, ratio, wp)
        P, Pi = B.mul(P, Ei2, wp), B.mul(Pi, E2, wp)
        total = B.add(total, row(start, P, Pi), wp)
        ratio = B.mul(ratio, q22s, wp)
    return total


def _tail_for(p: PeriodPoint, R: int, lam, yz):
    with _flint_ctx.workprec(64):
        K = arb(R) + arb(1) / 2
        if p.g == 1:
            bnd = _tail_g1_arb(_num_arb(lam), _num_arb(yz), K)
        else:
            bnd = _tail_g2_arb(_num_arb(lam), _num_arb(yz), K)
        if bnd is None:
            return None
        return B.arb_upper(bnd)


def _radius_bits(rad) -> int:
    if rad == 0:
        return 10 ** 9
    return -int(B.gmpy2.get_exp(rad))


def guard_bits(default: int) -> int:
    """Guard-bit default, overridable through THETA_GUARD_BITS."""
    val = os.environ.get("THETA_GUARD_BITS")
    if val is None:
        return default
    try:
        return max(0, int(val))
    except ValueError:
        return default


def theta_naive(ch: Characteristic, p: PeriodPoint, target: int) -> ComplexBall:
    """Ball containing theta_{a,b}(z, tau) with radius at most 2**-target."""
    if ch.g != p.g:
        raise DomainError("characteristic and period point have different genus")
    if target < 1:
        raise DomainError("target precision must be at least 1 bit")
    if not p.has_z and not ch.is_even:
        return ComplexBall(0, 0, 0, B._ZERO, target)
    in_bits = _radius_bits(p.max_radius())
    if in_bits < target:
        raise PrecisionError(f"input radius limits the result to about {in_bits} bits",
                             achievable=in_bits)
    lam = lambda_min_lower(p)
    yz = _im_z_upper(p)
    R = _choose_cutoff(p, target, lam, yz)
    tail = _tail_for(p, R, lam, yz)
    nterms = (2 * R + 1) ** p.g
    headroom = int(math.ceil(math.pi * float(yz) ** 2 / (float(lam) * math.log(2)))) if yz else 0
    extra = 10 + guard_bits(0)
    achieved = None
    for _attempt in range(4):
        wp = target + extra + headroom + 2 * int(math.ceil(math.log2(nterms + 1))) + 4
        if p.g == 1:
            s = _sum_g1(ch, p.tau[0].with_prec(wp), p.z_or_zero()[0].with_prec(wp), R, wp)
        else:
            s = _sum_g2(ch, tuple(t.with_prec(wp) for t in p.tau),
                        tuple(w.with_prec(wp) for w in p.z_or_zero()), R, wp)
        s = s.add_error(tail)
        if s.rad <= B._pow2(-target):
            return s.with_prec(target + 8)
        achieved = _radius_bits(s.rad)
        extra = 2 * extra + 32
    raise PrecisionError(f"could not reach {target} bits (got about {achieved})", achievable=achieved)


def theta_naive_relative(ch: Characteristic, p: PeriodPoint, bits: int = 32) -> ComplexBall:
    """Low-precision evaluation with ``bits`` bits relative to |theta|.

    Used to recover signs of square roots; raises PrecisionError if the
    value cannot be separated from zero at reasonable cost.
    """
    target = bits
    for _ in range(8):
        v = theta_naive(ch, p, target)
        lo = v.abs_lower()
        if lo > 0 and v.rad <= B._DN.mul(lo, B._pow2(-bits)):
            return v
        if lo > 0:
            target += max(bits, -int(B.gmpy2.get_exp(lo)) + 2)
        else:
            target *= 2
    raise PrecisionError("theta value too close to zero for relative evaluation")


def theta_squares_naive(p: PeriodPoint, target: int,
                        chars: Optional[Iterable[Characteristic]] = None) -> dict:
    """Squared theta values with radius at most 2**-target, keyed by characteristic."""
    if chars is None:
        chars = all_characteristics(p.g, even_only=not p.has_z)
    out = {}
    for ch in chars:
        extra = 8
        for _ in range(4):
            v = theta_naive(ch, p, target + extra)
            sq = B.sqr(v, target + extra + 16)
            if sq.rad <= B._pow2(-target):
                out[ch] = sq
                break
            extra += max(8, 2 + int(B.gmpy2.get_exp(v.abs_upper())))
        else:
            raise PrecisionError(f"squared theta for {ch} did not reach {target} bits")
    return out
