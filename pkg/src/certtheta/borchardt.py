"""Borchardt sequences, their means, and sign-path following.

Indices ``b`` of a genus-g term run over range(2**g); addition in
(Z/2Z)^g is XOR.  A term is a tuple of 2**g ComplexBalls ``s`` and, for
extended sequences, a second tuple ``u``.

One Borchardt step chooses square roots t_b of s_b and forms

    s'_b = 2**-g * sum_{b1 ^ b2 = b} t_b1 * t_b2,
    u'_b = 2**-g * sum_{b1 ^ b2 = b} v_b1 * t_b2      (extended part).

Means are computed with certified stopping rules: once the entries of a
term agree well enough, the remaining distance to the limit is bounded in
closed form and added to the radius of the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import gmpy2
from flint import arb, ctx as _flint_ctx

from . import ball as B
from .ball import ComplexBall, Dyadic
from .errors import (AmbiguousBranch, BadSignPath, DomainError, Indeterminate,
                     NotGoodPosition, OutOfRadius, PrecisionError)

_UP, _DN = B._UP, B._DN
_ZERO = B._ZERO
ANCHOR_BITS = 64
MAX_STEPS = 400


@dataclass(frozen=True)
class BorchardtTerm:
    s: tuple
    u: Optional[tuple] = None

    def __post_init__(self):
        s = tuple(self.s)
        n = len(s)
        if n not in (2, 4):
            raise DomainError("a Borchardt term has 2 or 4 entries")
        object.__setattr__(self, "s", s)
        if self.u is not None:
            u = tuple(self.u)
            if len(u) != n:
                raise DomainError("u and s parts must have the same length")
            object.__setattr__(self, "u", u)

    @property
    def g(self) -> int:
        return 1 if len(self.s) == 2 else 2

    @property
    def extended(self) -> bool:
        return self.u is not None


@dataclass(frozen=True)
class SignPath:
    """Square-root anchors recorded along the first steps of a sequence.

    ``steps[n]`` is a pair ``(t_anchors, v_anchors)``; ``v_anchors`` is None
    for plain sequences.  ``first`` is the recorded initial term.
    """

    first: BorchardtTerm
    steps: tuple = ()

    def to_dict(self) -> dict:
        def row(xs):
            return None if xs is None else [x.to_dict() for x in xs]
        return {
            "first": {"s": row(self.first.s), "u": row(self.first.u)},
            "steps": [{"t": row(t), "v": row(v)} for t, v in self.steps],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SignPath":
        def row(xs):
            return None if xs is None else tuple(ComplexBall.from_dict(x, ANCHOR_BITS) for x in xs)
        first = BorchardtTerm(row(d["first"]["s"]), row(d["first"]["u"]))
        return cls(first, tuple((row(st["t"]), row(st["v"])) for st in d["steps"]))


@dataclass
class BorchardtBounds:
    """Auxiliary data controlling the radius on which mean_follow is valid."""

    n0: int
    M0: float
    m_inf: float
    m_n: list = field(default_factory=list)
    z0: Optional[ComplexBall] = None
    rho_disk: Optional[float] = None
    extended: bool = False

    def __post_init__(self):
        if len(self.m_n) != self.n0:
            raise DomainError("need one lower bound m_n per bad step")
        if not (0 < self.m_inf < self.M0) or any(not (0 < m < self.M0) for m in self.m_n):
            raise DomainError("bounds must satisfy 0 < m < M0")


# ---------------------------------------------------------------------------
# good position
# ---------------------------------------------------------------------------

def is_good_position(vals: Sequence[ComplexBall]) -> Optional[bool]:
    """True/False if the values certainly are/aren't in an open quarter plane.

    A finite set lies in an open quarter plane exactly when every pair
    makes an angle < pi/2, i.e. Re(x * conj(y)) > 0.  Returns None when the
    radii do not allow a decision.
    """
    for v in vals:
        if v.contains_zero():
            return None
    undecided = False
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            lo, hi = B.re_dot(vals[i], vals[j])
            if hi <= 0:
                return False
            if lo <= 0:
                undecided = True
    return None if undecided else True


def _check_good(vals, what: str):
    st = is_good_position(vals)
    if st is None:
        raise Indeterminate(f"cannot decide good position of the {what} at current precision")
    if not st:
        raise NotGoodPosition(f"the {what} are not in good position")


# ---------------------------------------------------------------------------
# steps
# ---------------------------------------------------------------------------

def _combine_ss(t, s, prec):
    """s'_b from square roots t (using t_b^2 = s_b for the b = 0 entry)."""
    n = len(t)
    out = [None] * n
    acc = s[0]
    for b in range(1, n):
        acc = B.add(acc, s[b], prec)
    out[0] = acc.mul_2exp(-(n.bit_length() - 1))
    for b in range(1, n):
        acc = None
        for b1 in range(n):
            b2 = b1 ^ b
            if b1 < b2:
                p = B.mul(t[b1], t[b2], prec)
                acc = p if acc is None else B.add(acc, p, prec)
        out[b] = acc.mul_2exp(1 - (n.bit_length() - 1))
    return tuple(out)


def _combine_vt(v, t, prec):
    n = len(t)
    out = []
    for b in range(n):
        acc = None
        for b1 in range(n):
            p = B.mul(v[b1], t[b1 ^ b], prec)
            acc = p if acc is None else B.add(acc, p, prec)
        out.append(acc.mul_2exp(-(n.bit_length() - 1)))
    return tuple(out)


def _good_roots(vals, prec, what):
    """Square roots in good position, canonicalized by a principal b=0 root."""
    for x in vals:
        if x.contains_zero():
            raise Indeterminate(f"a {what} entry may be zero")
    anchor = B.sqrt_principal(vals[0].midpoint(), 64)
    if anchor.contains_zero():
        anchor = B.sqrt_principal(vals[0].midpoint(), prec)
    try:
        roots = tuple(B.sqrt_near(x, anchor, prec) for x in vals)
    except AmbiguousBranch as exc:
        raise Indeterminate(str(exc)) from None
    _check_good(roots, f"{what} square roots")
    return roots


def _record(xs):
    return tuple(B._finish(x.re, x.im, x.exp, x.rad, ANCHOR_BITS) for x in xs)


def step_good(t: BorchardtTerm, prec: int):
    """One good step; returns ``(next_term, (t_anchors, v_anchors))``."""
    roots = _good_roots(t.s, prec, "s")
    s_next = _combine_ss(roots, t.s, prec)
    if t.u is None:
        return BorchardtTerm(s_next), (_record(roots), None)
    vroots = _good_roots(t.u, prec, "u")
    u_next = _combine_vt(vroots, roots, prec)
    return BorchardtTerm(s_next, u_next), (_record(roots), _record(vroots))


def _roots_from_anchors(vals, anchors, prec, what):
    out = []
    for x, a in zip(vals, anchors):
        if x.contains_zero():
            raise DomainError(f"a {what} entry may be zero")
        # the anchor must be a square root of a point within |a|^2/2 of x
        gap = B.sub(B.sqr(a, prec), x, prec).abs_lower()
        if gap >= _DN.mul_2exp(_DN.square(a.abs_lower()), -1):
            raise BadSignPath(f"recorded {what} anchor does not match the current term")
        try:
            out.append(B.sqrt_near(x, a, prec))
        except AmbiguousBranch as exc:
            raise BadSignPath(str(exc)) from None
    return tuple(out)


def step(t: BorchardtTerm, anchors, prec: int) -> BorchardtTerm:
    """Borchardt step whose square roots follow the given anchors."""
    t_anchors, v_anchors = anchors
    roots = _roots_from_anchors(t.s, t_anchors, prec, "s")
    s_next = _combine_ss(roots, t.s, prec)
    if t.u is None:
        return BorchardtTerm(s_next)
    if v_anchors is None:
        raise BadSignPath("extended step needs anchors for the u part")
    vroots = _roots_from_anchors(t.u, v_anchors, prec, "u")
    return BorchardtTerm(s_next, _combine_vt(vroots, roots, prec))


# ---------------------------------------------------------------------------
# plain mean
# ---------------------------------------------------------------------------

def _spread(s):
    """Upper bound on max_b |s_b - s_0| over all points of the balls."""
    d = _ZERO
    for x in s[1:]:
        diff = B.sub(x, s[0], max(x.prec, 64) + 8)
        d = max(d, diff.abs_upper())
    return d


def _max_abs(xs):
    return max(x.abs_upper() for x in xs)


def _work_prec(target: int, scale_bits: int = 0) -> int:
    return target + 24 + 2 * max(1, int(target).bit_length()) + max(0, scale_bits)


def _mean_good_at(s, target: int, wp: int, trace):
    t = BorchardtTerm(tuple(x.with_prec(wp) for x in s))
    goal = B._pow2(-target - 1)
    for n in range(MAX_STEPS):
        s_now = t.s
        d = _spread(s_now)
        s0_lo = s_now[0].abs_lower()
        if trace is not None:
            trace.append({"n": n, "spread": d})
        if s0_lo > 0 and d < _DN.mul_2exp(s0_lo, -3):
            # quadratic regime with eps = 4 d / |s_0|
            eps = _UP.div(_UP.mul_2exp(d, 2), s0_lo)
            x = _UP.mul(eps, _UP.div(7, 8))
            M = _max_abs(s_now)
            tail = _UP.mul(_UP.div(_UP.mul(2, M), 7), _UP.div(_UP.square(x), _DN.sub(1, x)))
            if tail <= goal or d == 0:
                return _mean(s_now, wp).add_error(tail)
        t, _ = step_good(t, wp)
    raise PrecisionError("Borchardt sequence did not reach the convergence region")


def _mean(s, prec):
    acc = s[0]
    for x in s[1:]:
        acc = B.add(acc, x, prec)
    return acc.mul_2exp(-(len(s).bit_length() - 1))


def mean_good(start, target: int, trace: Optional[list] = None) -> ComplexBall:
    """Borchardt mean of the sequence with good steps only.

    The result contains the mean and has radius at most 2**-target unless
    the input radii make that impossible (PrecisionError).
    ``trace``, if given, receives one record per step with the spread
    max_b |s_b - s_0|.
    """
    s = start.s if isinstance(start, BorchardtTerm) else tuple(start)
    scale = int(gmpy2.get_exp(_max_abs(s))) if _max_abs(s) > 0 else 0
    wp = _work_prec(target, scale)
    return _with_retries(lambda w: _mean_good_at(s, target, w, trace if trace is None else _cleared(trace)),
                         target, wp, "mean")


def _cleared(lst):
    lst.clear()
    return lst


def _with_retries(run, target: int, wp: int, what: str):
    """Run ``run(wp)``; raise precision on indeterminate branches or wide output."""
    last = None
    achievable = None
    for _ in range(5):
        try:
            out = run(wp)
        except Indeterminate as exc:
            last = exc
            wp *= 2
            continue
        if out.rad <= B._pow2(-target):
            return out
        achievable = -int(gmpy2.get_exp(out.rad))
        last = None
        wp += (target - achievable) + 32
    if last is not None:
        raise NotGoodPosition(f"good position undecidable after precision retries: {last}")
    raise PrecisionError(f"{what} only certified to about {achievable} bits", achievable=achievable)


# ---------------------------------------------------------------------------
# extended mean
# ---------------------------------------------------------------------------

@dataclass
class ExtWitness:
    n: int
    z0: ComplexBall
    rho: object
    m: object
    M: object
    B1: object
    B2: object
    k: int


def _ext_witness(term: BorchardtTerm, n: int) -> Optional[ExtWitness]:
    s, u = term.s, term.u
    z0 = B._finish(s[0].re, s[0].im, s[0].exp, _ZERO, 64).midpoint()
    rho = _ZERO
    for x in s:
        rho = max(rho, _UP.add(B.sub(x.midpoint(), z0, 128).abs_upper(), x.rad))
    z_lo = z0.abs_lower()
    if z_lo <= 0 or not (_UP.mul(rho, 17) < z_lo):
        return None
    ua = B._finish(u[0].re, u[0].im, u[0].exp, _ZERO, 64).midpoint()
    ua_up = ua.abs_upper()
    if ua_up == 0:
        return None
    m0 = None
    for x in u:
        lo, _ = B.re_dot(x, ua)
        val = _DN.div(lo, ua_up)
        m0 = val if m0 is None else min(m0, val)
    if m0 <= 0:
        return None
    M0 = _max_abs(u)
    z_up = z0.abs_upper()
    M = max(_UP.add(z_up, rho), M0, B.mpfr(1))
    m = min(_DN.sub(z_lo, rho), m0, B.mpfr(1))
    Bc = _UP.mul(_UP.mul(_UP.div(5, 4), _UP.sqrt(_UP.div(M, m))), z_up)
    Bp = _UP.add(_UP.mul(2, z_up), _UP.div(_UP.add(_UP.mul(_UP.mul(2, M), Bc), _UP.square(Bc)), _DN.square(m)))
    k = 1
    while _UP.mul(Bp, B._pow2(-(2 ** (k - 1)))) > 0.5:
        k += 1
    return ExtWitness(n, z0, rho, m, M, Bc, Bp, k)


def _tail_T(Bp, K: int):
    """2^(K+2) * B' * 2^(-2^(K-1)), computed in the exponent."""
    return gmpy2.mul_2exp(Bp, K + 2 - 2 ** (K - 1))


def _mean_ext_at(term: BorchardtTerm, target: int, wp: int, info: Optional[dict]):
    t = BorchardtTerm(tuple(x.with_prec(wp) for x in term.s), tuple(x.with_prec(wp) for x in term.u))
    wit = None
    for n in range(MAX_STEPS):
        wit = _ext_witness(t, n)
        if wit is not None:
            break
        t, _ = step_good(t, wp)
    if wit is None:
        raise PrecisionError("extended Borchardt sequence never reached the convergence region")
    goal = B._pow2(-target - 2)
    K = max(wit.k, 2)
    # rough magnitude estimate of the output from the current terms
    probe = _ext_value(t, wit.n, 0, wp, 64)
    lam_up = probe.abs_upper() if not probe.contains_zero() else B.mpfr(1)
    lam_up = _UP.mul(max(lam_up, B.mpfr(1)), 4)
    while True:
        T = _tail_T(wit.B2, K)
        err = _UP.mul(_UP.mul(lam_up, 2), gmpy2.mul_2exp(T, wit.n))
        if err <= goal:
            break
        K += 1
    for _ in range(K):
        t, _ = step_good(t, wp)
    n_total = wit.n + K
    lam_bits = max(0, int(gmpy2.get_exp(lam_up)))
    lam = _ext_value(t, n_total, target + lam_bits, wp, None)
    rel = gmpy2.mul_2exp(_tail_T(wit.B2, K), wit.n + 1)
    if rel > 1:
        raise PrecisionError("extended mean tail bound too large")
    lam = lam.add_error(_UP.mul(lam.abs_upper(), _UP.mul(rel, 2)))
    if info is not None:
        info.update({"witness_step": wit.n, "k": wit.k, "K": K, "B_prime": float(wit.B2),
                     "M": float(wit.M), "m": float(wit.m), "steps": n_total})
    return lam


def _ext_value(t: BorchardtTerm, n: int, target: int, wp: int, low: Optional[int]):
    """mu * (u_0 / mu)^(2^n) evaluated at term index n."""
    prec = wp if low is None else low
    want = (target if low is None else low - 8) + n + 8
    # never ask the inner mean for more than the s entries carry
    worst = max(x.rad for x in t.s)
    if worst > 0:
        want = min(want, -int(gmpy2.get_exp(worst)) - 4)
    mu = mean_good(BorchardtTerm(tuple(x.with_prec(prec) for x in t.s)), want)
    q = B.div(t.u[0], mu, prec)
    for _ in range(n):
        q = B.sqr(q, prec)
    return B.mul(mu, q, prec)


def mean_ext_good(start: BorchardtTerm, target: int, bounds: Optional[BorchardtBounds] = None,
                  info: Optional[dict] = None) -> ComplexBall:
    """Extended Borchardt mean lambda(u, s) with good steps only.

    The function steps forward until it can certify that the s part lies in
    a disk D_rho(z0)^(2^g) with rho < |z0|/17 and the u part in a quarter
    plane, then applies the explicit tail estimate.  ``bounds`` is accepted
    for interface symmetry; all constants are recomputed a posteriori.
    """
    if start.u is None:
        raise DomainError("mean_ext_good needs an extended term")
    M = max(_max_abs(start.s), _max_abs(start.u))
    scale = int(gmpy2.get_exp(M)) if M > 0 else 0
    wp = _work_prec(target, scale) + 2 * max(1, target.bit_length()) + 16
    return _with_retries(lambda w: _mean_ext_at(start, target, w, info), target, wp, "extended mean")


def ext_modulus_bracket(M, m):
    """The a priori bracket [exp(-28 L^2), exp(20 L^2)], L = log(4M/m), as floats."""
    L = math.log(4 * M / m)
    return math.exp(-28 * L * L), math.exp(20 * L * L)


# ---------------------------------------------------------------------------
# following a sign path
# ---------------------------------------------------------------------------

def radius_follow(bounds: BorchardtBounds) -> Dyadic:
    """The radius rho of the polydisk on which mean_follow is analytic, rounded down."""
    with _flint_ctx.workprec(80):
        M0 = _arb(bounds.M0)
        ms = [_arb(m) for m in bounds.m_n] + [_arb(bounds.m_inf)]
        best = None
        prod = arb(1)
        for n, mn in enumerate(ms):
            cand = B.arb_lower(mn / 2 * prod)
            best = cand if best is None else min(best, cand)
            prod = prod * (mn / (2 * M0 + mn)).sqrt()
        return Dyadic.from_mpfr(best)


def _arb(x):
    if isinstance(x, Dyadic):
        return arb(x.mantissa) * arb(2) ** x.exponent
    d = B._as_dyadic(x)
    return arb(d.mantissa) * arb(2) ** d.exponent


def record_path(first: BorchardtTerm, n0: int, prec: int = 128, choose=None) -> SignPath:
    """Record the first ``n0`` square-root choices along a sequence.

    ``choose(n, term)`` may return explicit root tuples ``(t, v)`` for step
    n; by default good roots are used.
    """
    steps = []
    t = first
    for n in range(n0):
        if choose is not None:
            roots, vroots = choose(n, t)
            anchors = (_record(roots), None if vroots is None else _record(vroots))
            t = step(t, anchors, prec)
        else:
            t, anchors = step_good(t, prec)
        steps.append(anchors)
    rec_first = BorchardtTerm(_record(first.s), None if first.u is None else _record(first.u))
    return SignPath(rec_first, tuple(steps))


def _distance_up(a: BorchardtTerm, b: BorchardtTerm):
    d = _ZERO
    pairs = list(zip(a.s, b.s))
    if a.u is not None and b.u is not None:
        pairs += list(zip(a.u, b.u))
    for x, y in pairs:
        d = max(d, B.sub(x, y.midpoint(), max(x.prec, 64) + 8).abs_upper())
    return d


def mean_follow(start: BorchardtTerm, path: SignPath, bounds: BorchardtBounds, target: int,
                info: Optional[dict] = None) -> ComplexBall:
    """Mean of the sequence starting at ``start`` that follows ``path``.

    The first ``bounds.n0`` steps use the recorded anchors; afterwards all
    steps are good and mean_good (or mean_ext_good) finishes the job.
    """
    rho = radius_follow(bounds).to_mpfr()
    if not (_distance_up(start, path.first) < rho):
        raise OutOfRadius("starting point is not certified to lie in the analyticity polydisk")
    if len(path.steps) < bounds.n0:
        raise BadSignPath("sign path is shorter than the number of bad steps")
    scale = int(gmpy2.get_exp(B.mpfr(bounds.M0) + 1))
    wp = _work_prec(target, scale) + 32
    t = BorchardtTerm(tuple(x.with_prec(wp) for x in start.s),
                      None if start.u is None else tuple(x.with_prec(wp) for x in start.u))
    for n in range(bounds.n0):
        t = step(t, path.steps[n], wp)
    if t.u is None:
        return mean_good(t, target)
    return mean_ext_good(t, target, bounds, info)
