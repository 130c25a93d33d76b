"""Argument reduction and the uniform genus-2 algorithm.

Genus 1: the usual SL2(Z) reduction of tau and the lattice reduction of z,
followed for theta functions by halving z into the box where the Newton
scheme applies and climbing back with the z-duplication formulas.

Genus 2: a reduction of tau towards the Siegel fundamental domain, and the
uniform algorithm for theta constants.  The latter applies the maps

    D1(tau) = tau / 2,    D2(tau) = [[2 tau11, tau12], [tau12, tau22 / 2]]

until the point is either close to the cusp (direct summation is cheap) or
inside the compact set where the Newton scheme works, and then climbs back
with duplication formulas.  Square roots on the climb are chosen by good
position when the hypotheses guaranteeing it are verified, and by a low
precision direct evaluation otherwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import gmpy2
from gmpy2 import mpz

from . import ball as B
from .ball import ComplexBall
from .borchardt import _good_roots
from .errors import (BadSignPath, DomainError, Indeterminate, NotGoodPosition, PrecisionError,
                     ThetaError)
from .naive import (Characteristic, PeriodPoint, all_characteristics, index_to_vec,
                    theta_naive, theta_naive_relative, vec_to_index)
from .symplectic import (S1, act, as_matrix, char_action, det_factor, embed_g1, identity,
                         inverse, is_symplectic, kappa2, matmul, root_of_unity, transform_squares,
                         translation)

# The tuple of characteristics whose theta values at D2(tau) give back the
# theta constants at tau.
J_TUPLE = (
    Characteristic((0, 0), (0, 0)),
    Characteristic((0, 0), (0, 1)),
    Characteristic((1, 0), (0, 0)),
    Characteristic((1, 0), (0, 1)),
)

DEFAULT_C = 10
DEFAULT_C2 = Fraction(11, 10)
MAX_ITER = 1000

_HALF = Fraction(1, 2)


# ---------------------------------------------------------------------------
# small exact helpers
# ---------------------------------------------------------------------------

def _re(x: ComplexBall) -> Fraction:
    return x.mid_re.to_fraction()


def _im(x: ComplexBall) -> Fraction:
    return x.mid_im.to_fraction()


def _round(q: Fraction) -> int:
    return math.floor(q + _HALF)


def _add_int(x: ComplexBall, n: int) -> ComplexBall:
    """x + n computed exactly."""
    if n == 0:
        return x
    if x.exp <= 0:
        return ComplexBall(x.re + (mpz(n) << -x.exp), x.im, x.exp, x.rad, x.prec)
    return ComplexBall((x.re << x.exp) + n, x.im << x.exp, 0, x.rad, x.prec)


def _apply(gamma, p: PeriodPoint, wp: int) -> PeriodPoint:
    """gamma tau, exactly when gamma is a translation (up to sign)."""
    g = p.g
    n = 2 * g
    C = [gamma[g + i][:g] for i in range(g)]
    A = [gamma[i][:g] for i in range(g)]
    if not any(any(r) for r in C):
        s = A[0][0]
        if s in (1, -1) and all(A[i][j] == (s if i == j else 0) for i in range(g) for j in range(g)):
            # A = D = s I, so gamma tau = tau + s B
            Bm = [[s * gamma[i][g + j] for j in range(g)] for i in range(g)]
            idx = [(0, 0)] if g == 1 else [(0, 0), (0, 1), (1, 1)]
            return PeriodPoint(g, [_add_int(t, Bm[i][j]) for t, (i, j) in zip(p.tau, idx)])
    assert len(gamma) == n
    return act(gamma, p, wp)[0]


def _det_complex(gamma, t) -> complex:
    """|det(C tau + D)| in double precision (decisions only)."""
    g = len(gamma) // 2
    C = [row[:g] for row in gamma[g:]]
    D = [row[g:] for row in gamma[g:]]
    if g == 1:
        return abs(C[0][0] * t[0][0] + D[0][0])
    m = [[sum(C[i][k] * t[k][j] for k in range(2)) + D[i][j] for j in range(2)] for i in range(2)]
    return abs(m[0][0] * m[1][1] - m[0][1] * m[1][0])


def _point_complex(p: PeriodPoint):
    if p.g == 1:
        return [[complex(p.tau[0])]]
    a, b, c = (complex(t) for t in p.tau)
    return [[a, b], [b, c]]


def _radius_bits(rad) -> int:
    if rad == 0:
        return 1 << 30
    return -int(gmpy2.get_exp(rad))


def _point_to_dict(p: PeriodPoint) -> dict:
    d = {"genus": p.g, "tau": [t.to_dict() for t in p.tau]}
    if p.z is not None:
        d["z"] = [w.to_dict() for w in p.z]
    return d


def _point_from_dict(d: dict, prec: int = 128) -> PeriodPoint:
    tau = [ComplexBall.from_dict(t, prec) for t in d["tau"]]
    z = [ComplexBall.from_dict(w, prec) for w in d["z"]] if "z" in d else None
    return PeriodPoint(d["genus"], tau, z)


def _points_overlap(p: PeriodPoint, q: PeriodPoint) -> bool:
    if p.g != q.g or len(p.tau) != len(q.tau):
        return False
    if not all(a.overlaps(b) for a, b in zip(p.tau, q.tau)):
        return False
    if p.z is not None and q.z is not None:
        return all(a.overlaps(b) for a, b in zip(p.z, q.z))
    return True


# ---------------------------------------------------------------------------
# fundamental domain inequalities
# ---------------------------------------------------------------------------

def _abs_re_le(t: ComplexBall, bound: Fraction) -> bool:
    b = B._UP.div(mpz(bound.numerator), mpz(bound.denominator))
    return t.re_upper() <= b and t.re_lower() >= -b


def f1_facts(p: PeriodPoint) -> dict:
    t = p.tau[0]
    return {"|Re tau| <= 1/2": _abs_re_le(t, _HALF), "|tau| >= 1": t.abs_lower() >= 1}


def f2_facts(p: PeriodPoint, re11_bound: Fraction = _HALF) -> dict:
    """The defining inequalities of the genus-2 domain, checked rigorously.

    ``re11_bound`` relaxes the bound on |Re tau11| (used at D2 images).
    """
    t11, t12, t22 = p.tau
    y12 = max(abs(t12.im_upper()), abs(t12.im_lower()))
    return {
        "|Re tau11| <= %s" % re11_bound: _abs_re_le(t11, Fraction(re11_bound)),
        "|Re tau12| <= 1/2": _abs_re_le(t12, _HALF),
        "|Re tau22| <= 1/2": _abs_re_le(t22, _HALF),
        "2|Im tau12| <= Im tau11": B._UP.mul(y12, 2) <= t11.im_lower(),
        "Im tau11 <= Im tau22": t11.im_upper() <= t22.im_lower(),
        "|tau11| >= 1": t11.abs_lower() >= 1,
        "|tau22| >= 1": t22.abs_lower() >= 1,
    }


def _require(facts: dict, what: str):
    bad = [k for k, ok in facts.items() if not ok]
    if bad:
        raise DomainError(f"{what}: " + "; ".join(f"not certified: {k}" for k in bad))


def check_F2(p: PeriodPoint) -> dict:
    facts = f2_facts(p)
    _require(facts, "tau does not satisfy the genus-2 domain inequalities")
    return facts


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

@dataclass
class ReductionCertificate:
    """Everything needed to replay a reduction or a duplication ladder.

    ``gamma`` maps the input tau to the reduced tau.  ``z_shift = (m, n)``
    records z' = z - m - n tau (genus-1 functions) and ``halvings`` the
    number of halvings of z' before the Newton scheme.  ``dup_ladder`` lists
    the maps of the uniform algorithm: {"op": "D2", "shift": S} (D2 followed
    by tau11 -> tau11 - S[0][0]) or {"op": "D1"}.  ``signs`` has one entry
    per rung of the climb, naming how square roots were chosen.
    """

    genus: int
    gamma: tuple
    z_shift: Optional[tuple] = None
    halvings: int = 0
    dup_ladder: list = field(default_factory=list)
    signs: list = field(default_factory=list)
    top: dict = field(default_factory=dict)
    certified: bool = True
    reduced: Optional[dict] = None

    def __post_init__(self):
        self.gamma = as_matrix(self.gamma)
        if len(self.gamma) != 2 * self.genus or not is_symplectic(self.gamma):
            raise DomainError("certificate matrix is not symplectic")

    def to_dict(self) -> dict:
        return {"genus": self.genus, "gamma": [list(r) for r in self.gamma],
                "z_shift": None if self.z_shift is None else list(self.z_shift),
                "halvings": self.halvings, "dup_ladder": self.dup_ladder, "signs": self.signs,
                "top": self.top, "certified": self.certified, "reduced": self.reduced}

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "ReductionCertificate":
        d = json.loads(text)
        zs = d.get("z_shift")
        return cls(d["genus"], tuple(tuple(r) for r in d["gamma"]), None if zs is None else tuple(zs),
                   d.get("halvings", 0), d.get("dup_ladder", []), d.get("signs", []), d.get("top", {}),
                   d.get("certified", True), d.get("reduced"))

    def replay(self, p: PeriodPoint, prec: int = 256) -> PeriodPoint:
        """Apply the recorded maps to ``p`` and return the resulting point."""
        if p.g != self.genus:
            raise DomainError("genus mismatch")
        q = _apply(self.gamma, PeriodPoint(p.g, p.tau), prec)
        z = p.z
        if z is not None and p.g == 1 and self.gamma != identity(1):
            z = (B.div(z[0], det_factor(self.gamma, p, prec), prec),)
        if self.z_shift is not None and z is not None:
            m, n = self.z_shift
            w = B.sub(z[0], B.mul(ComplexBall(n, 0, 0, B._ZERO, prec), q.tau[0], prec), prec)
            z = (_add_int(w, -m).mul_2exp(-self.halvings),)
        for rung in self.dup_ladder:
            q = d2_point(q, rung["shift"][0][0]) if rung["op"] == "D2" else d1_point(q)
        return PeriodPoint(q.g, q.tau, z)

    def check_replay(self, p: PeriodPoint, prec: int = 256) -> bool:
        """True when replaying the certificate on ``p`` meets the recorded point."""
        if self.reduced is None:
            return True
        return _points_overlap(self.replay(p, prec), _point_from_dict(self.reduced, prec))


# ---------------------------------------------------------------------------
# genus 1
# ---------------------------------------------------------------------------

_T1 = lambda n: as_matrix([[1, n], [0, 1]])  # noqa: E731
_S_G1 = as_matrix([[0, -1], [1, 0]])


def _reduce_g1_mid(t: ComplexBall, wp: int, max_iter: int):
    gamma = identity(1)
    tol = Fraction(1) - Fraction(1, 1 << max(16, wp // 2))
    for _ in range(max_iter):
        n = _round(_re(t))
        if n:
            t = _add_int(t, -n)
            gamma = matmul(_T1(-n), gamma)
        if _re(t) ** 2 + _im(t) ** 2 < tol:
            t = B.div(ComplexBall(-1, 0, 0, B._ZERO, wp), t, wp)
            gamma = matmul(_S_G1, gamma)
        else:
            return gamma
    raise Indeterminate(f"genus-1 reduction did not stop after {max_iter} steps")


def reduce_g1(tau: ComplexBall, strict: bool = True, max_iter: int = MAX_ITER):
    """Return ``(tau', gamma, certificate)`` with tau' = gamma tau reduced.

    The matrix is found on midpoints; the inequalities |Re tau'| <= 1/2 and
    |tau'| >= 1 are then checked on the image of the whole input ball.  If
    they cannot be certified, the search is repeated at doubled precision,
    after which Indeterminate is raised (or, with ``strict=False``, the
    point is returned with ``certificate.certified = False``).
    """
    p = PeriodPoint(1, (tau,))
    wp = max(tau.prec, 64) + 32
    facts = {}
    for _ in range(2):
        gamma = _reduce_g1_mid(tau.midpoint().with_prec(wp), wp, max_iter)
        q = _apply(gamma, p, wp)
        facts = f1_facts(q)
        if all(facts.values()):
            break
        wp *= 2
    ok = all(facts.values())
    if strict and not ok:
        bad = [k for k, v in facts.items() if not v]
        raise Indeterminate("cannot certify the reduced genus-1 point: " + "; ".join(bad))
    cert = ReductionCertificate(1, gamma, certified=ok, reduced=_point_to_dict(q))
    return q.tau[0], gamma, cert


def reduce_z_g1(z: ComplexBall, tau: ComplexBall, prec: Optional[int] = None):
    """Return ``(z', (m, n))`` with z' = z - m - n tau, |Re z'| <= 1/2, |Im z'| <= Im tau / 2."""
    prec = prec or max(z.prec, tau.prec, 64) + 32
    n = _round(_im(z) / _im(tau))
    w = z
    if n:
        w = B.sub(z, B.mul(ComplexBall(n, 0, 0, B._ZERO, prec), tau, prec), prec)
    m = _round(_re(w))
    return _add_int(w, -m), (m, n)


def halvings_for_S1(z: ComplexBall, tau: ComplexBall) -> int:
    """Least k with z / 2^k certified in the box |Re| <= 1/8, |Im| <= Im(tau)/8."""
    re = max(abs(z.re_upper()), abs(z.re_lower()))
    im = max(abs(z.im_upper()), abs(z.im_lower()))
    y = tau.im_lower()
    for k in range(64):
        if B._UP.mul(re, 8) <= B._pow2(k) and B._UP.mul(im, 8) <= B._DN.mul(y, B._pow2(k)):
            return k
    raise DomainError("z is too far from the origin")


def double_z_g1(s: dict, c: dict, prec: int) -> dict:
    """Squared theta functions at 2z from those at z and the squared constants.

    Uses theta00(2z) theta00^3 = theta00^4 + theta11^4,
    theta01(2z) theta01^3 = theta01^4 - theta11^4,
    theta10(2z) theta10^3 = theta10^4 - theta11^4 and
    theta11(2z) theta00 theta01 theta10 = 2 theta00 theta01 theta10 theta11 (at z).
    """
    ch = {k: Characteristic((int(k[0]),), (int(k[1]),)) for k in ("00", "01", "10", "11")}
    s00, s01, s10, s11 = (s[ch[k]] for k in ("00", "01", "10", "11"))
    c00, c01, c10 = (c[ch[k]] for k in ("00", "01", "10"))
    q11 = B.sqr(s11, prec)

    def one(sq, sign, cc):
        q = B.sqr(sq, prec)
        num = B.add(q, q11, prec) if sign > 0 else B.sub(q, q11, prec)
        return B.div(B.sqr(num, prec), B.power(cc, 3, prec), prec)

    out = {ch["00"]: one(s00, 1, c00), ch["01"]: one(s01, -1, c01), ch["10"]: one(s10, -1, c10)}
    num = B.mul(B.mul(s00, s01, prec), B.mul(s10, s11, prec), prec).mul_2exp(2)
    out[ch["11"]] = B.div(num, B.mul(B.mul(c00, c01, prec), c10, prec), prec)
    return out


def lattice_factor(z_red: ComplexBall, tau: ComplexBall, n: int, prec: int) -> ComplexBall:
    """exp(-2 pi i n^2 tau - 4 pi i n z') so that theta^2(z' + m + n tau) = factor * theta^2(z')."""
    if n == 0:
        return ComplexBall(1, 0, 0, B._ZERO, prec)
    a = B.add(B.mul(ComplexBall(2 * n * n, 0, 0, B._ZERO, prec), tau, prec),
              B.mul(ComplexBall(4 * n, 0, 0, B._ZERO, prec), z_red, prec), prec)
    return B.exp_pi_i(-a, prec)


# ---------------------------------------------------------------------------
# genus 2 reduction
# ---------------------------------------------------------------------------

def _lagrange(y11: Fraction, y12: Fraction, y22: Fraction):
    """Integer U with det +-1 such that U Y U^T is Lagrange reduced."""
    U = [[1, 0], [0, 1]]
    for _ in range(MAX_ITER):
        if y11 > y22:
            y11, y22 = y22, y11
            U = [U[1], U[0]]
        m = _round(y12 / y11)
        if m == 0:
            return U
        y22 = y22 - 2 * m * y12 + m * m * y11
        y12 = y12 - m * y11
        U = [U[0], [U[1][0] - m * U[0][0], U[1][1] - m * U[0][1]]]
    raise Indeterminate("Lagrange reduction did not terminate")


def _gl_matrix(U) -> tuple:
    det = U[0][0] * U[1][1] - U[0][1] * U[1][0]
    inv_t = [[U[1][1] * det, -U[1][0] * det], [-U[0][1] * det, U[0][0] * det]]
    rows = [[U[0][0], U[0][1], 0, 0], [U[1][0], U[1][1], 0, 0],
            [0, 0, inv_t[0][0], inv_t[0][1]], [0, 0, inv_t[1][0], inv_t[1][1]]]
    return as_matrix(rows)


def _inversion_candidates() -> list:
    out = []
    for d11 in (-1, 0, 1):
        for d12 in (-1, 0, 1):
            for d22 in (-1, 0, 1):
                out.append(as_matrix([[0, 0, -1, 0], [0, 0, 0, -1], [1, 0, d11, d12], [0, 1, d12, d22]]))
    for slot in (0, 1):
        for e in (-1, 0, 1):
            out.append(embed_g1(as_matrix([[0, -1], [1, e]]), slot))
    return out


_CANDIDATES = _inversion_candidates()


def _reduce_g2_mid(p: PeriodPoint, wp: int, max_iter: int):
    gamma = identity(2)
    q = p
    for _ in range(max_iter):
        t11, t12, t22 = q.tau
        U = _lagrange(_im(t11), _im(t12), _im(t22))
        if U != [[1, 0], [0, 1]]:
            M = _gl_matrix(U)
            q, _ = act(M, q, wp)
            gamma = matmul(M, gamma)
        S = [[_round(_re(q.tau[0])), _round(_re(q.tau[1]))], [_round(_re(q.tau[1])), _round(_re(q.tau[2]))]]
        if any(S[0]) or S[1][1]:
            T = translation([[-S[0][0], -S[0][1]], [-S[1][0], -S[1][1]]])
            q = PeriodPoint(2, (_add_int(q.tau[0], -S[0][0]), _add_int(q.tau[1], -S[0][1]),
                                _add_int(q.tau[2], -S[1][1])))
            gamma = matmul(T, gamma)
        t = _point_complex(q)
        dets = [(_det_complex(M, t), i) for i, M in enumerate(_CANDIDATES)]
        best, i = min(dets)
        if best < 1 - 2.0 ** -40:
            q, _ = act(_CANDIDATES[i], q, wp)
            gamma = matmul(_CANDIDATES[i], gamma)
            q = PeriodPoint(2, [t.midpoint() for t in q.tau])
        else:
            return gamma
    raise Indeterminate(f"genus-2 reduction did not stop after {max_iter} steps")


def reduce_g2(p: PeriodPoint, strict: bool = True, max_iter: int = MAX_ITER):
    """Return ``(tau', gamma, certificate)`` for a genus-2 point.

    tau' has a Lagrange-reduced imaginary part, real parts in [-1/2, 1/2]
    and |det(C tau' + D)| >= 1 for a finite family of inversions (the
    genus-1 inversions in each coordinate and the matrices with C = I and
    D symmetric with entries in {-1, 0, 1}).  The domain inequalities are
    certified on the image of the whole input ball.
    """
    if p.g != 2:
        raise DomainError("expected a genus-2 point")
    wp = max(max(t.prec for t in p.tau), 64) + 32
    base = PeriodPoint(2, p.tau)
    facts = {}
    for _ in range(2):
        mid = PeriodPoint(2, [t.midpoint().with_prec(wp) for t in p.tau])
        gamma = _reduce_g2_mid(mid, wp, max_iter)
        q = _apply(gamma, base, wp)
        facts = f2_facts(q)
        if all(facts.values()):
            break
        wp *= 2
    ok = all(facts.values())
    if strict and not ok:
        bad = [k for k, v in facts.items() if not v]
        raise Indeterminate("cannot certify the reduced genus-2 point: " + "; ".join(bad))
    cert = ReductionCertificate(2, gamma, certified=ok, reduced=_point_to_dict(q))
    return q, gamma, cert


# ---------------------------------------------------------------------------
# duplication ladder
# ---------------------------------------------------------------------------

def d1_point(p: PeriodPoint) -> PeriodPoint:
    return PeriodPoint(2, [t.mul_2exp(-1) for t in p.tau])


def d2_point(p: PeriodPoint, shift: int = 0) -> PeriodPoint:
    """D2(tau), then tau11 -> tau11 - shift (exact)."""
    t11, t12, t22 = p.tau
    return PeriodPoint(2, (_add_int(t11.mul_2exp(1), -shift), t12, t22.mul_2exp(-1)))


def choose_k2(y11, y22, C, N: int) -> int:
    """Least k >= 0 with 2^k y11 >= min(C N, 2^(-k-2) y22)."""
    y11, y22, C = Fraction(y11), Fraction(y22), Fraction(C)
    if y11 <= 0:
        raise DomainError("Im tau11 must be positive")
    k = 0
    while Fraction(2) ** k * y11 < min(C * N, y22 / Fraction(2) ** (k + 2)):
        k += 1
    return k


def choose_k1(y11) -> int:
    """Least k >= 0 with y11 / 2^k <= 2."""
    y11 = Fraction(y11)
    k = 0
    while y11 / Fraction(2) ** k > 2:
        k += 1
    return k


@dataclass
class LadderPlan:
    """Points tau = tau_0, ..., tau_k of the ladder and the maps between them."""

    k2: int
    k1: int
    case: str           # "naive" (near the cusp) or "newton" (compact set)
    rungs: list         # {"op": "D2", "shift": [[s, 0], [0, 0]]} or {"op": "D1"}
    points: list        # PeriodPoints, len(rungs) + 1 entries


def plan_ladder(p: PeriodPoint, N: int, C=DEFAULT_C) -> LadderPlan:
    y11, y22 = _im(p.tau[0]), _im(p.tau[2])
    k2 = choose_k2(y11, y22, C, N)
    points = [p]
    rungs = []
    q = p
    for _ in range(k2):
        s = _round(2 * _re(q.tau[0]))
        q = d2_point(q, s)
        points.append(q)
        rungs.append({"op": "D2", "shift": [[s, 0], [0, 0]]})
    if _im(q.tau[0]) >= Fraction(C) * N:
        return LadderPlan(k2, 0, "naive", rungs, points)
    k1 = choose_k1(B.Dyadic.from_mpfr(q.tau[0].im_upper()).to_fraction())
    for _ in range(k1):
        q = d1_point(q)
        points.append(q)
        rungs.append({"op": "D1"})
    return LadderPlan(k2, k1, "newton", rungs, points)


def _dup_from_roots(r: Sequence[ComplexBall], prec: int) -> dict:
    """theta^2_{a,b}(tau) = 1/4 sum_beta (-1)^{a.beta} r_{b+beta} r_beta, r_b = theta_{0,b}(tau/2)."""
    out = {}
    prods = {}
    for ch in all_characteristics(2, even_only=True):
        ia, ib = vec_to_index(ch.a), vec_to_index(ch.b)
        acc = None
        for beta in range(4):
            key = tuple(sorted((ib ^ beta, beta)))
            if key not in prods:
                prods[key] = B.mul(r[key[0]], r[key[1]], prec)
            t = prods[key]
            if bin(ia & beta).count("1") % 2:
                t = -t
            acc = t if acc is None else B.add(acc, t, prec)
        out[ch] = acc.mul_2exp(-2)
    return out


def _root_any(sq: ComplexBall, prec: int) -> ComplexBall:
    """A ball containing some square root of every point of sq (both if sq may vanish)."""
    if sq.contains_zero():
        return ComplexBall(0, 0, 0, B._UP.sqrt(sq.abs_upper()), prec)
    return B.sqrt_principal(sq, prec)


def naive_sign_roots(squares: Sequence[ComplexBall], chars: Sequence[Characteristic], p: PeriodPoint,
                     prec: int, bits: int = 32) -> tuple:
    """Square roots whose signs agree with a low-precision direct evaluation."""
    out = []
    for sq, ch in zip(squares, chars):
        r = _root_any(sq, prec)
        if r.contains_zero():
            out.append(r)
            continue
        ref = theta_naive_relative(ch, p, bits)
        lo, hi = B.re_dot(r, ref)
        if lo > 0:
            out.append(r)
        elif hi < 0:
            out.append(-r)
        else:
            raise BadSignPath(f"sign of theta_{ch} is not determined at {bits} bits")
    return tuple(out)


def _choose_roots(squares, chars, p: PeriodPoint, lemma_ok: bool, prec: int, what: str):
    if lemma_ok:
        try:
            return _good_roots(list(squares), prec, what), "good-position"
        except (Indeterminate, NotGoodPosition):
            pass
    return naive_sign_roots(squares, chars, p, prec), "naive-32"


def dup_step_d1(sq_half: dict, p: PeriodPoint, prec: int, signs: Optional[str] = None):
    """Squared theta constants at tau from the squares theta_{0,b}^2 at tau/2.

    Returns ``(squares, how)`` where ``how`` tells how the roots were chosen.
    ``signs="naive"`` forces the direct-evaluation fallback.
    """
    half = d1_point(p)
    chars = [Characteristic((0, 0), index_to_vec(b, 2)) for b in range(4)]
    lemma_ok = signs != "naive" and all(f2_facts(p).values()) and all(f2_facts(half).values())
    roots, how = _choose_roots([sq_half[c] for c in chars], chars, half, lemma_ok, prec, "D1 values")
    return _dup_from_roots(roots, prec), how


_J_TO_B = None


def _j_layout():
    """For b in I2, the element m of J with S1 m = (0, b), and the phase of theta_m."""
    global _J_TO_B
    if _J_TO_B is None:
        table = {}
        for m in J_TUPLE:
            img, phi = char_action(S1, m)
            if any(img.a):
                raise DomainError("unexpected image of the J tuple")
            table[vec_to_index(img.b)] = (m, phi)
        _J_TO_B = [table[b] for b in range(4)]
    return _J_TO_B


def dup_step_d2(sq_sigma: dict, p: PeriodPoint, prec: int, signs: Optional[str] = None):
    """Squared theta constants at tau from the squares at sigma = D2(tau) for the J tuple.

    With S1 sigma = (S1 tau) / 2, the J values at sigma give the values
    theta_{0,b} at (S1 tau)/2 up to a common factor whose square is
    kappa(S1)^2 det(C sigma + D); duplication gives the squares at S1 tau
    and the transformation law brings them back to tau.
    """
    sigma = d2_point(p)
    layout = _j_layout()
    chars = [m for m, _ in layout]
    relaxed = f2_facts(sigma, re11_bound=Fraction(1))
    lemma_ok = signs != "naive" and all(f2_facts(p).values()) and all(relaxed.values())
    roots, how = _choose_roots([sq_sigma[m] for m in chars], chars, sigma, lemma_ok, prec, "J values")
    r = [B.mul(root_of_unity(phi, prec), t, prec) if phi else t for (m, phi), t in zip(layout, roots)]
    Q = _dup_from_roots(r, prec)
    c2 = B.mul(root_of_unity(Fraction(kappa2(S1), 4), prec), det_factor(S1, sigma, prec), prec)
    Q = {ch: B.mul(c2, v, prec) for ch, v in Q.items()}
    s1_tau, _ = act(S1, p, prec)
    return transform_squares(inverse(S1), Q, s1_tau, prec), how


def _translate_squares(sq: dict, p: PeriodPoint, shift: int, prec: int) -> dict:
    """Squares at tau + [[shift, 0], [0, 0]] from squares at tau."""
    if shift == 0:
        return sq
    return transform_squares(translation([[shift, 0], [0, 0]]), sq, p, prec)


def _magnitude_bits(ch: Characteristic, p: PeriodPoint) -> int:
    """Rough -log2 |theta_ch| at p, from the leading term of the series."""
    a = [Fraction(x, 2) for x in ch.a]
    y = [[_im(p.tau[0]), _im(p.tau[1])], [_im(p.tau[1]), _im(p.tau[2])]]
    q = sum(a[i] * y[i][j] * a[j] for i in range(2) for j in range(2))
    return max(0, int(float(q) * math.pi / math.log(2)))


def _top_naive(p: PeriodPoint, W: int) -> dict:
    out = {}
    for ch in all_characteristics(2, even_only=True):
        e = _magnitude_bits(ch, p)
        try:
            v = theta_naive(ch, p, W + e + 8)
        except PrecisionError as exc:
            # relative precision on tiny values is capped by the input radius
            if exc.achievable is None or exc.achievable < W:
                raise
            v = theta_naive(ch, p, exc.achievable - 2)
        out[ch] = B.sqr(v, W + 2 * e + 32)
    return out


def _odd_zeros(sq: dict, prec: int) -> dict:
    out = dict(sq)
    for ch in all_characteristics(2):
        if not ch.is_even:
            out[ch] = ComplexBall(0, 0, 0, B._ZERO, prec)
    return out


def _climb(plan: LadderPlan, W: int, signs: Optional[str] = None):
    from .schemes import G2CONST, theta_squares

    top = plan.points[-1]
    if plan.case == "naive":
        sq = _top_naive(top, W)
    else:
        try:
            full = theta_squares(G2CONST, top, W)
        except PrecisionError as exc:
            # the input radius limits what the top can deliver; let the
            # final check decide whether that is enough
            if exc.achievable is None or exc.achievable < 8:
                raise
            full = theta_squares(G2CONST, top, exc.achievable - 2)
        sq = {ch: v for ch, v in full.items() if ch.is_even}
    wp = W + 64
    record = []
    for i in range(len(plan.rungs) - 1, -1, -1):
        rung = plan.rungs[i]
        below = plan.points[i]
        if rung["op"] == "D1":
            sq, how = dup_step_d1(sq, below, wp, signs)
        else:
            s = rung["shift"][0][0]
            sq = _translate_squares(sq, plan.points[i + 1], s, wp)
            sq, how = dup_step_d2(sq, below, wp, signs)
        worst = max(v.rad for v in sq.values())
        record.append({"op": rung["op"], "signs": how, "radius_bits": _radius_bits(worst)})
    record.reverse()
    return sq, record


@dataclass
class UniformResult:
    squares: dict
    certificate: ReductionCertificate
    plan: LadderPlan


def theta_g2_uniform(p: PeriodPoint, N: int, C=DEFAULT_C, C2=DEFAULT_C2,
                     return_certificate: bool = False, max_restarts: int = 6, signs: Optional[str] = None):
    """Squared genus-2 theta constants at tau to precision N, uniformly on the domain.

    ``p`` must satisfy the genus-2 domain inequalities.  The working
    precision starts at C2 * N bits and is doubled until the final radii
    are at most 2^-N.  With ``return_certificate`` a :class:`UniformResult`
    is returned instead of the dictionary.
    """
    from .schemes import G2CONST, theta_squares

    if p.g != 2:
        raise DomainError("expected a genus-2 point")
    if N < 1:
        raise DomainError("precision must be positive")
    check_F2(p)
    plan = plan_ladder(p, N, C)
    target = B._pow2(-N)
    if not plan.rungs and plan.case == "newton":
        sq = theta_squares(G2CONST, p, N)
        cert = ReductionCertificate(2, identity(2), top={"method": "newton", "precision": N},
                                    reduced=_point_to_dict(p))
        return UniformResult(sq, cert, plan) if return_certificate else sq
    c2 = Fraction(C2)
    last = None
    best = -1
    for _ in range(max_restarts + 1):
        W = math.ceil(c2 * N) + 16
        try:
            sq, record = _climb(plan, W, signs)
        except (Indeterminate, PrecisionError, BadSignPath) as exc:
            last = exc
            c2 *= 2
            continue
        worst = max(v.rad for v in sq.values())
        if worst <= target:
            out = _odd_zeros(sq, N)
            cert = ReductionCertificate(
                2, identity(2), dup_ladder=plan.rungs, signs=record,
                top={"method": plan.case, "precision": W, "C": str(C), "C2": str(c2),
                     "k1": plan.k1, "k2": plan.k2},
                reduced=_point_to_dict(plan.points[-1]))
            return UniformResult(out, cert, plan) if return_certificate else out
        got = _radius_bits(worst)
        last = PrecisionError(f"climb reached only {got} bits", achievable=got)
        if got <= best:
            # more working precision no longer helps: the input is the limit
            break
        best = got
        c2 *= 2
    raise last if isinstance(last, ThetaError) else PrecisionError("uniform algorithm failed")
