"""Newton schemes for genus-1 theta constants, genus-1 theta functions and
genus-2 theta constants.

Each scheme is an analytic map F sending the fundamental theta quotients
at tau/2 back to simple functions of (z, tau).  The quotients are first
duplicated into squared quotients at tau, transported to a few symplectic
images of tau, fed to Borchardt means, and finally combined so that only
the factors det(C tau + D) (and, for theta functions, exp(2 pi i z^2/tau))
survive.  Newton's method then inverts F.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import gmpy2
from flint import arb, ctx as _flint_ctx

from . import ball as B
from .ball import ComplexBall
from .borchardt import BorchardtTerm, mean_ext_good, mean_good
from .errors import (DomainError, Indeterminate, NotGoodPosition, OutsideBasin,
                     PrecisionError)
from .naive import (Characteristic, PeriodPoint, _num_arb, _tail_g1_arb, _tail_g2_arb, all_characteristics,
                    guard_bits, index_to_vec, lambda_min_lower, theta_naive, vec_to_index)
from .newton import SchemeConstants, _round_to_grid, newton_refine, start_precision
from .symplectic import M1, M2, N12, N_G1, char_action, kappa2, root_of_unity

G1CONST = "G1Const"
G1FUNC = "G1Func"
G2CONST = "G2Const"
VARIANTS = (G1CONST, G1FUNC, G2CONST)


# ---------------------------------------------------------------------------
# descriptors and constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SchemeDescriptor:
    variant: str
    genus: int
    constants: SchemeConstants
    feedback: tuple
    target_map: str
    domain: str
    borchardt_data: dict = field(default_factory=dict)


_DESCRIPTORS = {
    G1CONST: SchemeDescriptor(
        G1CONST, 1, SchemeConstants(1, "1.4e-4", 27, 125),
        (("N", N_G1),), "tau", "R1",
        {"at tau": {"m0": "0.56", "M0": "1.7"}, "at N tau": {"m0": "0.13", "M0": "1.38"}}),
    G1FUNC: SchemeDescriptor(
        G1FUNC, 1, SchemeConstants(2, "2.9e-5", Fraction(43 * 10 ** 220), Fraction(86000)),
        (("N", N_G1),), "(tau, exp(2 pi i z^2 / tau))", "S1",
        {"at (z, tau)": {"n0": 1, "M0": "1.94", "m0": "0.51", "m_inf": "0.72"},
         "at N(z, tau)": {"n0": 1, "M0": "1.69", "m0": "0.1", "m_inf": "0.51"}}),
    G2CONST: SchemeDescriptor(
        G2CONST, 2, SchemeConstants(3, "1.9e-23", 45000, 13000),
        (("M1", M1), ("M2", M2), ("N12", N12)), "(tau11, tau22, tau12^2 - tau11 tau22)", "R2",
        {"at tau": {"m0": "0.069", "M0": "13"}, "at M1 tau, M2 tau": {"m0": "9.7e-7", "M0": "13"},
         "at N12 tau": {"m0": "2.2e-9", "M0": "13"}}),
}

_ROLES = {
    "r": "number of unknowns",
    "rho": "radius of the polydisk around the theta quotients on which F is analytic",
    "M": "upper bound on |F| over that polydisk",
    "B3": "upper bound on the norm of the differential of the inverse map",
}


def descriptor(variant: str) -> SchemeDescriptor:
    try:
        return _DESCRIPTORS[variant]
    except KeyError:
        raise DomainError(f"unknown scheme variant {variant!r}; expected one of {VARIANTS}") from None


def constants_table() -> dict:
    """Read-only view of all scheme constants with a note on each entry."""
    out = {}
    for name, d in _DESCRIPTORS.items():
        entry = d.constants.as_dict()
        entry["roles"] = dict(_ROLES)
        entry["target"] = d.target_map
        entry["domain"] = d.domain
        entry["feedback"] = [f for f, _ in d.feedback]
        entry["borchardt_data"] = d.borchardt_data
        out[name] = entry
    return out


def constants_json(indent: int = 2) -> str:
    return json.dumps(constants_table(), indent=indent)


# ---------------------------------------------------------------------------
# reduced domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReducedDomainTag:
    which: str
    witness: dict


_HALF = B._pow2(-1)


def _abs_re_le_half(t: ComplexBall) -> bool:
    return t.re_upper() <= _HALF and t.re_lower() >= -_HALF


def check_R1(p: PeriodPoint) -> ReducedDomainTag:
    if p.g != 1:
        raise DomainError("expected a genus-1 point")
    t = p.tau[0]
    facts = {
        "|Re tau| <= 1/2": _abs_re_le_half(t),
        "|tau| >= 1": t.abs_lower() >= 1,
        "Im tau <= 2": t.im_upper() <= 2,
    }
    return _tag("R1", facts)


def check_S1(p: PeriodPoint) -> ReducedDomainTag:
    tag = check_R1(p)
    z = p.z_or_zero()[0]
    t = p.tau[0]
    facts = dict(tag.witness)
    y = max(abs(z.im_upper()), abs(z.im_lower()))
    facts["|Im z| <= Im(tau)/8"] = B._UP.mul(y, 8) <= t.im_lower()
    facts["|Re z| <= 1/8"] = max(abs(z.re_upper()), abs(z.re_lower())) <= B._pow2(-3)
    return _tag("S1", facts)


def check_R2(p: PeriodPoint) -> ReducedDomainTag:
    if p.g != 2:
        raise DomainError("expected a genus-2 point")
    t11, t12, t22 = p.tau
    facts = {
        "|Re tau_ij| <= 1/2": all(_abs_re_le_half(t) for t in p.tau),
        "2|Im tau12| <= Im tau11": B._UP.mul(max(abs(t12.im_upper()), abs(t12.im_lower())), 2) <= t11.im_lower(),
        "Im tau11 <= Im tau22": t11.im_upper() <= t22.im_lower(),
        "|tau_jj| >= 1": t11.abs_lower() >= 1 and t22.abs_lower() >= 1,
        "Im tau11 <= 2": t11.im_upper() <= 2,
        "Im tau22 <= 8": t22.im_upper() <= 8,
    }
    return _tag("R2", facts)


def _tag(which: str, facts: dict) -> ReducedDomainTag:
    bad = [k for k, ok in facts.items() if not ok]
    if bad:
        raise DomainError(f"point is not certified in {which}: " + "; ".join(bad))
    return ReducedDomainTag(which, facts)


def check_domain(variant: str, p: PeriodPoint) -> ReducedDomainTag:
    return {"R1": check_R1, "S1": check_S1, "R2": check_R2}[descriptor(variant).domain](p)


# ---------------------------------------------------------------------------
# algebra shared by the three maps
# ---------------------------------------------------------------------------

def _one(prec):
    return ComplexBall(1, 0, 0, B._ZERO, prec)


def duplicate(xs: Sequence[ComplexBall], g: int, prec: int, ys: Optional[Sequence[ComplexBall]] = None,
              even_only: bool = True) -> dict:
    """Squared quotients from fundamental quotients at tau/2.

    With x_b = theta_{0,b}(0, tau/2) / theta_{0,0}(0, tau/2) (x_0 = 1
    implicit), returns Q_{a,b} = theta_{a,b}(0, tau)^2 / theta_{0,0}(0, tau/2)^2.
    If ``ys`` holds the same quotients at (z, tau/2), the result is instead
    theta_{a,b}(z, tau)^2 / (theta_{0,0}(z, tau/2) theta_{0,0}(0, tau/2)).
    """
    n = 1 << g
    x = [_one(prec)] + list(xs)
    y = x if ys is None else [_one(prec)] + list(ys)
    if len(x) != n or len(y) != n:
        raise DomainError("wrong number of quotients for this genus")
    prods = {}
    out = {}
    for ch in all_characteristics(g, even_only=even_only):
        ia = vec_to_index(ch.a)
        ib = vec_to_index(ch.b)
        acc = None
        for beta in range(n):
            key = (ib ^ beta, beta)
            if key not in prods:
                prods[key] = B.mul(y[ib ^ beta], x[beta], prec)
            t = prods[key]
            if bin(ia & beta).count("1") % 2:
                t = -t
            acc = t if acc is None else B.add(acc, t, prec)
        out[ch] = acc.mul_2exp(-g)
    return out


def _zero_char(g):
    return Characteristic((0,) * g, (0,) * g)


def _preimages(gamma, g):
    """For each image characteristic, the preimage and the phase of its square."""
    table = {}
    for ch in all_characteristics(g, even_only=True):
        img, phi = char_action(gamma, ch)
        table[img] = (ch, 2 * phi)
    return table


_PRE_CACHE: dict = {}


def _preimages_cached(name, gamma, g):
    if name not in _PRE_CACHE:
        _PRE_CACHE[name] = _preimages(gamma, g)
    return _PRE_CACHE[name]


def _first_term(Q: dict, g: int, prec: int, gamma=None, name: str = "I"):
    """First Borchardt term theta^2_{0,b}/theta^2_{0,0} at gamma tau.

    Returns ``(values, c, phase)`` where c is the characteristic whose
    square is sent to theta^2_{0,0}(gamma tau) and phase its root of unity.
    """
    n = 1 << g
    zero = tuple([0] * g)
    if gamma is None:
        c = _zero_char(g)
        den = Q[c]
        vals = [_one(prec)] + [B.div(Q[Characteristic(zero, index_to_vec(b, g))], den, prec)
                               for b in range(1, n)]
        return vals, c, Fraction(0)
    pre = _preimages_cached(name, gamma, g)
    c, phase_c = pre[_zero_char(g)]
    den = Q[c]
    vals = [_one(prec)]
    for b in range(1, n):
        m, phase = pre[Characteristic(zero, index_to_vec(b, g))]
        w = root_of_unity(phase - phase_c, prec)
        vals.append(B.mul(w, B.div(Q[m], den, prec), prec))
    return vals, c, phase_c


_MEAN_SLACK = 24
# extra bits for the rational steps feeding the means; the extended mean
# loses a few bits per step to its final 2^n-th power
_ARITH_EXTRA = 48


def _mean(vals, wp):
    try:
        return mean_good(vals, wp - _MEAN_SLACK)
    except (NotGoodPosition, Indeterminate) as exc:
        raise OutsideBasin(f"Borchardt mean left the good-position basin: {exc}") from exc


def _mean_ext(term, wp):
    try:
        return mean_ext_good(term, wp - _MEAN_SLACK)
    except (NotGoodPosition, Indeterminate) as exc:
        raise OutsideBasin(f"extended Borchardt mean left the good-position basin: {exc}") from exc


def _det_from_means(gamma, Q, g, mu_I, mu_g, c, phase_c, prec):
    """det(C tau + D) = mu_I Q_00 / (mu_gamma kappa^2 zeta Q_c)."""
    k = kappa2(gamma)
    unit = root_of_unity(phase_c + Fraction(k, 4), prec)
    num = B.mul(mu_I, Q[_zero_char(g)], prec)
    den = B.mul(B.mul(mu_g, unit, prec), Q[c], prec)
    return B.div(num, den, prec)


def _run(fn, x, p: int):
    """Evaluate ``fn(x, wp)`` raising wp until every output radius is <= 2^-p."""
    wp = p + 40 + guard_bits(0)
    last = None
    for _ in range(6):
        try:
            out = fn(x, wp)
        except PrecisionError as exc:
            last = exc
            wp += 64
            continue
        worst = max(v.rad for v in out)
        if worst <= B._pow2(-p):
            return out
        got = -int(gmpy2.get_exp(worst)) if worst > 0 else p
        last = PrecisionError(f"scheme evaluation reached only {got} bits", achievable=got)
        wp += max(32, p - got + 16)
    raise last


# ---------------------------------------------------------------------------
# the maps F
# ---------------------------------------------------------------------------

def _coerce_vec(x, r):
    if isinstance(x, ComplexBall):
        x = [x]
    x = list(x)
    if len(x) != r:
        raise DomainError(f"expected {r} quotients")
    return x


def _g1const_raw(x, wp):
    ap = wp + _ARITH_EXTRA
    Q = duplicate(x, 1, ap)
    s_I, _, _ = _first_term(Q, 1, ap)
    s_N, c, ph = _first_term(Q, 1, ap, N_G1, "N")
    mu_I = _mean(s_I, wp)
    mu_N = _mean(s_N, wp)
    return [_det_from_means(N_G1, Q, 1, mu_I, mu_N, c, ph, wp)]


def eval_F_g1const(x, p: int) -> ComplexBall:
    """tau from x = theta_{0,1}(0, tau/2) / theta_{0,0}(0, tau/2)."""
    return _run(_g1const_raw, _coerce_vec(x, 1), p)[0]


def _g1func_parts(x, wp):
    xc, xf = x
    ap = wp + _ARITH_EXTRA
    Q = duplicate([xc], 1, ap)
    R = duplicate([xc], 1, ap, ys=[xf], even_only=False)
    s_I, _, _ = _first_term(Q, 1, ap)
    u_I, _, _ = _first_term(R, 1, ap)
    s_N, c, ph = _first_term(Q, 1, ap, N_G1, "N")
    u_N, cu, phu = _first_term(R, 1, ap, N_G1, "N")
    assert cu == c and phu == ph
    mu_I = _mean(s_I, wp)
    mu_N = _mean(s_N, wp)
    lam_I = _mean_ext(BorchardtTerm(tuple(s_I), tuple(u_I)), wp)
    lam_N = _mean_ext(BorchardtTerm(tuple(s_N), tuple(u_N)), wp)
    return Q, R, c, ph, mu_I, mu_N, lam_I, lam_N


def _g1func_raw(x, wp):
    Q, R, c, ph, mu_I, mu_N, lam_I, lam_N = _g1func_parts(x, wp)
    det = _det_from_means(N_G1, Q, 1, mu_I, mu_N, c, ph, wp)
    # exp(2 pi i z^2/tau) = lam_I R_00 / (lam_N kappa^2 zeta det R_c)
    unit = root_of_unity(ph + Fraction(kappa2(N_G1), 4), wp)
    num = B.mul(lam_I, R[_zero_char(1)], wp)
    den = B.mul(B.mul(B.mul(lam_N, unit, wp), det, wp), R[c], wp)
    return [det, B.div(num, den, wp)]


def eval_F_g1func(x, p: int) -> list:
    """(tau, exp(2 pi i z^2/tau)) from the constant and function quotients."""
    return list(_run(_g1func_raw, _coerce_vec(x, 2), p))


_G2_FEEDBACK = (("M1", M1, -1), ("M2", M2, -1), ("N12", N12, 1))


def _g2const_raw(x, wp):
    ap = wp + _ARITH_EXTRA
    Q = duplicate(x, 2, ap)
    s_I, _, _ = _first_term(Q, 2, ap)
    mu_I = _mean(s_I, wp)
    out = []
    for name, gamma, sign in _G2_FEEDBACK:
        s_g, c, ph = _first_term(Q, 2, ap, gamma, name)
        mu_g = _mean(s_g, wp)
        det = _det_from_means(gamma, Q, 2, mu_I, mu_g, c, ph, wp)
        out.append(det if sign > 0 else -det)
    return out


def eval_F_g2const(x, p: int) -> list:
    """(tau11, tau22, tau12^2 - tau11 tau22) from the three genus-2 quotients."""
    return list(_run(_g2const_raw, _coerce_vec(x, 3), p))


_EVAL = {G1CONST: eval_F_g1const, G1FUNC: eval_F_g1func, G2CONST: eval_F_g2const}


def evaluator(variant: str):
    """The map F as a Newton evaluator (vector in, vector out)."""
    f = _EVAL[descriptor(variant).variant]
    if variant == G1CONST:
        return lambda x, p: [f(x, p)]
    return f


# ---------------------------------------------------------------------------
# targets, seeds, Newton
# ---------------------------------------------------------------------------

def _to_grid(x: ComplexBall, k: int) -> ComplexBall:
    return _round_to_grid(x, k)


def _target_balls(variant: str, p: PeriodPoint, prec: int) -> list:
    d = descriptor(variant)
    if d.genus != p.g:
        raise DomainError(f"{variant} needs a genus-{d.genus} point")
    if variant == G1CONST:
        return [p.tau[0]]
    if variant == G1FUNC:
        t = p.tau[0]
        z = p.z_or_zero()[0]
        w = B.div(B.sqr(z, prec), t, prec).mul_2exp(1)
        return [t, B.exp_pi_i(w, prec)]
    t11, t12, t22 = p.tau
    return [t11, t22, B.sub(B.sqr(t12, prec), B.mul(t11, t22, prec), prec)]


def target_of(variant: str, p: PeriodPoint, N: int) -> list:
    """Exact dyadic approximations (within 2^-N) of F at the true quotients."""
    wp = N + 16
    for _ in range(4):
        vals = _target_balls(variant, p, wp)
        if max(v.rad for v in vals) <= B._pow2(-(N + 1)):
            return [_to_grid(v, N + 2) for v in vals]
        wp += 64
    raise PrecisionError(f"input point is not precise enough for {N} bits")


@dataclass
class ThetaQuotients:
    variant: str
    values: list
    point: PeriodPoint
    precision: int
    newton_loops: int = 0
    trace: list = field(default_factory=list)

    def to_dict(self, fmt: str = "hex") -> dict:
        return {"variant": self.variant, "precision": self.precision,
                "values": [v.to_dict(fmt) for v in self.values], "newton_loops": self.newton_loops}


def naive_quotients(variant: str, p: PeriodPoint, target: int) -> list:
    """Theta quotients at tau/2 (and (z, tau/2)) by direct summation."""
    g = p.g
    half = p.halved()
    consts = PeriodPoint(g, half.tau)
    zero = (0,) * g
    extra = 8
    for _ in range(4):
        t = target + extra
        den = theta_naive(_zero_char(g), consts, t)
        vals = [B.div(theta_naive(Characteristic(zero, index_to_vec(b, g)), consts, t), den, t + 16)
                for b in range(1, 1 << g)]
        if variant == G1FUNC:
            denz = theta_naive(_zero_char(1), half, t)
            vals.append(B.div(theta_naive(Characteristic((0,), (1,)), half, t), denz, t + 16))
        if max(v.rad for v in vals) <= B._pow2(-target):
            return vals
        extra += 32
    raise PrecisionError("could not compute the seed quotients")


def seed_quotients(variant: str, p: PeriodPoint) -> list:
    """Exact dyadic seed within 2^-n0 of the true quotients."""
    n0 = start_precision(descriptor(variant).constants)
    vals = naive_quotients(variant, p, n0 + 2)
    return [_to_grid(v, n0 + 2) for v in vals]


def solve_quotients(variant: str, p: PeriodPoint, N: int, trace: bool = False,
                    check: bool = True) -> ThetaQuotients:
    """Theta quotients at the midpoint of ``p`` to N bits by Newton's method."""
    d = descriptor(variant)
    if check:
        check_domain(variant, p)
    pm = p.midpoint()
    c = d.constants
    n0 = start_precision(c)
    if N <= n0:
        vals = naive_quotients(variant, pm, N)
        return ThetaQuotients(variant, vals, pm, N)
    Nn = N + c.lb3 + 2
    z0 = target_of(variant, pm, Nn)
    x0 = seed_quotients(variant, pm)
    res = newton_refine(evaluator(variant), c, z0, x0, Nn, n_start=n0, trace=trace)
    return ThetaQuotients(variant, res.x, pm, min(res.precision, N), res.loops, res.trace)


# ---------------------------------------------------------------------------
# final theta values
# ---------------------------------------------------------------------------

def _squares_raw(variant, x, wp):
    g = descriptor(variant).genus
    out = {}
    if variant == G1FUNC:
        Q, R, c, ph, mu_I, mu_N, lam_I, lam_N = _g1func_parts(x, wp)
        t00z = B.inv(lam_I, wp)
        r00 = R[_zero_char(1)]
        for ch, v in R.items():
            out[("z", ch)] = B.mul(t00z, B.div(v, r00, wp), wp)
    else:
        Q = duplicate(x, g, wp + _ARITH_EXTRA)
        s_I, _, _ = _first_term(Q, g, wp + _ARITH_EXTRA)
        mu_I = _mean(s_I, wp)
    t00 = B.inv(mu_I, wp)
    q00 = Q[_zero_char(g)]
    for ch in all_characteristics(g):
        if ch.is_even:
            out[("0", ch)] = B.mul(t00, B.div(Q[ch], q00, wp), wp)
        else:
            out[("0", ch)] = ComplexBall(0, 0, 0, B._ZERO, wp)
    return out


def _input_error(p: PeriodPoint):
    """Upper bound on the change of any theta^2 when p moves within its radii."""
    rad = p.max_radius()
    if rad == 0:
        return B._ZERO
    delta = arb(1) / 16
    with _flint_ctx.workprec(64):
        lam = _num_arb(lambda_min_lower(p)) - 2 * delta
        if not (lam > 0):
            raise DomainError("input radius too large for a perturbation bound")
        yz = arb(0)
        for w in p.z_or_zero():
            yz += _num_arb(max(abs(w.im_upper()), abs(w.im_lower()))) + delta
        half = arb(1) / 2
        tail = _tail_g1_arb(lam, yz, half) if p.g == 1 else _tail_g2_arb(lam, yz, half)
        if tail is None:
            raise DomainError("input radius too large for a perturbation bound")
        bound = 2 * (1 + 2 * tail)
        ncoords = len(p.tau) + (p.g if p.has_z else 0)
        err = ncoords * bound * bound / delta * _num_arb(rad)
        return B.arb_upper(err)


def quotients_to_squared_thetas(variant: str, q: ThetaQuotients, p: PeriodPoint, N: int) -> dict:
    """Squared theta values at p from certified quotients.

    Keys are characteristics.  For theta functions (G1Func) the values are
    theta^2(z, tau); use :func:`squared_thetas_both` to also get the
    constants.  Odd characteristics at z = 0 give exact zeros.
    """
    both = squared_thetas_both(variant, q, p, N)
    part = "z" if variant == G1FUNC else "0"
    return {ch: v for (kind, ch), v in both.items() if kind == part}


def squared_thetas_both(variant: str, q: ThetaQuotients, p: PeriodPoint, N: int) -> dict:
    """Like :func:`quotients_to_squared_thetas`, keyed by ("0" | "z", ch)."""
    vals = _run_dict(lambda x, wp: _squares_raw(variant, x, wp), q.values, N + 1)
    err = _input_error(p)
    out = {}
    for k, v in vals.items():
        if k[0] == "0" and not k[1].is_even:
            out[k] = v
            continue
        v = v.add_error(err)
        if v.rad > B._pow2(-N):
            got = -int(gmpy2.get_exp(v.rad))
            raise PrecisionError(f"result only certified to {got} bits", achievable=got)
        out[k] = v
    return out


def _run_dict(fn, x, p):
    keys = []

    def as_list(xx, wp):
        d = fn(xx, wp)
        keys[:] = list(d.keys())
        return list(d.values())

    vals = _run(as_list, x, p)
    return dict(zip(keys, vals))


def solve_guard(variant: str) -> int:
    """Extra bits for the quotients so the squares come out at the requested precision.

    The evaluation of the squares runs with THETA_GUARD_BITS more working
    bits, so the quotients feeding it must be that much more accurate too.
    """
    return 32 + descriptor(variant).constants.lb3 + guard_bits(0)


def theta_squares(variant: str, p: PeriodPoint, N: int, trace: bool = False) -> dict:
    """Squared theta values at p to N bits with the Newton scheme."""
    q = solve_quotients(variant, p, N + solve_guard(variant), trace=trace)
    return quotients_to_squared_thetas(variant, q, p, N)


# ---------------------------------------------------------------------------
# sanity harness for the inverse-map bounds
# ---------------------------------------------------------------------------

@dataclass
class JacobianReport:
    variant: str
    bound: float
    estimates: list
    ok: bool

    @property
    def worst(self) -> float:
        return max(self.estimates) if self.estimates else 0.0


def _theta_quot_complex(p: PeriodPoint, variant: str) -> list:
    return [complex(v) for v in naive_quotients(variant, p, 80)]


def _G_point(variant: str, coords) -> PeriodPoint:
    """Point whose quotients realize the inverse map at the given coordinates."""
    import cmath
    if variant == G1CONST:
        (t,) = coords
        return PeriodPoint.g1(B.ball(t, 96))
    if variant == G1FUNC:
        t, w = coords
        y = t * cmath.log(w) / (2j * cmath.pi)
        z = cmath.sqrt(y)
        return PeriodPoint.g1(B.ball(t, 96), B.ball(z, 96))
    x, y, zz = coords
    t12 = cmath.sqrt(zz + x * y)
    return PeriodPoint.g2(B.ball(x, 96), B.ball(t12, 96), B.ball(y, 96))


def _coords_of(variant: str, p: PeriodPoint) -> list:
    import cmath
    if variant == G1CONST:
        return [complex(p.tau[0])]
    if variant == G1FUNC:
        t = complex(p.tau[0])
        z = complex(p.z_or_zero()[0])
        return [t, cmath.exp(2j * cmath.pi * z * z / t)]
    t11, t12, t22 = (complex(v) for v in p.tau)
    return [t11, t22, t12 * t12 - t11 * t22]


def jacobian_bound_check(variant: str, samples: Sequence[PeriodPoint], h: float = 2.0 ** -20) -> JacobianReport:
    """Finite-difference estimates of the inverse map's differential norm.

    The norm is the operator norm for the max norm (largest row sum).
    This is a sanity harness, not a proof.
    """
    d = descriptor(variant)
    bound = float(d.constants.B3)
    ests = []
    for p in samples:
        base = _coords_of(variant, p)
        g0 = _theta_quot_complex(_G_point(variant, base), variant)
        cols = []
        for j in range(len(base)):
            c2 = list(base)
            c2[j] += h
            g1 = _theta_quot_complex(_G_point(variant, c2), variant)
            cols.append([(a - b) / h for a, b in zip(g1, g0)])
        rows = len(g0)
        ests.append(max(sum(abs(cols[j][i]) for j in range(len(cols))) for i in range(rows)))
    return JacobianReport(variant, bound, ests, all(e <= bound for e in ests))
