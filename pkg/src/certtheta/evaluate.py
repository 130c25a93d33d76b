"""High-level evaluation: reduce the input, pick a method, transform back.

These are the entry points used by the command-line tool.  Every function
returns squared theta values keyed by characteristic, with radii at most
2^-N, or raises one of the errors of :mod:`certtheta.errors`.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from . import ball as B
from .ball import ComplexBall
from .errors import DomainError, PrecisionError
from .naive import PeriodPoint, all_characteristics, theta_squares_naive
from .reduction import (DEFAULT_C, ReductionCertificate, _radius_bits, check_F2, double_z_g1,
                        halvings_for_S1, lattice_factor, reduce_g1, reduce_g2, reduce_z_g1,
                        theta_g2_uniform)
from .schemes import (G1CONST, G1FUNC, G2CONST, check_R1, solve_guard, solve_quotients,
                      squared_thetas_both, theta_squares)
from .symplectic import det_factor, identity, inverse, transform_squares

METHODS = ("naive", "newton", "uniform", "auto")
AUTO_THRESHOLD_G1 = 3000
AUTO_THRESHOLD_G2 = 1500


@dataclass
class Evaluation:
    squares: dict
    method: str
    precision: int
    seconds: float = 0.0
    certificate: Optional[ReductionCertificate] = None
    notes: list = field(default_factory=list)


def _with_odd_zeros(sq: dict, g: int, prec: int) -> dict:
    out = dict(sq)
    for ch in all_characteristics(g):
        if not ch.is_even and ch not in out:
            out[ch] = ComplexBall(0, 0, 0, B._ZERO, prec)
    return out


def _worst_bits(sq: dict) -> int:
    return min(_radius_bits(v.rad) for v in sq.values())


def _det_bits(gamma, p: PeriodPoint) -> int:
    """Bits by which transforming back by gamma^-1 can magnify values."""
    d = det_factor(inverse(gamma), p, 64)
    up = d.abs_upper()
    return max(0, int(B.gmpy2.get_exp(up))) if up > 0 else 0


def _finish(sq: dict, N: int) -> dict:
    bits = _worst_bits(sq)
    if bits < N:
        raise PrecisionError(f"result only certified to {bits} bits", achievable=bits)
    return sq


def _back(gamma, sq: dict, p: PeriodPoint, wp: int) -> dict:
    if gamma == identity(p.g):
        return sq
    even = {ch: v for ch, v in sq.items() if ch.is_even}
    return _with_odd_zeros(transform_squares(inverse(gamma), even, p, wp), p.g, wp)


def _capped(fn, W: int):
    """fn(W), or fn at the precision the input allows when W asks for more."""
    try:
        return fn(W)
    except PrecisionError as exc:
        if exc.achievable is None or exc.achievable < 8 or exc.achievable >= W:
            raise
        return fn(exc.achievable - 2)


def _retrying(compute, N: int, tries: int = 3):
    """Run compute(extra) with growing guard bits until the radii reach 2^-N."""
    extra = 0
    last = None
    for _ in range(tries):
        sq = compute(extra)
        bits = _worst_bits(sq)
        if bits >= N:
            return sq
        last = bits
        extra += max(64, N - bits + 32)
    raise PrecisionError(f"result only certified to {last} bits", achievable=last)


def constants_g1(tau: ComplexBall, N: int, method: str = "auto",
                 threshold: int = AUTO_THRESHOLD_G1) -> Evaluation:
    """Squared genus-1 theta constants at tau."""
    if method not in ("naive", "newton", "auto"):
        raise DomainError(f"method {method!r} is not available for genus-1 constants")
    t0 = time.perf_counter()
    red, gamma, cert = reduce_g1(tau, strict=False)
    p = PeriodPoint(1, (red,))
    chosen = method
    if method == "auto":
        chosen = "naive" if N < threshold or red.im_upper() > 2 else "newton"
    if chosen == "newton":
        check_R1(p)
    guard = 16 + _det_bits(gamma, p)

    def compute(extra):
        W = N + guard + extra
        if chosen == "newton":
            sq = _capped(lambda w: theta_squares(G1CONST, p, w), W)
        else:
            sq = _with_odd_zeros(_capped(lambda w: theta_squares_naive(p, w), W), 1, W)
        return _back(gamma, sq, p, W + 32)

    sq = _retrying(compute, N)
    return Evaluation(sq, chosen, N, time.perf_counter() - t0, cert)


def constants_g2(p: PeriodPoint, N: int, method: str = "auto", threshold: int = AUTO_THRESHOLD_G2,
                 C=DEFAULT_C) -> Evaluation:
    """Squared genus-2 theta constants at tau."""
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}")
    t0 = time.perf_counter()
    red, gamma, cert = reduce_g2(p, strict=False)
    chosen = method
    if method == "auto":
        chosen = "naive" if N < threshold else "uniform"
    if chosen == "uniform":
        check_F2(red)
    elif chosen == "newton":
        from .schemes import check_R2
        check_R2(red)
    guard = 16 + _det_bits(gamma, red)
    ladder = {}

    def compute(extra):
        W = N + guard + extra
        if chosen == "newton":
            sq = _capped(lambda w: theta_squares(G2CONST, red, w), W)
        elif chosen == "uniform":
            res = _capped(lambda w: theta_g2_uniform(red, w, C=C, return_certificate=True), W)
            ladder["cert"] = res.certificate
            sq = res.squares
        else:
            sq = _with_odd_zeros(_capped(lambda w: theta_squares_naive(red, w), W), 2, W)
        return _back(gamma, sq, red, W + 32)

    sq = _retrying(compute, N)
    if "cert" in ladder:
        u = ladder["cert"]
        cert.dup_ladder, cert.signs, cert.top = u.dup_ladder, u.signs, u.top
    return Evaluation(sq, chosen, N, time.perf_counter() - t0, cert)


def _newton_functions_g1(p: PeriodPoint, N: int):
    tau = p.tau[0]
    z = p.z_or_zero()[0]
    zr, (m, n) = reduce_z_g1(z, tau)
    k = halvings_for_S1(zr, tau)
    w = zr.mul_2exp(-k)
    pw = PeriodPoint(1, (tau,), (w,))
    lat = lattice_factor(zr, tau, n, 64)
    lat_bits = max(0, int(B.gmpy2.get_exp(lat.abs_upper())))
    cert = ReductionCertificate(1, identity(1), z_shift=(m, n), halvings=k)
    guard0 = 32 + 8 * k + lat_bits

    def compute(extra):
        W = N + guard0 + extra
        q = solve_quotients(G1FUNC, pw, W + solve_guard(G1FUNC))
        both = _capped(lambda w: squared_thetas_both(G1FUNC, q, pw, w), W)
        cs = {ch: v for (kind, ch), v in both.items() if kind == "0"}
        s = {ch: v for (kind, ch), v in both.items() if kind == "z"}
        wp = W + 64
        for _ in range(k):
            s = double_z_g1(s, cs, wp)
        if n:
            f = lattice_factor(zr, tau, n, wp)
            s = {ch: B.mul(f, v, wp) for ch, v in s.items()}
        return s

    return _retrying(compute, N), cert


def functions_g1(p: PeriodPoint, N: int, method: str = "auto",
                 threshold: int = AUTO_THRESHOLD_G1) -> Evaluation:
    """Squared genus-1 theta functions theta^2_{a,b}(z, tau).

    The Newton path needs tau in the compact set |Re tau| <= 1/2, |tau| >= 1,
    Im tau <= 2 (tau is not reduced for functions); z is reduced modulo the
    lattice and halved into the scheme's box.  ``auto`` uses direct
    summation below the threshold or when tau is outside that set.
    """
    if p.g != 1:
        raise DomainError("theta functions are only available in genus 1")
    if method not in ("naive", "newton", "auto"):
        raise DomainError(f"method {method!r} is not available for genus-1 functions")
    t0 = time.perf_counter()
    chosen = method
    notes = []
    if method == "auto":
        chosen = "naive"
        if N >= threshold:
            try:
                check_R1(PeriodPoint(1, p.tau))
                chosen = "newton"
            except DomainError as exc:
                notes.append(f"falling back to direct summation: {exc}")
    if chosen == "newton":
        check_R1(PeriodPoint(1, p.tau))
        sq, cert = _newton_functions_g1(p, N)
    else:
        pz = PeriodPoint(1, p.tau, p.z_or_zero())
        chars = all_characteristics(1)
        sq = _retrying(lambda extra: _capped(lambda w: theta_squares_naive(pz, w, chars), N + extra), N)
        cert = None
    return Evaluation(_finish(sq, N), chosen, N, time.perf_counter() - t0, cert, notes)

