"""Command-line front end.

    certtheta eval-const --genus 1 --tau "0.25+1.1i" --prec 256 --method newton
    certtheta eval-const --genus 2 --tau "diag(i,40i)" --prec 512 --method uniform
    certtheta eval-func --tau "0.1+1.3i" --z "0.3+0.2i" --prec 2048
    certtheta reduce --genus 2 --tau "0.13+0.05i, 0.41+0.02i, -3.3+0.08i"
    certtheta verify --genus 1 --tau i --prec 1024
    certtheta bench --genus 2 --start 256 --stop 4096
    certtheta report --out figures/

Exit codes: 0 success, 2 domain error, 3 precision error, 4 basin, sign or
internal consistency failure.  THETA_GUARD_BITS adds guard bits to the
internal working precisions.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
import time
from typing import Optional, Sequence

import gmpy2

from . import __version__
from . import ball as B
from .ball import ComplexBall
from .errors import DomainError, PrecisionError, ThetaError
from .naive import PeriodPoint
from .evaluate import (AUTO_THRESHOLD_G1, AUTO_THRESHOLD_G2, constants_g1, constants_g2,
                       functions_g1)
from .symplectic import det_factor, identity
from .reduction import DEFAULT_C, halvings_for_S1, reduce_g1, reduce_g2, reduce_z_g1

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_PRECISION = 3
EXIT_INTERNAL = 4


# ---------------------------------------------------------------------------
# input parsing
# ---------------------------------------------------------------------------

def parse_scalar(text: str, prec: int) -> ComplexBall:
    """A complex literal as a ball; non-dyadic decimals are rounded outward."""
    return ComplexBall.parse(text, prec)


def _split_entries(text: str) -> list:
    s = text.strip()
    m = re.fullmatch(r"diag\((.*)\)", s)
    if m:
        parts = [x.strip() for x in m.group(1).split(",")]
        if len(parts) != 2:
            raise DomainError("diag(...) needs two entries")
        return [parts[0], "0", parts[1]]
    flat = [x.strip() for x in re.split(r"[,;]", s.replace("[", "").replace("]", "")) if x.strip()]
    if len(flat) == 3:
        return flat
    if len(flat) == 4:
        if B.parse_complex_literal(flat[1]) != B.parse_complex_literal(flat[2]):
            raise DomainError("tau must be symmetric")
        return [flat[0], flat[1], flat[3]]
    raise DomainError("genus-2 tau must be diag(a,b), 'a, b, c' (tau11, tau12, tau22) or [[a,b],[b,c]]")


def parse_tau(text: str, genus: int, prec: int) -> PeriodPoint:
    if genus == 1:
        return PeriodPoint(1, (parse_scalar(text, prec),))
    return PeriodPoint(2, [parse_scalar(t, prec) for t in _split_entries(text)])


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _decimal(x: B.Dyadic, digits: int) -> str:
    if x.mantissa == 0:
        return "0"
    with gmpy2.context(gmpy2.get_context(), precision=max(53, abs(x.mantissa).bit_length())):
        return format(x.to_mpfr(), f".{digits}g")


def ball_text(v: ComplexBall, digits: int) -> str:
    return "{re = %s, im = %s, rad = %s}" % (_decimal(v.mid_re, digits), _decimal(v.mid_im, digits),
                                             _decimal(v.radius, 3))


def _sorted_items(sq: dict):
    return sorted(sq.items(), key=lambda kv: (kv[0].a, kv[0].b))


def emit_values(sq: dict, args, extra: dict, out=None):
    out = out or sys.stdout
    if args.output == "json":
        doc = dict(extra)
        doc["values"] = {ch.label: v.to_dict("hex") for ch, v in _sorted_items(sq)}
        out.write(json.dumps(doc, indent=2) + "\n")
        return
    digits = max(6, int(args.prec * math.log10(2)) + 2) if args.digits is None else args.digits
    for k, v in extra.items():
        if k != "certificate":
            out.write(f"# {k}: {v}\n")
    for ch, v in _sorted_items(sq):
        out.write(f"theta^2[{ch.label}] = {ball_text(v, digits)}\n")


def load_values(text: str) -> dict:
    """Parse the ``values`` of a JSON output back into balls (exact round trip)."""
    doc = json.loads(text)
    return {k: ComplexBall.from_dict(v) for k, v in doc["values"].items()}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _input_prec(args) -> int:
    return args.prec + 32


def cmd_eval_const(args) -> int:
    p = parse_tau(args.tau, args.genus, _input_prec(args))
    if args.genus == 1:
        if args.method == "uniform":
            raise DomainError("the uniform method is only available for genus-2 constants")
        ev = constants_g1(p.tau[0], args.prec, args.method, args.threshold or AUTO_THRESHOLD_G1)
    else:
        ev = constants_g2(p, args.prec, args.method, args.threshold or AUTO_THRESHOLD_G2, C=args.C)
    extra = {"command": "eval-const", "genus": args.genus, "method": ev.method, "precision": args.prec,
             "seconds": round(ev.seconds, 4)}
    if ev.certificate is not None:
        extra["certificate"] = ev.certificate.to_dict()
    emit_values(ev.squares, args, extra)
    return EXIT_OK


def cmd_eval_func(args) -> int:
    if args.genus != 1:
        raise DomainError("theta functions are only available in genus 1")
    if args.method == "uniform":
        raise DomainError("the uniform method is only available for genus-2 constants")
    prec = _input_prec(args)
    p = PeriodPoint(1, (parse_scalar(args.tau, prec),), (parse_scalar(args.z, prec),))
    ev = functions_g1(p, args.prec, args.method, args.threshold or AUTO_THRESHOLD_G1)
    extra = {"command": "eval-func", "genus": 1, "method": ev.method, "precision": args.prec,
             "seconds": round(ev.seconds, 4)}
    for note in ev.notes:
        print(f"# note: {note}", file=sys.stderr)
    if ev.certificate is not None:
        extra["certificate"] = ev.certificate.to_dict()
    emit_values(ev.squares, args, extra)
    return EXIT_OK


def cmd_reduce(args) -> int:
    prec = _input_prec(args)
    p = parse_tau(args.tau, args.genus, prec)
    if args.genus == 1:
        red, gamma, cert = reduce_g1(p.tau[0], strict=args.strict)
        reduced = [red]
        if args.z is not None:
            z = parse_scalar(args.z, prec)
            if gamma != identity(1):
                # z transforms as z / (c tau + d)
                z = B.div(z, det_factor(gamma, p, prec), prec)
            zr, shift = reduce_z_g1(z, red)
            cert.z_shift = shift
            try:
                cert.halvings = halvings_for_S1(zr, red)
            except DomainError:
                cert.halvings = 0
            reduced_z = zr
        else:
            reduced_z = None
    else:
        if args.z is not None:
            raise DomainError("z reduction is only available in genus 1")
        q, gamma, cert = reduce_g2(p, strict=args.strict)
        reduced = list(q.tau)
        reduced_z = None
    if args.output == "json":
        doc = {"command": "reduce", "genus": args.genus, "tau": [t.to_dict() for t in reduced],
               "certificate": cert.to_dict()}
        if reduced_z is not None:
            doc["z"] = reduced_z.to_dict()
        print(json.dumps(doc, indent=2))
    else:
        digits = args.digits or 20
        names = ["tau"] if args.genus == 1 else ["tau11", "tau12", "tau22"]
        for n, t in zip(names, reduced):
            print(f"{n}' = {ball_text(t, digits)}")
        if reduced_z is not None:
            print(f"z' = {ball_text(reduced_z, digits)}")
            print(f"lattice shift (m, n) = {cert.z_shift}, halvings = {cert.halvings}")
        print("gamma = " + json.dumps([list(r) for r in cert.gamma]))
        print(f"certified: {cert.certified}")
    return EXIT_OK


def discrepancy_bits(a: ComplexBall, b: ComplexBall) -> int:
    """-log2 of an upper bound on |x - y| over x in a, y in b."""
    d = B.sub(a.midpoint(), b.midpoint(), max(a.prec, b.prec) + 64)
    err = B._UP.add(B._UP.add(d.abs_upper(), a.rad), b.rad)
    if err == 0:
        return 1 << 30
    return -int(gmpy2.get_exp(err)) + 1 if err > 0 else 1 << 30


def compare(sq1: dict, sq2: dict) -> tuple:
    """(all balls overlap, smallest agreement in bits) over common characteristics."""
    ok = True
    bits = 1 << 30
    for ch, v in sq1.items():
        if ch not in sq2:
            continue
        w = sq2[ch]
        ok = ok and v.overlaps(w)
        bits = min(bits, discrepancy_bits(v, w))
    return ok, bits


def cmd_verify(args) -> int:
    prec = _input_prec(args)
    N = args.prec
    if args.z is not None:
        if args.genus != 1:
            raise DomainError("theta functions are only available in genus 1")
        p = PeriodPoint(1, (parse_scalar(args.tau, prec),), (parse_scalar(args.z, prec),))
        fast = functions_g1(p, N, "newton")
        slow = functions_g1(p, N, "naive")
    elif args.genus == 1:
        t = parse_scalar(args.tau, prec)
        fast = constants_g1(t, N, "newton")
        slow = constants_g1(t, N, "naive")
    else:
        p = parse_tau(args.tau, 2, prec)
        fast = constants_g2(p, N, "uniform", C=args.C)
        slow = constants_g2(p, N, "naive")
    ok, bits = compare(fast.squares, slow.squares)
    if args.output == "json":
        print(json.dumps({"command": "verify", "genus": args.genus, "precision": N, "agree": ok,
                          "agreement_bits": bits, "methods": [fast.method, slow.method],
                          "seconds": [round(fast.seconds, 4), round(slow.seconds, 4)]}, indent=2))
    else:
        verdict = "agree" if ok else "DISAGREE"
        print(f"{fast.method} ({fast.seconds:.3f} s) vs {slow.method} ({slow.seconds:.3f} s): "
              f"{verdict} to >= {bits} bits")
    return EXIT_OK if ok else EXIT_INTERNAL


def bench_rows(genus: int, tau: str, z: Optional[str], start: int, stop: int, methods: Sequence[str],
               C=DEFAULT_C) -> list:
    """Timings for N = start, 2 start, ..., stop (one row per N and method)."""
    rows = []
    N = start
    while N <= stop:
        prec = N + 32
        for m in methods:
            t0 = time.perf_counter()
            if z is not None:
                p = PeriodPoint(1, (parse_scalar(tau, prec),), (parse_scalar(z, prec),))
                functions_g1(p, N, m)
            elif genus == 1:
                constants_g1(parse_scalar(tau, prec), N, m)
            else:
                constants_g2(parse_tau(tau, 2, prec), N, m, C=C)
            rows.append({"N": N, "method": m, "seconds": time.perf_counter() - t0})
        N *= 2
    return rows


def _default_tau(genus: int) -> str:
    return "0.1+1.1i" if genus == 1 else "0.1+1.1i, 0.2+0.3i, -0.1+1.3i"


def cmd_bench(args) -> int:
    tau = args.tau or _default_tau(args.genus)
    if args.methods:
        methods = args.methods.split(",")
    else:
        methods = ["naive", "newton"] if args.genus == 1 else ["naive", "uniform"]
    rows = bench_rows(args.genus, tau, args.z, args.start, args.stop, methods, C=args.C)
    if args.output == "json":
        print(json.dumps({"command": "bench", "genus": args.genus, "tau": tau, "rows": rows}, indent=2))
        return EXIT_OK
    print(f"{'N':>8}  " + "  ".join(f"{m:>12}" for m in methods))
    by_n = {}
    for r in rows:
        by_n.setdefault(r["N"], {})[r["method"]] = r["seconds"]
    for N, d in by_n.items():
        print(f"{N:>8}  " + "  ".join(f"{d[m]:>12.4f}" for m in methods))
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import write_report

    paths = write_report(args.out, genus=args.genus, start=args.start, stop=args.stop)
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_constants(args) -> int:
    from .schemes import constants_json

    print(constants_json())
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _common(sp, tau_required=True):
    sp.add_argument("--genus", type=int, choices=(1, 2), default=1)
    sp.add_argument("--tau", required=tau_required, help="complex literal; genus 2: diag(a,b) or 'a, b, c'")
    sp.add_argument("--prec", type=int, default=128, help="target precision in bits")
    sp.add_argument("--output", choices=("text", "json"), default="text")
    sp.add_argument("--digits", type=int, default=None, help="significant digits in text output")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="certtheta", description="Certified evaluation of theta functions.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("eval-const", help="squared theta constants")
    _common(sp)
    sp.add_argument("--method", choices=("naive", "newton", "uniform", "auto"), default="auto")
    sp.add_argument("--threshold", type=int, default=None, help="auto: direct summation below this precision")
    sp.add_argument("--C", type=float, default=DEFAULT_C, help="ladder constant of the uniform algorithm")
    sp.set_defaults(func=cmd_eval_const)

    sp = sub.add_parser("eval-func", help="squared genus-1 theta functions")
    _common(sp)
    sp.add_argument("--z", required=True)
    sp.add_argument("--method", choices=("naive", "newton", "uniform", "auto"), default="auto")
    sp.add_argument("--threshold", type=int, default=None)
    sp.set_defaults(func=cmd_eval_func)

    sp = sub.add_parser("reduce", help="reduce tau (and z in genus 1)")
    _common(sp)
    sp.add_argument("--z", default=None)
    sp.add_argument("--strict", action="store_true", help="fail unless the reduced point is certified")
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("verify", help="cross-check the fast method against direct summation")
    _common(sp)
    sp.add_argument("--z", default=None)
    sp.add_argument("--C", type=float, default=DEFAULT_C)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("bench", help="timings for doubling precisions")
    _common(sp, tau_required=False)
    sp.add_argument("--z", default=None)
    sp.add_argument("--start", type=int, default=256)
    sp.add_argument("--stop", type=int, default=4096)
    sp.add_argument("--methods", default=None, help="comma-separated list")
    sp.add_argument("--C", type=float, default=DEFAULT_C)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("report", help="render figures (timings, Newton and ladder precision) to files")
    sp.add_argument("--out", default="report")
    sp.add_argument("--genus", type=int, choices=(1, 2), default=2)
    sp.add_argument("--start", type=int, default=256)
    sp.add_argument("--stop", type=int, default=2048)
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("constants", help="print the constants of the Newton schemes as JSON")
    sp.set_defaults(func=cmd_constants)
    return ap


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, DomainError):
        return EXIT_DOMAIN
    if isinstance(exc, PrecisionError):
        return EXIT_PRECISION
    return EXIT_INTERNAL


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "prec", 1) < 1:
        print("error: precision must be positive", file=sys.stderr)
        return EXIT_DOMAIN
    try:
        return args.func(args)
    except ThetaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
