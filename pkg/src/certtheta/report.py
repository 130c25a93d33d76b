"""Figures for a quick visual check of timings and precision behaviour.

matplotlib is imported lazily so that the rest of the package does not
depend on it at import time.
"""

from __future__ import annotations

import os
from typing import List

from .naive import PeriodPoint
from .reduction import theta_g2_uniform


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_timings(rows: list, path: str, title: str) -> str:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for m in sorted({r["method"] for r in rows}):
        pts = [(r["N"], r["seconds"]) for r in rows if r["method"] == m]
        ax.loglog([p[0] for p in pts], [p[1] for p in pts], marker="o", base=2, label=m)
    ax.set_xlabel("precision N (bits)")
    ax.set_ylabel("seconds")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_newton_trace(trace: list, path: str, title: str) -> str:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    loops = list(range(len(trace) + 1))
    prec = [t["n"] for t in trace] + ([trace[-1]["n_prime"]] if trace else [])
    ax.semilogy(loops, prec, marker="o", base=2, label="certified bits n")
    ax.semilogy(loops[:-1], [t["p"] for t in trace], marker="x", base=2, label="working precision p")
    ax.set_xlabel("Newton loop")
    ax.set_ylabel("bits")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_ladder(signs: list, path: str, title: str) -> str:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = list(range(len(signs)))
    ax.plot(xs, [s["radius_bits"] for s in signs], marker="o")
    ax.set_xticks(xs)
    ax.set_xticklabels([s["op"] for s in signs])
    ax.set_xlabel("rung (bottom = input point)")
    ax.set_ylabel("-log2 of the largest radius")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def write_report(out_dir: str, genus: int = 2, start: int = 256, stop: int = 2048) -> List[str]:
    """Render the three figures into ``out_dir`` and return their paths."""
    from .cli import _default_tau, bench_rows
    from .schemes import G1CONST, G2CONST, solve_quotients

    os.makedirs(out_dir, exist_ok=True)
    paths = []
    methods = ["naive", "newton"] if genus == 1 else ["naive", "uniform"]
    tau = _default_tau(genus)
    rows = bench_rows(genus, tau, None, start, stop, methods)
    paths.append(plot_timings(rows, os.path.join(out_dir, "timings.png"),
                              f"genus {genus} theta constants at tau = {tau}"))
    if genus == 1:
        p = PeriodPoint.g1("0.1+1.1i", prec=stop + 64)
        variant = G1CONST
    else:
        p = PeriodPoint.g2("0.1+1.1i", "0.2+0.3i", "-0.1+1.3i", prec=stop + 64)
        variant = G2CONST
    q = solve_quotients(variant, p, stop, trace=True)
    paths.append(plot_newton_trace(q.trace, os.path.join(out_dir, "newton.png"),
                                   f"{variant}: Newton precision schedule, N = {stop}"))
    p2 = PeriodPoint.g2("0.3+1.4i", "0.1+0.2i", "60i", prec=stop + 64)
    res = theta_g2_uniform(p2, stop, return_certificate=True)
    paths.append(plot_ladder(res.certificate.signs, os.path.join(out_dir, "ladder.png"),
                             f"duplication ladder, N = {stop}"))
    return paths
