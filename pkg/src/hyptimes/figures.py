"""Matplotlib renderings of traces, ensembles, recurrence tables, integrals.

Every renderer draws on an explicit Agg canvas (no pyplot global state)
and stamps a fixed Software tag into the PNG metadata, so rerunning a
command with the same inputs reproduces the output byte for byte.
"""

from __future__ import annotations

import math

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .metadata import TOOL_NAME, VERSION

__all__ = [
    "render_trace_figure",
    "render_ensemble_figure",
    "render_recurrence_figure",
    "render_integrals_figure",
]

_DPI = 110
_META = {"Software": f"{TOOL_NAME} {VERSION}"}


def _save(fig: Figure, path) -> None:
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=_DPI, metadata=_META)


def render_trace_figure(trace, record, path) -> None:
    """Orbit series with detected hyperbolic times and the expansion walk.

    Top panel: x_j against j, hyperbolic times as vertical ticks.  Bottom
    panel: prefix sums B_n of log ||Df^-1|| - log sigma, whose running
    record minima are exactly the steps passing the expansion condition.
    """
    T = trace.n_steps
    steps = np.arange(T + 1)
    log_sigma = record.params.log_sigma
    t = trace.log_inv[:T] - log_sigma
    prefix = np.concatenate([[0.0], np.cumsum(t)])

    fig = Figure(figsize=(8.0, 6.0))
    ax1, ax2 = fig.subplots(2, 1, sharex=True)

    ax1.plot(steps, trace.points, lw=0.7, color="tab:blue")
    for n in record.times:
        ax1.axvline(n, color="tab:red", lw=0.5, alpha=0.35)
    ax1.set_ylabel("x_j")
    title = f"{record.map_name or 'trace'}: {record.count} hyperbolic times"
    if trace.censored:
        title += f" (censored at step {trace.censor_step})"
    ax1.set_title(title, fontsize=11)
    ax1.grid(alpha=0.3)

    ax2.plot(steps, prefix, lw=0.9, color="tab:blue")
    if record.count:
        ax2.plot(record.times, prefix[record.times], ls="none", marker="o",
                 ms=3.5, color="tab:red", label="hyperbolic times")
        ax2.legend(fontsize=9)
    ax2.set_xlabel("step n")
    ax2.set_ylabel("B_n")
    ax2.grid(alpha=0.3)

    fig.tight_layout()
    _save(fig, path)


def render_ensemble_figure(report, path) -> None:
    """First-time histogram, survival scaling, and truncated-mean growth."""
    fig = Figure(figsize=(8.0, 9.0))
    ax1, ax2, ax3 = fig.subplots(3, 1)

    ks = sorted(report.first_hist)
    if ks:
        counts = np.array([report.first_hist[k] for k in ks], dtype=np.float64)
        denom = max(report.n_uncensored, 1)
        ax1.loglog(ks, counts / denom, ls="none", marker=".", ms=4,
                   color="tab:blue")
    ax1.set_xlabel("first hyperbolic time h")
    ax1.set_ylabel("fraction of orbits")
    ax1.set_title(
        f"{report.config.map_name}: M={report.config.n_orbits}, "
        f"N={report.config.n_steps}, undetected {report.undetected_count}",
        fontsize=11)
    ax1.grid(alpha=0.3, which="both")

    ns = np.array([n for n, _, f in report.tail if f > 0], dtype=np.float64)
    fs = np.array([f for _, _, f in report.tail if f > 0], dtype=np.float64)
    if ns.size:
        ax2.semilogx(ns, ns * fs, lw=1.0, marker=".", ms=3, color="tab:blue")
    ax2.set_xlabel("n")
    ax2.set_ylabel("n P(h > n)")
    ax2.grid(alpha=0.3)

    caps = sorted(report.truncated_means)
    tms = [report.truncated_means[c] for c in caps]
    ax3.semilogx(caps, tms, lw=1.0, marker="o", ms=4, color="tab:blue")
    ax3.set_xlabel("cap")
    ax3.set_ylabel("truncated mean of h")
    ax3.grid(alpha=0.3)

    fig.tight_layout()
    _save(fig, path)


def render_recurrence_figure(report, path, y1: float) -> None:
    """Gap scaling n y_n and the divergent partial sums against log n."""
    ns = np.array([r.n for r in report.rows], dtype=np.float64)
    gaps = np.array([r.gap for r in report.rows])
    sums = np.array([r.partial_sum for r in report.rows])
    hbound = np.array([r.harmonic_bound for r in report.rows])

    fig = Figure(figsize=(8.0, 6.0))
    ax1, ax2 = fig.subplots(2, 1)

    ax1.semilogx(ns, ns * gaps, lw=1.0, color="tab:blue")
    ax1.axhline(4.0, color="tab:gray", lw=0.8, ls="--", label="limit 4")
    ax1.axhline(0.5, color="tab:red", lw=0.8, ls=":", label="bound 1/2")
    ax1.set_xlabel("n")
    ax1.set_ylabel("n y_n")
    ax1.set_title(f"gap recurrence from y_1 = {y1}", fontsize=11)
    ax1.legend(fontsize=9)
    ax1.grid(alpha=0.3)

    ax2.semilogx(ns, sums, lw=1.0, color="tab:blue", label="S_n")
    ax2.semilogx(ns, hbound, lw=0.9, color="tab:red", ls=":",
                 label="H_n / 16")
    mask = ns > 1
    ax2.semilogx(ns[mask], 4.0 * np.log(ns[mask]), lw=0.8, color="tab:gray",
                 ls="--", label="4 log n")
    ax2.set_xlabel("n")
    ax2.set_ylabel("partial sum")
    ax2.legend(fontsize=9)
    ax2.grid(alpha=0.3)

    fig.tight_layout()
    _save(fig, path)


def render_integrals_figure(results, path) -> None:
    """Moment values against p with convergence depth annotations."""
    ps = [r.p for r in results]
    vals = [r.value for r in results]

    fig = Figure(figsize=(6.0, 4.5))
    ax = fig.subplots()
    ax.plot(ps, vals, lw=1.0, marker="o", ms=5, color="tab:blue")
    for r in results:
        ax.annotate(f"{r.levels} levels", (r.p, r.value), fontsize=8,
                    textcoords="offset points", xytext=(6, -4))
    ax.set_yscale("log")
    ax.set_xticks(ps)
    ax.set_xlabel("moment order p")
    ax.set_ylabel("integral of (-log dist_delta)^p")
    if results:
        ax.set_title(f"delta = {results[0].delta}", fontsize=11)
    ax.grid(alpha=0.3)

    fig.tight_layout()
    _save(fig, path)
