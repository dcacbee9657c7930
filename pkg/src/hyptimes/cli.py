"""Command line interface.

Subcommands: ``simulate`` (one orbit with detection trace), ``ensemble``
(parallel orbit statistics), ``recurrence`` (gap-sequence divergence
table with bound checks), ``integrals`` (quadrature of the log-distance
moments), and ``verify`` (the acceptance suite).

Configuration comes from flags, or from a JSON file via ``--config``
with flags taking precedence.  Every run is deterministic given its
configuration and seed, and every artifact embeds the tool version and
a digest of the generating configuration.  Report paths render figures
next to the delimited output unless ``--no-plot`` is given.

Exit codes: 0 success, 1 verification or bound failure, 2 usage error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from .acceptance import run_criteria
from .detector import (
    generate_orbit,
    hyperbolic_times_stream,
    write_record_json,
    write_trace_csv,
)
from .ensemble import EnsembleConfig, orbit_rng, run_ensemble, tail_growth_diagnostic
from .figures import (
    render_ensemble_figure,
    render_integrals_figure,
    render_recurrence_figure,
    render_trace_figure,
)
from .maps import make_map, registered_map_names
from .metadata import TOOL_NAME, VERSION, config_digest, header_lines, json_meta
from .quadrature import integral_log_dist
from .recurrence import (
    GapSequence,
    check_induction_bound,
    partial_sum_divergence,
    write_gap_csv,
)

__all__ = ["main", "build_parser"]


def _add_common(p: argparse.ArgumentParser, with_map: bool = True) -> None:
    if with_map:
        p.add_argument("--map", help="map name, e.g. circle-intermittent, doubling, "
                                     "quadratic(a), manneville(s)")
    p.add_argument("--sigma", type=float, help="contraction rate in (0, 1); "
                                               "default exp(-1/4)")
    p.add_argument("--delta", type=float, help="distance truncation radius; default 0.1")
    p.add_argument("--b", type=float, help="distance exponent; default half the "
                                           "admissible bound for the map")
    p.add_argument("--seed", type=int, help="RNG seed; default 0")
    p.add_argument("--out", help="output directory; default current directory")
    p.add_argument("--workers", type=int, help="parallel workers; default all cores")
    p.add_argument("--config", help="JSON config file; flags override its entries")
    p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=None,
                   help="render figures next to the delimited output (default on)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog=TOOL_NAME,
        description="Hyperbolic time detection and ergodic statistics "
                    "for one-dimensional maps.",
    )
    p.add_argument("--version", action="version", version=f"{TOOL_NAME} {VERSION}")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", help="one orbit with a detection trace")
    _add_common(ps)
    ps.add_argument("--x0", type=float, help="initial point; default drawn from seed")
    ps.add_argument("--n", type=int, help="orbit length; default 1000")
    ps.set_defaults(func=cmd_simulate)

    pe = sub.add_parser("ensemble", help="orbit ensemble statistics")
    _add_common(pe)
    pe.add_argument("--n", type=int, help="steps per orbit; default 10000")
    pe.add_argument("--orbits", type=int, help="number of orbits; default 10000")
    pe.set_defaults(func=cmd_ensemble)

    pr = sub.add_parser("recurrence", help="gap-sequence divergence table")
    _add_common(pr, with_map=False)
    pr.add_argument("--x1", type=float, help="starting point in (0, 1/2); default 0.25")
    pr.add_argument("--n", type=int, help="number of terms; default 1000000")
    pr.set_defaults(func=cmd_recurrence)

    pi = sub.add_parser("integrals", help="moments of -log dist against "
                                          "normalised Lebesgue measure")
    _add_common(pi)
    pi.add_argument("--p-max", type=int, dest="p_max", help="highest moment; default 4")
    pi.add_argument("--tol", type=float, help="refinement tolerance; default 1e-8")
    pi.set_defaults(func=cmd_integrals)

    pv = sub.add_parser("verify", help="run the acceptance criteria")
    _add_common(pv, with_map=False)
    pv.add_argument("--criteria", help="only run criteria whose id contains this substring")
    pv.set_defaults(func=cmd_verify)

    return p


def _load_config(ns: argparse.Namespace) -> dict:
    """Merge the JSON config file (if any) under the explicit flags."""
    cfg: dict = {}
    if ns.config:
        with open(ns.config) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ValueError(f"config file {ns.config} must hold a JSON object")
        cfg.update(loaded)
    for key, val in vars(ns).items():
        if key in ("func", "command", "config") or val is None:
            continue
        cfg[key.replace("-", "_")] = val
    return cfg


def _resolve(cfg: dict, key: str, default):
    return cfg.get(key, default) if cfg.get(key) is not None else default


def _out_dir(cfg: dict) -> Path:
    out = Path(_resolve(cfg, "out", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require_map(cfg: dict):
    name = cfg.get("map")
    if not name:
        raise ValueError("--map is required (or a 'map' entry in --config); "
                         f"registered: {', '.join(registered_map_names())}")
    return make_map(name)


def cmd_simulate(ns: argparse.Namespace) -> int:
    cfg = _load_config(ns)
    m = _require_map(cfg)
    params = m.default_params(cfg.get("sigma"), cfg.get("delta"), cfg.get("b"))
    seed = int(_resolve(cfg, "seed", 0))
    n_steps = int(_resolve(cfg, "n", 1000))
    if n_steps < 1:
        raise ValueError(f"--n must be >= 1, got {n_steps}")
    x0 = cfg.get("x0")
    if x0 is None:
        x0 = m.sample_uniform(orbit_rng(seed, 0))
    out = _out_dir(cfg)

    trace = generate_orbit(m, float(x0), n_steps, delta=params.delta)
    record = hyperbolic_times_stream(trace, params)
    extra = {"command": "simulate", "seed": seed}
    csv_path = write_trace_csv(trace, record, out / "trace.csv", extra_meta=extra)
    json_path = write_record_json(trace, record, out / "record.json", extra_meta=extra)
    written = [csv_path, json_path]
    if _resolve(cfg, "plot", True):
        render_trace_figure(trace, record, out / "trace.png")
        written.append(out / "trace.png")

    if trace.censored:
        print(f"orbit hit the exceptional set at step {trace.censor_step}; "
              f"trace censored there")
    print(f"x0 = {float(x0)!r}: {record.count} hyperbolic times in "
          f"{trace.n_steps} steps, first = {record.first_label}")
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_ensemble(ns: argparse.Namespace) -> int:
    cfg = _load_config(ns)
    m = _require_map(cfg)
    params = m.default_params(cfg.get("sigma"), cfg.get("delta"), cfg.get("b"))
    config = EnsembleConfig(
        map_name=m.name if "(" not in str(cfg.get("map")) else str(cfg.get("map")),
        sigma=params.sigma, delta=params.delta, b=params.b,
        n_steps=int(_resolve(cfg, "n", 10_000)),
        n_orbits=int(_resolve(cfg, "orbits", 10_000)),
        seed=int(_resolve(cfg, "seed", 0)),
        observables=("log_inv_deriv", "neglog_dist_delta"),
        workers=int(_resolve(cfg, "workers", os.cpu_count() or 1)),
    )
    out = _out_dir(cfg)
    report = run_ensemble(config)
    report.write_json(out / "report.json")
    report.write_hist_csv(out / "hist.csv")
    report.write_tail_csv(out / "tail.csv")
    written = [out / "report.json", out / "hist.csv", out / "tail.csv"]
    if _resolve(cfg, "plot", True):
        render_ensemble_figure(report, out / "ensemble.png")
        written.append(out / "ensemble.png")

    diag = tail_growth_diagnostic(report)
    detected = report.n_uncensored - report.undetected_count
    print(f"{config.n_orbits} orbits x {config.n_steps} steps on {config.map_name}: "
          f"{report.censored_count} censored, {detected} with a detected first time, "
          f"{report.undetected_count} undetected")
    print(f"first-time tail classified as {diag.classification} "
          f"(top-decade n*P(h>n) mean {diag.top_decade_np_mean:.1f})")
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_recurrence(ns: argparse.Namespace) -> int:
    cfg = _load_config(ns)
    x1 = float(_resolve(cfg, "x1", 0.25))
    if not 0.0 < x1 < 0.5:
        raise ValueError(
            f"--x1 must lie in (0, 1/2), got {x1}: the lower-bound induction "
            f"for the gap sequence needs y_1 = 1 - x_1 >= 1/2"
        )
    n_terms = int(_resolve(cfg, "n", 10 ** 6))
    if n_terms < 1:
        raise ValueError(f"--n must be >= 1, got {n_terms}")
    out = _out_dir(cfg)

    seq = GapSequence.from_x1(x1, n_terms)
    induction = check_induction_bound(seq)
    report = partial_sum_divergence(seq)

    write_gap_csv(report, out / "recurrence.csv", y1=seq.y1)
    meta_cfg = {"command": "recurrence", "x1": x1, "n": n_terms}
    payload = {
        "meta": json_meta(meta_cfg),
        "induction_holds": induction.holds,
        "induction_worst_slack": induction.worst_slack,
        "term_bound_holds": report.term_bound_holds,
        "sum_vs_harmonic_holds": report.sum_bound_holds,
        "unbounded_growth": report.unbounded_growth,
        "partial_sum": report.partial_sum,
        "ratio_to_log": report.ratio_to_log,
        "decade_slopes": list(report.decade_slopes),
    }
    with open(out / "recurrence.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written = [out / "recurrence.csv", out / "recurrence.json"]
    if _resolve(cfg, "plot", True):
        render_recurrence_figure(report, out / "recurrence.png", y1=seq.y1)
        written.append(out / "recurrence.png")

    checks = [
        ("lower bound 2n*y_n >= 1", induction.holds),
        ("term bound 16n^2*term_n >= 1", report.term_bound_holds),
        ("partial sums >= harmonic/16", report.sum_bound_holds),
        ("per-decade growth bounded below", report.unbounded_growth),
    ]
    failed = 0
    for label, holds in checks:
        print(f"{'PASS' if holds else 'FAIL'} {label}")
        failed += 0 if holds else 1
    print(f"S_N = {report.partial_sum:.6f} at N = {n_terms} "
          f"(S_N / ln N = {report.ratio_to_log:.6f})")
    for path in written:
        print(f"wrote {path}")
    return 1 if failed else 0


def cmd_integrals(ns: argparse.Namespace) -> int:
    cfg = _load_config(ns)
    m = _require_map(cfg)
    params = m.default_params(cfg.get("sigma"), cfg.get("delta"), cfg.get("b"))
    p_max = int(_resolve(cfg, "p_max", 4))
    if p_max < 1:
        raise ValueError(f"--p-max must be >= 1, got {p_max}")
    tol = float(_resolve(cfg, "tol", 1e-8))
    out = _out_dir(cfg)

    results = [integral_log_dist(m, p=p, delta=params.delta, tol=tol)
               for p in range(1, p_max + 1)]

    meta_cfg = {"command": "integrals", "map": cfg.get("map"),
                "delta": params.delta, "p_max": p_max, "tol": tol}
    lines = header_lines(meta_cfg)
    lines.append("p,value,levels,est_error,converged,n_eval")
    for r in results:
        lines.append(f"{r.p},{r.value!r},{r.levels},{r.est_error!r},"
                     f"{int(r.converged)},{r.n_eval}")
    with open(out / "integrals.csv", "w") as fh:
        fh.write("\n".join(lines) + "\n")
    payload = {
        "meta": json_meta(meta_cfg),
        "results": [{"p": r.p, "value": r.value, "levels": r.levels,
                     "est_error": r.est_error, "converged": r.converged,
                     "n_eval": r.n_eval} for r in results],
    }
    with open(out / "integrals.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written = [out / "integrals.csv", out / "integrals.json"]
    if _resolve(cfg, "plot", True):
        render_integrals_figure(results, out / "integrals.png")
        written.append(out / "integrals.png")

    bad = [r.p for r in results if not r.converged]
    for r in results:
        note = "" if r.converged else "  NOT CONVERGED"
        print(f"p = {r.p}: integral = {r.value:.12g} "
              f"({r.levels} levels, est err {r.est_error:.2e}){note}")
    for path in written:
        print(f"wrote {path}")
    if bad:
        print(f"refinement did not converge for p in {bad}")
        return 1
    return 0


def cmd_verify(ns: argparse.Namespace) -> int:
    cfg = _load_config(ns)
    out = _out_dir(cfg)
    workers = cfg.get("workers")
    results = run_criteria(filter_substring=cfg.get("criteria"),
                           workers=int(workers) if workers is not None else None)
    for r in results:
        print(r.line)
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} criteria passed")

    meta_cfg = {"command": "verify", "criteria": cfg.get("criteria")}
    payload = {
        "meta": json_meta(meta_cfg),
        "passed": n_pass == len(results),
        "criteria": [r.to_json_dict() for r in results],
    }
    with open(out / "verify.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out / 'verify.json'}")
    return 0 if n_pass == len(results) else 1


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
