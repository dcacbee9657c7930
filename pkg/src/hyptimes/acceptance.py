"""Acceptance checks for the detection pipeline.

Each criterion is a self-contained check with a stated tolerance and an
optional runtime budget; :func:`run_criteria` executes them in order and
returns one :class:`CriterionResult` per criterion.  The checks are
exercised both by the test suite and by the ``verify`` subcommand of the
command line tool, so a regression shows up identically in either path.

All randomised checks run from fixed seeds.  Reference values marked as
frozen were computed once with independent high-precision arithmetic
(exact rationals where the recurrence is dyadic, 40+ digit floating
iteration otherwise) and are pinned here; the test suite recomputes the
cheap ones live.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .detector import (
    generate_orbit,
    hyperbolic_times_stream,
    naive_hyperbolic_times,
    sweep_backward_contraction,
    OrbitTrace,
)
from .ensemble import (
    EnsembleConfig,
    EnsembleReport,
    orbit_rng,
    pushforward_density_probe,
    run_ensemble,
    transfer_identity_check,
)
from .maps import HyperbolicParams, MapModel, make_map
from .quadrature import integral_log_dist
from .recurrence import GapSequence, check_induction_bound, partial_sum_divergence

__all__ = [
    "ACCEPT_SEED",
    "AcceptanceContext",
    "CriterionResult",
    "CRITERION_IDS",
    "GAP_REFS_36",
    "PINNED_NPN_INTERVAL",
    "RECUR_RATIO_1E6",
    "run_criteria",
    "run_single",
]

ACCEPT_SEED = 20260816

# circle-map defaults used throughout the checks
_SIGMA = math.exp(-0.25)
_DELTA = 0.1
_B = 0.25

# Pinned interval for n * P(h > n) over n in [1e3, 1e4] on the reference
# ensemble.  Recorded at the first green run (observed range 264.9 to
# 2649.0) and held fixed since; a drift outside it means the detector or
# the engine changed behaviour.
PINNED_NPN_INTERVAL = (250.0, 2700.0)

# S_N / ln N at N = 1e6 for the gap recurrence started at x1 = 0.25,
# frozen from 40-digit iteration.  The asymptotic value of the ratio is 4
# (the partial sums grow like 4 ln N + C with C ~ -11.1), so at N = 1e6
# the ratio is still far below its limit; the per-decade slope is the
# quantity that has converged, and the divergence check below asserts the
# slope window while pinning the ratio itself against this value.
RECUR_RATIO_1E6 = 3.1966381727745444

# y_n for n = 1..30 from y_1 = 3/4, frozen to 36 significant digits from
# exact dyadic arithmetic (the recurrence preserves dyadic rationals; the
# test suite re-derives these live).
GAP_REFS_36 = (
    "0.750000000000000000000000000000000000",
    "0.609375000000000000000000000000000000",
    "0.516540527343750000000000000000000000",
    "0.449836998246610164642333984375000000",
    "0.399248666998729975557633209426455778",
    "0.359398792473664281090468985916712574",
    "0.327106919465782279815648024995509114",
    "0.300357185275183836273763485225585468",
    "0.277803575588576058794487704399926131",
    "0.258509868936126635811622822865491714",
    "0.241803030851783293065066208894122215",
    "0.227185854419506177300427016077324247",
    "0.214282501307425913682294194772920601",
    "0.202803253715784166580640461935210974",
    "0.192520963786356985488329832401383730",
    "0.183254883412050041029745362947038887",
    "0.174859295338459027707773460865559105",
    "0.167215352046893417943451465813005386",
    "0.160225108556851792248953041175981752",
    "0.153807087203838056894891029588588900",
    "0.147892932185305795759131814007191859",
    "0.142424852337713931024841669647709454",
    "0.137353642696859026674053353284142619",
    "0.132637136906334922915522040031920543",
    "0.128238984384657464494013485240493579",
    "0.124127675105655359239658962277982822",
    "0.120275755173871575940013881153728119",
    "0.116659190853210302147843547790639655",
    "0.113256849150578865591740248601844879",
    "0.110050070680699621414614239419560232",
)


@dataclass
class CriterionResult:
    """Outcome of one acceptance criterion."""

    cid: str
    passed: bool
    runtime_s: float
    budget_s: float | None
    summary: str
    details: dict = field(default_factory=dict)

    @property
    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        budget = f" (budget {self.budget_s:g}s)" if self.budget_s is not None else ""
        return f"{status} {self.cid}: {self.summary} [{self.runtime_s:.2f}s{budget}]"

    def to_json_dict(self) -> dict:
        return {
            "id": self.cid,
            "passed": self.passed,
            "runtime_s": self.runtime_s,
            "budget_s": self.budget_s,
            "summary": self.summary,
            "details": self.details,
        }


class AcceptanceContext:
    """Lazily-built shared inputs for the acceptance checks.

    The two reference ensembles are expensive, so criteria share one
    instance of each through this cache.
    """

    def __init__(self, workers: int | None = None):
        self.workers = workers if workers is not None else min(4, os.cpu_count() or 1)
        self._big: EnsembleReport | None = None
        self._medium: EnsembleReport | None = None

    def big_ensemble(self) -> EnsembleReport:
        """Circle map, 1e4 orbits of 1e4 steps, default parameters."""
        if self._big is None:
            self._big = run_ensemble(EnsembleConfig(
                map_name="circle-intermittent",
                sigma=_SIGMA, delta=_DELTA, b=_B,
                n_steps=10_000, n_orbits=10_000,
                seed=ACCEPT_SEED,
                observables=("log_inv_deriv", "neglog_dist_delta"),
                workers=self.workers,
            ))
        return self._big

    def medium_ensemble(self) -> EnsembleReport:
        """Circle map, 1e4 orbits of 1e3 steps, for the Birkhoff check."""
        if self._medium is None:
            self._medium = run_ensemble(EnsembleConfig(
                map_name="circle-intermittent",
                sigma=_SIGMA, delta=_DELTA, b=_B,
                n_steps=1_000, n_orbits=10_000,
                seed=ACCEPT_SEED + 1,
                observables=("log_inv_deriv", "neglog_dist_delta"),
                workers=self.workers,
            ))
        return self._medium


# -- criteria ---------------------------------------------------------------


def _transfer_identity(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    # the two inverse branches must resolve the constant density exactly:
    # sum over branches of 1/|f'(g_i(x))| = 1 for every x
    m = make_map("circle-intermittent")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(ACCEPT_SEED + 10)))
    xs = rng.uniform(-1.0, 1.0, 100_000)
    defect = transfer_identity_check(m, xs)
    tol = 1e-12
    ok = defect <= tol
    return ok, f"max |sum_i 1/f'(g_i(x)) - 1| = {defect:.3e} <= {tol:g} over 1e5 points", {
        "max_defect": defect, "tolerance": tol, "n_points": 100_000,
    }


def _birkhoff_mean(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    # orbit averages of log|f'|^{-1} must centre on the space average -1/2
    rep = ctx.medium_ensemble()
    stats = rep.birkhoff["log_inv_deriv"]
    mean, med = stats["mean"], stats["median_of_batches"]
    ok = abs(mean + 0.5) <= 0.03 and abs(med + 0.5) <= 0.05
    return ok, (
        f"ensemble mean {mean:.6f} within +-0.03 of -0.5, "
        f"median-of-batches {med:.6f} within +-0.05"
    ), {"mean": mean, "median_of_batches": med, "se": stats["se"],
        "n_orbits": rep.n_uncensored}


def _oracle_equivalence(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    # streaming detector vs the quadratic-time definition scan, on synthetic
    # series with no map structure and on real circle-map traces
    params = HyperbolicParams(sigma=_SIGMA, delta=_DELTA, b=_B)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(ACCEPT_SEED + 20)))
    mismatches = 0
    n_synth = 1000
    for _ in range(n_synth):
        t = int(rng.integers(1, 513))
        log_inv = rng.uniform(-2.0, 1.0, t)
        neglog = np.maximum(0.0, rng.exponential(1.0, t) - 1.0)
        trace = OrbitTrace.from_series(log_inv, neglog, delta=_DELTA)
        naive = naive_hyperbolic_times(trace, params)
        stream = hyperbolic_times_stream(trace, params)
        if naive != [int(v) for v in stream.times]:
            mismatches += 1

    m = make_map("circle-intermittent")
    n_circle = 100
    for i in range(n_circle):
        orng = orbit_rng(ACCEPT_SEED + 21, i)
        trace = generate_orbit(m, m.sample_uniform(orng), 1000, delta=_DELTA)
        naive = naive_hyperbolic_times(trace, params)
        stream = hyperbolic_times_stream(trace, params)
        if naive != [int(v) for v in stream.times]:
            mismatches += 1

    ok = mismatches == 0
    return ok, (
        f"streaming == naive detector on {n_synth} synthetic + {n_circle} "
        f"circle traces, {mismatches} mismatches (exact)"
    ), {"mismatches": mismatches, "n_synthetic": n_synth, "n_circle": n_circle}


def _sigma_exact_doubling(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    # with sigma equal to the uniform expansion rate and S empty, every
    # time is hyperbolic: the prefix sums vanish identically in floats
    m = make_map("doubling")
    params = HyperbolicParams(sigma=0.5, delta=_DELTA, b=_B)
    n_steps, n_seeds = 1000, 100
    bad = 0
    expected = list(range(1, n_steps + 1))
    for i in range(n_seeds):
        orng = orbit_rng(ACCEPT_SEED + 30, i)
        trace = generate_orbit(m, m.sample_uniform(orng), n_steps, delta=_DELTA)
        rec = hyperbolic_times_stream(trace, params)
        if [int(v) for v in rec.times] != expected or rec.frequency_at(n_steps) != 1.0:
            bad += 1
    ok = bad == 0
    return ok, (
        f"doubling with sigma = 1/2: times == 1..{n_steps} and frequency == 1.0 "
        f"exactly for {n_seeds}/{n_seeds - bad if bad else n_seeds} seeds"
    ), {"n_seeds": n_seeds, "n_steps": n_steps, "failures": bad}


def _tail_nonintegrable(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    # heavy first-time tail: cap-truncated means keep growing by decade,
    # and n * P(h > n) stays inside the pinned band over the top decade
    rep = ctx.big_ensemble()
    caps = (100, 1000, 10_000)
    m1, m2, m3 = (rep.truncated_means[c] for c in caps)
    growing = m1 < m2 < m3
    increment_ok = (m3 - m2) >= 0.10 * m2

    lo, hi = PINNED_NPN_INTERVAL
    npn = [(n, n * frac) for n, _, frac in rep.tail if 1000 <= n <= 10_000]
    npn_vals = [v for _, v in npn]
    band_ok = all(lo <= v <= hi for v in npn_vals)

    ok = growing and increment_ok and band_ok
    return ok, (
        f"truncated means {m1:.3f} < {m2:.3f} < {m3:.3f} "
        f"(last-decade increment {100 * (m3 - m2) / m2:.0f}% >= 10%), "
        f"n*P(h>n) in [{min(npn_vals):.1f}, {max(npn_vals):.1f}] "
        f"within pinned [{lo:g}, {hi:g}]"
    ), {"truncated_means": {str(c): rep.truncated_means[c] for c in caps},
        "npn_min": min(npn_vals), "npn_max": max(npn_vals),
        "pinned_interval": [lo, hi], "n_grid_points": len(npn)}


def _first_time_necessary(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    # h = n forces |f'(x_{n-1})| >= 1/sigma, i.e. |x_{n-1}| <= sigma^2
    rep = ctx.big_ensemble()
    violations = rep.necessary_violations
    worst = rep.first_prev_abs_max
    bound = _SIGMA ** 2
    ok = violations == 0
    return ok, (
        f"|x_(h-1)| <= sigma^2 on every detected orbit: {violations} violations, "
        f"max |x_(h-1)| = {worst:.6f} vs sigma^2 = {bound:.6f}"
    ), {"violations": violations, "max_prev_abs": worst, "sigma_sq": bound,
        "n_detected": int(rep.first_times.size)}


def _recurrence_bounds(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    n_terms = 10 ** 6
    seq = GapSequence.from_x1(0.25, n_terms)
    induction = check_induction_bound(seq)
    rep = partial_sum_divergence(seq)

    # frozen high-precision references for the first 30 gaps
    refs = np.array([float(s) for s in GAP_REFS_36])
    rel = np.abs(seq.y[:30] - refs) / refs
    spot_ok = bool(np.all(rel <= 1e-12))

    # the partial sums grow like 4 ln N + C; at N = 1e6 the additive
    # constant still depresses the plain ratio (pinned below), so the
    # rate assertion goes on the last-decade slope, which has converged
    slope = rep.decade_slopes[-1]
    slope_ok = 3.5 <= slope <= 4.5
    ratio_ok = abs(rep.ratio_to_log - RECUR_RATIO_1E6) <= 1e-12

    ok = (induction.holds and rep.term_bound_holds and rep.sum_bound_holds
          and spot_ok and slope_ok and ratio_ok)
    return ok, (
        f"2n*y_n >= 1 for n <= 1e6 (worst slack {induction.worst_slack:.3e}), "
        f"16n^2*term >= 1 all n, exact-arith spot check rel <= {rel.max():.1e} "
        f"for n <= 30, dS/dlnN (last decade) = {slope:.4f} in [3.5, 4.5], "
        f"S/lnN = {rep.ratio_to_log:.12f} == frozen ref"
    ), {"induction_holds": induction.holds,
        "induction_worst_slack": induction.worst_slack,
        "term_bound_holds": rep.term_bound_holds,
        "sum_vs_harmonic_holds": rep.sum_bound_holds,
        "spot_check_max_rel": float(rel.max()),
        "last_decade_slope": slope,
        "ratio_to_log": rep.ratio_to_log,
        "ratio_frozen_ref": RECUR_RATIO_1E6,
        "partial_sum": rep.partial_sum}


def _closed_form_neglog_moment(reach: float, p: int) -> float:
    # integral_0^L (-ln u)^p du = L * sum_{k=0}^p (p!/k!) (-ln L)^k
    total = 0.0
    for k in range(p + 1):
        total += (math.factorial(p) / math.factorial(k)) * (-math.log(reach)) ** k
    return reach * total


def _quadrature(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    # with the truncation radius at the half-gap the distance is never
    # clipped, so the integrals have closed forms to pin against
    m = make_map("circle-intermittent")
    reach = 0.5
    exact1 = 1.0 + math.log(2.0)
    r1 = integral_log_dist(m, p=1, delta=reach)
    err1 = abs(r1.value - exact1)
    ok = r1.converged and err1 <= 1e-6

    details: dict = {"p1_value": r1.value, "p1_exact": exact1, "p1_abs_err": err1,
                     "p1_levels": r1.levels}
    worst_rel = 0.0
    for p in (2, 3, 4):
        r = integral_log_dist(m, p=p, delta=reach, tol=1e-6)
        # 4 pieces of reach 1/2 on a circle of period 2
        exact = 4.0 * _closed_form_neglog_moment(reach, p) / m.period
        rel = abs(r.value - exact) / exact
        worst_rel = max(worst_rel, rel)
        ok = ok and r.converged and rel <= 1e-6
        details[f"p{p}_value"] = r.value
        details[f"p{p}_exact"] = exact
        details[f"p{p}_rel_err"] = rel
    return ok, (
        f"p=1: |{r1.value:.9f} - (1+log 2)| = {err1:.2e} <= 1e-6; "
        f"p in {{2,3,4}} converged with worst rel err {worst_rel:.2e} <= 1e-6"
    ), details


def _backward_contraction(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    # at a hyperbolic time n, pulling a small endpoint offset back k steps
    # must contract by at least sigma^{k/2}
    m = make_map("circle-intermittent")
    params = HyperbolicParams(sigma=_SIGMA, delta=_DELTA, b=_B)
    n_orbits, n_steps, offset = 100, 1000, 1e-9
    checks = violations = inconclusive = 0
    worst = 0.0
    for i in range(n_orbits):
        orng = orbit_rng(ACCEPT_SEED + 40, i)
        trace = generate_orbit(m, m.sample_uniform(orng), n_steps, delta=_DELTA)
        rec = hyperbolic_times_stream(trace, params)
        if rec.count == 0:
            continue
        res = sweep_backward_contraction(m, trace, rec, offset)
        checks += res.checks
        violations += res.violations
        inconclusive += res.inconclusive
        worst = max(worst, res.worst_ratio)
    frac_inconclusive = inconclusive / checks if checks else 0.0
    ok = checks > 0 and violations == 0 and frac_inconclusive < 0.05
    return ok, (
        f"{checks} detected times checked over {n_orbits} orbits: "
        f"{violations} violations of the sigma^(k/2) bound, "
        f"{inconclusive} inconclusive ({100 * frac_inconclusive:.1f}% < 5%), "
        f"worst ratio {worst:.3f}"
    ), {"checks": checks, "violations": violations,
        "inconclusive": inconclusive, "worst_ratio": worst,
        "offset": offset, "n_orbits": n_orbits}


def _invariance_probe(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    # both maps preserve normalised Lebesgue measure, so iterated uniform
    # samples must keep uniform histograms
    n_points, n_bins, z_max = 1_000_000, 64, 5.0
    details: dict = {}
    ok = True
    worst = 0.0
    seed = ACCEPT_SEED + 50
    for name in ("circle-intermittent", "doubling"):
        m = make_map(name)
        for j in (10, 50):
            pr = pushforward_density_probe(m, n_iter=j, n_points=n_points,
                                           n_bins=n_bins, seed=seed)
            seed += 1
            details[f"{name}_j{j}_max_z"] = pr.max_abs_z
            details[f"{name}_j{j}_censored"] = pr.censored
            worst = max(worst, pr.max_abs_z)
            ok = ok and pr.max_abs_z <= z_max
    return ok, (
        f"histograms at j in {{10, 50}}, M = 1e6, {n_bins} bins: "
        f"worst |z| = {worst:.2f} <= {z_max:g} for both maps"
    ), details


_CRITERIA: tuple[tuple[str, float | None, Callable], ...] = (
    ("transfer-identity", 1.0, _transfer_identity),
    ("birkhoff-mean", 30.0, _birkhoff_mean),
    ("oracle-equivalence", 30.0, _oracle_equivalence),
    ("sigma-exact-doubling", None, _sigma_exact_doubling),
    ("tail-nonintegrable", 300.0, _tail_nonintegrable),
    ("first-time-necessary", None, _first_time_necessary),
    ("recurrence-bounds", 10.0, _recurrence_bounds),
    ("quadrature", None, _quadrature),
    ("backward-contraction", None, _backward_contraction),
    ("invariance-probe", None, _invariance_probe),
)

CRITERION_IDS = tuple(cid for cid, _, _ in _CRITERIA)


def run_single(cid: str, ctx: AcceptanceContext) -> CriterionResult:
    """Run one criterion by exact id."""
    for name, budget, func in _CRITERIA:
        if name == cid:
            t0 = time.perf_counter()
            passed, summary, details = func(ctx)
            dt = time.perf_counter() - t0
            if budget is not None and dt >= budget:
                passed = False
                summary += f"; runtime {dt:.2f}s exceeded budget {budget:g}s"
            return CriterionResult(cid=name, passed=passed, runtime_s=dt,
                                   budget_s=budget, summary=summary,
                                   details=details)
    raise ValueError(f"unknown criterion id: {cid!r}")


def run_criteria(
    filter_substring: str | None = None,
    workers: int | None = None,
    ctx: AcceptanceContext | None = None,
) -> list[CriterionResult]:
    """Run all criteria whose id contains ``filter_substring`` (all if None)."""
    if ctx is None:
        ctx = AcceptanceContext(workers=workers)
    selected = [cid for cid in CRITERION_IDS
                if filter_substring is None or filter_substring in cid]
    if filter_substring is not None and not selected:
        raise ValueError(f"no criterion id contains {filter_substring!r}")
    return [run_single(cid, ctx) for cid in selected]
