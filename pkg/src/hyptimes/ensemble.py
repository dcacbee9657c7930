"""Monte Carlo ensembles of orbits with streaming hyperbolic-time statistics.

This module runs many orbits of a registered map at once and aggregates

* the first hyperbolic time of each orbit (histogram, survival table,
  cap-truncated means),
* per-orbit Birkhoff averages of the expansion observable ``log_inv_deriv``
  and the recurrence observable ``neglog_dist_delta``,
* per-orbit frequencies ``count / n`` of hyperbolic times, sampled at
  decade checkpoints,
* the data needed to check the first-time necessary condition (the orbit
  point one step before each first hyperbolic time).

The engine advances all orbits in lockstep with vectorised kernels and the
same record-minimum / record-maximum recurrences as the scalar detector in
:mod:`hyptimes.detector`, in the same floating-point order, so a single
orbit run through the engine reproduces the scalar trace path bit for bit.
Determinism does not depend on the worker count: orbit ``i`` always draws
its initial condition from an independent substream keyed by ``(seed, i)``,
chunks cover contiguous index ranges, and per-orbit results are
concatenated in index order before any reduction.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .maps import MapModel, make_map
from .metadata import header_lines, json_meta

__all__ = [
    "EnsembleConfig",
    "EnsembleReport",
    "DensityProbe",
    "TailDiagnostic",
    "orbit_rng",
    "run_ensemble",
    "birkhoff_average",
    "slow_recurrence_average",
    "transfer_identity_check",
    "pushforward_density_probe",
    "tail_growth_diagnostic",
]

# Largest number of orbits advanced by one engine pass.  Caps the working
# set (a handful of float64 arrays per orbit) at a few megabytes.
_CHUNK_CAP = 32768

OBSERVABLE_NAMES = ("log_inv_deriv", "neglog_dist_delta")


def orbit_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for orbit ``index`` of an ensemble.

    Uses a Philox substream spawned from ``seed``, so orbit i's draws do
    not depend on how many orbits run or how they are chunked.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def _kahan_sum(values: np.ndarray) -> float:
    """Compensated left-to-right sum, matching the engine's accumulation."""
    total = 0.0
    comp = 0.0
    for v in values:
        y = float(v) - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


@dataclass(frozen=True)
class EnsembleConfig:
    """Parameters of an ensemble run.

    sigma, delta and b must already be resolved to floats; use
    ``MapModel.default_params`` to fill map-specific defaults first.
    """

    map_name: str
    sigma: float
    delta: float
    b: float
    n_steps: int
    n_orbits: int
    seed: int
    observables: tuple[str, ...] = OBSERVABLE_NAMES
    workers: int = 1

    def __post_init__(self) -> None:
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")
        if self.n_orbits < 1:
            raise ValueError("n_orbits must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        for name in self.observables:
            if name not in OBSERVABLE_NAMES:
                raise ValueError(f"unknown observable {name!r}")

    def make_map(self) -> MapModel:
        return make_map(self.map_name)

    def to_json_dict(self) -> dict:
        return {
            "map": self.map_name,
            "sigma": self.sigma,
            "delta": self.delta,
            "b": self.b,
            "n_steps": self.n_steps,
            "n_orbits": self.n_orbits,
            "seed": self.seed,
            "observables": list(self.observables),
        }


def _decade_checkpoints(n_steps: int) -> list[int]:
    """Checkpoints 100, 1000, ... up to and including n_steps."""
    pts = []
    p = 100
    while p < n_steps:
        pts.append(p)
        p *= 10
    pts.append(n_steps)
    return pts


def _run_chunk(
    map_name: str,
    sigma: float,
    delta: float,
    b: float,
    n_steps: int,
    seed: int,
    start: int,
    stop: int,
) -> dict[str, np.ndarray | dict[int, np.ndarray]]:
    """Advance orbits ``start .. stop-1`` and return per-orbit arrays.

    Top-level function so it can be shipped to worker processes.
    """
    m = stop - start
    mp = make_map(map_name)
    log_sigma = math.log(sigma)
    blog = b * abs(log_sigma)

    x = np.empty(m, dtype=np.float64)
    for i in range(m):
        x[i] = mp.sample_uniform(orbit_rng(seed, start + i))

    # Streaming detector state, one lane per orbit.  Lanes freeze when the
    # orbit hits the exceptional set exactly; a frozen lane keeps its
    # accumulated statistics and its x is parked at a safe interior point
    # (three quarters of the way across, never exceptional for the
    # built-in maps) so the kernels never see a singular input.
    park = mp.lo + 0.75 * (mp.hi - mp.lo)
    B = np.zeros(m)
    comp = np.zeros(m)
    runmin = np.full(m, np.inf)
    runmax = np.full(m, -np.inf)
    count = np.zeros(m, dtype=np.int64)
    first = np.zeros(m, dtype=np.int64)
    first_prev_x = np.full(m, np.nan)
    sum_l = np.zeros(m)
    comp_l = np.zeros(m)
    sum_d = np.zeros(m)
    comp_d = np.zeros(m)
    alive = np.ones(m, dtype=bool)
    censor_step = np.full(m, -1, dtype=np.int64)

    checkpoints = _decade_checkpoints(n_steps)
    snapshots: dict[int, np.ndarray] = {}

    for n in range(1, n_steps + 1):
        exc = mp.is_exceptional_array(x) & alive
        if exc.any():
            censor_step[exc] = n - 1
            alive &= ~exc
            x = np.where(exc, park, x)

        lvals = mp.log_inv_deriv_array(x)
        dvals = mp.neglog_dist_delta_array(x, delta)

        runmin = np.where(alive, np.minimum(runmin, B), runmin)

        t = np.where(alive, lvals - log_sigma, 0.0)
        y = t - comp
        tot = B + y
        comp = np.where(alive, (tot - B) - y, comp)
        B = np.where(alive, tot, B)

        mj = (n - 1) + np.where(alive, dvals, 0.0) / blog
        runmax = np.where(alive, np.maximum(runmax, mj), runmax)

        hyp = alive & (B <= runmin) & (n >= runmax)
        count += hyp
        newly = hyp & (first == 0)
        first = np.where(newly, n, first)
        first_prev_x = np.where(newly, x, first_prev_x)

        yl = np.where(alive, lvals, 0.0) - comp_l
        tl = sum_l + yl
        comp_l = np.where(alive, (tl - sum_l) - yl, comp_l)
        sum_l = np.where(alive, tl, sum_l)

        yd = np.where(alive, dvals, 0.0) - comp_d
        td = sum_d + yd
        comp_d = np.where(alive, (td - sum_d) - yd, comp_d)
        sum_d = np.where(alive, td, sum_d)

        x = np.where(alive, mp.eval_array(x), x)

        if n in checkpoints:
            snapshots[n] = count.copy()

    # A final exact hit lands outside the detection range but is still a
    # censoring event for bookkeeping.
    final_exc = mp.is_exceptional_array(x) & alive
    if final_exc.any():
        censor_step[final_exc] = n_steps

    return {
        "first": first,
        "count": count,
        "first_prev_x": first_prev_x,
        "sum_log_inv": sum_l,
        "sum_neglog_dist": sum_d,
        "censor_step": censor_step,
        "snapshots": snapshots,
    }


@dataclass
class EnsembleReport:
    """Aggregated statistics of an ensemble run."""

    config: EnsembleConfig
    n_uncensored: int
    censored_count: int
    undetected_count: int
    first_hist: dict[int, int]
    truncated_means: dict[int, float]
    tail: list[tuple[int, int, float]]
    birkhoff: dict[str, dict[str, float]]
    frequency_quantiles: dict[str, float]
    frequency_mean: float
    frequency_checkpoints: dict[int, float]
    first_prev_abs_max: float
    necessary_violations: int | None
    first_times: np.ndarray = field(repr=False)

    def to_json_dict(self) -> dict:
        meta = json_meta(self.config.to_json_dict())
        return {
            "meta": meta,
            "n_uncensored": self.n_uncensored,
            "censored_count": self.censored_count,
            "undetected_count": self.undetected_count,
            "first_time_histogram": {str(k): v for k, v in sorted(self.first_hist.items())},
            "truncated_means": {str(k): v for k, v in sorted(self.truncated_means.items())},
            "tail": [[n, c, f] for n, c, f in self.tail],
            "birkhoff": self.birkhoff,
            "frequency": {
                "quantiles": self.frequency_quantiles,
                "mean": self.frequency_mean,
                "checkpoints": {str(k): v for k, v in sorted(self.frequency_checkpoints.items())},
            },
            "necessary_condition": {
                "first_prev_abs_max": self.first_prev_abs_max,
                "violations": self.necessary_violations,
            },
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_hist_csv(self, path) -> None:
        """First-time histogram as ``k,count,fraction`` rows.

        Fractions are relative to the uncensored orbit count; a final
        ``>N`` row carries the orbits with no detected time.
        """
        denom = max(self.n_uncensored, 1)
        lines = header_lines(self.config.to_json_dict())
        lines.append("k,count,fraction")
        for k in sorted(self.first_hist):
            c = self.first_hist[k]
            lines.append(f"{k},{c},{repr(c / denom)}")
        lines.append(f">{self.config.n_steps},{self.undetected_count},"
                     f"{repr(self.undetected_count / denom)}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    def write_tail_csv(self, path) -> None:
        """Survival table ``n,count,fraction`` with fraction = P(h > n)."""
        lines = header_lines(self.config.to_json_dict())
        lines.append("n,count,fraction")
        for n, c, f in self.tail:
            lines.append(f"{n},{c},{repr(f)}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def _tail_grid(n_steps: int) -> np.ndarray:
    """Log-spaced integer grid 1 .. n_steps for the survival table."""
    if n_steps <= 60:
        return np.arange(1, n_steps + 1, dtype=np.int64)
    grid = np.unique(np.round(
        np.logspace(0.0, math.log10(n_steps), 61)).astype(np.int64))
    return grid[(grid >= 1) & (grid <= n_steps)]


def run_ensemble(config: EnsembleConfig) -> EnsembleReport:
    """Run the ensemble described by ``config`` and aggregate the results."""
    mp = config.make_map()
    params = mp.default_params(config.sigma, config.delta, config.b)
    del params  # constructed for validation only

    m_total = config.n_orbits
    n_chunks = max(config.workers, -(-m_total // _CHUNK_CAP))
    n_chunks = min(n_chunks, m_total)
    bounds = np.linspace(0, m_total, n_chunks + 1).astype(int)
    ranges = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]

    args = [
        (config.map_name, config.sigma, config.delta, config.b,
         config.n_steps, config.seed, a, b)
        for a, b in ranges
    ]
    if config.workers == 1 or len(ranges) == 1:
        parts = [_run_chunk(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_run_chunk, *a) for a in args]
            parts = [f.result() for f in futures]

    first = np.concatenate([p["first"] for p in parts])
    count = np.concatenate([p["count"] for p in parts])
    first_prev_x = np.concatenate([p["first_prev_x"] for p in parts])
    sum_l = np.concatenate([p["sum_log_inv"] for p in parts])
    sum_d = np.concatenate([p["sum_neglog_dist"] for p in parts])
    censor_step = np.concatenate([p["censor_step"] for p in parts])
    checkpoints = _decade_checkpoints(config.n_steps)
    snapshots = {
        n: np.concatenate([p["snapshots"][n] for p in parts])
        for n in checkpoints
    }

    return _aggregate(config, mp, first, count, first_prev_x,
                      sum_l, sum_d, censor_step, snapshots)


def _aggregate(
    config: EnsembleConfig,
    mp: MapModel,
    first: np.ndarray,
    count: np.ndarray,
    first_prev_x: np.ndarray,
    sum_l: np.ndarray,
    sum_d: np.ndarray,
    censor_step: np.ndarray,
    snapshots: dict[int, np.ndarray],
) -> EnsembleReport:
    n_steps = config.n_steps
    censored = censor_step >= 0
    unc = ~censored
    n_unc = int(unc.sum())
    denom = max(n_unc, 1)

    f_unc = first[unc]
    detected = f_unc > 0
    f_det = f_unc[detected]
    undetected_count = int((~detected).sum())

    ks, cs = np.unique(f_det, return_counts=True)
    hist = {int(k): int(c) for k, c in zip(ks, cs)}

    # h is right-censored at n_steps for undetected orbits; cap-truncated
    # means treat those as cap, which only needs h > n_steps.
    h_eff = np.where(detected, f_unc, n_steps + 1)
    caps = _decade_checkpoints(n_steps)
    if 10 <= n_steps and 10 not in caps:
        caps = [10] + caps
    trunc = {
        int(cap): float(np.mean(np.minimum(h_eff, cap)))
        for cap in caps
    }

    sorted_f = np.sort(f_det)
    tail = []
    for n in _tail_grid(n_steps):
        le = int(np.searchsorted(sorted_f, n, side="right"))
        gt = n_unc - le
        tail.append((int(n), gt, gt / denom))

    birkhoff: dict[str, dict[str, float]] = {}
    sums = {"log_inv_deriv": sum_l, "neglog_dist_delta": sum_d}
    for name in config.observables:
        vals = sums[name][unc] / n_steps
        if vals.size == 0:
            birkhoff[name] = {"mean": math.nan, "var": math.nan,
                              "se": math.nan, "median_of_batches": math.nan,
                              "batches": 0}
            continue
        mean = float(np.mean(vals))
        var = float(np.var(vals, ddof=1)) if vals.size > 1 else 0.0
        se = math.sqrt(var / vals.size) if vals.size > 1 else math.nan
        n_batches = 100 if vals.size >= 1000 else max(1, vals.size // 10)
        batch_means = [float(np.mean(b)) for b in np.array_split(vals, n_batches)]
        birkhoff[name] = {
            "mean": mean,
            "var": var,
            "se": se,
            "median_of_batches": float(np.median(batch_means)),
            "batches": n_batches,
        }

    freq = count[unc] / n_steps
    if freq.size:
        qs = np.quantile(freq, [0.05, 0.25, 0.5, 0.75, 0.95])
        fquant = {q: float(v) for q, v in zip(("q05", "q25", "q50", "q75", "q95"), qs)}
        fmean = float(np.mean(freq))
    else:
        fquant = {q: math.nan for q in ("q05", "q25", "q50", "q75", "q95")}
        fmean = math.nan
    fcheck = {}
    for n, snap in snapshots.items():
        sv = snap[unc] / n
        fcheck[int(n)] = float(np.mean(sv)) if sv.size else math.nan

    prev = first_prev_x[unc][detected]
    if prev.size:
        prev_abs_max = float(np.max(np.abs(prev)))
    else:
        prev_abs_max = math.nan
    # |x_{h-1}| <= sigma^2 is the k=1 expansion condition spelled out for
    # maps with |f'(x)| = |x|^(-1/2); only meaningful there.
    violations: int | None = None
    if config.map_name == "circle-intermittent" and prev.size:
        violations = int(np.sum(np.abs(prev) > config.sigma ** 2))

    return EnsembleReport(
        config=config,
        n_uncensored=n_unc,
        censored_count=int(censored.sum()),
        undetected_count=undetected_count,
        first_hist=hist,
        truncated_means=trunc,
        tail=tail,
        birkhoff=birkhoff,
        frequency_quantiles=fquant,
        frequency_mean=fmean,
        frequency_checkpoints=fcheck,
        first_prev_abs_max=prev_abs_max,
        necessary_violations=violations,
        first_times=f_det,
    )


def birkhoff_average(trace, observable: str, delta: float | None = None) -> float:
    """Time average of an observable along a trace.

    Averages over the points x_0 .. x_{T-1} actually iterated through
    (T = censor step for censored traces).  Uses the same compensated
    left-to-right summation as the ensemble engine, so the two paths agree
    bit for bit on the same orbit.
    """
    if observable not in OBSERVABLE_NAMES:
        raise ValueError(f"unknown observable {observable!r}")
    t_end = trace.censor_step if trace.censored else trace.n_steps
    if t_end == 0:
        raise ValueError("trace has no iterated points to average over")
    if observable == "log_inv_deriv":
        vals = trace.log_inv[:t_end]
    else:
        if delta is None or delta == trace.delta:
            vals = trace.neglog_dist[:t_end]
        else:
            if trace.map_model is None:
                raise ValueError("trace has no map attached; cannot re-evaluate "
                                 "the distance observable at a different delta")
            vals = trace.map_model.neglog_dist_delta_array(
                np.asarray(trace.points[:t_end]), delta)
    return _kahan_sum(vals) / t_end


def slow_recurrence_average(trace, delta: float | None = None) -> float:
    """Time average of -log dist_delta(x_j, S); small iff recurrence is slow."""
    return birkhoff_average(trace, "neglog_dist_delta", delta)


def transfer_identity_check(map_model: MapModel, xs: Sequence[float] | np.ndarray) -> float:
    """Worst defect of sum_i 1/|f'(g_i(y))| = 1 over the given points.

    g_i are the inverse branches; the identity says the uniform density is
    invariant.  Returns max |sum - 1|.
    """
    if not map_model.branches:
        raise ValueError(f"map {map_model.name!r} has no inverse branches")
    ys = map_model.canonicalize_array(np.asarray(xs, dtype=np.float64))
    total = np.zeros_like(ys)
    for br in map_model.branches:
        total += 1.0 / map_model.abs_deriv_array(br.pullback(ys))
    return float(np.max(np.abs(total - 1.0)))


@dataclass(frozen=True)
class DensityProbe:
    """Binned comparison of an iterated sample against the uniform density."""

    map_name: str
    n_iter: int
    n_points: int
    n_bins: int
    seed: int
    counts: np.ndarray
    z_scores: np.ndarray
    max_abs_z: float
    censored: int

    def to_json_dict(self) -> dict:
        return {
            "map": self.map_name,
            "n_iter": self.n_iter,
            "n_points": self.n_points,
            "n_bins": self.n_bins,
            "seed": self.seed,
            "counts": self.counts.tolist(),
            "z_scores": [float(z) for z in self.z_scores],
            "max_abs_z": self.max_abs_z,
            "censored": self.censored,
        }


def pushforward_density_probe(
    map_model: MapModel,
    n_iter: int,
    n_points: int,
    n_bins: int = 64,
    seed: int = 0,
) -> DensityProbe:
    """Push a uniform sample forward n_iter steps and bin the result.

    For maps preserving normalised Lebesgue measure the bin counts should
    stay consistent with the uniform law; z-scores are per-bin deviations
    in units of the binomial standard deviation.

    Maps that are exact dyadic shifts in binary (entropy_bits_per_step > 0)
    discard mantissa bits every step, so a float64 sample collapses onto a
    coarse grid long before the histogram is taken.  Those maps get an
    extended-precision sample built from two 53-bit draws; the kernels are
    dtype generic, so iteration stays exact in the wider format.
    """
    if n_iter < 0:
        raise ValueError("n_iter must be nonnegative")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    bits = map_model.entropy_bits_per_step
    if bits > 0:
        ld = np.longdouble
        extra = np.finfo(ld).nmant - np.finfo(np.float64).nmant
        if n_iter * bits > np.finfo(np.float64).nmant + extra - 10:
            raise ValueError(
                "n_iter would exhaust the extended mantissa; "
                f"got {n_iter} steps at {bits} bits per step"
            )
        # two independent 53-bit integers give a sample uniform on a grid
        # finer than 2**-100, leaving real randomness after n_iter shifts
        hi = rng.integers(0, 2**53, n_points).astype(ld)
        lo = rng.integers(0, 2**53, n_points).astype(ld)
        unit = hi * ld(2.0) ** -53 + lo * ld(2.0) ** -106
        x = ld(map_model.lo) + ld(map_model.period) * unit
    else:
        x = map_model.sample_uniform(rng, n_points)
    alive = np.ones(x.shape, dtype=bool)
    park = map_model.lo + 0.75 * (map_model.hi - map_model.lo)
    for _ in range(n_iter):
        exc = map_model.is_exceptional_array(x) & alive
        if exc.any():
            alive &= ~exc
        x = np.where(alive, map_model.eval_array(np.where(alive, x, park)), x)
    xs = x[alive]
    edges = np.linspace(map_model.lo, map_model.hi, n_bins + 1)
    counts, _ = np.histogram(xs, bins=edges)
    n_live = xs.size
    p = 1.0 / n_bins
    sd = math.sqrt(n_live * p * (1.0 - p))
    z = (counts - n_live * p) / sd
    return DensityProbe(
        map_name=map_model.name,
        n_iter=n_iter,
        n_points=n_points,
        n_bins=n_bins,
        seed=seed,
        counts=counts,
        z_scores=z,
        max_abs_z=float(np.max(np.abs(z))),
        censored=int(n_points - n_live),
    )


@dataclass(frozen=True)
class TailDiagnostic:
    """Classification of the first-time tail from cap-truncated means.

    If E[h] is finite the truncated means stabilise and their slope against
    log cap decays to zero; a 1/n survival tail keeps the slope flat and
    positive (the truncated mean grows like a constant times log cap).
    """

    classification: str
    caps: tuple[int, ...]
    truncated_means: tuple[float, ...]
    slope_last: float
    slope_peak: float
    decay_ratio: float
    top_decade_np_min: float
    top_decade_np_max: float
    top_decade_np_mean: float
    tail_exponent: float

    def to_json_dict(self) -> dict:
        return {
            "classification": self.classification,
            "caps": list(self.caps),
            "truncated_means": list(self.truncated_means),
            "slope_last": self.slope_last,
            "slope_peak": self.slope_peak,
            "decay_ratio": self.decay_ratio,
            "top_decade_np": {
                "min": self.top_decade_np_min,
                "max": self.top_decade_np_max,
                "mean": self.top_decade_np_mean,
            },
            "tail_exponent": self.tail_exponent,
        }


# A tail n^(-q) with q > 1 makes the truncated-mean slope collapse by
# orders of magnitude per decade; a 1/n tail keeps it constant.  The
# cutoffs sit in the wide gap between those regimes.
_SLOPE_FLOOR = 0.05
_DECAY_CUTOFF = 0.2


def tail_growth_diagnostic(report: EnsembleReport) -> TailDiagnostic:
    """Classify the first-time tail of an ensemble as integrable or not."""
    caps = sorted(report.truncated_means)
    tms = [report.truncated_means[c] for c in caps]
    if len(caps) < 3:
        return TailDiagnostic(
            classification="inconclusive",
            caps=tuple(caps),
            truncated_means=tuple(tms),
            slope_last=math.nan, slope_peak=math.nan, decay_ratio=math.nan,
            top_decade_np_min=math.nan, top_decade_np_max=math.nan,
            top_decade_np_mean=math.nan, tail_exponent=math.nan,
        )
    slopes = []
    for (c0, t0), (c1, t1) in zip(zip(caps, tms), zip(caps[1:], tms[1:])):
        slopes.append((t1 - t0) / (math.log(c1) - math.log(c0)))
    slope_last = slopes[-1]
    slope_peak = max(slopes)
    decay = slope_last / slope_peak if slope_peak > 0 else 0.0

    n_steps = report.config.n_steps
    top = [(n, f) for n, f in ((n, f) for n, _, f in report.tail)
           if n >= n_steps / 10 and f > 0]
    if top:
        npn = [n * f for n, f in top]
        np_min, np_max = min(npn), max(npn)
        np_mean = sum(npn) / len(npn)
    else:
        np_min = np_max = np_mean = math.nan

    fit = [(math.log(n), math.log(f)) for n, _, f in report.tail
           if n >= n_steps / 100 and f > 0]
    if len(fit) >= 2:
        xs = np.array([a for a, _ in fit])
        ys = np.array([b for _, b in fit])
        tail_exp = float(-np.polyfit(xs, ys, 1)[0])
    else:
        tail_exp = math.nan

    if slope_last < _SLOPE_FLOOR or decay < _DECAY_CUTOFF:
        cls = "integrable-like"
    else:
        cls = "non-integrable-like"
    return TailDiagnostic(
        classification=cls,
        caps=tuple(caps),
        truncated_means=tuple(tms),
        slope_last=slope_last,
        slope_peak=slope_peak,
        decay_ratio=decay,
        top_decade_np_min=np_min,
        top_decade_np_max=np_max,
        top_decade_np_mean=np_mean,
        tail_exponent=tail_exp,
    )
