"""Hyperbolic time detection along one-dimensional orbits.

A time n >= 1 is a (sigma, delta)-hyperbolic time for x when, for every
1 <= k <= n, the product of inverse-derivative norms over the last k steps
before n is at most sigma^k, and the truncated distance from the orbit
point k steps before n to the exceptional set is at least sigma^(b k).
In the log-domain series

    L_j = log ||Df(x_j)^{-1}||,     D_j = -log dist_delta(x_j, S),

the two window conditions read, for all 1 <= k <= n,

    sum_{j=n-k}^{n-1} L_j <= k log sigma,      D_{n-k} <= b k |log sigma|.

When S is empty, D vanishes identically and only the derivative condition
remains (a sigma-hyperbolic time).

Streaming reformulation (documented here, proved equivalent to the window
form by the test suite).  Let t_j = L_j - log sigma and B_n = sum_{j<n} t_j
with B_0 = 0.  The derivative condition at n says every window sum
B_n - B_{n-k} is <= 0, which holds iff

    B_n <= min_{0 <= j < n} B_j,

a running record minimum.  Dividing the distance condition by the positive
constant b |log sigma| and substituting j = n - k gives
j + D_j / (b |log sigma|) <= n for all j < n, i.e. with
M_j = j + D_j / (b |log sigma|),

    n >= max_{0 <= j < n} M_j,

a running maximum.  Both records need O(1) state per step, so a single
pass detects all hyperbolic times of a length-N orbit in O(N) time.
Comparisons are non-strict, so the boundary case (the doubling map at
sigma = 1/2, where every window sum is exactly zero) detects every step.

Prefix sums use compensated (Kahan) summation to keep the record
comparisons honest over long orbits.
"""

from __future__ import annotations

import json
import math
import os
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .maps import Array, HyperbolicParams, MapModel
from .metadata import config_digest, header_lines, json_meta

__all__ = [
    "BackwardContractionReport",
    "BackwardSweepResult",
    "DistortionReport",
    "HyperbolicTimeRecord",
    "OrbitTrace",
    "check_backward_contraction",
    "check_bounded_distortion",
    "first_hyperbolic_time",
    "generate_orbit",
    "hyperbolic_times_stream",
    "is_hyperbolic_time_naive",
    "naive_hyperbolic_times",
    "sweep_backward_contraction",
    "write_record_json",
    "write_trace_csv",
]

# Test hook: set HYPTIMES_DETECTOR_FAULT=drop-last in the environment to
# make the streaming detector silently drop its last detection.  Used to
# prove that the oracle-equivalence check catches a broken detector.
_FAULT_ENV = "HYPTIMES_DETECTOR_FAULT"


@dataclass
class OrbitTrace:
    """Recorded orbit with its log-domain detection series.

    ``points`` holds x_0 .. x_T, and ``log_inv`` / ``neglog_dist`` hold the
    matching L_j / D_j, all of length T+1.  Detection runs over times
    1..T and reads only indices j < T, so the terminal entries (which are
    +inf flags when the orbit is censored at an exact hit of S) never
    enter any sum.

    A trace is censored when some recorded point lies exactly in S; the
    orbit is truncated at that step and ``censor_step`` records it.
    """

    delta: float
    points: Array
    log_inv: Array
    neglog_dist: Array
    censored: bool = False
    censor_step: int | None = None
    map_model: MapModel | None = None

    @property
    def x0(self) -> float:
        return float(self.points[0])

    @property
    def n_steps(self) -> int:
        """Detection horizon T (number of completed steps)."""
        return len(self.points) - 1

    @classmethod
    def from_series(cls, log_inv, neglog_dist, delta: float = 0.1) -> "OrbitTrace":
        """Build a synthetic trace directly from L_j, D_j series.

        The series cover j = 0 .. T-1; points are not meaningful and are
        stored as NaN.  Useful for exercising the detectors on arbitrary
        inputs.
        """
        L = np.asarray(log_inv, dtype=float)
        D = np.asarray(neglog_dist, dtype=float)
        if L.shape != D.shape or L.ndim != 1:
            raise ValueError("log_inv and neglog_dist must be 1-d arrays of equal length")
        pad = np.full(1, np.nan)
        return cls(
            delta=delta,
            points=np.full(L.size + 1, np.nan),
            log_inv=np.concatenate([L, pad]),
            neglog_dist=np.concatenate([D, pad]),
        )


def generate_orbit(
    map_model: MapModel, x0: float, n_steps: int, delta: float
) -> OrbitTrace:
    """Iterate the map from x0 and record the detection series.

    The orbit is truncated (and the trace flagged censored) as soon as a
    point lands exactly in S, so infinities never reach downstream sums.
    L and D for the recorded points are evaluated with the same vectorised
    kernels the ensemble engine uses, keeping both paths bit-identical.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    if delta <= 0:
        raise ValueError("delta must be > 0")
    x = map_model.canonicalize(x0)
    pts = [x]
    censor_step = None
    exceptional = map_model.exceptional
    for j in range(n_steps):
        if x in exceptional:
            censor_step = j
            break
        x = map_model.eval(x)
        pts.append(x)
    else:
        if x in exceptional:
            censor_step = n_steps
    points = np.array(pts, dtype=float)
    return OrbitTrace(
        delta=delta,
        points=points,
        log_inv=map_model.log_inv_deriv_array(points),
        neglog_dist=map_model.neglog_dist_delta_array(points, delta),
        censored=censor_step is not None,
        censor_step=censor_step,
        map_model=map_model,
    )


# ---------------------------------------------------------------------------
# reference (naive) detector


def is_hyperbolic_time_naive(trace: OrbitTrace, params: HyperbolicParams, n: int) -> bool:
    """Literal window-by-window evaluation of the definition at time n.

    Reference implementation: O(n) per query, accumulating each window sum
    from j = n-1 downward.  Kept independent of the streaming detector so
    it can serve as its oracle.
    """
    T = trace.n_steps
    if not 1 <= n <= T:
        raise ValueError(f"n must lie in 1..{T}, got {n}")
    L = trace.log_inv
    D = trace.neglog_dist
    log_sigma = params.log_sigma
    blog = params.b * params.abs_log_sigma
    s = 0.0
    for k in range(1, n + 1):
        j = n - k
        s += L[j] - log_sigma
        if s > 0.0:
            return False
        if D[j] > blog * k:
            return False
    return True


def naive_hyperbolic_times(trace: OrbitTrace, params: HyperbolicParams) -> list[int]:
    """All hyperbolic times of the trace by the naive O(N^2) evaluation.

    Batch form of :func:`is_hyperbolic_time_naive`: per candidate n the
    window sums are the reversed cumulative sums of t_j = L_j - log sigma,
    accumulated in the same order as the scalar loop.
    """
    T = trace.n_steps
    t = trace.log_inv[:T] - params.log_sigma
    D = trace.neglog_dist[:T]
    blog = params.b * params.abs_log_sigma
    times = []
    for n in range(1, T + 1):
        w = np.cumsum(t[:n][::-1])
        if w.size and w.max() > 0.0:
            continue
        if np.all(D[:n][::-1] <= blog * np.arange(1, n + 1)):
            times.append(n)
    return times


# ---------------------------------------------------------------------------
# streaming detector


@dataclass
class HyperbolicTimeRecord:
    """Detected hyperbolic times of one orbit."""

    params: HyperbolicParams
    times: Array
    horizon: int
    censored: bool = False
    censor_step: int | None = None
    map_name: str | None = None

    @property
    def count(self) -> int:
        return int(self.times.size)

    @property
    def first(self) -> int | None:
        return int(self.times[0]) if self.times.size else None

    @property
    def first_label(self) -> str:
        """First hyperbolic time, or ">T" when none was detected."""
        return str(self.first) if self.times.size else f">{self.horizon}"

    def frequency_at(self, n: int) -> float:
        """Fraction of times 1..n that are hyperbolic (n <= horizon)."""
        if not 1 <= n <= self.horizon:
            raise ValueError(f"n must lie in 1..{self.horizon}, got {n}")
        return bisect_right(self.times.tolist(), n) / n

    def times_rle(self) -> list[list[int]]:
        """Times as [start, length] runs of consecutive integers."""
        runs: list[list[int]] = []
        for t in self.times.tolist():
            if runs and t == runs[-1][0] + runs[-1][1]:
                runs[-1][1] += 1
            else:
                runs.append([int(t), 1])
        return runs

    def to_json_dict(self) -> dict:
        freq = {}
        n = 100
        while n <= self.horizon:
            freq[str(n)] = self.frequency_at(n)
            n *= 10
        return {
            "map": self.map_name,
            "params": {
                "sigma": self.params.sigma,
                "delta": self.params.delta,
                "b": self.params.b,
            },
            "horizon": self.horizon,
            "censored": self.censored,
            "censor_step": self.censor_step,
            "count": self.count,
            "first": self.first,
            "first_label": self.first_label,
            "times_rle": self.times_rle(),
            "frequency": freq,
        }


def hyperbolic_times_stream(
    trace: OrbitTrace, params: HyperbolicParams
) -> HyperbolicTimeRecord:
    """Detect all hyperbolic times in one O(N) pass.

    Uses the record-minimum / record-maximum reformulation from the module
    docstring with compensated prefix summation.  Censored traces are
    scanned over their uncensored prefix only (times 1..censor step, whose
    window conditions involve only points before the singular hit).
    """
    T = trace.n_steps
    L = trace.log_inv
    D = trace.neglog_dist
    log_sigma = params.log_sigma
    blog = params.b * params.abs_log_sigma

    times: list[int] = []
    B = 0.0
    comp = 0.0
    runmin_B = math.inf
    runmax_M = -math.inf
    for n in range(1, T + 1):
        j = n - 1
        if B < runmin_B:
            runmin_B = B
        t = (L[j] - log_sigma) - comp
        total = B + t
        comp = (total - B) - t
        B = total
        M_j = j + D[j] / blog
        if M_j > runmax_M:
            runmax_M = M_j
        if B <= runmin_B and n >= runmax_M:
            times.append(n)

    if os.environ.get(_FAULT_ENV) == "drop-last" and times:
        times = times[:-1]

    return HyperbolicTimeRecord(
        params=params,
        times=np.array(times, dtype=np.int64),
        horizon=T,
        censored=trace.censored,
        censor_step=trace.censor_step,
        map_name=trace.map_model.name if trace.map_model is not None else None,
    )


def first_hyperbolic_time(
    trace: OrbitTrace, params: HyperbolicParams
) -> tuple[int | None, str]:
    """First hyperbolic time and its label (">T" when none detected)."""
    record = hyperbolic_times_stream(trace, params)
    return record.first, record.first_label


# ---------------------------------------------------------------------------
# contraction and distortion checks at detected times


@dataclass
class BackwardContractionReport:
    """Result of the backward-contraction inequality check at one time."""

    n: int
    offset: float
    endpoint_dist: float
    worst_ratio: float = math.nan
    worst_k: int = 0
    passed: bool = False
    skipped: bool = False
    reason: str | None = None


@dataclass
class DistortionReport:
    """Accumulated derivative distortion between an orbit and its partner."""

    n: int
    offset: float
    ratio: float = math.nan
    skipped: bool = False
    reason: str | None = None


def _pullback_partner(
    map_model: MapModel, points: Array, n: int, offset: float
) -> tuple[Array, str | None]:
    """Partner orbit through the same branch chain as points[0..n].

    The endpoint x_n is perturbed by ``offset`` and pulled back through the
    inverse branches selected by the orbit's own itinerary, producing a
    genuine orbit y_0 .. y_n of the map that shadows x step for step.
    Returns (partner, None) or (empty, reason) when the construction is
    not available.
    """
    if not map_model.branches:
        return np.empty(0), "map-has-no-inverse-branches"
    try:
        y_end = map_model.canonicalize(float(points[n]) + offset)
    except ValueError:
        return np.empty(0), "offset-leaves-domain"
    if map_model.dist_to_S(y_end) == 0.0:
        return np.empty(0), "offset-hits-exceptional-set"
    y = np.empty(n + 1)
    y[n] = y_end
    for j in range(n - 1, -1, -1):
        xj = float(points[j])
        for branch in map_model.branches:
            if branch.cell_lo <= xj < branch.cell_hi:
                y[j] = float(branch.pullback(np.array([y[j + 1]]))[0])
                break
        else:
            return np.empty(0), "orbit-point-outside-branch-cells"
    return y, None


def check_backward_contraction(
    map_model: MapModel,
    x0: float,
    offset: float,
    record: HyperbolicTimeRecord,
    n: int,
) -> BackwardContractionReport:
    """Verify dist(x_{n-k}, y_{n-k}) <= sigma^(k/2) dist(x_n, y_n) for k <= n.

    The partner orbit y is obtained by perturbing the endpoint f^n(x) by
    ``offset`` and pulling back through the inverse branches the orbit
    itself used, which keeps both orbits in a single branch chain.  (A
    time-zero perturbation would be expanded beyond machine scale after a
    few dozen steps at any detected time, leaving nothing to check.)

    Requires n to be a detected time of ``record``.  Reports the worst
    ratio attained over k = 1..n; the check passes when it is <= 1.
    """
    if n not in record.times:
        raise ValueError(f"n = {n} is not a detected hyperbolic time of this record")
    trace = generate_orbit(map_model, x0, n, record.params.delta)
    if trace.n_steps < n:
        return BackwardContractionReport(
            n=n, offset=offset, endpoint_dist=math.nan,
            skipped=True, reason="orbit-censored-before-n",
        )
    y, reason = _pullback_partner(map_model, trace.points, n, offset)
    if reason is not None:
        return BackwardContractionReport(
            n=n, offset=offset, endpoint_dist=math.nan, skipped=True, reason=reason
        )
    d_n = map_model.metric_dist(float(trace.points[n]), float(y[n]))
    if d_n == 0.0:
        return BackwardContractionReport(
            n=n, offset=offset, endpoint_dist=0.0,
            skipped=True, reason="zero-endpoint-separation",
        )
    log_sigma = record.params.log_sigma
    worst_ratio = -math.inf
    worst_k = 0
    for k in range(1, n + 1):
        d_k = map_model.metric_dist(float(trace.points[n - k]), float(y[n - k]))
        ratio = d_k / (math.exp(0.5 * k * log_sigma) * d_n)
        if ratio > worst_ratio:
            worst_ratio = ratio
            worst_k = k
    return BackwardContractionReport(
        n=n,
        offset=offset,
        endpoint_dist=d_n,
        worst_ratio=worst_ratio,
        worst_k=worst_k,
        passed=worst_ratio <= 1.0,
    )


def check_bounded_distortion(
    map_model: MapModel,
    x0: float,
    offset: float,
    record: HyperbolicTimeRecord,
    n: int,
) -> DistortionReport:
    """Derivative distortion exp|sum_{j<n} (log|f'(x_j)| - log|f'(y_j)|)|.

    Uses the same pulled-back partner orbit as the contraction check.  No
    target constant is asserted here; callers check that the ratio stays
    bounded as n ranges over detected times.
    """
    if n not in record.times:
        raise ValueError(f"n = {n} is not a detected hyperbolic time of this record")
    trace = generate_orbit(map_model, x0, n, record.params.delta)
    if trace.n_steps < n:
        return DistortionReport(n=n, offset=offset, skipped=True,
                                reason="orbit-censored-before-n")
    y, reason = _pullback_partner(map_model, trace.points, n, offset)
    if reason is not None:
        return DistortionReport(n=n, offset=offset, skipped=True, reason=reason)
    if np.any(map_model.is_exceptional_array(y[:n])):
        return DistortionReport(n=n, offset=offset, skipped=True,
                                reason="partner-hits-exceptional-set")
    lx = np.log(map_model.abs_deriv_array(trace.points[:n]))
    ly = np.log(map_model.abs_deriv_array(y[:n]))
    total = 0.0
    comp = 0.0
    for v in (lx - ly):
        t = v - comp
        s = total + t
        comp = (s - total) - t
        total = s
    return DistortionReport(n=n, offset=offset, ratio=math.exp(abs(total)))


@dataclass
class BackwardSweepResult:
    """Contraction checks at every detected time of one orbit."""

    offset: float
    reports: list[BackwardContractionReport]

    @property
    def checks(self) -> int:
        return len(self.reports)

    @property
    def violations(self) -> int:
        return sum(1 for r in self.reports if not r.skipped and not r.passed)

    @property
    def inconclusive(self) -> int:
        return sum(1 for r in self.reports if r.skipped)

    @property
    def worst_ratio(self) -> float:
        ratios = [r.worst_ratio for r in self.reports if not r.skipped]
        return max(ratios) if ratios else math.nan


def sweep_backward_contraction(
    map_model: MapModel,
    trace: OrbitTrace,
    record: HyperbolicTimeRecord,
    offset: float,
) -> BackwardSweepResult:
    """Run the backward-contraction check at every detected time at once.

    Equivalent to calling ``check_backward_contraction`` per time, but all
    partner orbits are pulled back in a single backward pass: at step j
    the branch is selected by the orbit point x_j alone, so every partner
    whose window covers j applies the same inverse branch.  Lanes share
    the elementwise kernels with the scalar checker and reproduce its
    results bit for bit.
    """
    times = record.times
    if len(times) and int(times[-1]) > trace.n_steps:
        raise ValueError("record contains times beyond the trace horizon")
    if not map_model.branches:
        reports = [
            BackwardContractionReport(
                n=int(n), offset=offset, endpoint_dist=math.nan,
                skipped=True, reason="map-has-no-inverse-branches")
            for n in times
        ]
        return BackwardSweepResult(offset=offset, reports=reports)

    m = len(times)
    pts = trace.points
    log_sigma = record.params.log_sigma
    reports: list[BackwardContractionReport | None] = [None] * m

    y_end = np.full(m, np.nan)
    d_end = np.full(m, np.nan)
    pending: list[int] = []  # lanes that passed the endpoint checks
    for lane, n in enumerate(int(v) for v in times):
        try:
            ye = map_model.canonicalize(float(pts[n]) + offset)
        except ValueError:
            reports[lane] = BackwardContractionReport(
                n=n, offset=offset, endpoint_dist=math.nan,
                skipped=True, reason="offset-leaves-domain")
            continue
        if map_model.dist_to_S(ye) == 0.0:
            reports[lane] = BackwardContractionReport(
                n=n, offset=offset, endpoint_dist=math.nan,
                skipped=True, reason="offset-hits-exceptional-set")
            continue
        dn = map_model.metric_dist(float(pts[n]), ye)
        if dn == 0.0:
            reports[lane] = BackwardContractionReport(
                n=n, offset=offset, endpoint_dist=0.0,
                skipped=True, reason="zero-endpoint-separation")
            continue
        y_end[lane] = ye
        d_end[lane] = dn
        pending.append(lane)

    if not pending:
        return BackwardSweepResult(offset=offset, reports=list(reports))

    n_of = np.array([int(times[lane]) for lane in range(m)], dtype=np.int64)
    max_n = max(int(times[lane]) for lane in pending)
    # sigma^(k/2) factors via the same scalar exp the one-time checker uses
    factor = np.array([math.nan] + [math.exp(0.5 * k * log_sigma)
                                    for k in range(1, max_n + 1)])

    y = np.full(m, np.nan)
    active = np.zeros(m, dtype=bool)
    worst_ratio = np.full(m, -np.inf)
    worst_k = np.zeros(m, dtype=np.int64)
    pending_set = set(pending)

    for j in range(max_n - 1, -1, -1):
        starting = [lane for lane in pending_set if n_of[lane] == j + 1]
        for lane in starting:
            y[lane] = y_end[lane]
            active[lane] = True
            pending_set.discard(lane)
        if not active.any():
            continue
        xj = float(pts[j])
        for branch in map_model.branches:
            if branch.cell_lo <= xj < branch.cell_hi:
                break
        else:
            for lane in np.flatnonzero(active):
                reports[lane] = BackwardContractionReport(
                    n=int(n_of[lane]), offset=offset, endpoint_dist=math.nan,
                    skipped=True, reason="orbit-point-outside-branch-cells")
            active[:] = False
            continue
        # park inactive lanes on a benign input; their results are masked out
        y_in = np.where(active, y, 0.5 * (map_model.lo + map_model.hi))
        y = np.where(active, branch.pullback(y_in), y)
        d_j = map_model.metric_dist_array(np.full(m, xj), np.where(active, y, xj))
        k = n_of - j
        ratio = d_j / (factor[np.clip(k, 0, max_n)] * d_end)
        better = active & (ratio > worst_ratio)
        worst_ratio = np.where(better, ratio, worst_ratio)
        worst_k = np.where(better, k, worst_k)

    for lane in range(m):
        if reports[lane] is not None:
            continue
        if lane in pending_set:  # never activated: n = 0 cannot occur, guard anyway
            reports[lane] = BackwardContractionReport(
                n=int(n_of[lane]), offset=offset, endpoint_dist=float(d_end[lane]),
                skipped=True, reason="window-empty")
            continue
        reports[lane] = BackwardContractionReport(
            n=int(n_of[lane]),
            offset=offset,
            endpoint_dist=float(d_end[lane]),
            worst_ratio=float(worst_ratio[lane]),
            worst_k=int(worst_k[lane]),
            passed=bool(worst_ratio[lane] <= 1.0),
        )
    return BackwardSweepResult(offset=offset, reports=list(reports))


# ---------------------------------------------------------------------------
# exports


def _trace_config(trace: OrbitTrace, record: HyperbolicTimeRecord) -> dict:
    return {
        "map": record.map_name,
        "sigma": record.params.sigma,
        "delta": record.params.delta,
        "b": record.params.b,
        "x0": trace.x0,
        "n_steps": trace.n_steps,
    }


def write_trace_csv(
    trace: OrbitTrace,
    record: HyperbolicTimeRecord,
    path: str | Path,
    extra_meta: dict | None = None,
) -> Path:
    """Write the per-step trace table.

    Columns: step, x, log_inv, neglog_dist, is_hyperbolic (0/1).  Header
    comments carry the tool version, the config digest, and a censoring
    note when applicable.
    """
    path = Path(path)
    cfg = _trace_config(trace, record)
    extra = dict(extra_meta or {})
    extra["censored"] = (
        f"step={trace.censor_step}" if trace.censored else "none"
    )
    detected = set(record.times.tolist())
    lines = header_lines(cfg, extra)
    lines.append("step,x,log_inv,neglog_dist,is_hyperbolic")
    for j in range(trace.n_steps + 1):
        flag = 1 if j in detected else 0
        lines.append(
            f"{j},{float(trace.points[j])!r},{float(trace.log_inv[j])!r},"
            f"{float(trace.neglog_dist[j])!r},{flag}"
        )
    path.write_text("\n".join(lines) + "\n")
    return path


def write_record_json(
    trace: OrbitTrace,
    record: HyperbolicTimeRecord,
    path: str | Path,
    extra_meta: dict | None = None,
) -> Path:
    """Write the detection record (params, RLE times, first, frequencies)."""
    path = Path(path)
    cfg = _trace_config(trace, record)
    payload = {"meta": json_meta(cfg)}
    if extra_meta:
        payload["meta"].update(extra_meta)
    payload.update(record.to_json_dict())
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path
