import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyptimes.detector import (
    OrbitTrace,
    check_backward_contraction,
    check_bounded_distortion,
    first_hyperbolic_time,
    generate_orbit,
    hyperbolic_times_stream,
    is_hyperbolic_time_naive,
    naive_hyperbolic_times,
    sweep_backward_contraction,
    write_record_json,
    write_trace_csv,
)
from hyptimes.maps import HyperbolicParams, make_map

CIRCLE = make_map("circle-intermittent")
DOUBLING = make_map("doubling")
DEFAULTS = HyperbolicParams(sigma=math.exp(-0.25), delta=0.1, b=0.25)


def _params(sigma, b=0.25, delta=0.1):
    return HyperbolicParams(sigma=sigma, delta=delta, b=b)


# -- orbit generation --------------------------------------------------------


def test_generate_orbit_doubling():
    tr = generate_orbit(DOUBLING, 0.3, 3, delta=0.1)
    np.testing.assert_allclose(tr.points, [0.3, 0.6, 0.2, 0.4], atol=1e-12)
    assert np.all(tr.log_inv == math.log(0.5))
    assert np.all(tr.neglog_dist == 0.0)
    assert not tr.censored


def test_generate_orbit_censors_at_exceptional_hit():
    # f(0.25) = 0 lies in S, so the trace stops there
    tr = generate_orbit(CIRCLE, 0.25, 10, delta=0.1)
    assert tr.censored
    assert tr.censor_step == 1
    assert tr.n_steps == 1
    assert tr.points[1] == 0.0


def test_generate_orbit_generic_seed_runs_full_length():
    tr = generate_orbit(CIRCLE, 0.3, 10_000, delta=0.1)
    assert not tr.censored
    assert tr.n_steps == 10_000
    assert np.all(np.isfinite(tr.log_inv[:-1]))


def test_from_series_validation():
    with pytest.raises(ValueError):
        OrbitTrace.from_series([1.0, 2.0], [0.0], delta=0.1)


# -- naive detector ----------------------------------------------------------


def test_naive_synthetic_example():
    # brute-force evaluation of the definition: the k = 4 window at n = 5
    # carries the +2 burst (sum -1 > required -2), so only n = 1 qualifies
    tr = OrbitTrace.from_series([-1.0, 2.0, -1.0, -1.0, -1.0], np.zeros(5), delta=0.1)
    p = _params(math.exp(-0.5))
    expected = [True, False, False, False, False]
    got = [is_hyperbolic_time_naive(tr, p, n) for n in range(1, 6)]
    assert got == expected
    assert naive_hyperbolic_times(tr, p) == [1]


def test_naive_doubling_equality_case():
    tr = generate_orbit(DOUBLING, 0.3, 50, delta=0.1)
    assert naive_hyperbolic_times(tr, _params(0.5)) == list(range(1, 51))
    # strictly smaller sigma: 2^{-k} > sigma^k for every k
    assert naive_hyperbolic_times(tr, _params(0.4)) == []


def test_naive_rejects_out_of_range_n():
    tr = generate_orbit(DOUBLING, 0.3, 5, delta=0.1)
    with pytest.raises(ValueError):
        is_hyperbolic_time_naive(tr, _params(0.5), 0)
    with pytest.raises(ValueError):
        is_hyperbolic_time_naive(tr, _params(0.5), 6)


# -- streaming detector ------------------------------------------------------


def test_stream_doubling_exact_equality_case():
    tr = generate_orbit(DOUBLING, 0.3, 100, delta=0.1)
    rec = hyperbolic_times_stream(tr, _params(0.5))
    assert [int(v) for v in rec.times] == list(range(1, 101))
    assert rec.first == 1
    assert rec.frequency_at(100) == 1.0


def test_stream_first_time_requires_initial_contraction():
    # n = 1 needs L_0 <= log sigma
    L = np.array([0.1, -3.0, -3.0, -3.0])
    tr = OrbitTrace.from_series(L, np.zeros(4), delta=0.1)
    rec = hyperbolic_times_stream(tr, _params(math.exp(-0.5)))
    assert rec.first is not None and rec.first > 1


def test_stream_equals_naive_micro_corpus():
    rng = np.random.default_rng(42)
    for _ in range(150):
        t = int(rng.integers(1, 65))
        L = rng.uniform(-2.0, 1.0, t)
        D = np.maximum(0.0, rng.exponential(1.0, t) - 1.0)
        sigma = float(rng.uniform(0.35, 0.9))
        b = float(rng.uniform(0.05, 0.24))
        tr = OrbitTrace.from_series(L, D, delta=0.1)
        p = _params(sigma, b=b)
        assert naive_hyperbolic_times(tr, p) == \
            [int(v) for v in hyperbolic_times_stream(tr, p).times]


def test_stream_equals_naive_on_map_traces():
    for m, x0 in ((CIRCLE, 0.3), (CIRCLE, -0.62), (DOUBLING, 0.137)):
        tr = generate_orbit(m, x0, 400, delta=0.1)
        assert naive_hyperbolic_times(tr, DEFAULTS) == \
            [int(v) for v in hyperbolic_times_stream(tr, DEFAULTS).times]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-2.0, 1.0), min_size=1, max_size=48),
       st.integers(0, 2 ** 31 - 1))
def test_stream_equals_naive_property(lvals, dseed):
    L = np.array(lvals)
    D = np.maximum(0.0, np.random.default_rng(dseed).exponential(1.0, L.size) - 1.0)
    tr = OrbitTrace.from_series(L, D, delta=0.1)
    p = _params(math.exp(-0.25))
    assert naive_hyperbolic_times(tr, p) == \
        [int(v) for v in hyperbolic_times_stream(tr, p).times]


def test_record_minimum_characterisation():
    tr = generate_orbit(CIRCLE, 0.3, 500, delta=0.1)
    rec = hyperbolic_times_stream(tr, DEFAULTS)
    assert rec.count > 0
    # B_n = sum_{j<n} L_j - n log sigma must be a running minimum at times
    B = np.concatenate([[0.0], np.cumsum(tr.log_inv[:500])]) \
        - np.arange(501) * DEFAULTS.log_sigma
    for n in rec.times:
        assert B[n] <= B[:n].min() + 1e-12


def test_detected_times_satisfy_every_window():
    tr = generate_orbit(CIRCLE, 0.3, 500, delta=0.1)
    rec = hyperbolic_times_stream(tr, DEFAULTS)
    blog = DEFAULTS.b * DEFAULTS.abs_log_sigma
    for n in rec.times:
        n = int(n)
        for k in range(1, n + 1):
            assert np.sum(tr.log_inv[n - k:n]) <= k * DEFAULTS.log_sigma + 1e-12
            assert tr.neglog_dist[n - k] <= k * blog + 1e-12


def test_composition_property():
    # a time of the shifted trace adds to a time of the original
    tr = generate_orbit(CIRCLE, 0.3, 800, delta=0.1)
    rec = hyperbolic_times_stream(tr, DEFAULTS)
    times = set(int(v) for v in rec.times)
    assert times
    n0 = int(rec.times[0])
    shifted = OrbitTrace.from_series(tr.log_inv[n0:800], tr.neglog_dist[n0:800],
                                     delta=0.1)
    for k in hyperbolic_times_stream(shifted, DEFAULTS).times:
        assert n0 + int(k) in times


def test_monotonicity_in_sigma_at_fixed_distance_exponent():
    # with b|log sigma| held fixed the distance condition is unchanged, so
    # enlarging sigma weakens the derivative condition and only adds times
    tr = generate_orbit(CIRCLE, 0.41, 600, delta=0.1)
    s1, s2 = math.exp(-0.5), math.exp(-0.25)
    prod = 0.25 * 0.25  # b * |log sigma| shared by both runs
    t_small = set(naive_hyperbolic_times(tr, _params(s1, b=prod / 0.5)))
    t_large = set(naive_hyperbolic_times(tr, _params(s2, b=prod / 0.25)))
    assert t_small <= t_large


def test_censored_trace_detects_on_prefix_only():
    tr = generate_orbit(CIRCLE, 0.25, 10, delta=0.1)
    assert tr.censored and tr.censor_step == 1
    rec = hyperbolic_times_stream(tr, DEFAULTS)
    assert rec.censored
    assert all(int(n) <= tr.censor_step for n in rec.times)


def test_frequency_counting():
    L = np.array([-1.0, -1.0, 5.0, -1.0])
    tr = OrbitTrace.from_series(L, np.zeros(4), delta=0.1)
    rec = hyperbolic_times_stream(tr, _params(math.exp(-0.5)))
    assert [int(v) for v in rec.times] == [1, 2]
    assert rec.frequency_at(2) == 1.0
    assert rec.frequency_at(4) == 0.5
    with pytest.raises(ValueError):
        rec.frequency_at(5)


def test_times_rle_compresses_runs():
    tr = generate_orbit(DOUBLING, 0.3, 50, delta=0.1)
    rec = hyperbolic_times_stream(tr, _params(0.5))
    assert rec.times_rle() == [[1, 50]]


def test_first_hyperbolic_time_and_label():
    tr = generate_orbit(DOUBLING, 0.3, 20, delta=0.1)
    first, label = first_hyperbolic_time(tr, _params(0.5))
    assert first == 1 and label == "1"
    rec = hyperbolic_times_stream(tr, _params(0.4))
    assert rec.count == 0
    assert rec.first is None
    assert rec.first_label == ">20"


def test_fault_hook_perturbs_stream(monkeypatch):
    monkeypatch.setenv("HYPTIMES_DETECTOR_FAULT", "drop-last")
    tr = generate_orbit(DOUBLING, 0.3, 20, delta=0.1)
    rec = hyperbolic_times_stream(tr, _params(0.5))
    assert [int(v) for v in rec.times] == list(range(1, 20))  # 20 dropped


# -- contraction and distortion checks ---------------------------------------


def test_backward_contraction_doubling_exact():
    tr = generate_orbit(DOUBLING, 0.3, 30, delta=0.1)
    rec = hyperbolic_times_stream(tr, _params(0.5))
    rep = check_backward_contraction(DOUBLING, 0.3, 1e-9, rec, 20)
    assert not rep.skipped
    assert rep.passed
    # linear branches: distances shrink by exactly 2^{-k} <= (1/2)^{k/2}
    assert rep.worst_ratio <= 2 ** -0.5 + 1e-6
    assert rep.worst_k == 1


def test_backward_contraction_zero_offset_degenerate():
    tr = generate_orbit(DOUBLING, 0.3, 10, delta=0.1)
    rec = hyperbolic_times_stream(tr, _params(0.5))
    rep = check_backward_contraction(DOUBLING, 0.3, 0.0, rec, 5)
    assert rep.skipped
    assert rep.reason == "zero-endpoint-separation"


def test_backward_contraction_requires_detected_time():
    tr = generate_orbit(DOUBLING, 0.3, 10, delta=0.1)
    rec = hyperbolic_times_stream(tr, _params(0.4))  # no times at all
    with pytest.raises(ValueError):
        check_backward_contraction(DOUBLING, 0.3, 1e-9, rec, 5)


def test_backward_contraction_circle_orbits():
    rng = np.random.default_rng(9)
    checked = 0
    for _ in range(10):
        x0 = float(rng.uniform(-1, 1))
        tr = generate_orbit(CIRCLE, x0, 300, delta=0.1)
        if tr.censored:
            continue
        rec = hyperbolic_times_stream(tr, DEFAULTS)
        for n in rec.times[:3]:
            rep = check_backward_contraction(CIRCLE, x0, 1e-9, rec, int(n))
            if not rep.skipped:
                assert rep.passed
                checked += 1
    assert checked > 0


def test_bounded_distortion_doubling_is_one():
    tr = generate_orbit(DOUBLING, 0.3, 30, delta=0.1)
    rec = hyperbolic_times_stream(tr, _params(0.5))
    rep = check_bounded_distortion(DOUBLING, 0.3, 1e-9, rec, 20)
    assert not rep.skipped
    assert rep.ratio == 1.0


def test_bounded_distortion_circle_stays_bounded():
    tr = generate_orbit(CIRCLE, 0.3, 1000, delta=0.1)
    rec = hyperbolic_times_stream(tr, DEFAULTS)
    ratios = []
    for n in rec.times[:20]:
        rep = check_bounded_distortion(CIRCLE, 0.3, 1e-9, rec, int(n))
        if not rep.skipped:
            ratios.append(rep.ratio)
    assert ratios
    assert all(r >= 1.0 for r in ratios)
    assert max(ratios) < 2.0


def test_sweep_matches_scalar_checker():
    tr = generate_orbit(CIRCLE, 0.3, 400, delta=0.1)
    rec = hyperbolic_times_stream(tr, DEFAULTS)
    res = sweep_backward_contraction(CIRCLE, tr, rec, offset=1e-9)
    assert res.checks == rec.count
    for r in res.reports:
        scalar = check_backward_contraction(CIRCLE, tr.x0, 1e-9, rec, r.n)
        assert scalar.skipped == r.skipped
        if r.skipped:
            continue
        assert scalar.passed == r.passed
        assert scalar.worst_ratio == r.worst_ratio


def test_sweep_counts_are_consistent():
    tr = generate_orbit(CIRCLE, -0.55, 600, delta=0.1)
    assert not tr.censored
    rec = hyperbolic_times_stream(tr, DEFAULTS)
    res = sweep_backward_contraction(CIRCLE, tr, rec, offset=1e-9)
    assert res.checks == rec.count
    assert res.violations == 0
    assert res.inconclusive + sum(1 for r in res.reports if not r.skipped) \
        == res.checks
    assert res.worst_ratio <= 1.0


# -- exports -----------------------------------------------------------------


def test_trace_csv_round_trip(tmp_path):
    tr = generate_orbit(DOUBLING, 0.3, 10, delta=0.1)
    rec = hyperbolic_times_stream(tr, _params(0.5))
    path = write_trace_csv(tr, rec, tmp_path / "t.csv")
    text = path.read_text()
    lines = text.splitlines()
    assert lines[0].startswith("# tool: hyptimes")
    assert any(line.startswith("# digest:") for line in lines)
    header_idx = next(i for i, l in enumerate(lines) if not l.startswith("#"))
    assert lines[header_idx] == "step,x,log_inv,neglog_dist,is_hyperbolic"
    rows = lines[header_idx + 1:]
    assert len(rows) == 11
    # step 0 is never a hyperbolic time; every later step is at sigma = 1/2
    assert rows[0].endswith(",0")
    assert all(r.endswith(",1") for r in rows[1:])
    assert "np.float64" not in text


def test_trace_csv_notes_censoring(tmp_path):
    tr = generate_orbit(CIRCLE, 0.25, 10, delta=0.1)
    rec = hyperbolic_times_stream(tr, DEFAULTS)
    path = write_trace_csv(tr, rec, tmp_path / "c.csv")
    assert "# censored: step=1" in path.read_text()


def test_record_json_contents(tmp_path):
    tr = generate_orbit(DOUBLING, 0.3, 100, delta=0.1)
    rec = hyperbolic_times_stream(tr, _params(0.5))
    path = write_record_json(tr, rec, tmp_path / "r.json")
    payload = json.loads(path.read_text())
    assert payload["meta"]["tool"].startswith("hyptimes")
    assert payload["first"] == 1
    assert payload["count"] == 100
    assert payload["times_rle"] == [[1, 100]]
    assert payload["frequency"]["100"] == 1.0
