"""Feature-pipeline tests: regression, changepoints, pairing, histograms.

Oracles (written independently of the implementation paths they check):
  * ``_cramer_fit``: 2x2 normal equations solved by Cramer's rule with
    ``math.fsum`` extended-precision accumulation,
  * ``_oracle_match``: a from-scratch pair matcher applying the same
    first-eligible-partner rule by repeated list scanning,
  * the generator's ground-truth sidecar for changepoint locations.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from rwanom import (
    DegenerateDesignError,
    GenConfig,
    PipelineConfig,
    SpinProfile,
    generate_series,
    profile_for,
    run_pipeline,
)
from rwanom.pipeline import (
    build_histogram,
    calibrate_residual_threshold,
    detect_changepoints,
    estimate_intervals,
    fit_window,
    match_pairs,
    rolling_residual_rms,
    split_intervals,
)
from rwanom.telemetry import AnomalyProfile, Status, TimeSeries


# ----------------------------------------------------------------- oracles

def _cramer_fit(series: TimeSeries, start: int, end: int):
    """Solve the friction normal equations by Cramer's rule with fsum.

    Applies the documented stiction rule - samples below 1% of the
    series' peak |omega| are unusable for a sign(omega) fit - then solves
    the masked normal equations by an independent route.
    """
    usable = np.abs(series.omega) >= 0.01 * np.abs(series.omega).max()
    keep = usable[start:end]
    omega = series.omega[start:end][keep]
    friction = series.friction[start:end][keep]
    s = np.sign(omega)
    a11 = math.fsum(s * s)
    a12 = math.fsum(s * omega)
    a22 = math.fsum(omega * omega)
    b1 = math.fsum(s * friction)
    b2 = math.fsum(omega * friction)
    det = a11 * a22 - a12 * a12
    dry = (b1 * a22 - b2 * a12) / det
    visc = (b2 * a11 - b1 * a12) / det
    resid = friction - dry * s - visc * omega
    rms = math.sqrt(math.fsum(resid * resid) / len(resid))
    return dry, visc, rms


def _oracle_match(deltas, tol, max_gap):
    """Re-derive the greedy pairing by repeated first-pair scanning.

    Scans the list for the leftmost positive delta that still has an
    eligible unmatched negative partner within ``max_gap`` positions, pairs
    it with its first such partner, and repeats until no pair is found.
    The matching this produces must equal the implementation's single pass.
    """
    remaining = {i: float(d) for i, d in enumerate(deltas)}
    pairs = []
    while True:
        found = None
        for i in sorted(remaining):
            if remaining[i] <= 0:
                continue
            for j in sorted(remaining):
                if j <= i or j > i + max_gap:
                    continue
                if remaining[j] < 0 and abs(remaining[i] + remaining[j]) <= tol * remaining[i]:
                    found = (i, j)
                    break
            if found:
                break
        if not found:
            break
        pairs.append(found)
        del remaining[found[0]], remaining[found[1]]
    unmatched = [abs(remaining[i]) for i in sorted(remaining)]
    return pairs, unmatched


def _synthetic_series(dry_levels, omega=None, visc=0.002, n_per=400):
    """Build a noise-free series with the given piecewise dry levels."""
    n = n_per * len(dry_levels)
    if omega is None:
        k = np.arange(n)
        omega = 150.0 * np.sin(2 * np.pi * k / 500.0 + 0.4)
    dry = np.repeat(np.asarray(dry_levels, dtype=float), n_per)
    friction = dry * np.sign(omega) + visc * omega
    return TimeSeries(omega=omega, friction=friction)


# -------------------------------------------------------------- fit_window

def test_fit_window_noise_free_recovery():
    series = _synthetic_series([1.0], visc=0.001, n_per=600)
    est = fit_window(series, 0, 600)
    assert est.dry == pytest.approx(1.0, abs=1e-9)
    assert est.visc == pytest.approx(0.001, abs=1e-9)
    assert est.residual_rms == pytest.approx(0.0, abs=1e-9)


def test_fit_window_matches_cramer_oracle(rng):
    """OLS on noisy windows agrees with the extended-precision oracle."""
    for _ in range(30):
        n = int(rng.integers(50, 400))
        k = np.arange(n)
        omega = rng.uniform(50, 200) * np.sin(2 * np.pi * k / rng.uniform(80, 900) + rng.uniform(0, 6))
        friction = (rng.uniform(0.5, 2.0) * np.sign(omega)
                    + rng.uniform(0.0005, 0.01) * omega
                    + rng.normal(0.0, 0.02, size=n))
        series = TimeSeries(omega=omega, friction=friction)
        est = fit_window(series, 0, n)
        dry, visc, rms = _cramer_fit(series, 0, n)
        assert est.dry == pytest.approx(dry, rel=1e-9, abs=1e-12)
        assert est.visc == pytest.approx(visc, rel=1e-9, abs=1e-12)
        assert est.residual_rms == pytest.approx(rms, rel=1e-9, abs=1e-12)


def test_fit_window_rejects_constant_omega():
    omega = np.full(200, 120.0)
    series = TimeSeries(omega=omega, friction=np.ones(200))
    with pytest.raises(DegenerateDesignError, match="degenerate design"):
        fit_window(series, 0, 200)


# ------------------------------------------------------------ changepoints

def test_single_clean_jump_detected():
    """One 0.5 mNm dry jump at k=500 gives two intervals near the jump."""
    levels = np.where(np.arange(1000) < 500, 1.0, 1.5)
    k = np.arange(1000)
    omega = 150.0 * np.sin(2 * np.pi * k / 500.0 + 0.4)
    friction = levels * np.sign(omega) + 0.002 * omega
    series = TimeSeries(omega=omega, friction=friction)
    config = PipelineConfig(residual_threshold=0.01)
    cps = detect_changepoints(series, config)
    assert len(cps) == 1
    assert abs(cps[0] - 500) <= config.window_size
    intervals = split_intervals(len(series), cps, config)
    assert len(intervals) == 2


def test_constant_series_single_interval():
    series = _synthetic_series([1.0], n_per=900)
    config = PipelineConfig(residual_threshold=0.01)
    assert detect_changepoints(series, config) == []
    assert split_intervals(900, [], config) == [(0, 900)]


def test_changepoints_match_ground_truth_jumps():
    """Detected boundaries land within +-window of every latent jump."""
    config = PipelineConfig()
    for seed in range(6):
        profile = AnomalyProfile(Status("D", 3), jump_mean=0.5,
                                 jump_spread=0.05, jump_rate=99.0)
        series, _, truth = generate_series(
            profile, GenConfig(noise_sigma=0.008, background_jump_rate=0.0,
                               seed=seed))
        true_jumps = sorted(k for k, _ in truth.events)
        cps = detect_changepoints(series, config)
        assert len(cps) == len(true_jumps)
        for cp, k in zip(cps, true_jumps):
            assert abs(cp - k) <= config.window_size


def test_interval_partition_property(corpus, bundle):
    """Intervals are ordered, disjoint and cover [0, N) on real series."""
    config = bundle.pipeline
    for _, series, _, _ in corpus[::40]:
        intervals = split_intervals(
            len(series), detect_changepoints(series, config), config)
        assert intervals[0][0] == 0 and intervals[-1][1] == len(series)
        for (a, b), (c, d) in zip(intervals, intervals[1:]):
            assert b == c and a < b and c < d
        assert all(b - a >= config.min_interval for a, b in intervals)


# ------------------------------------------------- estimate / Monte-Carlo

def test_estimate_intervals_two_levels():
    series = _synthetic_series([1.0, 1.5], n_per=500)
    ests = estimate_intervals(series, [(0, 500), (500, 1000)])
    assert ests[0].dry == pytest.approx(1.0, abs=1e-9)
    assert ests[1].dry == pytest.approx(1.5, abs=1e-9)


def test_estimate_intervals_matches_oracle():
    series = _synthetic_series([1.0, 1.3, 0.9], n_per=300)
    series = TimeSeries(omega=series.omega,
                        friction=series.friction
                        + np.random.default_rng(0).normal(0, 0.01, 900))
    intervals = [(0, 300), (300, 600), (600, 900)]
    for est, (a, b) in zip(estimate_intervals(series, intervals), intervals):
        dry, visc, _ = _cramer_fit(series, a, b)
        assert est.dry == pytest.approx(dry, rel=1e-9)
        assert est.visc == pytest.approx(visc, rel=1e-9)


def test_monte_carlo_dry_bound():
    """|dry_hat - 1| < 5 sigma/sqrt(N) on >= 95 of 100 seeded series."""
    wins = 0
    for seed in range(100):
        cfg = GenConfig(noise_sigma=0.01, background_jump_rate=0.0, seed=seed)
        series, _, _ = generate_series(profile_for(Status.nominal()), cfg)
        est = fit_window(series, 0, len(series))
        wins += abs(est.dry - 1.0) < 5 * 0.01 / math.sqrt(len(series))
    assert wins >= 95


# -------------------------------------------------- pairing and histograms

def test_one_perfect_pair():
    config = PipelineConfig()
    pairs, matched, unmatched = match_pairs(np.array([0.3, -0.3]),
                                            config.pair_match_tol,
                                            config.pair_match_max_gap)
    assert pairs == [(0, 1)] and list(matched) == [0.3] and len(unmatched) == 0
    hist_c = build_histogram(matched, config)
    hist_d = build_histogram(unmatched, config)
    in_bin = np.flatnonzero(hist_c.bins)
    assert len(in_bin) == 1
    lo, hi = hist_c.edges[in_bin[0]], hist_c.edges[in_bin[0] + 1]
    assert lo <= 0.3 <= hi and hist_c.bins[in_bin[0]] == 1.0
    assert np.all(hist_d.bins == 0.0)


def test_all_positive_deltas_unmatched():
    config = PipelineConfig()
    pairs, matched, unmatched = match_pairs(np.array([0.2, 0.4]),
                                            config.pair_match_tol,
                                            config.pair_match_max_gap)
    assert pairs == [] and len(matched) == 0
    hist_d = build_histogram(unmatched, config)
    assert hist_d.bins.sum() == pytest.approx(1.0)
    for value in (0.2, 0.4):
        idx = np.searchsorted(hist_d.edges, value, side="right") - 1
        assert hist_d.bins[idx] > 0
    assert np.all(build_histogram(matched, config).bins == 0.0)


def test_matcher_agrees_with_exhaustive_oracle(rng):
    """Fuzz delta lists of length <= 8 against the scanning oracle."""
    for _ in range(400):
        n = int(rng.integers(0, 9))
        deltas = rng.choice([-0.4, -0.3, -0.28, 0.3, 0.31, 0.4, 0.05],
                            size=n) + rng.normal(0, 0.01, size=n)
        tol = float(rng.uniform(0.05, 0.3))
        gap = int(rng.integers(1, 4))
        pairs, matched, unmatched = match_pairs(deltas, tol, gap)
        o_pairs, o_unmatched = _oracle_match(deltas, tol, gap)
        assert pairs == o_pairs
        assert list(np.round(unmatched, 12)) == list(np.round(o_unmatched, 12))
        assert 2 * len(pairs) + len(unmatched) == n


def test_histogram_clamps_out_of_range():
    config = PipelineConfig(bin_range=(0.02, 1.5))
    hist = build_histogram(np.array([0.001, 5.0]), config)
    assert hist.bins[0] == pytest.approx(0.5)
    assert hist.bins[-1] == pytest.approx(0.5)
    assert hist.bins.sum() == pytest.approx(1.0)


# ------------------------------------------------------------ run_pipeline

def test_nominal_pipeline_summary():
    series, _, _ = generate_series(
        profile_for(Status.nominal()),
        GenConfig(noise_sigma=0.0, background_jump_rate=0.0, seed=2))
    summary = run_pipeline(series, PipelineConfig())
    assert summary.mean_dry == pytest.approx(1.0, abs=1e-9)
    assert summary.mean_visc == pytest.approx(0.002, abs=1e-9)
    assert len(summary.deltas) == 0
    assert np.all(summary.hist_pairs.bins == 0.0)
    assert np.all(summary.hist_jumps.bins == 0.0)


def test_pair_series_histogram_matches_sidecar():
    """Noise-free matched events: hist_pairs is exactly the histogram of the
    ground-truth pair magnitudes (all mass in the bins containing them)."""
    profile = AnomalyProfile(Status("C", 2), pair_jump_mag=0.3, pair_rate=99.0)
    series, _, truth = generate_series(
        profile, GenConfig(noise_sigma=0.0, background_jump_rate=0.0, seed=17))
    assert len(truth.pair_events) == 5
    config = PipelineConfig()
    summary = run_pipeline(series, config)
    true_mags = sorted(mag for _, _, mag in truth.pair_events)
    assert sorted(summary.matched_increases) == pytest.approx(true_mags, abs=1e-9)
    expected, _ = np.histogram(np.clip(true_mags, *config.bin_range),
                               bins=config.bin_edges)
    np.testing.assert_allclose(summary.hist_pairs.bins, expected / 5.0,
                               atol=1e-12)
    assert np.all(summary.hist_jumps.bins == 0.0)


def test_pipeline_idempotent(corpus):
    _, series, _, _ = corpus[7]
    config = PipelineConfig()
    s1 = run_pipeline(series, config)
    s2 = run_pipeline(series, config)
    assert s1.mean_dry == s2.mean_dry and s1.mean_visc == s2.mean_visc
    assert np.array_equal(s1.deltas, s2.deltas)
    assert np.array_equal(s1.hist_pairs.bins, s2.hist_pairs.bins)


def test_arithmetic_mean_definition(corpus):
    """mean_dry is the plain average of per-interval dry estimates."""
    _, series, _, _ = corpus[50]
    summary = run_pipeline(series, PipelineConfig())
    assert summary.mean_dry == pytest.approx(
        math.fsum(e.dry for e in summary.estimates) / len(summary.estimates))


def test_histogram_normalization(summaries):
    for summary in list(summaries.values())[::20]:
        for hist in (summary.hist_pairs, summary.hist_jumps):
            total = hist.bins.sum()
            assert total == pytest.approx(1.0, abs=1e-9) or total == 0.0
            assert np.all(hist.bins >= 0.0)


def test_calibrate_threshold_is_factor_of_median():
    series_list = []
    for seed in range(4):
        series, _, _ = generate_series(
            profile_for(Status.nominal()),
            GenConfig(noise_sigma=0.01, background_jump_rate=0.0, seed=seed))
        series_list.append(series)
    threshold = calibrate_residual_threshold(series_list, window_size=50,
                                             factor=4.0)
    med = np.median([np.median(rolling_residual_rms(s, 50))
                     for s in series_list])
    assert threshold == pytest.approx(4.0 * med)
