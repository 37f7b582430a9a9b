"""Generator tests: friction-model identity, event bookkeeping, determinism.

Oracles used here:
  * the friction model itself, recomputed from the emitted ground-truth dry
    trajectory (independent of the generator's internal assembly), and
  * a trajectory-diff recount of latent jumps checked against the event log.
"""

from __future__ import annotations

import numpy as np
import pytest

from rwanom import (
    DegenerateDesignError,
    GenConfig,
    SpinProfile,
    TelemetryError,
    default_mix,
    fit_window,
    generate_dataset,
    generate_series,
    profile_for,
)
from rwanom.telemetry import AnomalyProfile, MIN_SERIES_LEN, Status


def _jump_counts(dry_true: np.ndarray) -> tuple[int, int]:
    """Oracle: count up/down discontinuities of the latent dry trajectory."""
    steps = np.diff(dry_true)
    return int(np.sum(steps > 0)), int(np.sum(steps < 0))


def _nominal_config(**overrides) -> GenConfig:
    base = dict(noise_sigma=0.0, background_jump_rate=0.0, seed=11)
    base.update(overrides)
    return GenConfig(**base)


def test_noise_free_model_identity():
    """sigma=0 ramp series obeys f_k = dry*sign(omega_k) + visc*omega_k."""
    config = _nominal_config(
        dry_base=1.0, visc_base=0.001,
        spin=SpinProfile(shape="ramp", omega0=100.0, slope=100.0 / 2400.0))
    series, status, truth = generate_series(profile_for(Status.nominal()), config)
    assert status.label == "N" and status.urgency == 0
    expected = 1.0 * np.sign(series.omega) + 0.001 * series.omega
    np.testing.assert_allclose(series.friction, expected, rtol=0.0, atol=1e-12)
    assert np.all(truth.dry_true == 1.0)


def test_pair_events_are_matched():
    """A C profile inserts up/down jumps of equal magnitude per event."""
    profile = AnomalyProfile(Status("C", 2), pair_jump_mag=0.4, pair_rate=99.0)
    _, _, truth = generate_series(profile, _nominal_config(seed=21))
    ups, downs = _jump_counts(truth.dry_true)
    assert ups == downs == len(truth.pair_events) == 5
    steps = np.diff(truth.dry_true)
    for k_up, k_down, mag in truth.pair_events:
        assert steps[k_up - 1] == pytest.approx(mag)
        assert steps[k_down - 1] == pytest.approx(-mag)


def test_same_seed_bitwise_identity():
    profile = profile_for(Status("D", 3))
    config = GenConfig(seed=99)
    s1, _, t1 = generate_series(profile, config)
    s2, _, t2 = generate_series(profile, config)
    assert np.array_equal(s1.omega, s2.omega)
    assert np.array_equal(s1.friction, s2.friction)
    assert np.array_equal(t1.dry_true, t2.dry_true)
    assert t1.events == t2.events


def test_event_log_matches_trajectory_recount():
    """Event-log length equals a brute-force diff recount of the latent dry."""
    profile = AnomalyProfile(Status("D", 3), jump_mean=0.5, jump_spread=0.1,
                             jump_rate=99.0)
    _, _, truth = generate_series(profile, _nominal_config(seed=31))
    ups, downs = _jump_counts(truth.dry_true)
    assert ups + downs == len(truth.events) == 8
    for k, mag in truth.events:
        assert np.diff(truth.dry_true)[k - 1] == pytest.approx(mag)


def test_noise_free_residual_is_zero():
    """With sigma=0 and no events the windowed regression residual vanishes."""
    series, _, _ = generate_series(profile_for(Status.nominal()),
                                   _nominal_config(seed=5))
    est = fit_window(series, 0, 50)
    assert est.residual_rms < 1e-12


def test_rejects_short_series():
    with pytest.raises(TelemetryError):
        generate_series(profile_for(Status.nominal()),
                        _nominal_config(n_samples=MIN_SERIES_LEN - 1))


def test_rejects_constant_spin():
    """Constant omega makes sign(omega) collinear with omega."""
    config = _nominal_config(
        spin=SpinProfile(shape="constant", omega0=120.0))
    with pytest.raises(DegenerateDesignError, match="degenerate regression design"):
        generate_series(profile_for(Status.nominal()), config)


def test_ground_truth_piecewise_constant(corpus):
    """Latent dry trajectories only step at logged events / pair endpoints."""
    for _, _, status, truth in corpus[:40]:
        steps = np.flatnonzero(np.diff(truth.dry_true)) + 1
        logged = {k for k, _ in truth.events}
        logged |= {k for k_up, k_down, _ in truth.pair_events
                   for k in (k_up, k_down)}
        assert set(steps.tolist()) == logged


def test_generate_dataset_statuses_follow_mix():
    mix = {"N": 2, "A3": 1, "C2": 3}
    items = generate_dataset(GenConfig(seed=8), mix=mix)
    labels = sorted(status.label for _, _, status, _ in items)
    assert labels == ["A3", "C2", "C2", "C2", "N", "N"]
    ids = [sid for sid, _, _, _ in items]
    assert ids == list(range(len(items)))


def test_default_mix_totals():
    """Headline corpus: 2611 series, class-kind totals at half paper scale."""
    mix = default_mix()
    totals: dict[str, int] = {}
    for label, count in mix.items():
        totals[label[0]] = totals.get(label[0], 0) + count
    assert sum(mix.values()) == 2611
    assert totals == {"N": 1000, "A": 342, "B": 435, "C": 396, "D": 438}
    for kind in "ABCD":
        counts = {mix[f"{kind}{u}"] for u in (1, 2, 3)}
        assert len(counts) == 1  # urgencies evenly represented


def test_profile_for_scales_with_urgency():
    """Severity factors grow with urgency for every anomaly kind."""
    for kind, attr in (("A", "dry_factor"), ("B", "visc_factor"),
                      ("C", "pair_jump_mag"), ("D", "jump_mean")):
        values = [getattr(profile_for(Status(kind, u)), attr) for u in (1, 2, 3)]
        assert values[0] < values[1] < values[2]
