"""Decision-tree classifier tests: precedence, calibration, metrics.

Oracles:
  * ``_oracle_route``: an independent re-derivation of the four-stage tree
    applied to the same summaries,
  * ``_recount``: group sensitivity/PPV recomputed by direct counting over
    the raw (actual, predicted) pair list.
"""

from __future__ import annotations

import numpy as np
import pytest

from rwanom import (
    GenConfig,
    STATUS_LABELS,
    classify,
    classify_series,
    classify_summary,
    evaluate,
    generate_series,
    load_bundle,
    profile_for,
    save_bundle,
)
from rwanom.classifier import (
    CalibrationError,
    METRIC_GROUPS,
    Thresholds,
    calibrate_thresholds,
)
from rwanom.pipeline import (
    CoefficientEstimate,
    PipelineConfig,
    PipelineSummary,
    build_histogram,
)
from rwanom.telemetry import Status


# ----------------------------------------------------------------- helpers

def _summary(mean_dry: float, mean_visc: float, pair_values=(),
             jump_values=(), config: PipelineConfig | None = None):
    """Craft a PipelineSummary with prescribed means and histogram content."""
    config = config or PipelineConfig()
    est = CoefficientEstimate(start=0, end=100, dry=mean_dry, visc=mean_visc,
                              residual_rms=0.0)
    pair_values = np.asarray(pair_values, dtype=float)
    jump_values = np.asarray(jump_values, dtype=float)
    return PipelineSummary(
        estimates=(est,),
        deltas=np.concatenate([pair_values, -pair_values, jump_values]),
        matched_increases=pair_values,
        unmatched_magnitudes=jump_values,
        hist_pairs=build_histogram(pair_values, config),
        hist_jumps=build_histogram(jump_values, config),
    )


def _oracle_route(summary, bundle) -> str:
    """Re-derive the tree routing independently of classify_summary."""
    t = bundle.thresholds
    if summary.mean_dry >= t.dry_a3:
        return "A3"
    if summary.mean_visc >= t.visc_b1:
        if summary.mean_visc >= t.visc_b3:
            return "B3"
        if summary.mean_visc >= t.visc_b2:
            return "B2"
        return "B1"
    c = classify(bundle.pair_net, summary.hist_pairs.bins)
    if c > 0:
        return f"C{c}"
    d = classify(bundle.jump_net, summary.hist_jumps.bins)
    if d > 0:
        return f"D{d}"
    if summary.mean_dry >= t.dry_a2:
        return "A2"
    if summary.mean_dry >= t.dry_a1:
        return "A1"
    return "N"


def _recount(pairs, group_labels):
    """Oracle recount of one group's metrics from the raw pair list."""
    n_true = sum(1 for a, _ in pairs if a.label in group_labels)
    n_pred = sum(1 for _, p in pairs if p.label in group_labels)
    n_corr = sum(1 for a, p in pairs
                 if a.label in group_labels and p.label in group_labels)
    return n_true, n_pred, n_corr


# ------------------------------------------------------------- tree routing

def test_noise_free_nominal_routes_nominal(bundle):
    series, _, _ = generate_series(
        profile_for(Status.nominal()),
        GenConfig(noise_sigma=0.0, background_jump_rate=0.0, seed=4))
    assert classify_series(series, bundle).label == "N"


def test_a3_precedence_over_networks(bundle):
    """mean_dry above the A3 cut wins even with anomalous histograms."""
    summary = _summary(mean_dry=bundle.thresholds.dry_a3 + 1.0,
                       mean_visc=bundle.thresholds.visc_b3 + 1.0,
                       pair_values=[0.4, 0.4], jump_values=[0.6])
    assert classify_summary(summary, bundle).label == "A3"


def test_b_ladder_precedence_over_networks(bundle):
    t = bundle.thresholds
    summary = _summary(mean_dry=0.5 * (t.dry_a1 + min(t.dry_a2, t.dry_a3)),
                       mean_visc=0.5 * (t.visc_b1 + t.visc_b2),
                       pair_values=[0.4, 0.4])
    assert classify_summary(summary, bundle).label == "B1"


def test_boundary_belongs_to_severe_class(bundle):
    """Threshold comparisons are >= on the upper side."""
    t = bundle.thresholds
    exact = _summary(mean_dry=t.dry_a3, mean_visc=0.0)
    assert classify_summary(exact, bundle).label == "A3"
    just_below = _summary(mean_dry=np.nextafter(t.dry_a3, -np.inf),
                          mean_visc=np.nextafter(t.visc_b1, -np.inf))
    assert classify_summary(just_below, bundle).label != "A3"


def test_routing_matches_precedence_oracle(corpus_items, bundle, summaries):
    """All ~500 corpus series route identically under the oracle tree."""
    for sid, series, _ in corpus_items:
        expected = _oracle_route(summaries[sid], bundle)
        assert classify_summary(summaries[sid], bundle).label == expected


def test_tree_totality(summaries, bundle):
    for summary in summaries.values():
        label = classify_summary(summary, bundle).label
        assert label in STATUS_LABELS


# -------------------------------------------------------------- calibration

def test_disjoint_clouds_separated():
    lows = [_summary(d, 0.001) for d in (0.9, 1.0, 1.05)]
    highs = [_summary(d, 0.001) for d in (1.4, 1.5)]
    labels = [Status.nominal()] * 2 + [Status("A", 1)] + [Status("A", 2)] * 2
    summaries = [lows[0], lows[1], lows[2], highs[0], highs[1]]
    with pytest.raises(CalibrationError):
        # B classes absent: the viscous ladder cannot be calibrated
        calibrate_thresholds(summaries, labels)


def test_calibrated_cut_separates_adjacent_distributions(corpus_split, bundle, summaries):
    """Every A1-labelled training summary sits above dry_a1, N below:
    only when the clouds are disjoint, which the corpus guarantees for A3."""
    train_items, _ = corpus_split
    t = bundle.thresholds
    a3 = [summaries[sid].mean_dry for sid, _, st in train_items
          if st.label == "A3"]
    rest = [summaries[sid].mean_dry for sid, _, st in train_items
            if st.label != "A3"]
    if max(rest) < min(a3):  # disjoint: the cut must split the gap
        assert max(rest) < t.dry_a3 <= min(a3)
        assert t.dry_a3 == pytest.approx(0.5 * (max(rest) + min(a3)))


def test_identical_distributions_use_fallback():
    """A1/A2 fully overlapping triggers the quantile-midpoint fallback."""
    dry_by_label = {
        "N": [0.98, 1.0, 1.02],
        "A1": [1.2, 1.24, 1.3],   # identical to A2: overlap fallback
        "A2": [1.2, 1.24, 1.3],
        "A3": [2.0, 2.1, 2.2],
        "B1": [1.0, 1.0, 1.0],
        "B2": [1.0, 1.0, 1.0],
        "B3": [1.0, 1.0, 1.0],
    }
    visc_scale = {"B1": 3.0, "B2": 5.0, "B3": 8.0}
    summaries, labels = [], []
    for label, drys in dry_by_label.items():
        for v in drys:
            summaries.append(_summary(v, 0.001 * visc_scale.get(label, 1.0)))
            labels.append(Status.from_label(label))
    t = calibrate_thresholds(summaries, labels)
    values = dry_by_label["A1"]
    expected = 0.5 * (np.quantile(values, 0.95) + np.quantile(values, 0.05))
    assert t.dry_a2 == pytest.approx(expected)
    assert t.dry_a1 < t.dry_a2 < t.dry_a3


def test_threshold_ordering_invariant(bundle):
    t = bundle.thresholds
    assert t.dry_a1 < t.dry_a2 < t.dry_a3
    assert t.visc_b1 < t.visc_b2 < t.visc_b3


def test_self_consistency_on_training_set(corpus_split, bundle, summaries):
    """The fitted bundle reproduces its own training labels well."""
    train_items, _ = corpus_split
    correct = sum(
        classify_summary(summaries[sid], bundle).label == status.label
        for sid, _, status in train_items)
    assert correct / len(train_items) >= 0.9


# ------------------------------------------------------------------ metrics

def test_perfect_classifier_metrics(corpus_items):
    pairs = [(status, status) for _, _, status in corpus_items]
    report = evaluate(pairs)
    assert np.trace(report.confusion) == len(pairs)
    assert report.accuracy == 1.0
    for metrics in report.groups.values():
        assert metrics.sensitivity == 1.0 and metrics.ppv == 1.0


def test_always_nominal_metrics(corpus_items):
    pairs = [(status, Status.nominal()) for _, _, status in corpus_items]
    report = evaluate(pairs)
    for name in ("anomaly", "A", "B", "C", "D"):
        assert report.groups[name].sensitivity == 0.0
        assert report.groups[name].ppv is None  # nothing predicted anomalous
    n_label = report.groups["N"]
    assert n_label.sensitivity == 1.0
    assert n_label.ppv == pytest.approx(
        sum(1 for _, _, st in corpus_items if st.label == "N") / len(pairs))


def test_metrics_match_recount_oracle(corpus_items, bundle, summaries):
    pairs = [(status, classify_summary(summaries[sid], bundle))
             for sid, _, status in corpus_items]
    report = evaluate(pairs)
    for name, group_labels in METRIC_GROUPS.items():
        n_true, n_pred, n_corr = _recount(pairs, set(group_labels))
        metrics = report.groups[name]
        assert metrics.n_true == n_true
        assert metrics.n_predicted == n_pred
        assert metrics.n_correct == n_corr
        if n_true:
            assert metrics.sensitivity == pytest.approx(n_corr / n_true)
        if n_pred:
            assert metrics.ppv == pytest.approx(n_corr / n_pred)


def test_confusion_orientation(corpus_items, bundle, summaries):
    """Rows index predictions: column sums recover actual class counts."""
    pairs = [(status, classify_summary(summaries[sid], bundle))
             for sid, _, status in corpus_items]
    report = evaluate(pairs)
    idx = {label: i for i, label in enumerate(report.labels)}
    for label in STATUS_LABELS:
        actual_count = sum(1 for a, _ in pairs if a.label == label)
        assert report.confusion[:, idx[label]].sum() == actual_count
    some_actual, some_pred = pairs[0][0].label, pairs[0][1].label
    assert report.confusion[idx[some_pred], idx[some_actual]] >= 1


def test_group_sensitivity_identity(corpus_items, bundle, summaries):
    """S(X) * N(X) equals the in-group correct count from the confusion."""
    pairs = [(status, classify_summary(summaries[sid], bundle))
             for sid, _, status in corpus_items]
    report = evaluate(pairs)
    idx = {label: i for i, label in enumerate(report.labels)}
    for name, group_labels in METRIC_GROUPS.items():
        cells = [idx[label] for label in group_labels]
        in_group = report.confusion[np.ix_(cells, cells)].sum()
        metrics = report.groups[name]
        if metrics.sensitivity is not None:
            assert metrics.sensitivity * metrics.n_true == pytest.approx(in_group)


# ------------------------------------------------------------------ bundle IO

def test_bundle_round_trip(tmp_path, bundle, summaries):
    save_bundle(bundle, tmp_path / "bundle", meta={"note": "round trip"})
    loaded, meta = load_bundle(tmp_path / "bundle")
    assert meta["note"] == "round trip"
    assert loaded.thresholds == bundle.thresholds
    for sid in list(summaries)[::50]:
        assert (classify_summary(summaries[sid], loaded).label
                == classify_summary(summaries[sid], bundle).label)
