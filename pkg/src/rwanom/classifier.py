"""Hybrid status classifier: threshold stages plus two histogram networks.

Classification walks a fixed decision tree over pipeline features:

1. mean dry level at or above the top dry cut  -> A3 (worst dry anomaly);
   otherwise mean viscous coefficient at or above the B cut -> B, with the
   urgency read off two further viscous cuts;
2. the matched-pair network on the pair histogram -> C1..C3 if nonzero;
3. the jump network on the unmatched-jump histogram -> D1..D3 if nonzero;
4. the remaining dry cuts grade A2, A1, else nominal.

All comparisons are ``>=``: a value exactly on a boundary takes the more
severe class.  The two networks never see B or A3 series at inference time
(stage 1 fires first), so they are trained without them.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import formats, mlp
from .pipeline import (PipelineConfig, PipelineSummary,
                       calibrate_residual_threshold, run_pipeline)
from .telemetry import STATUS_LABELS, Status, TimeSeries

PAIR_CLASS_NAMES = ("none", "C1", "C2", "C3")
JUMP_CLASS_NAMES = ("none", "D1", "D2", "D3")


class CalibrationError(ValueError):
    """Training data cannot support a consistent threshold ladder."""


@dataclass(frozen=True)
class Thresholds:
    """Dry-level and viscous cuts, in model units (mNm and mNm/(rad/s)).

    Invariants: dry_a1 < dry_a2 < dry_a3 and visc_b1 < visc_b2 < visc_b3.
    """

    dry_a1: float
    dry_a2: float
    dry_a3: float
    visc_b1: float
    visc_b2: float
    visc_b3: float

    def __post_init__(self) -> None:
        values = [getattr(self, f.name) for f in fields(self)]
        if not all(np.isfinite(v) for v in values):
            raise CalibrationError("thresholds must be finite")
        if not self.dry_a1 < self.dry_a2 < self.dry_a3:
            raise CalibrationError("dry thresholds must increase with urgency")
        if not self.visc_b1 < self.visc_b2 < self.visc_b3:
            raise CalibrationError("viscous thresholds must increase with urgency")


@dataclass(frozen=True)
class ClassifierBundle:
    """Everything needed to classify a raw series."""

    pipeline: PipelineConfig
    thresholds: Thresholds
    pair_net: mlp.MlpModel
    jump_net: mlp.MlpModel

    def __post_init__(self) -> None:
        edges = self.pipeline.bin_edges
        for net, names in ((self.pair_net, PAIR_CLASS_NAMES),
                           (self.jump_net, JUMP_CLASS_NAMES)):
            if tuple(net.class_names) != names:
                raise CalibrationError(
                    f"network classes {net.class_names} do not match {names}")
            if net.input_dim != self.pipeline.n_bins or not np.allclose(
                    net.bin_edges, edges):
                raise CalibrationError(
                    "network bin geometry does not match the pipeline config")


def classify_summary(summary: PipelineSummary,
                     bundle: ClassifierBundle) -> Status:
    """Decision tree over already-extracted features."""
    th = bundle.thresholds
    if summary.mean_dry >= th.dry_a3:
        return Status("A", 3)
    if summary.mean_visc >= th.visc_b1:
        if summary.mean_visc >= th.visc_b3:
            return Status("B", 3)
        if summary.mean_visc >= th.visc_b2:
            return Status("B", 2)
        return Status("B", 1)
    pair_class = mlp.classify(bundle.pair_net, summary.hist_pairs.bins)
    if pair_class > 0:
        return Status("C", pair_class)
    jump_class = mlp.classify(bundle.jump_net, summary.hist_jumps.bins)
    if jump_class > 0:
        return Status("D", jump_class)
    if summary.mean_dry >= th.dry_a2:
        return Status("A", 2)
    if summary.mean_dry >= th.dry_a1:
        return Status("A", 1)
    return Status.nominal()


def classify_series(series: TimeSeries, bundle: ClassifierBundle) -> Status:
    return classify_summary(run_pipeline(series, bundle.pipeline), bundle)


def _cut(lower: np.ndarray, upper: np.ndarray, what: str) -> float:
    """Threshold between two value clouds: midpoint of the empirical gap.

    When the clouds overlap, falls back to the midpoint between the lower
    cloud's 95th and the upper cloud's 5th percentile (a best-effort cut that
    splits the overlap region).
    """
    if lower.size == 0 or upper.size == 0:
        raise CalibrationError(f"no examples on one side of the {what} cut")
    lo_edge = float(np.max(lower))
    up_edge = float(np.min(upper))
    if lo_edge < up_edge:
        return 0.5 * (lo_edge + up_edge)
    return 0.5 * (float(np.quantile(lower, 0.95))
                  + float(np.quantile(upper, 0.05)))


def calibrate_thresholds(summaries: list[PipelineSummary],
                         labels: list[Status]) -> Thresholds:
    """Fit the six cuts from labelled training summaries.

    The top dry cut separates A3 from everything else (any class may drift
    upward in mean dry level); the lower dry cuts and the viscous ladder are
    fitted between the adjacent classes they separate.
    """
    if len(summaries) != len(labels):
        raise CalibrationError("summaries and labels must align")
    dry = np.array([s.mean_dry for s in summaries])
    visc = np.array([s.mean_visc for s in summaries])
    lab = np.array([st.label for st in labels])

    def vals(arr: np.ndarray, *names: str) -> np.ndarray:
        return arr[np.isin(lab, names)]

    dry_a3 = _cut(dry[lab != "A3"], vals(dry, "A3"), "A3")
    dry_a2 = _cut(vals(dry, "A1"), vals(dry, "A2"), "A2")
    dry_a1 = _cut(vals(dry, "N"), vals(dry, "A1"), "A1")
    non_b = visc[~np.isin(lab, ["B1", "B2", "B3"])]
    visc_b1 = _cut(non_b, vals(visc, "B1", "B2", "B3"), "B1")
    visc_b2 = _cut(vals(visc, "B1"), vals(visc, "B2"), "B2")
    visc_b3 = _cut(vals(visc, "B2"), vals(visc, "B3"), "B3")
    return Thresholds(dry_a1=dry_a1, dry_a2=dry_a2, dry_a3=dry_a3,
                      visc_b1=visc_b1, visc_b2=visc_b2, visc_b3=visc_b3)


#: Label groupings reported alongside the full confusion matrix.
METRIC_GROUPS: dict[str, tuple[str, ...]] = {
    "anomaly": tuple(l for l in STATUS_LABELS if l != "N"),
    "urgency1": ("A1", "B1", "C1", "D1"),
    "urgency2": ("A2", "B2", "C2", "D2"),
    "urgency3": ("A3", "B3", "C3", "D3"),
    "A": ("A1", "A2", "A3"),
    "B": ("B1", "B2", "B3"),
    "C": ("C1", "C2", "C3"),
    "D": ("D1", "D2", "D3"),
    **{l: (l,) for l in STATUS_LABELS},
}


@dataclass(frozen=True)
class GroupMetrics:
    """Sensitivity and positive predictive value for one label group.

    ``sensitivity``: of the series truly in the group, the fraction predicted
    inside it.  ``ppv``: of the series predicted inside the group, the
    fraction truly in it.  Either is None when its denominator is zero.
    """

    n_true: int
    n_predicted: int
    n_correct: int

    @property
    def sensitivity(self) -> float | None:
        return self.n_correct / self.n_true if self.n_true else None

    @property
    def ppv(self) -> float | None:
        return self.n_correct / self.n_predicted if self.n_predicted else None


@dataclass(frozen=True)
class EvalReport:
    """Confusion matrix (rows: predicted, cols: actual) plus group metrics.

    Column sums equal the per-class series counts of the evaluated set.
    """

    labels: tuple[str, ...]
    confusion: np.ndarray
    groups: dict[str, GroupMetrics]

    @property
    def accuracy(self) -> float:
        total = int(self.confusion.sum())
        return float(np.trace(self.confusion)) / total if total else 0.0


def split_train_eval(items: list[tuple[int, TimeSeries, Status]],
                     train_fraction: float, seed: int,
                     ) -> tuple[list, list]:
    """Per-class seeded split; returns (train items, held-out items).

    Each status label is shuffled and split separately so both sides keep the
    full class mix.  The training side gets ``ceil(fraction * n)`` series.
    """
    if not 0 < train_fraction < 1:
        raise CalibrationError("train_fraction must be in (0, 1)")
    rng = np.random.default_rng(np.random.SeedSequence((seed & (2**64 - 1), 77)))
    by_label: dict[str, list] = {}
    for item in items:
        by_label.setdefault(item[2].label, []).append(item)
    train, held = [], []
    for label in STATUS_LABELS:
        group = sorted(by_label.get(label, []), key=lambda it: it[0])
        if not group:
            continue
        order = rng.permutation(len(group))
        n_train = int(np.ceil(train_fraction * len(group)))
        chosen = set(int(i) for i in order[:n_train])
        for pos, item in enumerate(group):
            (train if pos in chosen else held).append(item)
    train.sort(key=lambda it: it[0])
    held.sort(key=lambda it: it[0])
    return train, held


def _pooled_bin_range(summaries: list[PipelineSummary]) -> tuple[float, float]:
    """Histogram range from the 1st/99th percentile of pooled jump values."""
    pooled = np.concatenate(
        [np.concatenate([s.matched_increases, s.unmatched_magnitudes])
         for s in summaries])
    pooled = pooled[pooled > 0]
    if pooled.size < 10:
        raise CalibrationError("too few jump values to calibrate bin range")
    lo = float(np.quantile(pooled, 0.01))
    hi = float(np.quantile(pooled, 0.99))
    if not lo < hi:
        raise CalibrationError("degenerate jump value distribution")
    return lo, hi


_AUGMENT_SCALES = (0.7, 0.4)


def _with_scaled_copies(xs: list[np.ndarray], ys: list[int],
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Original histograms plus copies scaled toward the origin.

    Robustness queries range over envelope boxes whose corners keep only
    part of each bin's mass, so their coordinates can sum to less than
    one; no pipeline output looks like that, and an unaugmented network
    extrapolates arbitrarily there.  Scaled copies pin the extrapolation:
    mass sitting at anomalous magnitudes stays that anomaly no matter how
    much of it a box corner retains.  Labels are unchanged, and scaling
    the all-zeros nominal histogram is the identity, so nominal rows stay
    exact duplicates and the class mix is preserved.
    """
    x = np.array(xs)
    y = np.array(ys)
    stacked = np.concatenate([x] + [x * s for s in _AUGMENT_SCALES])
    labels = np.concatenate([y] * (1 + len(_AUGMENT_SCALES)))
    return stacked, labels


def fit_bundle(train_items: list[tuple[int, TimeSeries, Status]],
               base_config: PipelineConfig | None = None,
               pair_train: mlp.TrainConfig | None = None,
               jump_train: mlp.TrainConfig | None = None,
               seed: int = 0) -> ClassifierBundle:
    """Calibrate the pipeline and thresholds, then train both networks.

    Calibration is two-pass: a provisional pipeline (threshold from healthy
    series, default bins) extracts jump values, whose pooled quantiles fix
    the final bin range; the final pipeline then feeds threshold calibration
    and network training.  Networks are trained without the classes stage 1
    removes before they run: both exclude A3 and B, and the jump network
    additionally excludes C (caught at stage 2).  Each network's training
    set also carries scaled copies of every histogram (see
    :func:`_with_scaled_copies`).
    """
    if not train_items:
        raise CalibrationError("empty training set")
    base = base_config or PipelineConfig()
    noms = [s for _, s, st in train_items if st.kind is None]
    if not noms:
        raise CalibrationError("training set has no nominal series")
    residual_threshold = calibrate_residual_threshold(noms, base.window_size)
    provisional = replace(base, residual_threshold=residual_threshold)
    prov_summaries = [run_pipeline(s, provisional) for _, s, _ in train_items]
    config = replace(provisional, bin_range=_pooled_bin_range(prov_summaries))

    summaries = [run_pipeline(s, config) for _, s, _ in train_items]
    statuses = [st for _, _, st in train_items]
    thresholds = calibrate_thresholds(summaries, statuses)

    edges = config.bin_edges
    pair_xs, pair_ys, jump_xs, jump_ys = [], [], [], []
    for summary, status in zip(summaries, statuses):
        if status.label in ("A3", "B1", "B2", "B3"):
            continue
        pair_xs.append(summary.hist_pairs.bins)
        pair_ys.append(status.urgency if status.kind == "C" else 0)
        if status.kind != "C":
            jump_xs.append(summary.hist_jumps.bins)
            jump_ys.append(status.urgency if status.kind == "D" else 0)
    pair_cfg = pair_train or mlp.TrainConfig(seed=seed * 2 + 1)
    jump_cfg = jump_train or mlp.TrainConfig(seed=seed * 2 + 2)
    pair_net = mlp.train(np.array(pair_xs), np.array(pair_ys), pair_cfg,
                         PAIR_CLASS_NAMES, edges)
    jump_net = mlp.train(np.array(jump_xs), np.array(jump_ys), jump_cfg,
                         JUMP_CLASS_NAMES, edges)
    return ClassifierBundle(pipeline=config, thresholds=thresholds,
                            pair_net=pair_net, jump_net=jump_net)


def save_bundle(bundle: ClassifierBundle, out_dir, meta: dict | None = None,
                ) -> None:
    """Bundle directory: pipeline.json, thresholds.json, two model files."""
    out_dir = Path(out_dir)
    cfg = bundle.pipeline
    formats.write_json(out_dir / "pipeline.json", {
        "window_size": cfg.window_size,
        "residual_threshold": cfg.residual_threshold,
        "min_interval": cfg.min_interval,
        "pair_match_tol": cfg.pair_match_tol,
        "pair_match_max_gap": cfg.pair_match_max_gap,
        "n_bins": cfg.n_bins,
        "bin_range": [cfg.bin_range[0], cfg.bin_range[1]],
    })
    th = bundle.thresholds
    formats.write_json(out_dir / "thresholds.json", {
        f.name: getattr(th, f.name) for f in fields(th)})
    mlp.save_model(bundle.pair_net, out_dir / "pair_net.json")
    mlp.save_model(bundle.jump_net, out_dir / "jump_net.json")
    formats.write_json(out_dir / "meta.json", meta or {})


def load_bundle(bundle_dir) -> tuple[ClassifierBundle, dict]:
    """Load a bundle directory; returns (bundle, meta)."""
    bundle_dir = Path(bundle_dir)
    cfg_doc = formats.read_json(bundle_dir / "pipeline.json")
    cfg = PipelineConfig(
        window_size=int(cfg_doc["window_size"]),
        residual_threshold=float(cfg_doc["residual_threshold"]),
        min_interval=int(cfg_doc["min_interval"]),
        pair_match_tol=float(cfg_doc["pair_match_tol"]),
        pair_match_max_gap=int(cfg_doc["pair_match_max_gap"]),
        n_bins=int(cfg_doc["n_bins"]),
        bin_range=(float(cfg_doc["bin_range"][0]),
                   float(cfg_doc["bin_range"][1])),
    )
    th_doc = formats.read_json(bundle_dir / "thresholds.json")
    thresholds = Thresholds(**{k: float(v) for k, v in th_doc.items()})
    bundle = ClassifierBundle(
        pipeline=cfg, thresholds=thresholds,
        pair_net=mlp.load_model(bundle_dir / "pair_net.json"),
        jump_net=mlp.load_model(bundle_dir / "jump_net.json"))
    meta = formats.read_json(bundle_dir / "meta.json")
    return bundle, meta


def evaluate(pairs: list[tuple[Status, Status]]) -> EvalReport:
    """Metrics from (actual, predicted) status pairs."""
    index = {label: i for i, label in enumerate(STATUS_LABELS)}
    confusion = np.zeros((len(STATUS_LABELS), len(STATUS_LABELS)), dtype=int)
    for actual, predicted in pairs:
        confusion[index[predicted.label], index[actual.label]] += 1
    groups = {}
    for name, members in METRIC_GROUPS.items():
        cells = [index[m] for m in members]
        n_true = int(confusion[:, cells].sum())
        n_pred = int(confusion[cells, :].sum())
        n_correct = int(confusion[np.ix_(cells, cells)].sum())
        groups[name] = GroupMetrics(n_true=n_true, n_predicted=n_pred,
                                    n_correct=n_correct)
    return EvalReport(labels=STATUS_LABELS, confusion=confusion, groups=groups)
