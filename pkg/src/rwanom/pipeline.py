"""Telemetry feature pipeline: regression, changepoints, jump histograms.

Starting from a series (omega, friction), the pipeline

1. fits the two-regressor friction model f ~ dry * sign(omega) + visc * omega
   with ordinary least squares over rolling windows,
2. splits the series where the rolling fit degrades (residual RMS above a
   threshold), giving intervals on which the dry level is flat,
3. re-fits each interval, takes the differences of consecutive dry-level
   estimates, greedily matches (+delta, -delta) pairs, and bins the matched
   increases and the unmatched magnitudes into two fixed-range relative-
   frequency histograms (the classifier inputs).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .telemetry import DegenerateDesignError, TimeSeries

_DEGENERACY_RTOL = 1e-12

#: Fraction of the series' peak |omega| below which a sample sits in the
#: stiction zone.  sign(omega) is physically meaningless there (and one
#: noisy reading can flip it), so such samples are excluded from every fit.
_STICTION_FRACTION = 0.01


def _fit_mask(omega: np.ndarray) -> np.ndarray:
    """True for samples far enough from zero spin rate to trust sign(omega).

    The cutoff is relative to the whole series so that every window and
    interval of one series agrees on which samples are usable.
    """
    return np.abs(omega) >= _STICTION_FRACTION * np.max(np.abs(omega))


class PipelineError(ValueError):
    """Invalid pipeline parameters or inputs."""


@dataclass(frozen=True)
class PipelineConfig:
    """Tuning knobs for the feature pipeline.

    ``bin_range`` clamps jump values into [lo, hi] before binning, so outliers
    land in the end bins instead of being dropped.  ``pair_match_tol`` is
    relative: deltas d_i > 0 and d_j < 0 match when |d_i + d_j| <= tol * d_i
    and j - i <= pair_match_max_gap.
    """

    window_size: int = 50
    residual_threshold: float = 0.032
    min_interval: int = 50
    pair_match_tol: float = 0.1
    pair_match_max_gap: int = 2
    n_bins: int = 20
    bin_range: tuple[float, float] = (0.02, 1.50)

    def __post_init__(self) -> None:
        if self.window_size < 4:
            raise PipelineError("window_size must be >= 4")
        if self.residual_threshold <= 0:
            raise PipelineError("residual_threshold must be positive")
        if self.min_interval < 4:
            raise PipelineError("min_interval must be >= 4")
        if not 0 < self.pair_match_tol < 1:
            raise PipelineError("pair_match_tol must be in (0, 1)")
        if self.pair_match_max_gap < 1:
            raise PipelineError("pair_match_max_gap must be >= 1")
        if self.n_bins < 2:
            raise PipelineError("n_bins must be >= 2")
        lo, hi = self.bin_range
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise PipelineError("bin_range must be a finite (lo, hi) with lo < hi")

    @property
    def bin_edges(self) -> np.ndarray:
        lo, hi = self.bin_range
        return np.linspace(lo, hi, self.n_bins + 1)


@dataclass(frozen=True)
class CoefficientEstimate:
    """Least-squares fit of the friction model on samples [start, end)."""

    start: int
    end: int
    dry: float
    visc: float
    residual_rms: float


@dataclass(frozen=True)
class Histogram:
    """Relative-frequency histogram over fixed bin edges.

    ``bins`` sums to 1 when any value was binned and is all zeros otherwise.
    """

    bins: np.ndarray
    edges: np.ndarray
    count: int

    def __post_init__(self) -> None:
        bins = np.asarray(self.bins, dtype=float)
        edges = np.asarray(self.edges, dtype=float)
        object.__setattr__(self, "bins", bins)
        object.__setattr__(self, "edges", edges)
        if bins.shape[0] + 1 != edges.shape[0]:
            raise PipelineError("histogram needs len(edges) == len(bins) + 1")


@dataclass(frozen=True)
class PipelineSummary:
    """Everything the classifier needs from one series."""

    estimates: tuple[CoefficientEstimate, ...]
    deltas: np.ndarray              # consecutive dry-level differences
    matched_increases: np.ndarray   # +delta of each matched pair
    unmatched_magnitudes: np.ndarray
    hist_pairs: Histogram           # from matched increases
    hist_jumps: Histogram           # from unmatched magnitudes

    @property
    def mean_dry(self) -> float:
        """Arithmetic mean of the per-interval dry-level estimates."""
        return float(np.mean([e.dry for e in self.estimates]))

    @property
    def mean_visc(self) -> float:
        """Arithmetic mean of the per-interval viscous estimates."""
        return float(np.mean([e.visc for e in self.estimates]))


def fit_window(series: TimeSeries, start: int, end: int) -> CoefficientEstimate:
    """OLS fit of friction on [sign(omega), omega] over samples [start, end).

    Stiction-zone samples (see :func:`_fit_mask`) are left out of the fit
    and of the reported residual RMS.  Raises
    :class:`DegenerateDesignError` when the two regressors are
    (numerically) collinear on the window's usable samples.
    """
    if not 0 <= start < end <= len(series):
        raise PipelineError(f"bad window [{start}, {end}) for series of "
                            f"length {len(series)}")
    keep = _fit_mask(series.omega)[start:end]
    omega = series.omega[start:end][keep]
    friction = series.friction[start:end][keep]
    s = np.sign(omega)
    a11 = float(s @ s)
    a12 = float(s @ omega)
    a22 = float(omega @ omega)
    det = a11 * a22 - a12 * a12
    scale = max(a11, a22, 1e-300)
    if det <= _DEGENERACY_RTOL * scale * scale:
        raise DegenerateDesignError(
            f"degenerate design on window [{start}, {end})")
    design = np.column_stack([s, omega])
    coef, *_ = np.linalg.lstsq(design, friction, rcond=None)
    dry, visc = float(coef[0]), float(coef[1])
    resid = friction - dry * s - visc * omega
    rms = float(np.sqrt(np.mean(resid * resid)))
    return CoefficientEstimate(start=start, end=end, dry=dry, visc=visc,
                               residual_rms=rms)


def rolling_residual_rms(series: TimeSeries, window_size: int) -> np.ndarray:
    """Residual RMS of a per-window OLS fit, for every window start.

    Entry p covers samples [p, p + window_size); the result has length
    ``len(series) - window_size + 1``.  Stiction-zone samples are excluded
    from each window's fit and RMS (see :func:`_fit_mask`).  Coefficients
    come from closed-form 2x2 normal equations over prefix sums; residuals
    are evaluated directly against the data so cancellation in the prefix
    sums cannot leak into the reported RMS.
    """
    n = len(series)
    w = window_size
    if w < 4:
        raise PipelineError("window_size must be >= 4")
    if n < w:
        raise PipelineError(f"series of length {n} shorter than window {w}")
    mask = _fit_mask(series.omega).astype(float)
    omega = series.omega * mask
    friction = series.friction * mask
    s = np.sign(omega)

    def winsum(values: np.ndarray) -> np.ndarray:
        prefix = np.concatenate([[0.0], np.cumsum(values)])
        return prefix[w:] - prefix[:-w]

    a11 = winsum(s * s)
    a12 = winsum(s * omega)
    a22 = winsum(omega * omega)
    b1 = winsum(s * friction)
    b2 = winsum(omega * friction)
    counts = winsum(mask)
    det = a11 * a22 - a12 * a12
    scale = np.maximum(a11, a22)
    bad = (det <= _DEGENERACY_RTOL * scale * scale) | (counts < 4)
    if bad.any():
        raise DegenerateDesignError(
            "degenerate design in rolling window starting at sample "
            f"{int(np.argmax(bad))}")
    dry = (b1 * a22 - b2 * a12) / det
    visc = (a11 * b2 - a12 * b1) / det

    sw = np.lib.stride_tricks.sliding_window_view
    resid = (sw(friction, w) - dry[:, None] * sw(s, w)
             - visc[:, None] * sw(omega, w)) * sw(mask, w)
    return np.sqrt(np.sum(resid * resid, axis=1) / counts)


def detect_changepoints(series: TimeSeries, config: PipelineConfig) -> list[int]:
    """Estimate the samples where the dry friction level jumps.

    A window whose fit residual exceeds ``residual_threshold`` is "hot"; each
    maximal hot run marks one changepoint, placed first at the centre sample
    of the run (the jump sits mid-window when the residual peaks) and then
    refined to the split that minimises the two-sided fit error nearby.
    Changepoints closer than ``min_interval`` to an end or to each other are
    merged away, keeping the earlier one.

    A changepoint marks a real change of the fitted model, so each surviving
    cut must earn its keep: splitting there has to lower the summed squared
    fit error of its two adjacent intervals, relative to fitting them as
    one, by at least ``residual_threshold**2 * min_interval`` - the error a
    threshold-sized level change sustained for a minimal interval would
    leave unexplained.  Isolated outlier samples (for example a sign flip
    of a near-zero spin-rate reading) spike the rolling residual but are
    unexplained on either side of any split, so their cuts fail the test;
    genuine dry-level or viscous changes pass it easily.  Dropping a cut
    merges its neighbours, so the check repeats until stable.
    """
    w = config.window_size
    rms = rolling_residual_rms(series, w)
    hot = rms > config.residual_threshold
    n = len(series)
    cuts: list[int] = []
    p = 0
    while p < hot.shape[0]:
        if hot[p]:
            q = p
            while q + 1 < hot.shape[0] and hot[q + 1]:
                q += 1
            # Hot run of window starts [p, q]: affected samples are roughly
            # [p, q + w); the jump is near the middle.
            cuts.append(_refine_cut(series, (p + q + w) // 2, w))
            p = q + 1
        else:
            p += 1
    merged: list[int] = []
    for c in cuts:
        if c < config.min_interval or c > n - config.min_interval:
            continue
        if merged and c - merged[-1] < config.min_interval:
            continue
        merged.append(c)
    def sse(a: int, b: int) -> float:
        est = fit_window(series, a, b)
        return est.residual_rms ** 2 * (b - a)

    penalty = config.residual_threshold ** 2 * config.min_interval
    while merged:
        bounds = [0, *merged, n]
        confirmed = [c for i, c in enumerate(merged)
                     if (sse(bounds[i], bounds[i + 2])
                         - sse(bounds[i], c) - sse(c, bounds[i + 2]))
                     >= penalty]
        if confirmed == merged:
            break
        merged = confirmed
    return merged


def _refine_cut(series: TimeSeries, cut: int, window_size: int) -> int:
    """Move a changepoint to the split minimising left+right fit SSE.

    Candidate splits are scanned within half a window of the initial guess;
    each side keeps at least four samples so both fits are determined.  Ties
    go to the smallest split.
    """
    half = window_size // 2
    a = max(0, cut - window_size)
    b = min(len(series), cut + window_size)
    lo = max(a + 4, cut - half)
    hi = min(b - 4, cut + half)
    if lo >= hi:
        return cut
    mask = _fit_mask(series.omega)[a:b].astype(float)
    omega = series.omega[a:b] * mask
    friction = series.friction[a:b] * mask
    s = np.sign(omega)
    # Cumulative moments with a leading zero: entry k holds sums over [a, a+k).
    def cum(values: np.ndarray) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(values)])

    c_ss, c_so, c_oo = cum(s * s), cum(s * omega), cum(omega * omega)
    c_sf, c_of, c_ff = cum(s * friction), cum(omega * friction), cum(friction ** 2)

    def sse(lo_idx: np.ndarray, hi_idx: np.ndarray) -> np.ndarray:
        a11 = c_ss[hi_idx] - c_ss[lo_idx]
        a12 = c_so[hi_idx] - c_so[lo_idx]
        a22 = c_oo[hi_idx] - c_oo[lo_idx]
        b1 = c_sf[hi_idx] - c_sf[lo_idx]
        b2 = c_of[hi_idx] - c_of[lo_idx]
        ff = c_ff[hi_idx] - c_ff[lo_idx]
        det = a11 * a22 - a12 * a12
        scale = np.maximum(a11, a22)
        det = np.where(det <= _DEGENERACY_RTOL * scale * scale, np.nan, det)
        dry = (b1 * a22 - b2 * a12) / det
        visc = (a11 * b2 - a12 * b1) / det
        return ff - dry * b1 - visc * b2

    splits = np.arange(lo - a, hi - a + 1)
    total = (sse(np.zeros_like(splits), splits)
             + sse(splits, np.full_like(splits, b - a)))
    total = np.where(np.isnan(total), np.inf, total)
    return int(a + splits[int(np.argmin(total))])


def split_intervals(n_samples: int, changepoints: list[int],
                    config: PipelineConfig) -> list[tuple[int, int]]:
    """Half-open intervals covering [0, n_samples) between changepoints."""
    bounds = [0, *changepoints, n_samples]
    if any(a > b for a, b in zip(bounds, bounds[1:])):
        raise PipelineError("changepoints must be sorted within the series")
    return [(a, b) for a, b in zip(bounds, bounds[1:]) if b > a]


def estimate_intervals(series: TimeSeries, intervals: list[tuple[int, int]],
                       ) -> tuple[CoefficientEstimate, ...]:
    return tuple(fit_window(series, a, b) for a, b in intervals)


def match_pairs(deltas: np.ndarray, tol: float, max_gap: int,
                ) -> tuple[list[tuple[int, int]], np.ndarray, np.ndarray]:
    """Greedy left-to-right matching of (+delta, -delta) pairs.

    Scans i in order; the first unused j in (i, i + max_gap] with
    delta_j < 0 and |delta_i + delta_j| <= tol * delta_i closes the pair.
    Returns (pairs, matched increases, unmatched |delta| magnitudes).
    """
    deltas = np.asarray(deltas, dtype=float)
    used = np.zeros(deltas.shape[0], dtype=bool)
    pairs: list[tuple[int, int]] = []
    for i in range(deltas.shape[0]):
        if used[i] or deltas[i] <= 0:
            continue
        for j in range(i + 1, min(i + max_gap, deltas.shape[0] - 1) + 1):
            if used[j] or deltas[j] >= 0:
                continue
            if abs(deltas[i] + deltas[j]) <= tol * deltas[i]:
                pairs.append((i, j))
                used[i] = used[j] = True
                break
    matched = np.array([deltas[i] for i, _ in pairs], dtype=float)
    unmatched = np.abs(deltas[~used])
    return pairs, matched, unmatched


def build_histogram(values: np.ndarray, config: PipelineConfig) -> Histogram:
    """Relative-frequency histogram of values clamped into ``bin_range``."""
    edges = config.bin_edges
    values = np.asarray(values, dtype=float)
    count = int(values.shape[0])
    if count == 0:
        return Histogram(bins=np.zeros(config.n_bins), edges=edges, count=0)
    clamped = np.clip(values, config.bin_range[0], config.bin_range[1])
    raw, _ = np.histogram(clamped, bins=edges)
    return Histogram(bins=raw / count, edges=edges, count=count)


def run_pipeline(series: TimeSeries, config: PipelineConfig) -> PipelineSummary:
    """Full feature extraction for one series."""
    changepoints = detect_changepoints(series, config)
    intervals = split_intervals(len(series), changepoints, config)
    estimates = estimate_intervals(series, intervals)
    dry_levels = np.array([e.dry for e in estimates])
    deltas = np.diff(dry_levels)
    _, matched, unmatched = match_pairs(deltas, config.pair_match_tol,
                                        config.pair_match_max_gap)
    return PipelineSummary(
        estimates=estimates,
        deltas=deltas,
        matched_increases=matched,
        unmatched_magnitudes=unmatched,
        hist_pairs=build_histogram(matched, config),
        hist_jumps=build_histogram(unmatched, config),
    )


def calibrate_residual_threshold(nominal_series: list[TimeSeries],
                                 window_size: int = 50,
                                 factor: float = 4.0) -> float:
    """Threshold = ``factor`` times the median rolling residual RMS.

    The median is taken per healthy series, then across series, so a single
    odd series cannot drag the threshold.
    """
    if not nominal_series:
        raise PipelineError("need at least one nominal series to calibrate")
    medians = [float(np.median(rolling_residual_rms(s, window_size)))
               for s in nominal_series]
    return factor * float(np.median(medians))
