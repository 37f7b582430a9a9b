"""Telemetry perturbations, SNR bookkeeping, and histogram envelopes.

Six perturbation kinds are supported.  The three noise kinds draw one value
per sample and channel, scaled by ``epsilon`` times the channel's amplitude
(max - min), so a given strength means the same relative disturbance on both
channels:

* ``gaussian``  - standard normal noise,
* ``uniform``   - Uniform(-1, 1) noise,
* ``poisson``   - Poisson(1) counts centred by -1,
* ``linear_trend``      - adds ``epsilon * k`` to the friction channel
  (k = 0, 1, ... in sample units); deterministic,
* ``amplitude_scaling`` - multiplies both channels by (1 + epsilon);
  deterministic,
* ``missing_data``      - removes ``ceil(epsilon * n)`` samples at shared
  uniformly-drawn indices from both channels.

A histogram envelope reruns the feature pipeline on ``n_iters`` perturbed
copies and takes the componentwise min/max of the chosen histogram.  Random
kinds vary the seed per copy (child i of the perturbation seed, a scheme
whose first 10 children are the same whether 10 or 100 copies are run);
deterministic kinds vary the strength instead, over a nested schedule in
[epsilon/2, epsilon] so smaller iteration counts are prefixes of larger ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .pipeline import PipelineConfig, run_pipeline
from .telemetry import MIN_SERIES_LEN, TimeSeries

KINDS = ("gaussian", "uniform", "poisson", "linear_trend",
         "amplitude_scaling", "missing_data")
RANDOM_KINDS = frozenset({"gaussian", "uniform", "poisson", "missing_data"})
DETERMINISTIC_KINDS = frozenset({"linear_trend", "amplitude_scaling"})

#: Fraction of epsilon where the deterministic envelope schedule starts.
SWEEP_LOW_FRACTION = 0.5


class PerturbError(ValueError):
    """Invalid perturbation parameters."""


class EnvelopeError(RuntimeError):
    """Pipeline failure on one envelope instance (index included)."""


@dataclass(frozen=True)
class Perturbation:
    kind: str
    epsilon: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise PerturbError(f"unknown perturbation kind {self.kind!r}")
        if not np.isfinite(self.epsilon) or self.epsilon < 0:
            raise PerturbError("epsilon must be finite and >= 0")
        if self.kind == "missing_data" and self.epsilon >= 1:
            raise PerturbError("missing_data epsilon must be < 1")

    @property
    def is_random(self) -> bool:
        return self.kind in RANDOM_KINDS


def _channel_scales(series: TimeSeries) -> tuple[float, float]:
    """Per-channel amplitude (max - min); zero for a constant channel."""
    return (float(series.omega.max() - series.omega.min()),
            float(series.friction.max() - series.friction.min()))


def apply(series: TimeSeries, p: Perturbation) -> TimeSeries:
    """The perturbed copy of a series; deterministic in ``p.seed``.

    Noise kinds draw the omega-channel values first, then the friction
    values, from a generator seeded with ``p.seed`` alone.
    """
    n = len(series)
    rng = np.random.default_rng(np.random.SeedSequence(p.seed & (2**64 - 1)))
    if p.kind in ("gaussian", "uniform", "poisson"):
        scale_o, scale_f = _channel_scales(series)
        if p.kind == "gaussian":
            noise_o = rng.standard_normal(n)
            noise_f = rng.standard_normal(n)
        elif p.kind == "uniform":
            noise_o = rng.uniform(-1.0, 1.0, n)
            noise_f = rng.uniform(-1.0, 1.0, n)
        else:
            noise_o = rng.poisson(1.0, n) - 1.0
            noise_f = rng.poisson(1.0, n) - 1.0
        return TimeSeries(
            omega=series.omega + p.epsilon * scale_o * noise_o,
            friction=series.friction + p.epsilon * scale_f * noise_f)
    if p.kind == "linear_trend":
        return TimeSeries(
            omega=series.omega.copy(),
            friction=series.friction + p.epsilon * np.arange(n, dtype=float))
    if p.kind == "amplitude_scaling":
        factor = 1.0 + p.epsilon
        return TimeSeries(omega=series.omega * factor,
                          friction=series.friction * factor)
    # missing_data
    n_drop = int(math.ceil(p.epsilon * n))
    if n - n_drop < MIN_SERIES_LEN:
        raise PerturbError(
            f"missing_data would leave {n - n_drop} samples, below the "
            f"pipeline minimum of {MIN_SERIES_LEN}")
    if n_drop == 0:
        return TimeSeries(series.omega.copy(), series.friction.copy())
    drop = rng.choice(n, size=n_drop, replace=False)
    keep = np.ones(n, dtype=bool)
    keep[drop] = False
    return TimeSeries(omega=series.omega[keep], friction=series.friction[keep])


@dataclass(frozen=True)
class Snr:
    """Signal-to-noise ratio in dB per channel; +inf for an untouched one."""

    friction_db: float
    omega_db: float


def snr(original: TimeSeries, perturbed: TimeSeries) -> Snr:
    """SNR = 10 log10(P(s) / P(s - p)) with P the mean square per sample.

    Both series must have equal length (sample-removing perturbations have
    no aligned noise signal, and no SNR).
    """
    if len(original) != len(perturbed):
        raise PerturbError("SNR needs equal-length series")

    def one(s: np.ndarray, p: np.ndarray) -> float:
        noise = s - p
        p_noise = float(noise @ noise)
        if p_noise == 0.0:
            return math.inf
        p_signal = float(s @ s)
        return 10.0 * math.log10(p_signal / p_noise)

    return Snr(friction_db=one(original.friction, perturbed.friction),
               omega_db=one(original.omega, perturbed.omega))


def _van_der_corput(index: int) -> float:
    """Base-2 van der Corput value in (0, 1) for index >= 1."""
    value, denom = 0.0, 1.0
    while index:
        denom *= 2.0
        value += (index & 1) / denom
        index >>= 1
    return value


def deterministic_strengths(epsilon: float, n_iters: int,
                            low_fraction: float = SWEEP_LOW_FRACTION,
                            ) -> list[float]:
    """Nested strength schedule in [low_fraction * epsilon, epsilon].

    The first entries are epsilon and low_fraction * epsilon; later entries
    fill the interior at van der Corput points, so the schedule for a small
    ``n_iters`` is a prefix of the schedule for a larger one.
    """
    if n_iters < 1:
        raise PerturbError("n_iters must be >= 1")
    if not 0 < low_fraction <= 1:
        raise PerturbError("low_fraction must be in (0, 1]")
    out = [epsilon]
    if n_iters >= 2:
        out.append(low_fraction * epsilon)
    lo = low_fraction * epsilon
    for i in range(2, n_iters):
        out.append(lo + (epsilon - lo) * _van_der_corput(i - 1))
    return out


def child_seed(seed: int, index: int) -> int:
    """Derived seed for envelope instance ``index`` (stable prefix scheme)."""
    return int(np.random.SeedSequence(
        (seed & (2**64 - 1), index)).generate_state(1)[0])


@dataclass(frozen=True)
class Envelope:
    """Componentwise histogram bounds over the perturbed copies."""

    lower: np.ndarray
    upper: np.ndarray
    n_iters: int

    def __post_init__(self) -> None:
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.shape != upper.shape or (lower > upper).any():
            raise PerturbError("envelope bounds are inconsistent")


def envelope_instances(p: Perturbation, n_iters: int) -> list[Perturbation]:
    """The perturbation applied on each envelope iteration.

    Random kinds keep epsilon and take child seed i; deterministic kinds keep
    the seed and walk the nested strength schedule.
    """
    if n_iters < 1:
        raise PerturbError("n_iters must be >= 1")
    if p.is_random:
        return [replace(p, seed=child_seed(p.seed, i)) for i in range(n_iters)]
    return [replace(p, epsilon=e)
            for e in deterministic_strengths(p.epsilon, n_iters)]


def build_envelope(series: TimeSeries, p: Perturbation, n_iters: int,
                   config: PipelineConfig, channel: str) -> Envelope:
    """Histogram envelope of ``channel`` ("pairs" or "jumps") under ``p``."""
    if channel not in ("pairs", "jumps"):
        raise PerturbError(f"unknown histogram channel {channel!r}")
    lower = upper = None
    for i, instance in enumerate(envelope_instances(p, n_iters)):
        try:
            summary = run_pipeline(apply(series, instance), config)
        except Exception as exc:
            raise EnvelopeError(f"envelope instance {i} failed: {exc}") from exc
        hist = summary.hist_pairs if channel == "pairs" else summary.hist_jumps
        bins = hist.bins
        if lower is None:
            lower, upper = bins.copy(), bins.copy()
        else:
            np.minimum(lower, bins, out=lower)
            np.maximum(upper, bins, out=upper)
    return Envelope(lower=lower, upper=upper, n_iters=n_iters)
