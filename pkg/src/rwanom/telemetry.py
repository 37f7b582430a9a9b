"""Synthetic reaction-wheel telemetry: status labels and series generation.

The friction torque of a reaction wheel is modelled per sample as

    f_k = f_dry_k * sign(omega_k) + f_visc * omega_k + v_k

with a piecewise-constant dry-friction level ``f_dry_k`` (mNm), a viscous
coefficient ``f_visc`` (mNm per rad/s), and i.i.d. Gaussian noise ``v_k``.
Anomalies deform this model:

* kind A — elevated mean dry friction (constant factor),
* kind B — elevated viscous coefficient (constant factor),
* kind C — matched pairs of dry-level jumps (+delta, then -delta after a dwell),
* kind D — isolated dry-level jumps of random magnitude and sign.

Urgency 1..3 scales the severity of each kind.  Healthy series still carry a
low rate of small background jumps so that "no anomaly" is not the same as
"no events".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

ANOMALY_KINDS = ("A", "B", "C", "D")
URGENCIES = (1, 2, 3)

#: Canonical label order used everywhere a status index is needed.
STATUS_LABELS = (
    "N",
    "A1", "A2", "A3",
    "B1", "B2", "B3",
    "C1", "C2", "C3",
    "D1", "D2", "D3",
)

#: Required minimum series length (twice the default regression window).
MIN_SERIES_LEN = 100


class TelemetryError(ValueError):
    """Invalid generation parameters."""


class DegenerateDesignError(ValueError):
    """Spin profile makes the regression design singular (e.g. constant omega)."""


@dataclass(frozen=True, order=True)
class Status:
    """Health status: nominal, or an anomaly kind with an urgency level.

    ``kind`` is ``None`` for nominal; urgency is ``0`` exactly in that case.
    """

    kind: str | None
    urgency: int

    def __post_init__(self) -> None:
        if self.kind is None:
            if self.urgency != 0:
                raise TelemetryError("nominal status must have urgency 0")
        else:
            if self.kind not in ANOMALY_KINDS:
                raise TelemetryError(f"unknown anomaly kind {self.kind!r}")
            if self.urgency not in URGENCIES:
                raise TelemetryError(f"urgency must be 1..3, got {self.urgency}")

    @property
    def label(self) -> str:
        return "N" if self.kind is None else f"{self.kind}{self.urgency}"

    @property
    def index(self) -> int:
        return STATUS_LABELS.index(self.label)

    @classmethod
    def nominal(cls) -> "Status":
        return cls(None, 0)

    @classmethod
    def from_label(cls, label: str) -> "Status":
        label = label.strip()
        if label == "N":
            return cls.nominal()
        if len(label) == 2 and label[0] in ANOMALY_KINDS and label[1] in "123":
            return cls(label[0], int(label[1]))
        raise TelemetryError(f"unknown status label {label!r}")


ALL_STATUSES = tuple(Status.from_label(lbl) for lbl in STATUS_LABELS)


@dataclass(frozen=True)
class SpinProfile:
    """Wheel-speed trajectory omega(k), in rad/s.

    Three shapes are supported: ``constant``, ``ramp`` (linear in k) and
    ``sinusoid``.  A constant profile yields a singular regression design
    (sign(omega) and omega are collinear) and is rejected at generation time.
    """

    shape: str = "sinusoid"
    omega0: float = 0.0
    slope: float = 0.0          # ramp: rad/s per sample
    amplitude: float = 150.0    # sinusoid: rad/s
    period: float = 500.0       # sinusoid: samples

    def __post_init__(self) -> None:
        if self.shape not in ("constant", "ramp", "sinusoid"):
            raise TelemetryError(f"unknown spin profile shape {self.shape!r}")
        if self.shape == "sinusoid":
            if not (self.amplitude > 0 and self.period > 0):
                raise TelemetryError("sinusoid needs positive amplitude and period")

    def omega(self, n_samples: int) -> np.ndarray:
        k = np.arange(n_samples, dtype=float)
        if self.shape == "constant":
            return np.full(n_samples, float(self.omega0))
        if self.shape == "ramp":
            return self.omega0 + self.slope * k
        return self.omega0 + self.amplitude * np.sin(2.0 * math.pi * k / self.period)


@dataclass(frozen=True)
class GenConfig:
    """Generation parameters shared by every series of a dataset.

    Background excursions model ordinary bearing transients present even on
    healthy wheels: the dry level steps up by ``|Normal(background_jump_mag,
    background_jump_spread)|`` and steps back down after a dwell, so a healthy
    series shows occasional small matched pairs but no net drift.
    """

    n_samples: int = 2400
    dry_base: float = 1.0             # mNm
    visc_base: float = 0.002          # mNm / (rad/s)
    noise_sigma: float = 0.008        # mNm
    spin: SpinProfile = field(default_factory=SpinProfile)
    background_jump_rate: float = 2.0   # expected events per series
    background_jump_mag: float = 0.06   # mNm
    background_jump_spread: float = 0.015
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_samples < MIN_SERIES_LEN:
            raise TelemetryError(
                f"n_samples must be >= {MIN_SERIES_LEN}, got {self.n_samples}")
        if self.dry_base <= 0 or self.visc_base <= 0:
            raise TelemetryError("dry_base and visc_base must be positive")
        if self.noise_sigma < 0:
            raise TelemetryError("noise_sigma must be non-negative")
        if self.background_jump_rate < 0:
            raise TelemetryError("background_jump_rate must be non-negative")
        if self.background_jump_mag <= 0 or self.background_jump_spread < 0:
            raise TelemetryError("background jump magnitude parameters invalid")


@dataclass(frozen=True)
class AnomalyProfile:
    """How a given status deforms the nominal friction model.

    Inactive mechanisms are left at their neutral values (factors 1.0, rates
    and magnitudes 0.0); the generator only injects what the status calls for.
    """

    status: Status
    dry_factor: float = 1.0         # kind A: multiplies the dry base level
    visc_factor: float = 1.0        # kind B: multiplies the viscous coefficient
    pair_jump_mag: float = 0.0      # kind C: nominal +delta of a matched pair
    pair_rate: float = 0.0          # kind C: expected pairs per series
    jump_mean: float = 0.0          # kind D: centre of the |jump| range
    jump_spread: float = 0.0        # kind D: half-width; |jump| is uniform
    jump_rate: float = 0.0          # kind D: expected jumps per series

    def __post_init__(self) -> None:
        if self.dry_factor < 1.0 or self.visc_factor < 1.0:
            raise TelemetryError("severity factors must be >= 1")
        if min(self.pair_jump_mag, self.pair_rate, self.jump_mean,
               self.jump_spread, self.jump_rate) < 0:
            raise TelemetryError("rates and magnitudes must be non-negative")
        kind = self.status.kind
        if kind == "A" and self.dry_factor <= 1.0:
            raise TelemetryError("kind A requires dry_factor > 1")
        if kind == "B" and self.visc_factor <= 1.0:
            raise TelemetryError("kind B requires visc_factor > 1")
        if kind == "C" and not (self.pair_jump_mag > 0 and self.pair_rate > 0):
            raise TelemetryError("kind C requires positive pair magnitude and rate")
        if kind == "D" and not (self.jump_mean > 0 and self.jump_rate > 0):
            raise TelemetryError("kind D requires positive jump mean and rate")


# Severity tables.  A and B scale their coefficient by (1 + 0.2 * urgency).
# C pair magnitudes sit below the D jump range so the two event anomalies
# occupy disjoint histogram regions; D magnitudes are drawn uniformly from
# [mean - spread, mean + spread] so that two D jumps rarely mimic a matched
# pair (matching requires nearly equal magnitudes).
_SEVERITY_STEP = 0.20
_PAIR_MAGNITUDES = {1: 0.18, 2: 0.40, 3: 0.65}
_JUMP_MEANS = {1: 0.86, 2: 1.05, 3: 1.30}
_JUMP_SPREADS = {1: 0.08, 2: 0.10, 3: 0.15}
_EVENT_RATE = 5.0
#: Relative jitter applied to each matched-pair magnitude.
_PAIR_JITTER = 0.05


def profile_for(status: Status) -> AnomalyProfile:
    """Default anomaly profile for a status label."""
    if status.kind is None:
        return AnomalyProfile(status)
    u = status.urgency
    if status.kind == "A":
        return AnomalyProfile(status, dry_factor=1.0 + _SEVERITY_STEP * u)
    if status.kind == "B":
        return AnomalyProfile(status, visc_factor=1.0 + _SEVERITY_STEP * u)
    if status.kind == "C":
        return AnomalyProfile(status, pair_jump_mag=_PAIR_MAGNITUDES[u],
                              pair_rate=_EVENT_RATE)
    return AnomalyProfile(status, jump_mean=_JUMP_MEANS[u],
                          jump_spread=_JUMP_SPREADS[u], jump_rate=_EVENT_RATE)


@dataclass(frozen=True)
class TimeSeries:
    """One telemetry record: wheel speed (rad/s) and friction torque (mNm)."""

    omega: np.ndarray
    friction: np.ndarray

    def __post_init__(self) -> None:
        omega = np.asarray(self.omega, dtype=float)
        friction = np.asarray(self.friction, dtype=float)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "friction", friction)
        if omega.ndim != 1 or friction.ndim != 1:
            raise TelemetryError("series channels must be one-dimensional")
        if omega.shape != friction.shape:
            raise TelemetryError("omega and friction must have equal length")
        if not (np.isfinite(omega).all() and np.isfinite(friction).all()):
            raise TelemetryError("series channels must be finite")

    def __len__(self) -> int:
        return int(self.omega.shape[0])


@dataclass(frozen=True)
class GroundTruth:
    """Per-sample true dry level plus the injected events.

    ``events`` is a sorted tuple of ``(k, delta)``: at sample ``k`` the dry
    level moved by ``delta`` mNm.  ``pair_events`` lists the subset injected
    as matched pairs (anomaly C pairs and background excursions), as
    ``(k_up, k_down, delta)``.
    """

    dry_true: np.ndarray
    events: tuple[tuple[int, float], ...]
    pair_events: tuple[tuple[int, int, float], ...]


# Event placement: events are kept at least one regression window away from
# the series ends and from each other so that each flat interval is long
# enough to estimate.  A matched pair occupies [k_up, k_down]; its dwell is
# drawn uniformly from DWELL_SPAN (in samples).  Background excursions are
# themselves small matched pairs (the dry level returns to its base), so a
# healthy wheel shows transient events but no net drift.
_EDGE_MARGIN = 70
_EVENT_GAP = 130
_DWELL_SPAN = (150, 230)
#: Background excursions dwell briefly so an undetected one barely moves the
#: mean dry level of the interval it sits in.
_BG_DWELL_SPAN = (60, 110)
_MAX_PAIRS = 5
_MAX_JUMPS = 8
_MIN_JUMPS = 4
_MAX_BACKGROUND = 6
#: Bound on |time-weighted mean dry offset| from D jumps; signs are re-drawn
#: (best effort) until the series mean stays within the band, so an unlucky
#: run of same-sign jumps cannot masquerade as a persistent level shift.
_JUMP_MEAN_BAND = 0.30
_SIGN_TRIES = 64


def _place_blocks(rng: np.random.Generator, n_samples: int,
                  spans: list[int]) -> list[int] | None:
    """Place blocks of the given spans, in order, with gaps >= _EVENT_GAP.

    Returns the start sample of each block, or None if they do not fit.
    Each block is confined to its own equal-length slot and jittered inside
    the slot's slack, which both guarantees the spacing and spreads events
    over the whole series instead of letting them cluster at one end.
    """
    n_blocks = len(spans)
    if n_blocks == 0:
        return []
    usable = n_samples - 2 * _EDGE_MARGIN
    slot = usable // n_blocks
    starts: list[int] = []
    for i, span in enumerate(spans):
        slack = slot - span - _EVENT_GAP
        if slack < 0:
            return None
        starts.append(_EDGE_MARGIN + i * slot + int(rng.uniform(0.0, slack)))
    return starts


def _sample_count(rng: np.random.Generator, rate: float, at_least: int,
                  at_most: int) -> int:
    if rate <= 0:
        return max(0, at_least)
    return max(at_least, min(at_most, int(rng.poisson(rate))))


def _pick_jump_signs(rng: np.random.Generator, mags: np.ndarray,
                     weights: np.ndarray) -> np.ndarray:
    """Random +/-1 signs, re-drawn to keep the weighted mean offset small.

    ``weights`` is the fraction of the series each jump persists for; the
    best draw (smallest |sum of sign * mag * weight|) wins if no draw lands
    inside the band.
    """
    best = None
    best_off = np.inf
    for _ in range(_SIGN_TRIES):
        signs = np.where(rng.random(mags.shape[0]) < 0.5, -1.0, 1.0)
        off = abs(float(np.sum(signs * mags * weights)))
        if off < best_off:
            best, best_off = signs, off
        if off <= _JUMP_MEAN_BAND:
            break
    return best


def generate_series(profile: AnomalyProfile, config: GenConfig,
                    ) -> tuple[TimeSeries, Status, GroundTruth]:
    """Generate one synthetic series for the given status.

    Deterministic in ``config.seed``: the same (profile, config) always
    yields bit-identical arrays.  Raises :class:`DegenerateDesignError` when
    the spin profile cannot support the two-regressor friction fit (constant
    omega, or a profile that never changes the sign/speed relationship).
    """
    rng = np.random.default_rng(np.random.SeedSequence(config.seed & (2**64 - 1)))
    n = config.n_samples
    omega = config.spin.omega(n)
    _check_design(omega)

    status = profile.status
    # --- event schedule -------------------------------------------------
    n_pairs = 0
    n_jumps = 0
    if status.kind == "C":
        n_pairs = _sample_count(rng, profile.pair_rate, 1, _MAX_PAIRS)
    if status.kind == "D":
        n_jumps = _sample_count(rng, profile.jump_rate, _MIN_JUMPS, _MAX_JUMPS)
    n_background = _sample_count(rng, config.background_jump_rate, 0,
                                 _MAX_BACKGROUND)

    while True:
        dwells = [int(rng.integers(_DWELL_SPAN[0], _DWELL_SPAN[1] + 1))
                  for _ in range(n_pairs)]
        dwells += [int(rng.integers(_BG_DWELL_SPAN[0], _BG_DWELL_SPAN[1] + 1))
                   for _ in range(n_background)]
        # Block layout: C pairs, then D jumps, then background pairs.
        spans = dwells[:n_pairs] + [0] * n_jumps + dwells[n_pairs:]
        order = rng.permutation(len(spans))
        starts = _place_blocks(rng, n, [spans[i] for i in order])
        if starts is not None:
            break
        # Too crowded: shed background events first, then anomaly events
        # (but never below the minimum for an event-driven anomaly).
        if n_background > 0:
            n_background -= 1
        elif n_jumps > _MIN_JUMPS:
            n_jumps -= 1
        elif n_pairs > 1:
            n_pairs -= 1
        else:
            raise TelemetryError("series too short for the requested events")

    # Undo the shuffle: starts[i] is the start of block order[i].
    block_start = {int(order[i]): starts[i] for i in range(len(order))}

    events: list[tuple[int, float]] = []
    pair_events: list[tuple[int, int, float]] = []
    for b in range(n_pairs):
        k_up = block_start[b]
        k_down = k_up + dwells[b]
        delta = profile.pair_jump_mag * (1.0 + _PAIR_JITTER * rng.standard_normal())
        delta = max(delta, 0.25 * profile.pair_jump_mag)
        events.append((k_up, delta))
        events.append((k_down, -delta))
        pair_events.append((k_up, k_down, delta))
    if n_jumps:
        ks = np.array([block_start[b] for b in range(n_pairs, n_pairs + n_jumps)])
        mags = rng.uniform(profile.jump_mean - profile.jump_spread,
                           profile.jump_mean + profile.jump_spread, size=n_jumps)
        signs = _pick_jump_signs(rng, mags, (n - ks) / n)
        for k, mag, sign in zip(ks, mags, signs):
            events.append((int(k), float(sign * mag)))
    for i, b in enumerate(range(n_pairs + n_jumps,
                                n_pairs + n_jumps + n_background)):
        k_up = block_start[b]
        k_down = k_up + dwells[n_pairs + i]
        mag = abs(config.background_jump_mag
                  + config.background_jump_spread * rng.standard_normal())
        mag = max(mag, 0.25 * config.background_jump_mag)
        events.append((k_up, mag))
        events.append((k_down, -mag))
        pair_events.append((k_up, k_down, mag))
    events.sort()

    # --- assemble channels ----------------------------------------------
    dry_true = np.full(n, config.dry_base * profile.dry_factor)
    for k, delta in events:
        dry_true[k:] += delta
    visc = config.visc_base * profile.visc_factor
    noise = (rng.normal(0.0, config.noise_sigma, size=n)
             if config.noise_sigma > 0 else np.zeros(n))
    friction = dry_true * np.sign(omega) + visc * omega + noise
    series = TimeSeries(omega=omega, friction=friction)
    truth = GroundTruth(dry_true=dry_true, events=tuple(events),
                        pair_events=tuple(pair_events))
    return series, status, truth


def _check_design(omega: np.ndarray, window: int = MIN_SERIES_LEN // 2) -> None:
    """Reject spin profiles whose regression design is singular somewhere.

    Every aligned window of ``window`` samples must have linearly independent
    regressors sign(omega) and omega.
    """
    s = np.sign(omega)
    n = omega.shape[0]
    for start in range(0, n - window + 1, window):
        sw = s[start:start + window]
        ow = omega[start:start + window]
        a11 = float(sw @ sw)
        a12 = float(sw @ ow)
        a22 = float(ow @ ow)
        det = a11 * a22 - a12 * a12
        scale = max(a11, a22, 1e-300)
        if det <= 1e-12 * scale * scale:
            raise DegenerateDesignError(
                "spin profile gives a degenerate regression design "
                f"in window starting at sample {start}")


def default_mix() -> dict[str, int]:
    """Per-status series counts for a full synthetic dataset."""
    kind_totals = {"A": 342, "B": 435, "C": 396, "D": 438}
    mix = {"N": 1000}
    for kind, total in kind_totals.items():
        base = total // 3
        extra = total - 3 * base
        for u in URGENCIES:
            mix[f"{kind}{u}"] = base + (1 if u <= extra else 0)
    return mix


def generate_dataset(config: GenConfig, mix: dict[str, int] | None = None,
                     ) -> list[tuple[int, TimeSeries, Status, GroundTruth]]:
    """Generate a labelled dataset: one seeded series per (status, replicate).

    Series ids are assigned in label order then replicate order; each series
    gets an independent child seed derived from ``config.seed`` so that any
    single series can be regenerated without the rest.
    """
    mix = default_mix() if mix is None else mix
    out = []
    series_id = 0
    for label in STATUS_LABELS:
        count = int(mix.get(label, 0))
        if count < 0:
            raise TelemetryError(f"negative count for {label}")
        profile = profile_for(Status.from_label(label))
        for _ in range(count):
            child_seed = int(np.random.SeedSequence(
                (config.seed & (2**64 - 1), series_id)).generate_state(1)[0])
            cfg = replace(config, seed=child_seed)
            series, status, truth = generate_series(profile, cfg)
            out.append((series_id, series, status, truth))
            series_id += 1
    return out
