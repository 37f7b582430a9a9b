"""Robustness sweeps and global-constraint certification.

Local robustness asks: for a correctly-classified series, does the relevant
network keep its class over the whole histogram envelope produced by a
perturbation?  The sweep answers this with the complete verifier for every
(evaluation bucket, perturbation kind, strength) cell and also tracks the
weaker binary question - does the network at least stay on the right side of
"anomaly vs no anomaly"?

Global certification replaces the per-series envelope with a class-level
region synthesised from training histograms (componentwise box, weighted-sum
interval, sliding window-mean bands) and asks the verifier to prove that no
point of the region reaches any other class.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifier import ClassifierBundle
from .lp import LinearConstraint
from .mlp import MlpModel, classify_batch
from .perturb import (KINDS, EnvelopeError, Perturbation, apply,
                      build_envelope, child_seed, snr)
from .telemetry import Status, TimeSeries
from .verifier import InputRegion, verify_query

#: Evaluation buckets: per-class cells for the two networks plus a
#: "no anomaly of this kind" control group each.
PAIR_BUCKETS = ("C1", "C2", "C3", "no_pair")
JUMP_BUCKETS = ("D1", "D2", "D3", "no_jump")
ALL_BUCKETS = PAIR_BUCKETS + JUMP_BUCKETS

#: Statuses admitted to the control buckets (correctly classified, and the
#: relevant network must output class 0 on them at inference time).
NO_PAIR_STRATA = ("D1", "D2", "D3", "A1", "A2", "N")
NO_JUMP_STRATA = ("A1", "A2", "N")


class ProtocolError(ValueError):
    """Evaluation protocol cannot be satisfied or is malformed."""


@dataclass(frozen=True)
class SweepProtocol:
    """Sampling counts, ladder control, and envelope size for one sweep."""

    anomaly_count: int = 60          # series per C1..C3 / D1..D3 bucket
    no_pair_count: int = 10          # per stratum of the no-pair bucket
    no_jump_count: int = 20          # per stratum of the no-jump bucket
    n_iters: int = 10                # envelope instances per cell entry
    ladder_start: float = 0.001
    ladder_ratio: float = 2.0
    ladder_max_rungs: int = 30
    snr_floor_db: float = 35.0
    snr_floor_amplitude_db: float = 20.0
    missing_data_grid: tuple[float, ...] = tuple(
        float(e) for e in np.geomspace(0.001, 0.5, 6))
    calibration_count: int = 20      # series used for ladder SNR medians

    def __post_init__(self) -> None:
        if min(self.anomaly_count, self.no_pair_count, self.no_jump_count,
               self.n_iters, self.calibration_count) < 1:
            raise ProtocolError("protocol counts must be >= 1")
        if self.ladder_start <= 0 or self.ladder_ratio <= 1:
            raise ProtocolError("ladder must start positive and grow")

    def bucket_expected(self, bucket: str) -> int:
        if bucket in ("no_pair", "no_jump"):
            return 0
        return int(bucket[1])

    def bucket_channel(self, bucket: str) -> str:
        return "pairs" if bucket in PAIR_BUCKETS else "jumps"


@dataclass(frozen=True)
class EvalRecord:
    """One candidate series for the evaluation set."""

    series_id: int
    actual: Status
    predicted: Status


def sample_evaluation_set(records: list[EvalRecord],
                          protocol: SweepProtocol,
                          seed: int) -> dict[str, list[int]]:
    """Stratified draw of correctly-classified series ids per bucket.

    Raises :class:`ProtocolError` naming the first stratum that lacks
    members.  Sampling is deterministic in ``seed`` and independent of the
    order of ``records``.
    """
    correct: dict[str, list[int]] = {}
    for rec in records:
        if rec.actual == rec.predicted:
            correct.setdefault(rec.actual.label, []).append(rec.series_id)

    def draw(label: str, count: int, rng: np.random.Generator) -> list[int]:
        pool = sorted(correct.get(label, []))
        if len(pool) < count:
            raise ProtocolError(
                f"stratum {label}: need {count} correctly-classified series, "
                f"have {len(pool)}")
        picked = rng.permutation(len(pool))[:count]
        return sorted(int(pool[i]) for i in picked)

    out: dict[str, list[int]] = {}
    for b_idx, bucket in enumerate(ALL_BUCKETS):
        rng = np.random.default_rng(
            np.random.SeedSequence((seed & (2**64 - 1), 101, b_idx)))
        if bucket in ("no_pair", "no_jump"):
            strata = NO_PAIR_STRATA if bucket == "no_pair" else NO_JUMP_STRATA
            count = (protocol.no_pair_count if bucket == "no_pair"
                     else protocol.no_jump_count)
            ids: list[int] = []
            for label in strata:
                ids.extend(draw(label, count, rng))
            out[bucket] = ids
        else:
            out[bucket] = draw(bucket, protocol.anomaly_count, rng)
    return out


def strength_ladder(kind: str, calibration: list[TimeSeries],
                    protocol: SweepProtocol, seed: int) -> list[float]:
    """Strengths for one perturbation kind.

    ``missing_data`` uses a fixed geometric grid (sample removal has no
    aligned SNR).  Every other kind climbs geometrically from
    ``ladder_start`` and stops before the first rung whose median friction
    SNR over the calibration series falls below the floor (20 dB for
    amplitude scaling, 35 dB otherwise).  The ladder may be empty: a kind
    whose weakest strength already degrades the signal past the floor is
    not swept at all on this data scale.
    """
    if kind not in KINDS:
        raise ProtocolError(f"unknown perturbation kind {kind!r}")
    if kind == "missing_data":
        return list(protocol.missing_data_grid)
    if not calibration:
        raise ProtocolError("ladder calibration needs at least one series")
    floor = (protocol.snr_floor_amplitude_db if kind == "amplitude_scaling"
             else protocol.snr_floor_db)
    ladder: list[float] = []
    for rung in range(protocol.ladder_max_rungs):
        eps = protocol.ladder_start * protocol.ladder_ratio ** rung
        medians = []
        for pos, series in enumerate(calibration):
            p = Perturbation(kind, eps,
                             seed=child_seed(seed, rung * 10007 + pos))
            medians.append(snr(series, apply(series, p)).friction_db)
        if np.median(medians) < floor:
            break
        ladder.append(eps)
    return ladder


def cell_seed(seed: int, kind: str, rung: int, series_id: int) -> int:
    """Perturbation seed for one sweep cell entry.

    Structured so a cell's randomness depends only on the root seed, the
    kind (by its fixed global index), the ladder rung, and the series -
    never on which subset of kinds or buckets is being swept.
    """
    return int(np.random.SeedSequence(
        (seed & (2**64 - 1), KINDS.index(kind), rung, series_id),
    ).generate_state(1)[0])


SWEEP_REPORT_FORMAT = "rwanom-sweep-v1"

#: JSON schema for the sweep report (draft-07 subset).
SWEEP_REPORT_SCHEMA: dict = {
    "type": "object",
    "required": ["format", "seed", "n_iters", "kinds", "ladders", "buckets",
                 "cells"],
    "properties": {
        "format": {"const": SWEEP_REPORT_FORMAT},
        "seed": {"type": "integer"},
        "n_iters": {"type": "integer", "minimum": 1},
        "kinds": {"type": "array", "items": {"enum": list(KINDS)}},
        "ladders": {
            "type": "object",
            "additionalProperties": {
                "type": "array", "items": {"type": "number"}},
        },
        "buckets": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["expected_class", "channel", "series_ids"],
                "properties": {
                    "expected_class": {"type": "integer",
                                       "minimum": 0, "maximum": 3},
                    "channel": {"enum": ["pairs", "jumps"]},
                    "series_ids": {"type": "array",
                                   "items": {"type": "integer"}},
                },
            },
        },
        "cells": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["bucket", "kind", "epsilon", "n_series",
                             "n_robust", "n_binary_robust", "n_errors",
                             "robust_rate", "binary_rate",
                             "counterexample_classes"],
                "properties": {
                    "bucket": {"enum": list(ALL_BUCKETS)},
                    "kind": {"enum": list(KINDS)},
                    "epsilon": {"type": "number", "exclusiveMinimum": 0},
                    "n_series": {"type": "integer", "minimum": 0},
                    "n_robust": {"type": "integer", "minimum": 0},
                    "n_binary_robust": {"type": "integer", "minimum": 0},
                    "n_errors": {"type": "integer", "minimum": 0},
                    "robust_rate": {"type": "number",
                                    "minimum": 0, "maximum": 1},
                    "binary_rate": {"type": "number",
                                    "minimum": 0, "maximum": 1},
                    "counterexample_classes": {
                        "type": "object",
                        "additionalProperties": {"type": "integer"},
                    },
                },
            },
        },
    },
}


def run_sweep(series_by_id: dict[int, TimeSeries],
              eval_sets: dict[str, list[int]],
              bundle: ClassifierBundle,
              kinds: list[str],
              ladders: dict[str, list[float]],
              protocol: SweepProtocol,
              seed: int) -> dict:
    """Full local-robustness sweep; returns the report document.

    For every (bucket, kind, strength) cell and every series in the bucket,
    builds the histogram envelope, then runs all three adverse reachability
    queries.  A series is robust when none is Sat, and binary-robust when no
    Sat query lands on the other side of the anomaly/no-anomaly divide.
    Envelope failures (e.g. a perturbation shrinking a series below the
    pipeline minimum) count as neither, under ``n_errors``.
    """
    nets = {"pairs": bundle.pair_net, "jumps": bundle.jump_net}
    cells = []
    for bucket in ALL_BUCKETS:
        ids = eval_sets.get(bucket, [])
        if not ids:
            continue
        expected = protocol.bucket_expected(bucket)
        channel = protocol.bucket_channel(bucket)
        net = nets[channel]
        for kind in kinds:
            for rung, eps in enumerate(ladders[kind]):
                n_robust = n_binary = n_errors = 0
                counterexamples: dict[str, int] = {}
                for series_id in ids:
                    p = Perturbation(kind, eps,
                                     seed=cell_seed(seed, kind, rung,
                                                    series_id))
                    try:
                        env = build_envelope(series_by_id[series_id], p,
                                             protocol.n_iters,
                                             bundle.pipeline, channel)
                    except EnvelopeError:
                        n_errors += 1
                        continue
                    region = InputRegion(env.lower, env.upper)
                    sat_classes = []
                    for target in range(4):
                        if target == expected:
                            continue
                        verdict = verify_query(net, region, target)
                        if verdict.sat:
                            sat_classes.append(target)
                    if not sat_classes:
                        n_robust += 1
                        n_binary += 1
                    else:
                        for c in sat_classes:
                            key = str(c)
                            counterexamples[key] = counterexamples.get(key, 0) + 1
                        if expected == 0:
                            other_side = [c for c in sat_classes if c != 0]
                        else:
                            other_side = [c for c in sat_classes if c == 0]
                        if not other_side:
                            n_binary += 1
                n_ok = len(ids) - n_errors
                cells.append({
                    "bucket": bucket,
                    "kind": kind,
                    "epsilon": eps,
                    "n_series": len(ids),
                    "n_robust": n_robust,
                    "n_binary_robust": n_binary,
                    "n_errors": n_errors,
                    "robust_rate": (n_robust / n_ok) if n_ok else 0.0,
                    "binary_rate": (n_binary / n_ok) if n_ok else 0.0,
                    "counterexample_classes": counterexamples,
                })
    buckets_doc = {
        b: {"expected_class": protocol.bucket_expected(b),
            "channel": protocol.bucket_channel(b),
            "series_ids": list(eval_sets.get(b, []))}
        for b in ALL_BUCKETS if b in eval_sets}
    return {
        "format": SWEEP_REPORT_FORMAT,
        "seed": seed,
        "n_iters": protocol.n_iters,
        "kinds": list(kinds),
        "ladders": {k: [float(e) for e in ladders[k]] for k in kinds},
        "buckets": buckets_doc,
        "cells": cells,
    }


# ---------------------------------------------------------------------------
# Global constraints and certification


def weighted_sum(bins: np.ndarray) -> float:
    """Sum of h_i * i with 1-based bin positions (a histogram 'centre')."""
    bins = np.asarray(bins, dtype=float)
    return float(bins @ np.arange(1, bins.shape[0] + 1))


def window_means(bins: np.ndarray, k: int) -> np.ndarray:
    """Means of the length-k sliding windows; result has length M - k + 1."""
    bins = np.asarray(bins, dtype=float)
    m = bins.shape[0]
    if not 1 <= k <= m:
        raise ProtocolError(f"window size {k} invalid for {m} bins")
    prefix = np.concatenate([[0.0], np.cumsum(bins)])
    return (prefix[k:] - prefix[:-k]) / k


@dataclass(frozen=True)
class GlobalConstraintSet:
    """Class-level input region synthesised from member histograms.

    ``upper`` bounds each bin (lower bound 0), ``ws_interval`` brackets the
    weighted sum, and ``window_bands`` holds (k, lower, upper) per window
    size.  ``excluded_ids`` lists members outside the trimmed weighted-sum
    interval; they did not contribute to the box or the bands.
    """

    class_index: int
    upper: np.ndarray
    ws_interval: tuple[float, float]
    window_bands: tuple[tuple[int, np.ndarray, np.ndarray], ...]
    member_ids: tuple[int, ...]
    excluded_ids: tuple[int, ...]

    @property
    def exclusion_fraction(self) -> float:
        total = len(self.member_ids) + len(self.excluded_ids)
        return len(self.excluded_ids) / total if total else 0.0

    def to_region(self) -> InputRegion:
        m = self.upper.shape[0]
        positions = np.arange(1, m + 1, dtype=float)
        cons = [LinearConstraint(positions, ">=", self.ws_interval[0]),
                LinearConstraint(positions, "<=", self.ws_interval[1])]
        for k, lo_band, hi_band in self.window_bands:
            for pos in range(lo_band.shape[0]):
                coeffs = np.zeros(m)
                coeffs[pos:pos + k] = 1.0 / k
                cons.append(LinearConstraint(coeffs, ">=", float(lo_band[pos])))
                cons.append(LinearConstraint(coeffs, "<=", float(hi_band[pos])))
        return InputRegion(lower=np.zeros(m), upper=self.upper.copy(),
                           linear=tuple(cons))


def synthesize_constraints(hists: np.ndarray, ids: list[int], class_index: int,
                           ws_trim: tuple[float, float] = (0.01, 0.99),
                           window_sizes: tuple[int, ...] = (3, 4),
                           ) -> GlobalConstraintSet:
    """Build the class region from member histograms.

    The weighted-sum interval is the trimmed quantile range over all
    members; members falling outside it are excluded, and the box and
    window bands are computed over the remainder.
    """
    hists = np.asarray(hists, dtype=float)
    if hists.ndim != 2 or hists.shape[0] == 0:
        raise ProtocolError("need a non-empty (n, bins) histogram array")
    if hists.shape[0] != len(ids):
        raise ProtocolError("ids must align with histograms")
    ws = np.array([weighted_sum(h) for h in hists])
    lo_q, hi_q = (float(np.quantile(ws, ws_trim[0])),
                  float(np.quantile(ws, ws_trim[1])))
    included = (ws >= lo_q) & (ws <= hi_q)
    if not included.any():
        raise ProtocolError("weighted-sum trim excluded every member")
    kept = hists[included]
    bands = []
    for k in window_sizes:
        per = np.array([window_means(h, k) for h in kept])
        bands.append((int(k), per.min(axis=0), per.max(axis=0)))
    return GlobalConstraintSet(
        class_index=class_index,
        upper=kept.max(axis=0),
        ws_interval=(lo_q, hi_q),
        window_bands=tuple(bands),
        member_ids=tuple(int(i) for i, ok in zip(ids, included) if ok),
        excluded_ids=tuple(int(i) for i, ok in zip(ids, included) if not ok),
    )


@dataclass(frozen=True)
class CertificationResult:
    """Outcome of certifying one class region against a network."""

    class_index: int
    certified: bool
    counterexample: np.ndarray | None
    counterexample_class: int | None
    lp_calls: int
    nodes: int


def certify_global(net: MlpModel, constraints: GlobalConstraintSet,
                   ) -> CertificationResult:
    """Prove (or refute) that the whole class region maps to its class."""
    region = constraints.to_region()
    lp_calls = nodes = 0
    for target in range(net.n_classes):
        if target == constraints.class_index:
            continue
        verdict = verify_query(net, region, target)
        lp_calls += verdict.stats.lp_calls
        nodes += verdict.stats.nodes
        if verdict.sat:
            return CertificationResult(
                class_index=constraints.class_index, certified=False,
                counterexample=verdict.witness,
                counterexample_class=target,
                lp_calls=lp_calls, nodes=nodes)
    return CertificationResult(class_index=constraints.class_index,
                               certified=True, counterexample=None,
                               counterexample_class=None,
                               lp_calls=lp_calls, nodes=nodes)


def propagate_box(region: InputRegion,
                  max_rounds: int = 32) -> tuple[np.ndarray, np.ndarray]:
    """Tightest per-coordinate bounds implied by the box and linear cuts.

    Interval constraint propagation: each cut, combined with the current
    bounds of the other coordinates, implies a bound on every coordinate
    it mentions; rounds repeat until nothing moves.  Every feasible point
    satisfies the result, so it is a sound (and often far smaller)
    replacement for the raw box when proposing samples.  Raises
    :class:`ProtocolError` if propagation proves the region empty.
    """
    lo = np.asarray(region.lower, dtype=float).copy()
    hi = np.asarray(region.upper, dtype=float).copy()
    for _ in range(max_rounds):
        moved = False
        for con in region.linear:
            c = con.coeffs
            nz = c != 0.0
            lo_terms = np.where(c > 0, c * lo, c * hi)   # min of c_j * x_j
            hi_terms = np.where(c > 0, c * hi, c * lo)   # max of c_j * x_j
            lo_sum = float(lo_terms.sum())
            hi_sum = float(hi_terms.sum())
            with np.errstate(divide="ignore", invalid="ignore"):
                if con.rel in ("<=", "=="):
                    bound = (con.rhs - lo_sum + lo_terms) / c
                    new_hi = np.where(nz & (c > 0), np.minimum(hi, bound), hi)
                    new_lo = np.where(nz & (c < 0), np.maximum(lo, bound), lo)
                    moved |= (new_hi < hi - 1e-15).any() or \
                             (new_lo > lo + 1e-15).any()
                    lo, hi = new_lo, new_hi
                if con.rel in (">=", "=="):
                    bound = (con.rhs - hi_sum + hi_terms) / c
                    new_lo = np.where(nz & (c > 0), np.maximum(lo, bound), lo)
                    new_hi = np.where(nz & (c < 0), np.minimum(hi, bound), hi)
                    moved |= (new_hi < hi - 1e-15).any() or \
                             (new_lo > lo + 1e-15).any()
                    lo, hi = new_lo, new_hi
        if (lo > hi + 1e-9).any():
            raise ProtocolError("constraint propagation proved the region "
                                "empty")
        np.minimum(lo, hi, out=lo)
        if not moved:
            break
    return lo, hi


_EQUALITY_GAP = 1e-9


def _forced_equalities(region: InputRegion, lo: np.ndarray, hi: np.ndarray,
                       ) -> tuple[np.ndarray, np.ndarray,
                                  list[LinearConstraint]]:
    """Separate the region's cuts into forced equalities and inequalities.

    Opposing ``<=``/``>=`` rows over the same coefficient vector whose
    right-hand sides agree to within a hair act as one equality at their
    midpoint; histogram regions produce such pairs routinely (a window
    band over the whole class support pins the window sum to one).
    Coordinates pinned by the propagated box become unit-row equalities.
    Raises :class:`ProtocolError` when a pair is contradictory.
    """
    eq_rows: list[np.ndarray] = []
    eq_rhs: list[float] = []
    ineqs: list[LinearConstraint] = []
    tightest: dict[bytes, dict[str, LinearConstraint]] = {}
    order: list[bytes] = []
    for con in region.linear:
        if con.rel == "==":
            eq_rows.append(con.coeffs)
            eq_rhs.append(con.rhs)
            continue
        key = con.coeffs.tobytes()
        if key not in tightest:
            tightest[key] = {}
            order.append(key)
        prev = tightest[key].get(con.rel)
        if prev is None or (con.rel == "<=" and con.rhs < prev.rhs) \
                or (con.rel == ">=" and con.rhs > prev.rhs):
            tightest[key][con.rel] = con
    for key in order:
        le = tightest[key].get("<=")
        ge = tightest[key].get(">=")
        if le is not None and ge is not None:
            gap = le.rhs - ge.rhs
            if gap < -_EQUALITY_GAP:
                raise ProtocolError("contradictory linear cuts leave the "
                                    "region empty")
            if gap <= _EQUALITY_GAP:
                eq_rows.append(le.coeffs)
                eq_rhs.append(0.5 * (le.rhs + ge.rhs))
                continue
        ineqs.extend(c for c in (le, ge) if c is not None)
    pinned = hi - lo <= 1e-12 * np.maximum(1.0, np.abs(hi))
    for i in np.flatnonzero(pinned):
        row = np.zeros(region.dim)
        row[i] = 1.0
        eq_rows.append(row)
        eq_rhs.append(0.5 * (lo[i] + hi[i]))
    if eq_rows:
        return np.array(eq_rows), np.array(eq_rhs), ineqs
    return np.empty((0, region.dim)), np.empty(0), ineqs


def rejection_sample_region(region: InputRegion, count: int, seed: int,
                            max_draws: int = 100_000_000) -> np.ndarray:
    """Uniform samples from the region, by rejection inside its affine hull.

    Linear cuts often force part of the region onto an affine subspace
    (paired bands with equal bounds, coordinates pinned to a point); a
    plain box proposal then accepts nothing, because the region has zero
    volume in the ambient space.  Proposals are therefore drawn uniformly
    from a box inside the affine hull of the forced equalities — an
    orthonormal parametrisation, so accepted points are uniform over the
    region with respect to the volume of its own dimension — and kept
    only if they satisfy every remaining cut.  Used to spot-check
    certified regions with concrete points.  Raises
    :class:`ProtocolError` if the acceptance rate is too low to collect
    ``count`` points within ``max_draws`` draws.
    """
    lo, hi = propagate_box(region)
    a_eq, b_eq, ineqs = _forced_equalities(region, lo, hi)
    rng = np.random.default_rng(np.random.SeedSequence(seed & (2**64 - 1)))
    kept: list[np.ndarray] = []
    drawn = 0
    batch = max(1024, min(65536, count * 4))

    if a_eq.shape[0]:
        origin, *_ = np.linalg.lstsq(a_eq, b_eq, rcond=None)
        if np.max(np.abs(a_eq @ origin - b_eq)) > _EQUALITY_GAP:
            raise ProtocolError("contradictory linear cuts leave the region "
                                "empty")
        svals = np.linalg.svd(a_eq, compute_uv=False)
        rank = int((svals > svals[0] * 1e-12).sum())
        basis = np.linalg.svd(a_eq)[2][rank:]          # orthonormal rows
        if basis.shape[0] == 0:                        # a single point
            pts = np.tile(origin, (count, 1))
            if _satisfies(pts[:1], region, a_eq, b_eq, ineqs)[0]:
                return pts
            raise ProtocolError("rejection sampling accepted 0/"
                                f"{count} after 0 draws")
        dev_lo, dev_hi = lo - origin, hi - origin
        t_lo = np.where(basis > 0, basis * dev_lo, basis * dev_hi).sum(axis=1)
        t_hi = np.where(basis > 0, basis * dev_hi, basis * dev_lo).sum(axis=1)
        while len(kept) < count:
            if drawn >= max_draws:
                raise ProtocolError(
                    f"rejection sampling accepted {len(kept)}/{count} after "
                    f"{drawn} draws")
            ts = rng.uniform(t_lo, t_hi, size=(batch, basis.shape[0]))
            drawn += batch
            pts = origin + ts @ basis
            kept.extend(pts[_satisfies(pts, region, a_eq, b_eq, ineqs)])
        return np.array(kept[:count])

    while len(kept) < count:
        if drawn >= max_draws:
            raise ProtocolError(
                f"rejection sampling accepted {len(kept)}/{count} after "
                f"{drawn} draws")
        pts = rng.uniform(lo, hi, size=(batch, region.dim))
        drawn += batch
        kept.extend(pts[_satisfies(pts, region, a_eq, b_eq, ineqs)])
    return np.array(kept[:count])


def _satisfies(pts: np.ndarray, region: InputRegion, a_eq: np.ndarray,
               b_eq: np.ndarray, ineqs: list[LinearConstraint],
               ) -> np.ndarray:
    """Mask of points inside the region.

    Inequalities and box bounds are strict; equality rows allow a hair of
    float slack, since points constructed inside the affine hull sit a
    rounding error away from it.
    """
    ok = ((pts >= region.lower - 1e-12) & (pts <= region.upper + 1e-12)) \
        .all(axis=1)
    for con in ineqs:
        vals = pts @ con.coeffs
        ok &= vals <= con.rhs if con.rel == "<=" else vals >= con.rhs
    if a_eq.shape[0]:
        ok &= (np.abs(pts @ a_eq.T - b_eq) <= _EQUALITY_GAP).all(axis=1)
    return ok


def misclassification_count(net: MlpModel, points: np.ndarray,
                            expected: int) -> int:
    """How many sampled points the network maps away from ``expected``."""
    return int(np.count_nonzero(classify_batch(net, points) != expected))
