"""Complete reachability verification for the histogram networks.

Answers queries of the form "inside this input region, can the network output
class t?" exactly (up to LP tolerance), by branch-and-bound over the ReLU
activation phases of the single hidden layer:

* interval bound propagation (IBP) over the input box fixes the phase of
  every neuron whose pre-activation interval does not straddle zero;
* the remaining neurons are split two ways (active: z >= 0, inactive:
  z <= 0); each node prunes itself when the phase-refined output intervals
  already rule the target class out;
* at a fully-determined leaf the network is affine, so the query becomes a
  feasibility LP over [inputs, pre-activations, outputs] with the target
  constraints y_t >= y_j.

A feasible leaf yields a candidate input, which is validated by running the
real network (argmax with lowest-index tie-break).  Candidates that fail
validation - possible when the LP sits exactly on a tie - trigger one
re-solve with a strict margin; if that also fails to validate, the leaf is
treated as unsatisfiable and the near miss is logged, so the verifier never
reports Sat without a checkable witness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lp import LinearConstraint, solve_feasibility
from .mlp import MlpModel, classify

#: Strict margin used when a witness fails validation on a tie.
MARGIN_RETRY = 1e-7

#: Cap on recorded near-miss points (the count keeps increasing).
_NEAR_MISS_CAP = 32


class RegionError(ValueError):
    """Malformed input region or query."""


@dataclass(frozen=True)
class InputRegion:
    """Box bounds over the network inputs plus optional linear cuts.

    ``linear`` constraints have one coefficient per input dimension and
    further restrict the box (e.g. weighted-sum intervals).
    """

    lower: np.ndarray
    upper: np.ndarray
    linear: tuple[LinearConstraint, ...] = ()

    def __post_init__(self) -> None:
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise RegionError("region bounds must be equal-length vectors")
        if not (np.isfinite(lower).all() and np.isfinite(upper).all()):
            raise RegionError("region bounds must be finite")
        if (lower > upper).any():
            raise RegionError("region has lower > upper")
        for con in self.linear:
            if con.coeffs.shape != lower.shape:
                raise RegionError("linear cut dimension mismatch")

    @property
    def dim(self) -> int:
        return int(self.lower.shape[0])

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        if (x < self.lower - tol).any() or (x > self.upper + tol).any():
            return False
        for con in self.linear:
            v = float(con.coeffs @ x)
            if con.rel == "<=" and v > con.rhs + tol:
                return False
            if con.rel == ">=" and v < con.rhs - tol:
                return False
            if con.rel == "==" and abs(v - con.rhs) > tol:
                return False
        return True


@dataclass
class VerifyStats:
    nodes: int = 0
    lp_calls: int = 0
    near_misses: int = 0
    near_miss_points: list = field(default_factory=list)


@dataclass(frozen=True)
class Verdict:
    """Outcome of one reachability query."""

    sat: bool
    witness: np.ndarray | None
    witness_class: int | None
    stats: VerifyStats


def interval_bounds(model: MlpModel, region: InputRegion,
                    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """IBP pre-activation and output bounds over the region's box.

    Returns (z_lo, z_hi, y_lo, y_hi).  The propagation is exact for each
    affine layer (centre/radius form), so a zero-width box gives the exact
    forward values.
    """
    if region.dim != model.input_dim:
        raise RegionError(
            f"region dimension {region.dim} != model input {model.input_dim}")
    mid = 0.5 * (region.lower + region.upper)
    rad = 0.5 * (region.upper - region.lower)
    z_mid = model.w1 @ mid + model.b1
    z_rad = np.abs(model.w1) @ rad
    z_lo, z_hi = z_mid - z_rad, z_mid + z_rad
    a_lo, a_hi = np.maximum(z_lo, 0.0), np.maximum(z_hi, 0.0)
    w2_pos = np.maximum(model.w2, 0.0)
    w2_neg = np.minimum(model.w2, 0.0)
    y_lo = w2_pos @ a_lo + w2_neg @ a_hi + model.b2
    y_hi = w2_pos @ a_hi + w2_neg @ a_lo + model.b2
    return z_lo, z_hi, y_lo, y_hi


def _phase_output_bounds(model: MlpModel, phases: np.ndarray,
                         z_lo: np.ndarray, z_hi: np.ndarray,
                         ) -> tuple[np.ndarray, np.ndarray]:
    """Output bounds given fixed/free phases (sound for the node's subset)."""
    a_lo = np.where(phases == 1, np.maximum(z_lo, 0.0),
                    np.where(phases == -1, 0.0, 0.0))
    a_hi = np.where(phases == -1, 0.0, np.maximum(z_hi, 0.0))
    w2_pos = np.maximum(model.w2, 0.0)
    w2_neg = np.minimum(model.w2, 0.0)
    return (w2_pos @ a_lo + w2_neg @ a_hi + model.b2,
            w2_pos @ a_hi + w2_neg @ a_lo + model.b2)


def _leaf_constraints(model: MlpModel, region: InputRegion, phases: np.ndarray,
                      z_lo: np.ndarray, z_hi: np.ndarray, target: int,
                      margin: float,
                      ) -> tuple[list[LinearConstraint], np.ndarray, np.ndarray] | None:
    """LP encoding of a fully-determined leaf, or None if trivially empty.

    Variables are stacked [x (inputs), z (hidden), y (outputs)].
    """
    m = model.input_dim
    h = model.hidden_dim
    c = model.n_classes
    n = m + h + c
    lo = np.empty(n)
    hi = np.empty(n)
    lo[:m] = region.lower
    hi[:m] = region.upper
    # Phase constraints enter as tightened z bounds.
    for i in range(h):
        a, b = z_lo[i], z_hi[i]
        if phases[i] == 1:
            a = max(a, 0.0)
        else:
            b = min(b, 0.0)
        if a > b:
            return None
        lo[m + i], hi[m + i] = a, b
    y_lo, y_hi = _phase_output_bounds(model, phases, z_lo, z_hi)
    lo[m + h:], hi[m + h:] = y_lo, y_hi

    cons: list[LinearConstraint] = []
    for i in range(h):
        row = np.zeros(n)
        row[:m] = -model.w1[i]
        row[m + i] = 1.0
        cons.append(LinearConstraint(row, "==", float(model.b1[i])))
    active = phases == 1
    for r in range(c):
        row = np.zeros(n)
        row[m:m + h][active] = -model.w2[r][active]
        row[m + h + r] = 1.0
        cons.append(LinearConstraint(row, "==", float(model.b2[r])))
    for con in region.linear:
        row = np.zeros(n)
        row[:m] = con.coeffs
        cons.append(LinearConstraint(row, con.rel, con.rhs))
    for j in range(c):
        if j == target:
            continue
        row = np.zeros(n)
        row[m + h + target] = 1.0
        row[m + h + j] = -1.0
        cons.append(LinearConstraint(row, ">=", margin))
    return cons, lo, hi


def verify_query(model: MlpModel, region: InputRegion, target: int,
                 use_pruning: bool = True) -> Verdict:
    """Decide whether some input in ``region`` classifies as ``target``.

    Complete search: Sat verdicts always carry a witness that the actual
    network maps to ``target``; Unsat means no leaf LP produced a validatable
    witness (ties unresolvable within tolerance are logged as near misses).
    """
    if not 0 <= target < model.n_classes:
        raise RegionError(f"target class {target} out of range")
    stats = VerifyStats()

    centre = 0.5 * (region.lower + region.upper)
    if region.contains(centre) and classify(model, centre) == target:
        return Verdict(sat=True, witness=centre, witness_class=target,
                       stats=stats)

    z_lo, z_hi, _, _ = interval_bounds(model, region)
    root = np.zeros(model.hidden_dim, dtype=np.int8)
    root[z_lo >= 0.0] = 1
    root[z_hi <= 0.0] = -1
    # Freeze branching priority at the root: widest straddling interval
    # first, ties to the lowest neuron index.
    widths = z_hi - z_lo

    stack: list[np.ndarray] = [root]
    while stack:
        phases = stack.pop()
        stats.nodes += 1
        if use_pruning:
            y_lo, y_hi = _phase_output_bounds(model, phases, z_lo, z_hi)
            if (y_hi[target] < y_lo).any():
                continue
        free = np.nonzero(phases == 0)[0]
        if free.size:
            pick = free[np.argmax(widths[free])]
            first, second = phases.copy(), phases.copy()
            midpoint = 0.5 * (z_lo[pick] + z_hi[pick])
            first[pick] = 1 if midpoint >= 0.0 else -1
            second[pick] = -first[pick]
            stack.append(second)
            stack.append(first)
            continue

        encoded = _leaf_constraints(model, region, phases, z_lo, z_hi,
                                    target, margin=0.0)
        if encoded is None:
            continue
        cons, lo, hi = encoded
        stats.lp_calls += 1
        point = solve_feasibility(cons, lo, hi)
        if point is None:
            continue
        witness = point[:model.input_dim]
        if classify(model, witness) == target:
            return Verdict(True, witness, target, stats)
        # Tie at the boundary: force a strict margin and try once more.
        encoded = _leaf_constraints(model, region, phases, z_lo, z_hi,
                                    target, margin=MARGIN_RETRY)
        if encoded is not None:
            cons, lo, hi = encoded
            stats.lp_calls += 1
            point = solve_feasibility(cons, lo, hi)
            if point is not None:
                witness = point[:model.input_dim]
                if classify(model, witness) == target:
                    return Verdict(True, witness, target, stats)
        stats.near_misses += 1
        if len(stats.near_miss_points) < _NEAR_MISS_CAP:
            stats.near_miss_points.append(witness)
    return Verdict(False, None, None, stats)


@dataclass(frozen=True)
class RobustnessVerdict:
    """Is every point of the region classified as ``expected``?"""

    robust: bool
    expected: int
    counterexample: np.ndarray | None
    counterexample_class: int | None
    stats: dict[int, VerifyStats]


def verify_local_robustness(model: MlpModel, region: InputRegion,
                            expected: int) -> RobustnessVerdict:
    """Complete robustness check: query every other class over the region."""
    if not 0 <= expected < model.n_classes:
        raise RegionError(f"expected class {expected} out of range")
    stats: dict[int, VerifyStats] = {}
    for target in range(model.n_classes):
        if target == expected:
            continue
        verdict = verify_query(model, region, target)
        stats[target] = verdict.stats
        if verdict.sat:
            return RobustnessVerdict(robust=False, expected=expected,
                                     counterexample=verdict.witness,
                                     counterexample_class=target, stats=stats)
    return RobustnessVerdict(robust=True, expected=expected,
                             counterexample=None, counterexample_class=None,
                             stats=stats)
