"""Verifier tests: IBP soundness, completeness vs the pattern oracle.

The ground truth for query verdicts is `oracle_verify.oracle_verify`
(exhaustive activation-pattern enumeration + scipy LPs), plus dense grid
scans for existence-only checks.  The package's branch-and-bound and its
hand-rolled simplex are never consulted by the oracles.
"""

from __future__ import annotations

import numpy as np
import pytest

from rwanom import InputRegion, LinearConstraint, verify_local_robustness, verify_query
from rwanom.mlp import classify, forward
from rwanom.verifier import RegionError, interval_bounds

from conftest import random_mlp
from oracle_verify import grid_classes, oracle_verify


def _random_region(rng, m, width_scale=0.4):
    lower = rng.uniform(-1.0, 1.0, size=m)
    upper = lower + np.abs(rng.normal(0.0, width_scale, size=m))
    return InputRegion(lower=lower, upper=upper)


# --------------------------------------------------------------------- IBP

def test_zero_width_bounds_are_exact(rng):
    model = random_mlp(rng, 5)
    x = rng.uniform(0, 1, size=5)
    region = InputRegion(lower=x.copy(), upper=x.copy())
    z_lo, z_hi, y_lo, y_hi = interval_bounds(model, region)
    pre = model.w1 @ x + model.b1
    np.testing.assert_allclose(z_lo, pre, atol=1e-12)
    np.testing.assert_allclose(z_hi, pre, atol=1e-12)
    np.testing.assert_allclose(y_lo, forward(model, x), atol=1e-12)
    np.testing.assert_allclose(y_hi, forward(model, x), atol=1e-12)


def test_bounds_contain_sampled_points(rng):
    """10^4 sampled points stay within the propagated intervals."""
    for _ in range(5):
        m = int(rng.integers(2, 7))
        model = random_mlp(rng, m)
        region = _random_region(rng, m)
        z_lo, z_hi, y_lo, y_hi = interval_bounds(model, region)
        points = rng.uniform(region.lower, region.upper, size=(2000, m))
        pre = points @ model.w1.T + model.b1
        out = np.maximum(pre, 0.0) @ model.w2.T + model.b2
        eps = 1e-9
        assert np.all(pre >= z_lo[None, :] - eps) and np.all(pre <= z_hi[None, :] + eps)
        assert np.all(out >= y_lo[None, :] - eps) and np.all(out <= y_hi[None, :] + eps)


def test_widening_never_tightens(rng):
    model = random_mlp(rng, 4)
    inner = _random_region(rng, 4, width_scale=0.2)
    grow = np.abs(rng.normal(0, 0.3, size=4))
    outer = InputRegion(lower=inner.lower - grow, upper=inner.upper + grow)
    zi_lo, zi_hi, yi_lo, yi_hi = interval_bounds(model, inner)
    zo_lo, zo_hi, yo_lo, yo_hi = interval_bounds(model, outer)
    assert np.all(zo_lo <= zi_lo + 1e-12) and np.all(zo_hi >= zi_hi - 1e-12)
    assert np.all(yo_lo <= yi_lo + 1e-12) and np.all(yo_hi >= yi_hi - 1e-12)


# ----------------------------------------------------------- verify_query

def test_zero_width_query_sat_and_unsat(rng):
    model = random_mlp(rng, 4)
    x = rng.uniform(0, 1, size=4)
    region = InputRegion(lower=x.copy(), upper=x.copy())
    own = classify(model, x)
    verdict = verify_query(model, region, own)
    assert verdict.sat
    np.testing.assert_allclose(verdict.witness, x, atol=1e-9)
    for target in range(4):
        if target != own:
            assert verify_query(model, region, target).sat is False


def test_agreement_with_pattern_oracle(rng):
    """Randomized instances: verdicts equal the exhaustive-pattern oracle."""
    n_sat = n_unsat = 0
    for _ in range(40):
        m = int(rng.integers(2, 6))
        model = random_mlp(rng, m, hidden_dim=int(rng.integers(4, 11)))
        region = _random_region(rng, m)
        target = int(rng.integers(0, 4))
        verdict = verify_query(model, region, target)
        expected_sat, _ = oracle_verify(model, region, target)
        assert (verdict.sat) == expected_sat
        if verdict.sat:
            n_sat += 1
            assert region.contains(verdict.witness, tol=1e-9)
            assert classify(model, verdict.witness) == target
        else:
            n_unsat += 1
    assert n_sat > 3 and n_unsat > 3


def test_linear_constraints_respected(rng):
    """Witnesses honor extra linear rows, and rows can flip Sat to Unsat."""
    flipped = 0
    for _ in range(30):
        m = 3
        model = random_mlp(rng, m)
        region = _random_region(rng, m, width_scale=0.6)
        target = int(rng.integers(0, 4))
        base = verify_query(model, region, target)
        if not base.sat:
            continue
        w = base.witness
        # a cutting plane just below the witness along a random direction
        direction = rng.normal(0, 1, size=m)
        cut = LinearConstraint(direction, "<=", float(direction @ w) - 0.05)
        constrained = InputRegion(region.lower, region.upper, (cut,))
        verdict = verify_query(model, constrained, target)
        expected_sat, _ = oracle_verify(model, constrained, target)
        assert (verdict.sat) == expected_sat
        if verdict.sat:
            assert constrained.contains(verdict.witness, tol=1e-9)
            assert float(direction @ verdict.witness) <= cut.rhs + 1e-9
        else:
            flipped += 1
    assert flipped >= 1


def test_pruning_off_same_verdicts(rng):
    for _ in range(15):
        m = int(rng.integers(2, 5))
        model = random_mlp(rng, m)
        region = _random_region(rng, m)
        target = int(rng.integers(0, 4))
        with_p = verify_query(model, region, target, use_pruning=True)
        without = verify_query(model, region, target, use_pruning=False)
        assert with_p.sat == without.sat
        assert without.stats.nodes >= with_p.stats.nodes


# -------------------------------------------------- local robustness

def test_single_point_region_robust(rng):
    model = random_mlp(rng, 4)
    x = rng.uniform(0, 1, size=4)
    region = InputRegion(lower=x.copy(), upper=x.copy())
    verdict = verify_local_robustness(model, region, classify(model, x))
    assert verdict.robust and verdict.counterexample is None


def test_grid_found_counterexample_is_found(rng):
    """If a dense grid reaches another class, the verifier must too."""
    found_cases = 0
    while found_cases < 5:
        m = int(rng.integers(2, 4))
        model = random_mlp(rng, m, scale=1.5)
        region = _random_region(rng, m, width_scale=0.8)
        center = 0.5 * (region.lower + region.upper)
        expected = classify(model, center)
        classes, _, _ = grid_classes(model, region.lower, region.upper,
                                     per_dim=15)
        if classes == {expected}:
            continue
        verdict = verify_local_robustness(model, region, expected)
        assert not verdict.robust
        assert verdict.counterexample_class != expected
        assert classify(model, verdict.counterexample) == verdict.counterexample_class
        assert region.contains(verdict.counterexample, tol=1e-9)
        found_cases += 1


def test_enlarging_preserves_counterexamples(rng):
    """Nested regions: a counterexample never disappears as the box grows."""
    checked = 0
    while checked < 8:
        m = int(rng.integers(2, 4))
        model = random_mlp(rng, m)
        region = _random_region(rng, m, width_scale=0.5)
        center = 0.5 * (region.lower + region.upper)
        expected = classify(model, center)
        inner = verify_local_robustness(model, region, expected)
        if inner.robust:
            continue
        grow = np.abs(rng.normal(0, 0.2, size=m))
        outer = InputRegion(region.lower - grow, region.upper + grow)
        assert not verify_local_robustness(model, outer, expected).robust
        checked += 1


def test_query_determinism(rng):
    model = random_mlp(rng, 4)
    region = _random_region(rng, 4)
    v1 = verify_query(model, region, 2)
    v2 = verify_query(model, region, 2)
    assert v1.sat == v2.sat
    if v1.sat:
        np.testing.assert_array_equal(v1.witness, v2.witness)


# ------------------------------------------------------------- validation

def test_region_validation(rng):
    with pytest.raises(RegionError):
        InputRegion(lower=np.array([1.0, 0.0]), upper=np.array([0.0, 1.0]))
    model = random_mlp(rng, 4)
    region = _random_region(rng, 3)
    with pytest.raises(RegionError):
        interval_bounds(model, region)
    with pytest.raises((RegionError, ValueError)):
        verify_query(model, _random_region(rng, 4), 7)
