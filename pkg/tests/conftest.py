"""Shared fixtures: synthetic corpora and trained bundles reused across tests.

Everything here is deterministic (fixed seeds) so test outcomes are stable
run to run.  The large corpus and its bundle are session-scoped because
fitting them costs a few seconds; individual tests must not mutate them.
"""

from __future__ import annotations

import numpy as np
import pytest

from rwanom import (
    GenConfig,
    PipelineConfig,
    STATUS_LABELS,
    fit_bundle,
    generate_dataset,
    run_pipeline,
    split_train_eval,
)

CORPUS_SEED = 20260823
CORPUS_PER_CLASS = 39


@pytest.fixture(scope="session")
def corpus():
    """507-series labelled corpus (39 per status) with ground truth."""
    mix = {label: CORPUS_PER_CLASS for label in STATUS_LABELS if label != "N"}
    mix["N"] = CORPUS_PER_CLASS
    return generate_dataset(GenConfig(seed=CORPUS_SEED), mix=mix)


@pytest.fixture(scope="session")
def corpus_items(corpus):
    """The corpus without the ground-truth sidecars: (id, series, status)."""
    return [(sid, series, status) for sid, series, status, _ in corpus]


@pytest.fixture(scope="session")
def corpus_split(corpus_items):
    return split_train_eval(corpus_items, train_fraction=0.4, seed=3)


@pytest.fixture(scope="session")
def bundle(corpus_split):
    """Classifier bundle fitted on the 40% training split of the corpus."""
    train_items, _ = corpus_split
    return fit_bundle(train_items, seed=3)


@pytest.fixture(scope="session")
def summaries(corpus_items, bundle):
    """Pipeline summaries of every corpus series under the bundle's config."""
    return {sid: run_pipeline(series, bundle.pipeline)
            for sid, series, _ in corpus_items}


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def random_mlp(rng: np.random.Generator, input_dim: int, hidden_dim: int = 10,
               scale: float = 1.0):
    """Random network helper used by verifier and mlp tests."""
    from rwanom.mlp import MlpModel

    return MlpModel(
        w1=rng.normal(0.0, scale, size=(hidden_dim, input_dim)),
        b1=rng.normal(0.0, 0.5 * scale, size=hidden_dim),
        w2=rng.normal(0.0, scale, size=(4, hidden_dim)),
        b2=rng.normal(0.0, 0.5 * scale, size=4),
        class_names=("none", "u1", "u2", "u3"),
        bin_edges=np.linspace(0.0, 1.0, input_dim + 1),
    )
