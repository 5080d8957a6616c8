"""Shared fixtures. Expensive artifacts (synthetic datasets, trained maps)
are generated once per session and reused across criteria."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rfsom.datagen import (
    ChainSpec,
    apply_normalization,
    fit_normalization,
    synthesize_self_touch,
)
from rfsom.lattice import LatticeSpec
from rfsom.mrf import default_quadrant_mask, mrf_train
from rfsom.som import TrainSchedule, init_codebook


@pytest.fixture(scope="session")
def synth_cache():
    """seed -> SynthesisResult for the default chain (memoized)."""
    cache = {}

    def get(seed: int, n: int = 3216):
        key = (seed, n)
        if key not in cache:
            cache[key] = synthesize_self_touch(ChainSpec(), n, seed)
        return cache[key]

    return get


class PipelineRun:
    """Default in-process pipeline for one seed: synthesize, normalize,
    init, train with the built-in mask."""

    def __init__(self, seed: int, synth):
        self.seed = seed
        self.result = synth(seed)
        self.raw = self.result.data
        self.params = fit_normalization(self.raw)
        self.data = apply_normalization(self.raw, self.params)
        self.mask = default_quadrant_mask()
        self.initial = init_codebook(LatticeSpec(), 7, seed)
        self.codebook, self.log = mrf_train(
            self.initial, self.data, self.mask, TrainSchedule(seed=seed)
        )


@pytest.fixture(scope="session")
def pipeline_cache(synth_cache):
    """seed -> PipelineRun (memoized)."""
    cache = {}

    def get(seed: int) -> PipelineRun:
        if seed not in cache:
            cache[seed] = PipelineRun(seed, synth_cache)
        return cache[seed]

    return get
