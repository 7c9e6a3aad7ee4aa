"""The desk-scale benchmark task used by the acceptance suite and scripts.

Tight noisy rings make the circular boundary genuinely hard for narrow
networks; the mixture clusters are shifted well away from the rings so the
union is a single 4-class 2-D task on which candidates of widths 8/16/32
end up comparably strong with independent boundary errors, which is the
regime where weighted ensembling has something to offer.
"""

from __future__ import annotations

import numpy as np

from .datasets import Dataset, gen_gaussian_mixture, gen_rings, split
from .ensemble import SolveConfig, SweenModel, sween_pipeline
from .models import TrainConfig

BENCHMARK_ARCHS = ([2, 8, 4], [2, 16, 4], [2, 32, 4])
BENCHMARK_SIGMA = 0.5
MIXTURE_OFFSET = np.array([9.0, 0.0])


def _shift(ds: Dataset, offset: np.ndarray, label_offset: int, num_classes: int) -> Dataset:
    return Dataset(ds.features + offset, ds.labels + label_offset, num_classes,
                   ds.bounds_lo + offset, ds.bounds_hi + offset, ds.meta)


def _union(a: Dataset, b: Dataset) -> Dataset:
    lo = np.minimum(a.bounds_lo, b.bounds_lo)
    hi = np.maximum(a.bounds_hi, b.bounds_hi)
    return Dataset(np.concatenate([a.features, b.features]),
                   np.concatenate([a.labels, b.labels]),
                   max(a.num_classes, b.num_classes), lo, hi,
                   {"generator": "benchmark-union"})


def make_benchmark_task(seed: int = 0) -> tuple[Dataset, Dataset, Dataset]:
    """Train (1200) / weight-eval (300) / test (500) splits of the
    rings-plus-shifted-mixture union (4 classes, balanced)."""
    rings = gen_rings(1000, [1.0, 2.4], 0.25, seed=seed)
    mixture = gen_gaussian_mixture(2, 2, 1000, 4.0, 0.5, seed=seed + 1)
    union = _union(_shift(rings, np.zeros(2), 0, 4),
                   _shift(mixture, MIXTURE_OFFSET, 2, 4))
    union.validate()
    return split(union, (0.6, 0.15, 0.25), seed=seed + 2)


def benchmark_train_config(seed: int = 0) -> TrainConfig:
    return TrainConfig(sigma=BENCHMARK_SIGMA, epochs=300, batch_size=64, learning_rate=0.05,
                       lr_decay_epochs=[200, 260], lr_decay_factor=0.1, seed=seed)


def benchmark_solve_config() -> SolveConfig:
    return SolveConfig(mode="erm", s=16, seed=100)


def train_benchmark_model(train: Dataset, weight_eval: Dataset, seed: int = 0) -> SweenModel:
    """Width-8/16/32 candidates trained and weighted on the benchmark splits."""
    return sween_pipeline(train, weight_eval, [list(a) for a in BENCHMARK_ARCHS],
                          benchmark_train_config(seed), benchmark_solve_config(),
                          BENCHMARK_SIGMA)
