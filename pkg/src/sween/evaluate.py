"""Dataset-level certification drivers.

Glue between the per-point certification procedures and the metrics layer:
walk a test set, certify each point on its own noise lane (point index ->
stream key), and collect outcomes in point order regardless of how many
workers ran them.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Optional

from .datasets import Dataset
from .ensemble import AdaptiveConfig, SweenModel, adaptive_certify, ensemble_prob_fn
from .metrics import PointOutcome
from .numerics import NoiseStreamKey
from .smoothing import certify


def certify_dataset(model: SweenModel, test: Dataset, n0: int, n: int, alpha: float,
                    diameter: Optional[float] = None, seed: int = 0, jobs: int = 1,
                    adaptive: Optional[AdaptiveConfig] = None,
                    max_points: Optional[int] = None) -> list[PointOutcome]:
    """Certify every test point (optionally the first max_points) and return
    outcomes in point order. The radius is zeroed for points whose certified
    prediction is wrong or abstained."""
    d = diameter if diameter is not None else test.diameter
    count = len(test) if max_points is None else min(max_points, len(test))
    prob_fn = ensemble_prob_fn(model.candidates, model.weights)

    def one(i: int) -> PointOutcome:
        key = NoiseStreamKey(seed, point_index=i)
        x = test.features[i]
        if adaptive is None:
            res = certify(prob_fn, x, model.sigma, n0, n, alpha, d, key,
                          forwards_per_sample=model.k)
        else:
            res = adaptive_certify(model, x, adaptive, n0, n, alpha, d, key)
        return PointOutcome.from_certification(i, int(test.labels[i]), res.prediction,
                                               res.radius, res.evals)

    if jobs <= 1:
        return [one(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, range(count)))
