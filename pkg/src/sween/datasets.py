"""Bounded synthetic classification tasks with analytic structure.

Two generators (Gaussian mixture clusters, concentric rings), a stratified
train / weight-eval / test splitter, and CSV persistence. Every dataset
carries a bounding box and its l2 diagonal, which downstream certification
uses as the radius clip ceiling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class LabeledPoint:
    features: np.ndarray
    label: int


@dataclass
class Dataset:
    """Immutable-by-convention bundle of points plus task geometry.

    bounds_lo/bounds_hi are per-coordinate box edges; diameter is the l2
    length of the box diagonal (an upper bound on any pairwise distance).
    """

    features: np.ndarray  # (n, dim) float64
    labels: np.ndarray    # (n,) int64, classes 0..num_classes-1
    num_classes: int
    bounds_lo: np.ndarray
    bounds_hi: np.ndarray
    meta: dict | None = None

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.bounds_hi - self.bounds_lo))

    def __len__(self) -> int:
        return self.features.shape[0]

    def __getitem__(self, i: int) -> LabeledPoint:
        return LabeledPoint(self.features[i], int(self.labels[i]))

    def validate(self) -> None:
        if self.features.ndim != 2 or self.labels.shape != (len(self),):
            raise ValueError("features must be (n, dim) with matching labels")
        if self.diameter <= 0.0:
            raise ValueError("bounding box must have positive diameter")
        if len(self) and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ValueError("labels must lie in [0, num_classes)")
        lo, hi = self.bounds_lo, self.bounds_hi
        if len(self) and ((self.features < lo - 1e-9).any() or (self.features > hi + 1e-9).any()):
            raise ValueError("features fall outside the declared bounds")


def _round_robin_labels(n: int, num_classes: int) -> np.ndarray:
    return np.arange(n, dtype=np.int64) % num_classes


def gen_gaussian_mixture(dim: int, num_classes: int, n: int, class_separation: float,
                         cluster_std: float, seed: int) -> Dataset:
    """Isotropic Gaussian clusters with centers at pairwise distance
    >= class_separation, truncated to a box padded by 4 * cluster_std."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if num_classes < 2:
        raise ValueError(f"num_classes must be >= 2, got {num_classes}")
    if n < num_classes:
        raise ValueError(f"n must be >= num_classes, got {n}")
    if class_separation <= 0.0:
        raise ValueError(f"class_separation must be > 0, got {class_separation}")
    if cluster_std <= 0.0:
        raise ValueError(f"cluster_std must be > 0, got {cluster_std}")

    centers = np.zeros((num_classes, dim))
    if dim == 1:
        centers[:, 0] = np.arange(num_classes) * class_separation
    else:
        # adjacent chord of the circle equals class_separation exactly
        radius = class_separation / (2.0 * math.sin(math.pi / num_classes))
        angles = 2.0 * math.pi * np.arange(num_classes) / num_classes
        centers[:, 0] = radius * np.cos(angles)
        centers[:, 1] = radius * np.sin(angles)

    rng = np.random.default_rng(np.random.SeedSequence((seed & 0xFFFFFFFFFFFFFFFF, 0x6D1F)))
    labels = _round_robin_labels(n, num_classes)
    feats = centers[labels] + cluster_std * rng.standard_normal((n, dim))
    lo = centers.min(axis=0) - 4.0 * cluster_std
    hi = centers.max(axis=0) + 4.0 * cluster_std
    feats = np.clip(feats, lo, hi)
    meta = {"generator": "mixture", "dim": dim, "num_classes": num_classes, "n": n,
            "class_separation": class_separation, "cluster_std": cluster_std, "seed": seed}
    ds = Dataset(feats, labels, num_classes, lo, hi, meta)
    ds.validate()
    return ds


def gen_rings(n: int, radii: list[float], noise_std: float, seed: int) -> Dataset:
    """2-D concentric rings, class c on the circle of radius radii[c]."""
    radii = [float(r) for r in radii]
    if len(radii) < 2:
        raise ValueError("need at least two radii")
    if any(r <= 0.0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError(f"radii must be positive and strictly increasing, got {radii}")
    if noise_std < 0.0:
        raise ValueError(f"noise_std must be >= 0, got {noise_std}")
    num_classes = len(radii)
    if n < num_classes:
        raise ValueError(f"n must be >= number of rings, got {n}")

    rng = np.random.default_rng(np.random.SeedSequence((seed & 0xFFFFFFFFFFFFFFFF, 0x4163)))
    labels = _round_robin_labels(n, num_classes)
    angles = rng.uniform(0.0, 2.0 * math.pi, size=n)
    r = np.asarray(radii)[labels]
    feats = np.stack([r * np.cos(angles), r * np.sin(angles)], axis=1)
    feats += noise_std * rng.standard_normal((n, 2))
    extent = radii[-1] + 4.0 * noise_std
    lo = np.array([-extent, -extent])
    hi = np.array([extent, extent])
    feats = np.clip(feats, lo, hi)
    meta = {"generator": "rings", "n": n, "radii": radii, "noise_std": noise_std, "seed": seed}
    ds = Dataset(feats, labels, num_classes, lo, hi, meta)
    ds.validate()
    return ds


def split(data: Dataset, fractions: tuple[float, float, float], seed: int
          ) -> tuple[Dataset, Dataset, Dataset]:
    """Disjoint, exhaustive, class-stratified 3-way partition.

    Per-class allocation uses largest-remainder rounding, so exact
    fractions of exact class counts land exactly.
    """
    fr = [float(f) for f in fractions]
    if len(fr) != 3 or any(f < 0.0 for f in fr) or abs(sum(fr) - 1.0) > 1e-9:
        raise ValueError(f"fractions must be three nonnegative values summing to 1, got {fractions}")

    rng = np.random.default_rng(np.random.SeedSequence((seed & 0xFFFFFFFFFFFFFFFF, 0x5B17)))
    parts: list[list[np.ndarray]] = [[], [], []]
    for c in range(data.num_classes):
        idx = np.flatnonzero(data.labels == c)
        idx = rng.permutation(idx)
        m = idx.size
        quotas = [f * m for f in fr]
        counts = [int(q) for q in quotas]
        remainders = sorted(range(3), key=lambda i: (quotas[i] - counts[i], -i), reverse=True)
        for i in remainders:
            if sum(counts) == m:
                break
            counts[i] += 1
        stop = np.cumsum([0] + counts)
        for part in range(3):
            parts[part].append(idx[stop[part]:stop[part + 1]])

    out = []
    for part in range(3):
        sel = np.sort(np.concatenate(parts[part])) if parts[part] else np.empty(0, dtype=np.int64)
        out.append(Dataset(data.features[sel].copy(), data.labels[sel].copy(),
                           data.num_classes, data.bounds_lo, data.bounds_hi, data.meta))
    return out[0], out[1], out[2]


def save_dataset(ds: Dataset, csv_path: str | Path) -> Path:
    """Write `f1,...,fd,label` CSV plus a `.meta.json` sidecar; returns the CSV path."""
    csv_path = Path(csv_path)
    header = ",".join(f"f{j + 1}" for j in range(ds.dim)) + ",label"
    lines = [header]
    for row, lab in zip(ds.features, ds.labels):
        lines.append(",".join(repr(float(v)) for v in row) + f",{int(lab)}")
    csv_path.write_text("\n".join(lines) + "\n")
    meta = {
        "dim": ds.dim,
        "num_classes": ds.num_classes,
        "bounds_lo": [float(v) for v in ds.bounds_lo],
        "bounds_hi": [float(v) for v in ds.bounds_hi],
        "diameter": ds.diameter,
        "generator": ds.meta or {},
    }
    meta_path = csv_path.with_name(csv_path.stem + ".meta.json")
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return csv_path


def load_dataset(csv_path: str | Path) -> Dataset:
    csv_path = Path(csv_path)
    meta_path = csv_path.with_name(csv_path.stem + ".meta.json")
    meta = json.loads(meta_path.read_text())
    body = [ln for ln in csv_path.read_text().splitlines()[1:] if ln.strip()]
    if not body:
        feats = np.empty((0, meta["dim"]))
        labels = np.empty(0, dtype=np.int64)
    else:
        raw = np.asarray([[float(v) for v in ln.split(",")] for ln in body])
        feats = raw[:, :-1]
        labels = raw[:, -1].astype(np.int64)
    ds = Dataset(feats, labels, int(meta["num_classes"]),
                 np.asarray(meta["bounds_lo"], dtype=float),
                 np.asarray(meta["bounds_hi"], dtype=float),
                 meta.get("generator") or None)
    if feats.shape[1] != meta["dim"]:
        raise ValueError(f"csv has {feats.shape[1]} feature columns, metadata says {meta['dim']}")
    return ds
