"""Robustness accounting: per-point outcomes, gamma indices, radius-accuracy
curves, ACR, and upper-envelope / average baselines.

A point contributes its certified radius only when the certified prediction
matches the true label; abstentions and misclassifications count as radius
zero, which is the usual approximated-certified-accuracy convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .numerics import log_gamma
from .smoothing import ABSTAIN

DEFAULT_RADIUS_GRID = tuple(0.25 * i for i in range(9))  # 0.00, 0.25, ..., 2.00


@dataclass
class PointOutcome:
    point_index: int
    true_label: int
    prediction: int          # class index or ABSTAIN
    radius: float            # 0 whenever the point is not correctly certified
    correct: bool
    evals: int

    @classmethod
    def from_certification(cls, point_index: int, true_label: int, prediction: int,
                           radius: float, evals: int) -> "PointOutcome":
        correct = prediction != ABSTAIN and prediction == true_label
        return cls(point_index, true_label, prediction,
                   radius if correct else 0.0, correct, evals)


@dataclass
class GammaSpec:
    """Nonnegative function of the certified radius to average over points."""

    kind: str                       # "indicator" | "radius" | "volume"
    threshold: float = 0.0          # indicator: gamma(r) = 1{r >= threshold}
    dim: int = 1                    # volume: l2-ball volume in this dimension

    @classmethod
    def indicator_at(cls, radius: float) -> "GammaSpec":
        if radius < 0.0:
            raise ValueError(f"threshold radius must be >= 0, got {radius}")
        return cls("indicator", threshold=radius)

    @classmethod
    def radius(cls) -> "GammaSpec":
        return cls("radius")

    @classmethod
    def volume(cls, dim: int) -> "GammaSpec":
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        return cls("volume", dim=dim)

    def __call__(self, r: float) -> float:
        if self.kind == "indicator":
            return 1.0 if r >= self.threshold else 0.0
        if self.kind == "radius":
            return r
        if self.kind == "volume":
            if r <= 0.0:
                return 0.0
            d = self.dim
            # ball volume in log space: pi^(d/2) / Gamma(d/2 + 1) * r^d
            return math.exp(0.5 * d * math.log(math.pi) - log_gamma(0.5 * d + 1.0)
                            + d * math.log(r))
        raise ValueError(f"unknown gamma kind {self.kind!r}")


@dataclass
class RobustnessReport:
    radius_grid: np.ndarray
    aca: np.ndarray          # approximated certified accuracy at each grid radius
    acr: float               # average certified radius
    num_points: int
    config: dict = field(default_factory=dict)


def gamma_index(outcomes: list[PointOutcome], spec: GammaSpec) -> float:
    """Empirical mean of gamma(certified radius) over the outcomes."""
    if not outcomes:
        raise ValueError("outcomes must be nonempty")
    return float(np.mean([spec(o.radius) for o in outcomes]))


def radius_accuracy_curve(outcomes: list[PointOutcome], grid=DEFAULT_RADIUS_GRID,
                          config: Optional[dict] = None) -> RobustnessReport:
    """ACA over the radius grid plus ACR (mean radius == area under the
    full step curve)."""
    if not outcomes:
        raise ValueError("outcomes must be nonempty")
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 0 or grid[0] != 0.0 or (np.diff(grid) <= 0.0).any():
        raise ValueError("grid must be sorted ascending and start at 0")
    radii = np.array([o.radius for o in outcomes])
    correct = np.array([o.correct for o in outcomes])
    aca = np.array([float(np.mean(correct & (radii >= r))) for r in grid])
    acr = float(np.mean(radii))
    return RobustnessReport(grid, aca, acr, len(outcomes), dict(config or {}))


def _check_grids(reports: list[RobustnessReport]) -> np.ndarray:
    if not reports:
        raise ValueError("need at least one report")
    grid = reports[0].radius_grid
    for r in reports[1:]:
        if len(r.radius_grid) != len(grid) or not np.allclose(r.radius_grid, grid):
            raise ValueError("reports use different radius grids")
    return grid


def upper_envelope(reports: list[RobustnessReport]) -> RobustnessReport:
    """Pointwise-best ACA and best ACR among the reports."""
    grid = _check_grids(reports)
    aca = np.max(np.stack([r.aca for r in reports]), axis=0)
    acr = max(r.acr for r in reports)
    return RobustnessReport(grid.copy(), aca, acr, reports[0].num_points, {})


def average_report(reports: list[RobustnessReport]) -> RobustnessReport:
    grid = _check_grids(reports)
    aca = np.mean(np.stack([r.aca for r in reports]), axis=0)
    acr = float(np.mean([r.acr for r in reports]))
    return RobustnessReport(grid.copy(), aca, acr, reports[0].num_points, {})


def save_report_csv(report: RobustnessReport, path: str | Path) -> Path:
    path = Path(path)
    lines = ["radius,aca"]
    for r, a in zip(report.radius_grid, report.aca):
        lines.append(f"{repr(float(r))},{repr(float(a))}")
    lines.append(f"ACR,{repr(float(report.acr))}")
    path.write_text("\n".join(lines) + "\n")
    return path


def load_report_csv(path: str | Path) -> RobustnessReport:
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines or lines[0] != "radius,aca":
        raise ValueError(f"{path}: expected 'radius,aca' header")
    grid, aca, acr = [], [], None
    for ln in lines[1:]:
        left, right = ln.split(",", 1)
        if left == "ACR":
            acr = float(right)
        else:
            grid.append(float(left))
            aca.append(float(right))
    if acr is None:
        raise ValueError(f"{path}: missing trailing ACR row")
    return RobustnessReport(np.asarray(grid), np.asarray(aca), acr, 0, {})


def save_outcomes_csv(outcomes: list[PointOutcome], path: str | Path) -> Path:
    path = Path(path)
    lines = ["index,label,prediction,radius,correct,evals"]
    for o in outcomes:
        lines.append(f"{o.point_index},{o.true_label},{o.prediction},"
                     f"{repr(float(o.radius))},{int(o.correct)},{o.evals}")
    path.write_text("\n".join(lines) + "\n")
    return path


def load_outcomes_csv(path: str | Path) -> list[PointOutcome]:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0] != "index,label,prediction,radius,correct,evals":
        raise ValueError(f"{path}: unexpected outcomes header")
    out = []
    for ln in lines[1:]:
        if not ln.strip():
            continue
        idx, label, pred, radius, correct, evals = ln.split(",")
        out.append(PointOutcome(int(idx), int(label), int(pred), float(radius),
                                bool(int(correct)), int(evals)))
    return out
