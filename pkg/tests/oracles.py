"""Independent oracles for the test suite.

Everything here is deliberately written against stdlib primitives (erf,
comb, Fraction) or brute-force enumeration, never against the package's
own code paths, so a test failure always indicts the implementation.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


def erf_cdf(x: float) -> float:
    """Standard normal CDF straight from math.erfc."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def erf_survival(x: float) -> float:
    """P[Z > x], accurate for large positive x."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def quantile_by_bisection(p: float, lo: float = -12.0, hi: float = 12.0,
                          iters: int = 100) -> float:
    """Invert the erf-based CDF by bisection; resolution far below 1e-10.

    For p > 0.5 the comparison runs on the survival function (1 - p is
    exact there), which keeps the oracle accurate in the upper tail where
    the CDF itself saturates toward 1.
    """
    if p > 0.5:
        q = 1.0 - p
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if erf_survival(mid) > q:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if erf_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def binom_tail_exact(n: int, p: Fraction | float, k_min: int) -> float:
    """P[Binomial(n, p) >= k_min] with exact rational arithmetic."""
    p = Fraction(p).limit_denominator(10**12) if not isinstance(p, Fraction) else p
    q = 1 - p
    total = Fraction(0)
    for k in range(k_min, n + 1):
        total += math.comb(n, k) * p**k * q**(n - k)
    return float(total)


def smoothed_linear_prob(w, b: float, x, sigma: float) -> float:
    """Closed-form smoothed probability of 1{w.x + b > 0} under N(0, sigma^2 I)."""
    w = np.asarray(w, dtype=float)
    margin = float(np.dot(w, np.asarray(x, dtype=float)) + b)
    return erf_cdf(margin / (sigma * float(np.linalg.norm(w))))


def step_curve_area(radii, correct) -> float:
    """Area under r -> fraction(correct and radius >= r), integrated exactly
    segment by segment over the sorted breakpoints."""
    radii = np.asarray(radii, dtype=float)
    correct = np.asarray(correct, dtype=bool)
    n = len(radii)
    pts = np.sort(np.unique(np.concatenate(([0.0], radii[correct]))))
    area = 0.0
    for a, b in zip(pts, pts[1:]):
        height = np.sum(correct & (radii >= b)) / n
        # on (a, b] the curve equals the accuracy at radius b
        area += (b - a) * height
    return float(area)


def best_linear_accuracy_2d(features, labels, angles: int = 180, offsets: int = 81) -> float:
    """Brute-force the best 2-D linear rule (either sign) on a grid."""
    best = 0.0
    feats = np.asarray(features)
    labels = np.asarray(labels)
    span = float(np.abs(feats).max()) + 1e-9
    for t in np.linspace(0.0, math.pi, angles, endpoint=False):
        proj = feats @ np.array([math.cos(t), math.sin(t)])
        for b in np.linspace(-span, span, offsets):
            pred = (proj + b > 0).astype(int)
            acc = max(np.mean(pred == labels), np.mean(1 - pred == labels))
            best = max(best, float(acc))
    return best


def barycentric_grid(k: int, step: float = 0.01):
    """All simplex points with coordinates on a step grid (k <= 3)."""
    m = round(1.0 / step)
    if k == 1:
        return np.array([[1.0]])
    if k == 2:
        a = np.arange(m + 1) / m
        return np.stack([a, 1.0 - a], axis=1)
    if k == 3:
        pts = []
        for i in range(m + 1):
            for j in range(m + 1 - i):
                pts.append((i / m, j / m, (m - i - j) / m))
        return np.asarray(pts)
    raise ValueError("grid oracle only supports k <= 3")
