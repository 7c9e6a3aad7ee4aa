"""Monte Carlo smoothing and l2-robustness certification.

A smoothed function averages a base probability function over Gaussian
input noise. Certification lower-bounds the smoothed top-class probability
from hard argmax votes with an exact binomial bound, then converts it to a
certified radius via the normal quantile, clipped to [0, D] where D is the
input-space diameter.

Base models enter as plain callables mapping a batch (n, d) to
probabilities (n, M); anything from a single MLP to a weighted ensemble
fits that shape.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .numerics import (
    NoiseStreamKey,
    PROB_CLAMP,
    binomial_two_sided_pvalue,
    clopper_pearson_lower,
    gaussian_block,
    std_normal_cdf,
    std_normal_quantile,
)

ProbFn = Callable[[np.ndarray], np.ndarray]

# Returned as the prediction when the vote bound cannot separate the top
# class from 1/2 at the requested confidence.
ABSTAIN = -1

_MC_CHUNK = 20_000


@dataclass
class MCEstimate:
    """Monte Carlo view of a smoothed function at one point."""

    class_means: np.ndarray            # (M,) mean of per-sample probability vectors
    vote_counts: Optional[np.ndarray]  # (M,) argmax tallies; None if noise wasn't shared
    samples: int
    sigma: float


@dataclass
class CertificationResult:
    prediction: int      # class index, or ABSTAIN
    p_lower: float       # Clopper-Pearson lower bound on the top vote probability
    radius: float        # certified l2 radius, clipped to [0, D]
    n0: int
    n: int
    alpha: float
    evals: int           # candidate-network forward passes consumed


def _clamp(p: float) -> float:
    return min(max(p, PROB_CLAMP), 1.0 - PROB_CLAMP)


def smoothed_probs_mc(prob_fn: ProbFn, x: np.ndarray, sigma: float, s: int,
                      key_base: NoiseStreamKey) -> MCEstimate:
    """s-sample estimate of the smoothed function at x.

    Sample j perturbs x with the noise stream at key_base.sample_index + j,
    so the estimate is independent of evaluation order and chunking.
    """
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    x = np.asarray(x, dtype=np.float64)
    mean = None
    votes = None
    done = 0
    while done < s:
        count = min(_MC_CHUNK, s - done)
        noise = gaussian_block(key_base.offset(samples=done), count, x.shape[0], sigma)
        probs = np.asarray(prob_fn(x[None, :] + noise))
        if probs.ndim != 2 or probs.shape[0] != count:
            raise ValueError("prob_fn must map (n, d) to (n, M)")
        if mean is None:
            mean = np.zeros(probs.shape[1])
            votes = np.zeros(probs.shape[1], dtype=np.int64)
        mean += probs.sum(axis=0)
        votes += np.bincount(np.argmax(probs, axis=1), minlength=probs.shape[1])
        done += count
    return MCEstimate(mean / s, votes, s, sigma)


def smoothed_linear_exact(w: np.ndarray, b: float, x: np.ndarray, sigma: float) -> float:
    """Closed-form smoothed positive-class probability of the binary hard
    classifier 1{w.x + b > 0}: Phi((w.x + b) / (sigma * ||w||))."""
    w = np.asarray(w, dtype=np.float64)
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        raise ValueError("degenerate weights: ||w|| must be > 0")
    if sigma <= 0.0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    margin = float(np.dot(w, np.asarray(x, dtype=np.float64)) + b)
    return std_normal_cdf(margin / (sigma * norm))


def certified_radius(p_top: float, p_runner: float, sigma: float, diameter: float) -> float:
    """Two-class certified radius sigma/2 * [Phi^-1(p_top) - Phi^-1(p_runner)],
    clipped to [0, diameter]. Probabilities are clamped away from {0, 1}."""
    gap = std_normal_quantile(_clamp(p_top)) - std_normal_quantile(_clamp(p_runner))
    return float(min(max(0.5 * sigma * gap, 0.0), diameter))


def certify(prob_fn: ProbFn, x: np.ndarray, sigma: float, n0: int, n: int, alpha: float,
            diameter: float, key_base: NoiseStreamKey,
            forwards_per_sample: int = 1) -> CertificationResult:
    """Two-stage certification of the induced smoothed classifier at x.

    Stage 1 picks the candidate class from n0 argmax votes; stage 2 takes n
    fresh votes (a disjoint sample-index range) and lower-bounds the
    candidate's vote probability. A bound above 1/2 certifies radius
    sigma * Phi^-1(p_lower); otherwise the procedure abstains.
    """
    if n0 < 1 or n < 1:
        raise ValueError(f"n0 and n must be >= 1, got n0={n0}, n={n}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if sigma <= 0.0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if diameter <= 0.0:
        raise ValueError(f"diameter must be > 0, got {diameter}")

    selection = smoothed_probs_mc(prob_fn, x, sigma, n0, key_base)
    c_hat = int(np.argmax(selection.vote_counts))
    estimation = smoothed_probs_mc(prob_fn, x, sigma, n, key_base.offset(samples=n0))
    votes = int(estimation.vote_counts[c_hat])
    p_lower = clopper_pearson_lower(votes, n, alpha)
    evals = (n0 + n) * forwards_per_sample
    if p_lower <= 0.5:
        return CertificationResult(ABSTAIN, p_lower, 0.0, n0, n, alpha, evals)
    radius = min(sigma * std_normal_quantile(_clamp(p_lower)), diameter)
    return CertificationResult(c_hat, p_lower, float(radius), n0, n, alpha, evals)


def predict_smoothed(prob_fn: ProbFn, x: np.ndarray, sigma: float, n_pred: int,
                     alpha: float, key_base: NoiseStreamKey) -> int:
    """Prediction without a radius: returns the top vote class if an exact
    two-sided binomial test on the top-two counts rejects a tie at level
    alpha, else ABSTAIN."""
    if n_pred < 2:
        raise ValueError(f"n_pred must be >= 2, got {n_pred}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    est = smoothed_probs_mc(prob_fn, x, sigma, n_pred, key_base)
    counts = est.vote_counts
    top = int(np.argmax(counts))
    c1 = int(counts[top])
    rest = counts.copy()
    rest[top] = -1
    c2 = int(counts[int(np.argmax(rest))])
    if binomial_two_sided_pvalue(c1, c1 + c2) <= alpha:
        return top
    return ABSTAIN


def mlp_prob_fn(model) -> ProbFn:
    """Adapter: MlpParams -> batch probability callable."""
    from .models import forward

    return lambda batch: forward(model, batch)
