"""Shared numerical primitives.

Standard-normal CDF/quantile, exact binomial confidence machinery, and a
counter-based Gaussian noise generator whose streams are addressed by a
(seed, point, sample, candidate) key. Every function here is pure, so the
rest of the package can evaluate points in any order (or in parallel)
without changing a single random draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

_SQRT1_2 = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Probabilities are clamped to this range before hitting the quantile; the
# quantile diverges at 0 and 1 and downstream radii get clipped anyway.
PROB_CLAMP = 1e-12


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF, accurate in both tails via erfc."""
    return 0.5 * math.erfc(-x * _SQRT1_2)


def _std_normal_pdf(x: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


# Acklam's rational approximation of the normal quantile (abs err ~1e-9),
# used as the starting point for Newton refinement.
_ACKLAM_A = (-3.969683028665376e+01, 2.209460984245205e+02,
             -2.759285104469687e+02, 1.383577518672690e+02,
             -3.066479806614716e+01, 2.506628277459239e+00)
_ACKLAM_B = (-5.447609879822406e+01, 1.615858368580409e+02,
             -1.556989798598866e+02, 6.680131188771972e+01,
             -1.328068155288572e+01)
_ACKLAM_C = (-7.784894002430293e-03, -3.223964580411365e-01,
             -2.400758277161838e+00, -2.549732539343734e+00,
             4.374664141464968e+00, 2.938163982698783e+00)
_ACKLAM_D = (7.784695709041462e-03, 3.224671290700398e-01,
             2.445134137142996e+00, 3.754408661907416e+00)


def _acklam(p: float) -> float:
    a, b, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    if p < 0.02425:
        # lower-tail branch; only ever called with p <= 0.5
        q = math.sqrt(-2.0 * math.log(p))
        return ((((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
                / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0))
    q = p - 0.5
    r = q * q
    return ((((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0))


def std_normal_quantile(p: float) -> float:
    """Inverse standard-normal CDF, absolute error well below 1e-8.

    Rational approximation refined by two Newton steps against the
    erfc-based CDF; evaluated on the lower tail so no precision is lost
    near p = 1 (1 - p is exact there).
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile requires 0 < p < 1, got {p}")
    if p > 0.5:
        return -std_normal_quantile(1.0 - p)
    x = _acklam(p)
    for _ in range(2):
        err = std_normal_cdf(x) - p
        x -= err / _std_normal_pdf(x)
    return x


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    if not x > 0.0:
        raise ValueError(f"log_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def _log_binom_coeffs(n: int, k_lo: int, k_hi: int) -> np.ndarray:
    """log C(n, k) for k in [k_lo, k_hi], via one lgamma anchor + recurrence."""
    base = math.lgamma(n + 1) - math.lgamma(k_lo + 1) - math.lgamma(n - k_lo + 1)
    k = np.arange(k_lo, k_hi + 1, dtype=np.float64)
    # logC(n, k+1) - logC(n, k) = ln(n - k) - ln(k + 1)
    steps = np.log(n - k[:-1]) - np.log(k[:-1] + 1.0)
    return base + np.concatenate(([0.0], np.cumsum(steps)))


def _binom_mass_sum(n: int, k_lo: int, log_coeffs: np.ndarray, p: float) -> float:
    """Sum of Binomial(n, p) masses for k_lo <= k < k_lo + len(log_coeffs)."""
    if p <= 0.0:
        return 1.0 if k_lo == 0 else 0.0
    if p >= 1.0:
        return 1.0 if k_lo + log_coeffs.size > n else 0.0
    k = np.arange(k_lo, k_lo + log_coeffs.size, dtype=np.float64)
    logs = log_coeffs + k * math.log(p) + (n - k) * math.log1p(-p)
    m = logs.max()
    return float(math.exp(m) * np.exp(logs - m).sum())


def clopper_pearson_lower(successes: int, trials: int, alpha: float) -> float:
    """Exact one-sided lower confidence bound on a binomial proportion.

    Returns the p solving P[Binomial(trials, p) >= successes] = alpha,
    found by bisection on the exact upper-tail probability (accumulated in
    log space, summing whichever side of the distribution has fewer terms).
    Returns 0 when successes = 0.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes must lie in [0, {trials}], got {successes}")
    if successes == 0:
        return 0.0

    n, s = trials, successes
    if s > n - s:
        coeffs = _log_binom_coeffs(n, s, n)

        def tail(p: float) -> float:
            return _binom_mass_sum(n, s, coeffs, p)
    else:
        coeffs = _log_binom_coeffs(n, 0, s - 1)

        def tail(p: float) -> float:
            return 1.0 - _binom_mass_sum(n, 0, coeffs, p)

    lo, hi = 0.0, 1.0
    while hi - lo > 1e-15:
        mid = 0.5 * (lo + hi)
        if tail(mid) < alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def binomial_two_sided_pvalue(successes: int, trials: int) -> float:
    """Exact two-sided p-value for H0: p = 1/2.

    By symmetry of the null this is min(1, 2 * P[X >= max(s, n-s)]).
    Computed with integer arithmetic for moderate n (correctly rounded),
    log-space accumulation beyond that.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes must lie in [0, {trials}], got {successes}")
    n = trials
    m = max(successes, n - successes)
    if n <= 2000:
        num = 2 * sum(math.comb(n, k) for k in range(m, n + 1))
        return min(1.0, num / (1 << n))
    coeffs = _log_binom_coeffs(n, m, n)
    tail = _binom_mass_sum(n, m, coeffs, 0.5)
    return min(1.0, 2.0 * tail)


# ---------------------------------------------------------------------------
# Counter-based Gaussian noise streams (Philox 4x64-10 + Box-Muller).
#
# The noise sample for (seed, point i, sample j, candidate k) is a pure
# function of those four integers: they are loaded into the Philox counter
# words, so changing evaluation order or thread count cannot change any draw.
# ---------------------------------------------------------------------------

_PHILOX_M0 = 0xD2E7470EE14C6C93
_PHILOX_M1 = 0xCA5A826395121157
_PHILOX_W0 = 0x9E3779B97F4A7C15
_PHILOX_W1 = 0xBB67AE8584CAA73B
_KEY_CONST = 0x14057B7EF767814F

_U64 = np.uint64
_U32_SHIFT = _U64(32)
_MASK32 = _U64(0xFFFFFFFF)
_U11_SHIFT = _U64(11)
_TWO_NEG53 = 2.0 ** -53


def _mulhilo64(a: int, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """128-bit product of scalar a and uint64 array b as (hi, lo) words."""
    a_lo = _U64(a & 0xFFFFFFFF)
    a_hi = _U64(a >> 32)
    b_lo = b & _MASK32
    b_hi = b >> _U32_SHIFT
    lo_lo = a_lo * b_lo
    mid1 = a_hi * b_lo
    mid2 = a_lo * b_hi
    carry = ((lo_lo >> _U32_SHIFT) + (mid1 & _MASK32) + (mid2 & _MASK32)) >> _U32_SHIFT
    hi = a_hi * b_hi + (mid1 >> _U32_SHIFT) + (mid2 >> _U32_SHIFT) + carry
    lo = _U64(a & 0xFFFFFFFFFFFFFFFF) * b
    return hi, lo


def _philox_4x64_10(c0, c1, c2, c3, key0: int):
    """Ten Philox rounds over vectorized counter words; returns 4 uint64 arrays."""
    k0 = key0 & 0xFFFFFFFFFFFFFFFF
    k1 = _KEY_CONST
    for rnd in range(10):
        hi0, lo0 = _mulhilo64(_PHILOX_M0, c0)
        hi1, lo1 = _mulhilo64(_PHILOX_M1, c2)
        c0 = hi1 ^ c1 ^ _U64(k0)
        c1 = lo1
        c2 = hi0 ^ c3 ^ _U64(k1)
        c3 = lo0
        if rnd < 9:
            k0 = (k0 + _PHILOX_W0) & 0xFFFFFFFFFFFFFFFF
            k1 = (k1 + _PHILOX_W1) & 0xFFFFFFFFFFFFFFFF
    return c0, c1, c2, c3


@dataclass(frozen=True)
class NoiseStreamKey:
    """Address of one independent Gaussian stream.

    The same key always produces the identical sample; distinct keys give
    statistically independent streams.
    """

    global_seed: int
    point_index: int = 0
    sample_index: int = 0
    candidate_index: int = 0

    def __post_init__(self):
        for name in ("point_index", "sample_index", "candidate_index"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def offset(self, samples: int = 0, points: int = 0, candidates: int = 0) -> "NoiseStreamKey":
        return replace(
            self,
            sample_index=self.sample_index + samples,
            point_index=self.point_index + points,
            candidate_index=self.candidate_index + candidates,
        )


def _uniforms_to_normals(words: np.ndarray) -> np.ndarray:
    """Box-Muller over pairs of 53-bit uniforms; words shape (..., 2m) -> same shape."""
    u = (np.right_shift(words, _U11_SHIFT).astype(np.float64) + 0.5) * _TWO_NEG53
    u0 = u[..., 0::2]
    u1 = u[..., 1::2]
    r = np.sqrt(-2.0 * np.log(u0))
    theta = (2.0 * math.pi) * u1
    out = np.empty_like(u)
    out[..., 0::2] = r * np.cos(theta)
    out[..., 1::2] = r * np.sin(theta)
    return out


def _normal_grid(global_seed: int, points: np.ndarray, samples: np.ndarray,
                 candidates: np.ndarray, dim: int) -> np.ndarray:
    """Standard-normal matrix, one row per (point, sample, candidate) triple."""
    n = points.shape[0]
    blocks = (dim + 3) // 4
    rep = np.repeat
    w0 = np.tile(np.arange(blocks, dtype=np.uint64), n)
    w1 = rep(samples.astype(np.uint64), blocks)
    w2 = rep(points.astype(np.uint64), blocks)
    w3 = rep(candidates.astype(np.uint64), blocks)
    x0, x1, x2, x3 = _philox_4x64_10(w0, w1, w2, w3, global_seed)
    words = np.stack([x0, x1, x2, x3], axis=-1).reshape(n, 4 * blocks)
    return _uniforms_to_normals(words)[:, :dim]


def gaussian_grid(global_seed: int, point_indices, sample_indices,
                  candidate_indices, dim: int, sigma: float) -> np.ndarray:
    """N(0, sigma^2 I) rows for broadcastable index arrays.

    Row r equals gaussian_sample(NoiseStreamKey(global_seed, points[r],
    samples[r], candidates[r]), dim, sigma) exactly.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    points, samples, candidates = np.broadcast_arrays(
        np.asarray(point_indices, dtype=np.int64),
        np.asarray(sample_indices, dtype=np.int64),
        np.asarray(candidate_indices, dtype=np.int64),
    )
    if points.ndim != 1:
        raise ValueError("index arrays must be one-dimensional")
    if points.size and (points.min() < 0 or samples.min() < 0 or candidates.min() < 0):
        raise ValueError("stream indices must be >= 0")
    z = _normal_grid(global_seed & 0xFFFFFFFFFFFFFFFF, points, samples, candidates, dim)
    return z * sigma


def gaussian_sample(key: NoiseStreamKey, dim: int, sigma: float) -> np.ndarray:
    """The deterministic N(0, sigma^2 I) draw addressed by `key`."""
    if sigma <= 0.0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    return gaussian_grid(key.global_seed, [key.point_index], [key.sample_index],
                         [key.candidate_index], dim, sigma)[0]


def gaussian_block(key: NoiseStreamKey, count: int, dim: int, sigma: float) -> np.ndarray:
    """Rows j = 0..count-1 of the streams at sample_index + j.

    Bitwise identical to stacking `count` individual gaussian_sample calls,
    but generated in one vectorized pass.
    """
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    samples = key.sample_index + np.arange(count, dtype=np.int64)
    return gaussian_grid(key.global_seed, np.full(count, key.point_index, dtype=np.int64),
                         samples, np.full(count, key.candidate_index, dtype=np.int64),
                         dim, sigma)
