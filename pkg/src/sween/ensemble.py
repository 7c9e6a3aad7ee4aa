"""Smoothed weighted ensembling.

A weighted ensemble of candidate networks, with weights on the probability
simplex, is itself a probability function; smoothing it with Gaussian noise
is the same as taking the weighted sum of the candidates' smoothed
functions. That commutativity is what makes ensembles certifiable with the
standard machinery: the ensemble is just another base model.

Noise-lane convention: ensemble-level shared noise (certification,
shared-noise smoothing) stays on the caller's candidate_index lane (0 by
convention); per-candidate noise runs on lanes >= 1 — keyed by candidate
number (index + 1) where the draw belongs to a specific model (empirical
risk, per-candidate smoothing), or by evaluation rank inside
adaptive_predict, whose order is what must stay reproducible. Either way
the lanes never collide, so an adaptive pass followed by certification
reuses no noise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .datasets import Dataset
from .models import MlpParams, forward, load_model, train_gaussian_aug, TrainConfig
from .numerics import NoiseStreamKey, gaussian_grid, std_normal_quantile
from .smoothing import (
    CertificationResult,
    MCEstimate,
    ProbFn,
    certify,
    smoothed_probs_mc,
)

WEIGHTS_FORMAT_VERSION = 1


@dataclass
class EnsembleWeights:
    """Point on the K-simplex: w_k >= 0, sum w_k = 1."""

    w: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)

    @classmethod
    def uniform(cls, k: int) -> "EnsembleWeights":
        return cls(np.full(k, 1.0 / k))

    @classmethod
    def project(cls, raw: np.ndarray) -> "EnsembleWeights":
        w = np.maximum(np.asarray(raw, dtype=np.float64), 0.0)
        total = w.sum()
        if total <= 0.0:
            raise ValueError("cannot project all-zero weights onto the simplex")
        return cls(w / total)

    def validate(self) -> None:
        if (self.w < 0.0).any() or abs(self.w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights not on the simplex: {self.w}")


@dataclass
class SweenModel:
    candidates: list[MlpParams]
    weights: EnsembleWeights
    sigma: float

    def __post_init__(self):
        if not self.candidates:
            raise ValueError("need at least one candidate")
        dims = {(m.in_dim, m.num_classes) for m in self.candidates}
        if len(dims) != 1:
            raise ValueError(f"candidates disagree on input dim / classes: {dims}")
        if len(self.weights.w) != len(self.candidates):
            raise ValueError("weights length must equal number of candidates")

    @property
    def k(self) -> int:
        return len(self.candidates)

    @property
    def num_classes(self) -> int:
        return self.candidates[0].num_classes


@dataclass
class SolveConfig:
    mode: str = "erm"            # "erm" | "streaming"
    s: int = 8                   # noise samples per point (erm precompute)
    epochs: int = 500
    learning_rate: float = 0.5
    seed: int = 0
    loss: str = "cross_entropy"


@dataclass
class AdaptiveConfig:
    alpha: float = 0.05
    threshold: float = 0.95
    s_local: int = 100

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"threshold must lie in (0, 1), got {self.threshold}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.s_local < 1:
            raise ValueError(f"s_local must be >= 1, got {self.s_local}")


def ensemble_forward(candidates: list[MlpParams], weights: EnsembleWeights,
                     x: np.ndarray) -> np.ndarray:
    """Convex combination of candidate probability outputs."""
    if not candidates:
        raise ValueError("need at least one candidate")
    if len(weights.w) != len(candidates):
        raise ValueError("weights length must equal number of candidates")
    out = None
    for wk, model in zip(weights.w, candidates):
        p = forward(model, x)
        out = wk * p if out is None else out + wk * p
    return out


def ensemble_prob_fn(candidates: list[MlpParams], weights: EnsembleWeights) -> ProbFn:
    return lambda batch: ensemble_forward(candidates, weights, batch)


def sween_smoothed_mc(model: SweenModel, x: np.ndarray, s: int, key_base: NoiseStreamKey,
                      shared_noise: bool = True) -> MCEstimate:
    """Monte Carlo estimate of the smoothed ensemble at x.

    With shared noise the ensemble output is averaged over one noise
    stream (votes are ensemble argmaxes). Without it, each candidate is
    smoothed on its own lane and the class means are combined afterwards;
    votes are undefined in that mode.
    """
    if shared_noise:
        return smoothed_probs_mc(ensemble_prob_fn(model.candidates, model.weights),
                                 x, model.sigma, s, key_base)
    mean = np.zeros(model.num_classes)
    for k0, (wk, cand) in enumerate(zip(model.weights.w, model.candidates)):
        key = replace(key_base, candidate_index=key_base.candidate_index + 1 + k0)
        est = smoothed_probs_mc(lambda b, m=cand: forward(m, b), x, model.sigma, s, key)
        mean += wk * est.class_means
    return MCEstimate(mean, None, s, model.sigma)


def _candidate_mc_means(candidates: list[MlpParams], eval_set: Dataset, sigma: float,
                        s: int, seed: int) -> np.ndarray:
    """G[i, k, :]: s-sample smoothed class means per point and candidate,
    with noise streams keyed by (seed, point i, sample j, candidate number)."""
    n, d = eval_set.features.shape
    m = eval_set.num_classes
    out = np.empty((n, len(candidates), m))
    chunk = max(1, 200_000 // max(s, 1))
    for k0, cand in enumerate(candidates):
        for start in range(0, n, chunk):
            stop = min(start + chunk, n)
            pts = np.repeat(np.arange(start, stop, dtype=np.int64), s)
            smp = np.tile(np.arange(s, dtype=np.int64), stop - start)
            noise = gaussian_grid(seed, pts, smp, np.full(pts.size, k0 + 1, dtype=np.int64),
                                  d, sigma)
            xs = np.repeat(eval_set.features[start:stop], s, axis=0) + noise
            probs = forward(cand, xs).reshape(stop - start, s, m)
            out[start:stop, k0] = probs.mean(axis=1)
    return out


def empirical_risk(candidates: list[MlpParams], weights: EnsembleWeights, eval_set: Dataset,
                   sigma: float, s: int, seed: int) -> float:
    """Average cross-entropy of the weighted s-sample smoothed estimates,
    -ln(max(p_y, 1e-12)) per point."""
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    if len(eval_set) == 0:
        raise ValueError("eval_set is empty")
    g = _candidate_mc_means(candidates, eval_set, sigma, s, seed)
    mixed = np.einsum("ikm,k->im", g, weights.w)
    py = mixed[np.arange(len(eval_set)), eval_set.labels]
    return float(np.mean(-np.log(np.maximum(py, 1e-12))))


def _risk_and_grad(a: np.ndarray, w: np.ndarray) -> tuple[float, np.ndarray]:
    """a[i, k] = candidate k's smoothed mass on point i's true class."""
    p = np.maximum(a @ w, 1e-12)
    risk = float(np.mean(-np.log(p)))
    grad = -np.mean(a / p[:, None], axis=0)
    return risk, grad


def solve_weights(candidates: list[MlpParams], eval_set: Dataset, sigma: float,
                  cfg: SolveConfig) -> EnsembleWeights:
    """Minimize held-out cross-entropy of the smoothed ensemble over the simplex.

    erm mode precomputes per-point Monte Carlo class means once and runs
    exponentiated-gradient descent on the resulting fixed convex objective
    (learning-rate halving on any objective increase). streaming mode
    parameterizes the weights by a softmax over free reals and takes
    full-batch gradient steps on freshly drawn noise each epoch.
    """
    if not candidates:
        raise ValueError("need at least one candidate")
    if len(eval_set) == 0:
        raise ValueError("eval_set is empty")
    if cfg.loss != "cross_entropy":
        raise ValueError(f"unsupported loss {cfg.loss!r}")
    if cfg.mode not in ("erm", "streaming"):
        raise ValueError(f"unknown mode {cfg.mode!r}")
    k = len(candidates)
    if k == 1:
        return EnsembleWeights(np.array([1.0]))

    if cfg.mode == "erm":
        if cfg.s < 1:
            raise ValueError(f"erm mode needs s >= 1, got {cfg.s}")
        g = _candidate_mc_means(candidates, eval_set, sigma, cfg.s, cfg.seed)
        a = g[np.arange(len(eval_set)), :, eval_set.labels]
        w = np.full(k, 1.0 / k)
        lr = cfg.learning_rate
        risk, grad = _risk_and_grad(a, w)
        for _ in range(cfg.epochs):
            step = np.exp(-lr * (grad - grad.min()))
            w_new = w * step
            w_new /= w_new.sum()
            risk_new, grad_new = _risk_and_grad(a, w_new)
            if not math.isfinite(risk_new):
                raise RuntimeError("weight solve diverged: non-finite objective")
            if risk_new > risk:
                lr *= 0.5
                continue
            converged = risk - risk_new < 1e-10
            w, risk, grad = w_new, risk_new, grad_new
            if converged:
                break
        return EnsembleWeights.project(w)

    # streaming: one shared augmented draw per point per epoch
    n, d = eval_set.features.shape
    m = eval_set.num_classes
    u = np.zeros(k)
    labels = eval_set.labels
    pts = np.arange(n, dtype=np.int64)
    lr = cfg.learning_rate
    history: list[float] = []
    for epoch in range(cfg.epochs):
        noise = gaussian_grid(cfg.seed, pts, np.full(n, epoch, dtype=np.int64),
                              np.zeros(n, dtype=np.int64), d, sigma)
        xs = eval_set.features + noise
        a = np.stack([forward(cand, xs)[np.arange(n), labels] for cand in candidates], axis=1)
        we = np.exp(u - u.max())
        w = we / we.sum()
        risk, grad_w = _risk_and_grad(a, w)
        if not math.isfinite(risk):
            raise RuntimeError(f"weight solve diverged at epoch {epoch}")
        grad_u = w * (grad_w - float(np.dot(w, grad_w)))
        u -= lr * grad_u
        history.append(risk)
        if len(history) >= 20:
            recent = float(np.mean(history[-10:]))
            previous = float(np.mean(history[-20:-10]))
            if abs(recent - previous) < 1e-6:
                break
    we = np.exp(u - u.max())
    return EnsembleWeights.project(we / we.sum())


@dataclass
class AdaptivePrediction:
    prediction: int
    class_means: np.ndarray
    prefix_len: int
    evals: int
    order: list[int] = field(default_factory=list)  # candidate indices, weight-descending


def adaptive_predict(model: SweenModel, x: np.ndarray, cfg: AdaptiveConfig,
                     key_base: NoiseStreamKey) -> AdaptivePrediction:
    """Early-exit evaluation of the ensemble in descending weight order.

    Candidates are evaluated one at a time (each local prediction is an
    s_local-sample smoothed estimate). The loop stops as soon as the
    running weighted mean is confidently decisive: above the threshold
    after the first candidate, or above 1/2 by a weighted-variance z-margin
    afterwards, or when every positive-weight candidate has been used.
    """
    w = model.weights.w
    z = std_normal_quantile(1.0 - cfg.alpha / 2.0)
    order = [int(i) for i in np.argsort(-w, kind="stable") if w[i] > 0.0]
    k_eff = len(order)

    weight_sum = 0.0
    weight_sq_sum = 0.0
    weighted = np.zeros(model.num_classes)
    locals_: list[np.ndarray] = []
    used: list[float] = []
    evals = 0
    for i, cand_idx in enumerate(order, start=1):
        # local noise lane follows the evaluation rank, so permuting the
        # candidate list together with the weights changes nothing
        key = replace(key_base, candidate_index=key_base.candidate_index + i)
        est = smoothed_probs_mc(lambda b, m=model.candidates[cand_idx]: forward(m, b),
                                x, model.sigma, cfg.s_local, key)
        evals += cfg.s_local
        wk = float(w[cand_idx])
        locals_.append(est.class_means)
        used.append(wk)
        weight_sum += wk
        weight_sq_sum += wk * wk
        weighted += wk * est.class_means
        p_hat = weighted / weight_sum
        top = int(np.argmax(p_hat))

        if i == k_eff:
            return AdaptivePrediction(top, p_hat, i, evals, order)
        if i == 1:
            if p_hat[top] > cfg.threshold:
                return AdaptivePrediction(top, p_hat, i, evals, order)
            continue
        # 1 < i < K: weighted-variance early exit
        devs = np.array([pl[top] for pl in locals_]) - p_hat[top]
        var = float(np.dot(used, devs * devs) / weight_sum)
        margin = z * (math.sqrt(weight_sq_sum) / weight_sum) * math.sqrt(max(var, 0.0))
        if p_hat[top] > 0.5 + margin:
            return AdaptivePrediction(top, p_hat, i, evals, order)
    raise AssertionError("unreachable: loop exits at i == k_eff")


def adaptive_certify(model: SweenModel, x: np.ndarray, cfg: AdaptiveConfig,
                     n0: int, n: int, alpha: float, diameter: float,
                     key_base: NoiseStreamKey) -> CertificationResult:
    """Certify the weight-renormalized prefix sub-ensemble chosen by
    adaptive_predict; evals counts the adaptive phase too."""
    pred = adaptive_predict(model, x, cfg, key_base)
    chosen = pred.order[:pred.prefix_len]
    sub_candidates = [model.candidates[i] for i in chosen]
    sub_weights = EnsembleWeights.project(model.weights.w[chosen])
    result = certify(ensemble_prob_fn(sub_candidates, sub_weights), x, model.sigma,
                     n0, n, alpha, diameter, key_base,
                     forwards_per_sample=len(chosen))
    return CertificationResult(result.prediction, result.p_lower, result.radius,
                               n0, n, alpha, result.evals + pred.evals)


def sween_pipeline(train: Dataset, weight_eval: Dataset, archs: list[list[int]],
                   train_cfg: TrainConfig, solve_cfg: SolveConfig, sigma: float) -> SweenModel:
    """Train every candidate on the train split, then solve the ensemble
    weights on the held-out split. Candidate k trains with seed
    train_cfg.seed + k, so duplicate architectures still yield distinct
    models."""
    if not archs:
        raise ValueError("need at least one architecture")
    candidates = []
    for k0, arch in enumerate(archs):
        cfg_k = replace(train_cfg, sigma=sigma, seed=train_cfg.seed + k0)
        candidates.append(train_gaussian_aug(train, list(arch), cfg_k))
    if len(candidates) == 1:
        weights = EnsembleWeights(np.array([1.0]))
    else:
        weights = solve_weights(candidates, weight_eval, sigma, solve_cfg)
    return SweenModel(candidates, weights, sigma)


def save_weights_file(path: str | Path, sigma: float, candidate_paths: list[str],
                      weights: EnsembleWeights) -> Path:
    path = Path(path)
    doc = {
        "version": WEIGHTS_FORMAT_VERSION,
        "sigma": float(sigma),
        "candidates": [str(p) for p in candidate_paths],
        "weights": [float(v) for v in weights.w],
    }
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path


def load_weights_file(path: str | Path) -> tuple[float, list[Path], EnsembleWeights]:
    """Read a weights file; candidate paths resolve relative to its directory."""
    path = Path(path)
    doc = json.loads(path.read_text())
    version = doc.get("version")
    if version != WEIGHTS_FORMAT_VERSION:
        raise ValueError(f"{path}: weights format version {version!r}, "
                         f"this reader supports {WEIGHTS_FORMAT_VERSION}")
    weights = EnsembleWeights(np.asarray(doc["weights"], dtype=np.float64))
    weights.validate()
    base = path.parent
    cand_paths = [Path(p) if Path(p).is_absolute() else base / p for p in doc["candidates"]]
    return float(doc["sigma"]), cand_paths, weights


def load_sween_model(path: str | Path) -> SweenModel:
    sigma, cand_paths, weights = load_weights_file(path)
    return SweenModel([load_model(p) for p in cand_paths], weights, sigma)
