"""Randomized-smoothing certification with smoothed weighted ensembling."""

from .datasets import Dataset, LabeledPoint, gen_gaussian_mixture, gen_rings, load_dataset, save_dataset, split
from .ensemble import (
    AdaptiveConfig,
    AdaptivePrediction,
    EnsembleWeights,
    SolveConfig,
    SweenModel,
    adaptive_certify,
    adaptive_predict,
    empirical_risk,
    ensemble_forward,
    load_sween_model,
    save_weights_file,
    solve_weights,
    sween_pipeline,
    sween_smoothed_mc,
)
from .evaluate import certify_dataset
from .metrics import (
    DEFAULT_RADIUS_GRID,
    GammaSpec,
    PointOutcome,
    RobustnessReport,
    average_report,
    gamma_index,
    radius_accuracy_curve,
    upper_envelope,
)
from .models import MlpParams, TrainConfig, accuracy, forward, load_model, save_model, train_gaussian_aug
from .numerics import (
    NoiseStreamKey,
    binomial_two_sided_pvalue,
    clopper_pearson_lower,
    gaussian_block,
    gaussian_sample,
    log_gamma,
    std_normal_cdf,
    std_normal_quantile,
)
from .smoothing import (
    ABSTAIN,
    CertificationResult,
    MCEstimate,
    certified_radius,
    certify,
    predict_smoothed,
    smoothed_linear_exact,
    smoothed_probs_mc,
)

__version__ = "0.1.0"
