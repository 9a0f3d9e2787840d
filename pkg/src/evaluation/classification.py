# src/evaluation/classification.py
"""Density-based Bayes classifier with ROC summaries at fixed false-positive rates."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from ..errors import DomainError, EstimationError, ValidationError, VineKDEError
from ..estimation.baseline import mvkde_baseline
from ..estimation.vinefit import FitOptions, eval_vine_density, fit_vine
from ..ingestion.dataset import LABELS, NEGATIVE, POSITIVE, LabeledDataset

logger = logging.getLogger(__name__)

LOW_FPR_TARGETS = (0.01, 0.02, 0.05)
HIGH_FPR_TARGETS = (0.1, 0.2)


class Estimator(str, Enum):
    VINE = "vine"
    MVKDE = "mvkde"


def split_positional(dataset: LabeledDataset, fraction: float) -> Tuple[LabeledDataset, LabeledDataset]:
    """First floor(n * fraction) rows for training, the rest for testing; no shuffling."""
    if not 0.0 < fraction < 1.0:
        raise DomainError(f"Split fraction must lie in (0, 1), got {fraction}")
    cut = int(np.floor(dataset.n * fraction))
    return dataset.rows(slice(0, cut)), dataset.rows(slice(cut, None))


def subsample_per_class(dataset: LabeledDataset, k: int) -> LabeledDataset:
    """Keep the first k rows of each class, in original order."""
    if k < 1:
        raise DomainError(f"Subsample size must be positive, got {k}")
    keep = np.zeros(dataset.n, dtype=bool)
    for label in LABELS:
        idx = np.flatnonzero(dataset.labels == label)[:k]
        keep[idx] = True
    return dataset.rows(keep)


def bayes_posterior_counted(f_g, f_h, pi_g: float, pi_h: Optional[float] = None) -> Tuple[np.ndarray, int]:
    """
    pi_G f_G / (pi_G f_G + pi_H f_H). Where the denominator is zero the prior
    pi_G is returned; the number of such points is the second value.
    """
    if pi_h is None:
        pi_h = 1.0 - pi_g
    if not (0.0 <= pi_g <= 1.0 and 0.0 <= pi_h <= 1.0) or abs(pi_g + pi_h - 1.0) > 1e-12:
        raise DomainError(f"Priors must be probabilities summing to 1, got ({pi_g}, {pi_h})")
    f_g = np.asarray(f_g, dtype=float)
    f_h = np.asarray(f_h, dtype=float)
    if np.any(f_g < 0) or np.any(f_h < 0):
        raise DomainError("Class densities must be nonnegative")
    numerator = pi_g * f_g
    denominator = numerator + pi_h * f_h
    empty = ~(denominator > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        posterior = np.where(empty, pi_g, numerator / np.where(empty, 1.0, denominator))
    return posterior, int(np.count_nonzero(empty))


def bayes_posterior(f_g, f_h, pi_g: float, pi_h: Optional[float] = None):
    posterior, fallbacks = bayes_posterior_counted(f_g, f_h, pi_g, pi_h)
    if fallbacks:
        logger.warning(f"Both class densities vanished at {fallbacks} point(s); using the prior")
    return posterior if posterior.ndim else float(posterior)


class RocPoint(BaseModel):
    threshold: float
    fpr: float
    tpr: float


class RocSummary(BaseModel):
    roc: List[RocPoint]
    tpr_at_fpr: Dict[str, float]
    loacc: float
    highacc: float
    n_positive: int
    n_negative: int


def _tpr_at(fpr: np.ndarray, tpr: np.ndarray, target: float) -> float:
    return float(tpr[fpr <= target + 1e-12].max())


def roc_and_summary(
        posteriors, labels, fpr_targets: Sequence[float] = LOW_FPR_TARGETS + HIGH_FPR_TARGETS
) -> RocSummary:
    """
    ROC over thresholds alpha = distinct posteriors plus {0, 1}, descending;
    a row is classified G when its posterior exceeds alpha. TPR at a target
    FPR is the best TPR among points whose FPR does not exceed the target.
    """
    posteriors = np.asarray(posteriors, dtype=float)
    labels = np.asarray(labels, dtype=str)
    positive = posteriors[labels == POSITIVE]
    negative = posteriors[labels == NEGATIVE]
    if positive.size == 0 or negative.size == 0:
        raise ValidationError("ROC needs at least one G and one H label")

    thresholds = np.unique(np.concatenate([posteriors, [0.0, 1.0]]))[::-1]
    sorted_pos = np.sort(positive)
    sorted_neg = np.sort(negative)
    tpr = (positive.size - np.searchsorted(sorted_pos, thresholds, side="right")) / positive.size
    fpr = (negative.size - np.searchsorted(sorted_neg, thresholds, side="right")) / negative.size

    targets = sorted(set(fpr_targets) | set(LOW_FPR_TARGETS) | set(HIGH_FPR_TARGETS))
    at = {t: _tpr_at(fpr, tpr, t) for t in targets}
    return RocSummary(
        roc=[RocPoint(threshold=float(a), fpr=float(f), tpr=float(t)) for a, f, t in zip(thresholds, fpr, tpr)],
        tpr_at_fpr={repr(float(t)): at[t] for t in sorted(set(fpr_targets))},
        loacc=float(np.mean([at[t] for t in LOW_FPR_TARGETS])),
        highacc=float(np.mean([at[t] for t in HIGH_FPR_TARGETS])),
        n_positive=int(positive.size),
        n_negative=int(negative.size),
    )


class ClassificationOptions(BaseModel):
    estimator: Estimator = Estimator.VINE
    margin_bandwidth_multiplier: float = Field(2.0, gt=0)
    independence_test: bool = True
    independence_level: float = Field(0.05, gt=0, lt=1)
    prior_g: float = Field(0.5, ge=0, le=1)
    fpr_targets: List[float] = list(LOW_FPR_TARGETS + HIGH_FPR_TARGETS)
    threads: int = Field(1, ge=1)
    chunk_size: int = Field(1024, ge=1)


@dataclass
class ClassificationResult:
    summary: Dict
    posteriors: np.ndarray
    labels: np.ndarray
    f_g: np.ndarray
    f_h: np.ndarray
    roc: Optional[RocSummary] = None


class ClassDensityFitter:
    def __init__(self, options: ClassificationOptions):
        self.options = options
        self.logger = logging.getLogger(__name__)

    def fit(self, label: str, features: np.ndarray):
        """Fit one class model; returns a callable density."""
        self.logger.info(f"Fitting {self.options.estimator.value} density for class {label}: n={features.shape[0]}")
        try:
            if self.options.estimator == Estimator.MVKDE:
                return mvkde_baseline(features)
            model = fit_vine(features, FitOptions(
                margin_bandwidth_multiplier=self.options.margin_bandwidth_multiplier,
                independence_test=self.options.independence_test,
                independence_level=self.options.independence_level,
                threads=self.options.threads,
                chunk_size=self.options.chunk_size,
            ))
            return lambda x: eval_vine_density(model, x, self.options.chunk_size, self.options.threads)
        except ValidationError as e:
            self.logger.error(f"Class {label} fit failed: {e}")
            raise ValidationError(f"Class {label}: {e}") from e
        except VineKDEError as e:
            self.logger.error(f"Class {label} fit failed: {e}")
            raise EstimationError(f"Class {label}: {e}") from e


def run_classification(
        train: LabeledDataset, test: LabeledDataset, options: Optional[ClassificationOptions] = None
) -> ClassificationResult:
    """Fit one density per class on train, score test rows by posterior P(G | x)."""
    options = options or ClassificationOptions()
    counts = train.class_counts()
    if counts[POSITIVE] == 0 or counts[NEGATIVE] == 0:
        raise ValidationError(f"Both classes must be present in the training data, got {counts}")
    if test.features.shape[1] != train.features.shape[1]:
        raise ValidationError("Train and test feature counts differ")

    fitter = ClassDensityFitter(options)
    class_rows = [(label, train.features[train.labels == label]) for label in LABELS]
    if options.threads > 1:
        with ThreadPoolExecutor(max_workers=2) as executor:
            density_g, density_h = executor.map(lambda item: fitter.fit(*item), class_rows)
    else:
        density_g, density_h = (fitter.fit(*item) for item in class_rows)

    f_g = np.asarray(density_g(test.features), dtype=float)
    f_h = np.asarray(density_h(test.features), dtype=float)
    posteriors, fallbacks = bayes_posterior_counted(f_g, f_h, options.prior_g)
    if fallbacks:
        logger.warning(f"Both class densities vanished at {fallbacks} test row(s); using the prior")
    roc = roc_and_summary(posteriors, test.labels, options.fpr_targets)
    predicted_g = posteriors > 0.5
    accuracy = float(np.mean(predicted_g == (test.labels == POSITIVE)))
    test_counts = test.class_counts()
    summary = {
        "estimator": options.estimator.value,
        "tpr_at_fpr": roc.tpr_at_fpr,
        "loacc": roc.loacc,
        "highacc": roc.highacc,
        "accuracy_at_half": accuracy,
        "prior_g": options.prior_g,
        "posterior_fallbacks": fallbacks,
        "counts": {
            "train": train.n,
            "test": test.n,
            "train_g": counts[POSITIVE],
            "train_h": counts[NEGATIVE],
            "test_g": test_counts[POSITIVE],
            "test_h": test_counts[NEGATIVE],
        },
    }
    logger.info(f"Classification finished: loacc={roc.loacc:.4f}, highacc={roc.highacc:.4f}")
    return ClassificationResult(
        summary=summary, posteriors=posteriors, labels=test.labels, f_g=f_g, f_h=f_h, roc=roc
    )
