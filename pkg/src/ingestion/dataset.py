# src/ingestion/dataset.py
"""Labeled feature matrix shared by the loaders and the classifier."""
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from ..errors import ValidationError

POSITIVE = "G"
NEGATIVE = "H"
LABELS = (POSITIVE, NEGATIVE)


@dataclass
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    columns: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=str)
        if self.features.ndim != 2 or self.features.shape[1] < 1:
            raise ValidationError("Features must be an (n, d) matrix with d >= 1")
        if self.labels.shape != (self.features.shape[0],):
            raise ValidationError("Label count must equal row count")
        if not np.all(np.isfinite(self.features)):
            raise ValidationError("Features must be finite")
        unknown = set(self.labels.tolist()) - set(LABELS)
        if unknown:
            raise ValidationError(f"Unknown labels: {sorted(unknown)}")

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    def rows(self, mask) -> "LabeledDataset":
        return LabeledDataset(self.features[mask], self.labels[mask], list(self.columns))

    def class_counts(self) -> Dict[str, int]:
        return {label: int(np.count_nonzero(self.labels == label)) for label in LABELS}
