# src/ingestion/csv_loader.py
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..errors import DataFormatError
from .dataset import LabeledDataset

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
LABEL_MAP = {"g": "G", "h": "H"}


def _read_frame(path, header: bool = True, names: Optional[Sequence[str]] = None) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Input file not found: {path}")
    try:
        frame = pd.read_csv(
            path,
            header=0 if header else None,
            names=list(names) if names else None,
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataFormatError(f"Cannot parse CSV {path}: {e}") from e
    if frame.shape[0] == 0:
        raise DataFormatError(f"CSV {path} has no data rows")
    return frame


def _numeric(frame: pd.DataFrame, columns: Sequence[str], first_line: int) -> np.ndarray:
    out = np.empty((frame.shape[0], len(columns)))
    for j, column in enumerate(columns):
        raw = frame[column].str.strip()
        values = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=float)
        bad = ~np.isfinite(values)
        if np.any(bad):
            row = int(np.flatnonzero(bad)[0])
            raise DataFormatError(
                f"Non-numeric or non-finite value {raw.iloc[row]!r} at line {row + first_line}, column {column!r}",
                row=row + first_line,
                column=column,
            )
        out[:, j] = values
    return out


def read_numeric_csv(path) -> Tuple[np.ndarray, List[str]]:
    """Read a headed CSV of reals; returns (matrix, column names)."""
    frame = _read_frame(path)
    columns = [str(c) for c in frame.columns]
    return _numeric(frame, columns, first_line=2), columns


def write_numeric_csv(path, matrix, columns: Sequence[str]) -> None:
    frame = pd.DataFrame(np.asarray(matrix, dtype=float), columns=list(columns))
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def load_labeled_csv(
        path,
        label_column: str = "class",
        header: bool = True,
        column_names: Optional[Sequence[str]] = None,
) -> LabeledDataset:
    """
    Read features and a g/h label column. Labels are normalized to G/H and
    row order is preserved.
    """
    frame = _read_frame(path, header=header, names=None if header else column_names)
    first_line = 2 if header else 1
    if label_column not in frame.columns:
        raise DataFormatError(f"Label column {label_column!r} not found", column=label_column)

    raw_labels = frame[label_column].str.strip().str.lower()
    unknown = ~raw_labels.isin(LABEL_MAP.keys())
    if unknown.any():
        row = int(np.flatnonzero(unknown.to_numpy())[0])
        raise DataFormatError(
            f"Unknown label {frame[label_column].iloc[row]!r} at line {row + first_line}",
            row=row + first_line,
            column=label_column,
        )
    labels = raw_labels.map(LABEL_MAP).to_numpy(dtype=str)

    feature_columns = [str(c) for c in frame.columns if c != label_column]
    features = _numeric(frame, feature_columns, first_line)
    logger.info(f"Loaded {features.shape[0]} labeled rows with {len(feature_columns)} features from {path}")
    return LabeledDataset(features=features, labels=labels, columns=feature_columns)
