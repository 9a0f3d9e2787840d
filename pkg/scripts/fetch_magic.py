#!/usr/bin/env python3
# scripts/fetch_magic.py
"""Download the UCI MAGIC gamma telescope data and write it as a headed CSV."""

import argparse
import io
import logging
from pathlib import Path

import httpx
import pandas as pd

from src.config import load_config
from src.logging_config import configure_logging

MAGIC_URL = "https://archive.ics.uci.edu/ml/machine-learning-databases/magic/magic04.data"


def fetch_magic(url, columns):
    """Download the raw comma-separated file and attach column names"""
    response = httpx.get(url, timeout=60.0, follow_redirects=True)
    response.raise_for_status()
    return pd.read_csv(io.StringIO(response.text), header=None, names=columns)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument('--out', type=Path, default=Path('data/magic04.csv'))
    parser.add_argument('--url', default=MAGIC_URL)
    args = parser.parse_args()

    config = load_config()
    configure_logging(config.monitoring.log_level, json_logs=False)
    logger = logging.getLogger('src.scripts.fetch_magic')

    try:
        frame = fetch_magic(args.url, config.classification.magic_columns)
    except httpx.HTTPError as e:
        logger.error(f"Download failed: {str(e)}")
        raise

    args.out.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(args.out, index=False)
    counts = frame[config.classification.label_column].value_counts().to_dict()
    logger.info(f"Wrote {len(frame)} rows to {args.out} (class counts: {counts})")


if __name__ == "__main__":
    main()
