#!/usr/bin/env python3
# scripts/run_grid.py
"""Run the benchmark over the configured scenario x dimension x sample-size grid."""

import argparse
import logging
import time
from pathlib import Path

import psutil

from src.config import load_config
from src.estimation.vinefit import FitOptions
from src.evaluation.benchmark import run_grid
from src.logging_config import configure_logging
from src.storage.report_store import save_reports


class GridMonitor:
    def __init__(self):
        self.logger = logging.getLogger('src.scripts.run_grid')
        self.process = psutil.Process()
        self.started = time.perf_counter()

    def log_usage(self, label):
        """Log resident memory and CPU usage of this process"""
        rss_mb = self.process.memory_info().rss / 2 ** 20
        cpu_percent = self.process.cpu_percent()
        elapsed = time.perf_counter() - self.started
        self.logger.info(f"{label}: rss={rss_mb:.1f}MB cpu={cpu_percent}% elapsed={elapsed:.1f}s")
        if psutil.virtual_memory().percent > 90:
            self.logger.warning("High memory usage detected!")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument('--config', type=Path)
    parser.add_argument('--seed', type=int, required=True)
    parser.add_argument('--out', type=Path, required=True)
    parser.add_argument('--threads', type=int)
    parser.add_argument('--record-timing', action='store_true')
    args = parser.parse_args()

    config = load_config(args.config)
    configure_logging(config.monitoring.log_level, config.monitoring.json_logs)
    bench = config.benchmark
    monitor = GridMonitor()
    monitor.log_usage("start")

    reports = run_grid(
        scenarios=bench.grid.scenarios,
        dimensions=bench.grid.dimensions,
        sample_sizes=bench.grid.sample_sizes,
        replicates=bench.replicates,
        mc_samples=bench.mc_samples,
        seed=args.seed,
        tau=bench.tau,
        fit_options=FitOptions(
            margin_bandwidth_multiplier=config.estimation.margin_bandwidth_multiplier,
            independence_test=config.estimation.independence_test,
            independence_level=config.estimation.independence_level,
            chunk_size=config.estimation.chunk_size,
        ),
        threads=args.threads or config.runtime.threads,
        significance_level=bench.significance_level,
    )
    monitor.log_usage("finished")
    save_reports(reports, args.out, record_timing=args.record_timing)


if __name__ == "__main__":
    main()
