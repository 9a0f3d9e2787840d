# src/config.py
from pathlib import Path
from typing import List, Optional

import yaml
from pydantic import BaseModel, BaseSettings, Field, validator
from pydantic import ValidationError as PydanticValidationError

from .errors import ConfigError

PROJECT_ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = PROJECT_ROOT / "config"
DEFAULT_CONFIG_PATH = CONFIG_DIR / "config.yaml"


class EstimationConfig(BaseModel):
    kernel: str = "biweight"
    margin_bandwidth_multiplier: float = Field(1.0, gt=0)
    independence_test: bool = False
    independence_level: float = Field(0.05, gt=0, lt=1)
    hfunc_normalized: bool = True
    chunk_size: int = Field(1024, ge=1)

    @validator("kernel")
    def _only_biweight(cls, value):
        if value != "biweight":
            raise ValueError("only the biweight kernel is supported")
        return value


class GridConfig(BaseModel):
    scenarios: List[str] = ["gauss", "gumbel", "nonsimplified"]
    dimensions: List[int] = [3, 5, 10]
    sample_sizes: List[int] = [200, 500, 1000, 2500, 5000]


class BenchmarkConfig(BaseModel):
    tau: float = 0.4
    replicates: int = Field(20, ge=1)
    mc_samples: int = Field(1000, ge=1)
    significance_level: float = Field(0.01, gt=0, lt=1)
    grid: GridConfig = GridConfig()


class ClassificationConfig(BaseModel):
    split: float = Field(0.6667, gt=0, lt=1)
    margin_bandwidth_multiplier: float = Field(2.0, gt=0)
    independence_test: bool = True
    independence_level: float = Field(0.05, gt=0, lt=1)
    prior_g: float = Field(0.5, ge=0, le=1)
    fpr_targets: List[float] = [0.01, 0.02, 0.05, 0.1, 0.2]
    label_column: str = "class"
    magic_columns: List[str] = []


class RuntimeConfig(BaseModel):
    threads: int = Field(1, ge=1)


class ServingConfig(BaseModel):
    host: str = "0.0.0.0"
    port: int = 8000


class MonitoringConfig(BaseModel):
    log_level: str = "INFO"
    json_logs: bool = True


class AppConfig(BaseModel):
    estimation: EstimationConfig = EstimationConfig()
    benchmark: BenchmarkConfig = BenchmarkConfig()
    classification: ClassificationConfig = ClassificationConfig()
    runtime: RuntimeConfig = RuntimeConfig()
    serving: ServingConfig = ServingConfig()
    monitoring: MonitoringConfig = MonitoringConfig()


class EnvSettings(BaseSettings):
    """Environment overrides, e.g. VINEKDE_THREADS=8."""

    config: Optional[Path] = None
    threads: Optional[int] = None
    log_level: Optional[str] = None
    json_logs: Optional[bool] = None

    class Config:
        env_prefix = "VINEKDE_"
        env_file = ".env"


def load_config(path: Optional[Path] = None, env: Optional[EnvSettings] = None) -> AppConfig:
    """
    Load the YAML configuration and apply environment overrides.
    Precedence is environment > YAML > defaults; CLI flags are applied by the caller.
    """
    try:
        env = env or EnvSettings()
    except PydanticValidationError as e:
        raise ConfigError(f"Invalid environment settings: {e}") from e

    config_path = Path(path or env.config or DEFAULT_CONFIG_PATH)
    raw = {}
    if config_path.exists():
        with open(config_path, "r") as f:
            raw = yaml.safe_load(f) or {}
    elif path is not None or env.config is not None:
        raise ConfigError(f"Config file not found: {config_path}")

    try:
        config = AppConfig.parse_obj(raw)
    except PydanticValidationError as e:
        raise ConfigError(f"Invalid configuration in {config_path}: {e}") from e

    if env.threads is not None:
        if env.threads < 1:
            raise ConfigError("VINEKDE_THREADS must be >= 1")
        config.runtime.threads = env.threads
    if env.log_level is not None:
        config.monitoring.log_level = env.log_level
    if env.json_logs is not None:
        config.monitoring.json_logs = env.json_logs
    return config
