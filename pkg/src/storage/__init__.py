from .model_store import deserialize_model, load_model, save_model, serialize_model
from .report_store import load_report, save_report, save_reports

__all__ = [
    "deserialize_model",
    "load_model",
    "save_model",
    "serialize_model",
    "load_report",
    "save_report",
    "save_reports",
]
