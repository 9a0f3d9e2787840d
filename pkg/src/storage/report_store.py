# src/storage/report_store.py
import logging
from pathlib import Path
from typing import Dict, List

from pydantic import ValidationError as PydanticValidationError

from ..errors import ModelFormatError
from ..evaluation.benchmark import BenchmarkReport
from ..ingestion.schema_validator import REPORT_SCHEMA_PATH, get_validator
from .model_store import dump_json_bytes, parse_json_bytes

logger = logging.getLogger(__name__)


def report_to_document(report: BenchmarkReport, record_timing: bool = False) -> Dict:
    """Field order follows the model definition; wall-clock time only on request."""
    document = report.dict()
    if not record_timing or document.get("wall_clock_seconds") is None:
        document.pop("wall_clock_seconds", None)
    return document


def _validate(document: Dict) -> None:
    error = get_validator(REPORT_SCHEMA_PATH).first_error(document)
    if error is not None:
        message, location = error
        raise ModelFormatError(message, location=location)


def serialize_reports(reports: List[BenchmarkReport], record_timing: bool = False) -> bytes:
    documents = [report_to_document(r, record_timing) for r in reports]
    for document in documents:
        _validate(document)
    return dump_json_bytes(documents[0] if len(documents) == 1 else documents)


def save_report(report: BenchmarkReport, path, record_timing: bool = False) -> None:
    Path(path).write_bytes(serialize_reports([report], record_timing))
    logger.info(f"Saved benchmark report to {path}")


def save_reports(reports: List[BenchmarkReport], path, record_timing: bool = False) -> None:
    Path(path).write_bytes(serialize_reports(reports, record_timing))
    logger.info(f"Saved {len(reports)} benchmark reports to {path}")


def load_report(path) -> BenchmarkReport:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Report file not found: {path}")
    document = parse_json_bytes(path.read_bytes())
    if not isinstance(document, dict):
        raise ModelFormatError("Report file must contain a JSON object")
    _validate(document)
    try:
        return BenchmarkReport.parse_obj(document)
    except PydanticValidationError as e:
        raise ModelFormatError(f"Invalid report: {e}") from e
