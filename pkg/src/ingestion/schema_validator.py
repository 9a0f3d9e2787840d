# src/ingestion/schema_validator.py
import json
from pathlib import Path
from typing import Dict, Optional, Tuple

import jsonschema

from ..config import CONFIG_DIR

MODEL_SCHEMA_PATH = CONFIG_DIR / "model_schema.json"
REPORT_SCHEMA_PATH = CONFIG_DIR / "report_schema.json"


def error_location(error: jsonschema.exceptions.ValidationError) -> str:
    """JSONPath-style location of a schema error, e.g. $.margins[0].bandwidth."""
    location = "$"
    for part in error.absolute_path:
        location += f"[{part}]" if isinstance(part, int) else f".{part}"
    return location


class SchemaValidator:
    def __init__(self, schema_path: Path):
        with open(schema_path, 'r') as f:
            self.schema = json.load(f)

        # Pre-compile schema
        self.validator = jsonschema.validators.validator_for(self.schema)(self.schema)

    def first_error(self, document: Dict) -> Optional[Tuple[str, str]]:
        """
        Returns None if the document is valid, otherwise (message, location)
        of the shallowest error.
        """
        errors = sorted(self.validator.iter_errors(document), key=lambda e: (len(e.absolute_path), str(e.path)))
        if not errors:
            return None
        return errors[0].message, error_location(errors[0])


_validators: Dict[Path, SchemaValidator] = {}


def get_validator(schema_path: Path) -> SchemaValidator:
    if schema_path not in _validators:
        _validators[schema_path] = SchemaValidator(schema_path)
    return _validators[schema_path]
