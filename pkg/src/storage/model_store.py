# src/storage/model_store.py
"""JSON persistence of fitted vine density models."""
import json
import logging
from pathlib import Path
from typing import Any, Dict

import numpy as np

from ..errors import ModelFormatError
from ..estimation.marginal import MarginalEstimate
from ..estimation.paircop import PairCopulaEstimate
from ..estimation.structure import RVineStructure, validate_structure
from ..estimation.vinefit import VineDensityModel
from ..ingestion.schema_validator import MODEL_SCHEMA_PATH, get_validator

logger = logging.getLogger(__name__)

MODEL_VERSION = 1


def _reject_constant(name: str):
    raise ValueError(f"non-finite value {name} is not allowed")


def parse_json_bytes(data: bytes) -> Any:
    """Strict JSON parse: UTF-8 only, NaN and Infinity rejected."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ModelFormatError(f"File is not UTF-8: {e.reason}", location=f"byte {e.start}") from e
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"Malformed JSON: {e.msg}", location=f"line {e.lineno} column {e.colno}") from e
    except ValueError as e:
        raise ModelFormatError(f"Malformed JSON: {e}") from e


def dump_json_bytes(document: Dict) -> bytes:
    return (json.dumps(document, indent=2, allow_nan=False) + "\n").encode("utf-8")


def model_to_document(model: VineDensityModel) -> Dict:
    edges = model.structure.edges()
    return {
        "version": MODEL_VERSION,
        "d": model.d,
        "n": model.n,
        "structure": model.structure.to_records(),
        "margins": [
            {
                "sample": m.sample.tolist(),
                "bandwidth": m.bandwidth,
                "bandwidth_multiplier": m.bandwidth_multiplier,
            }
            for m in model.margins
        ],
        "pair_copulas": [
            {
                "edge": edge.to_record(),
                "is_independence": p.is_independence,
                "z_sample": p.z_sample.tolist(),
                "bandwidth": p.bandwidth,
            }
            for edge, p in zip(edges, model.pair_copulas)
        ],
        "meta": dict(model.meta),
    }


def serialize_model(model: VineDensityModel) -> bytes:
    return dump_json_bytes(model_to_document(model))


def _check_version(document: Any) -> None:
    if not isinstance(document, dict):
        raise ModelFormatError("Model file must contain a JSON object")
    if document.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            f"Unsupported model version {document.get('version')!r}, expected {MODEL_VERSION}",
            location="$.version",
        )


def document_to_model(document: Any) -> VineDensityModel:
    _check_version(document)
    error = get_validator(MODEL_SCHEMA_PATH).first_error(document)
    if error is not None:
        message, location = error
        raise ModelFormatError(message, location=location)

    d, n = document["d"], document["n"]
    if len(document["margins"]) != d:
        raise ModelFormatError(f"Expected {d} margins, found {len(document['margins'])}", location="$.margins")
    structure = RVineStructure.from_records(d, document["structure"])
    if structure.n_edges != len(document["structure"]):
        raise ModelFormatError("Structure contains edges outside trees 1..d-1", location="$.structure")
    violation = validate_structure(structure)
    if violation is not None:
        raise ModelFormatError(f"Invalid structure: {violation}", location="$.structure")
    if len(document["pair_copulas"]) != structure.n_edges:
        raise ModelFormatError(
            f"Expected {structure.n_edges} pair-copulas, found {len(document['pair_copulas'])}",
            location="$.pair_copulas",
        )

    margins = []
    for j, record in enumerate(document["margins"]):
        sample = np.asarray(record["sample"], dtype=float)
        if sample.size != n:
            raise ModelFormatError(f"Margin sample has {sample.size} values, expected {n}", f"$.margins[{j}].sample")
        margins.append(MarginalEstimate(
            sample=sample,
            bandwidth=float(record["bandwidth"]),
            bandwidth_multiplier=float(record.get("bandwidth_multiplier", 1.0)),
        ))

    pair_copulas = []
    for i, (edge, record) in enumerate(zip(structure.edges(), document["pair_copulas"])):
        location = f"$.pair_copulas[{i}]"
        stored = record["edge"]
        if (tuple(stored["conditioned"]) != edge.conditioned
                or sorted(stored["conditioning"]) != list(edge.conditioning)):
            raise ModelFormatError("Pair-copula edge does not match the structure", f"{location}.edge")
        z_sample = np.asarray(record["z_sample"], dtype=float).reshape(-1, 2)
        if not record["is_independence"] and z_sample.shape[0] != n:
            raise ModelFormatError(f"z_sample has {z_sample.shape[0]} rows, expected {n}", f"{location}.z_sample")
        pair_copulas.append(PairCopulaEstimate(
            z_sample=z_sample,
            bandwidth=float(record["bandwidth"]),
            is_independence=bool(record["is_independence"]),
        ))

    meta = dict(document["meta"])
    if meta["n"] != n:
        raise ModelFormatError("meta.n does not match n", location="$.meta.n")
    return VineDensityModel(structure=structure, margins=tuple(margins), pair_copulas=tuple(pair_copulas), meta=meta)


def deserialize_model(data: bytes) -> VineDensityModel:
    return document_to_model(parse_json_bytes(data))


def save_model(model: VineDensityModel, path) -> None:
    Path(path).write_bytes(serialize_model(model))
    logger.info(f"Saved model (d={model.d}, n={model.n}) to {path}")


def load_model(path) -> VineDensityModel:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Model file not found: {path}")
    model = deserialize_model(path.read_bytes())
    logger.info(f"Loaded model (d={model.d}, n={model.n}) from {path}")
    return model
