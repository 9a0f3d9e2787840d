from .csv_loader import load_labeled_csv, read_numeric_csv, write_numeric_csv
from .dataset import LabeledDataset
from .schema_validator import SchemaValidator

__all__ = ["load_labeled_csv", "read_numeric_csv", "write_numeric_csv", "LabeledDataset", "SchemaValidator"]
