"""Conversion of config objects to JSON-ready values."""

import enum
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np


def plain(obj):
    """JSON-ready copy of dataclasses, enums, tuples, numpy values and paths."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return plain(asdict(obj))
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    return obj
