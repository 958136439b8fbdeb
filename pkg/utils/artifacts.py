"""JSON artifact IO shared by the command-line entry point."""
import json
import logging
import os
from typing import Any, Dict

from utils.errors import ArtifactError, TilingError

logger = logging.getLogger(__name__)


def load_json(path: str) -> Any:
    if not os.path.exists(path):
        raise ArtifactError(f"No such file: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ArtifactError(f"Error reading {path}: {e}") from e


def save_json(path: str, data: Any) -> str:
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2)
            f.write("\n")
    except (OSError, TypeError) as e:
        raise ArtifactError(f"Error writing {path}: {e}") from e
    logger.debug("wrote %s", path)
    return path


def save_bytes(path: str, data: bytes) -> str:
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "wb") as f:
            f.write(data)
    except OSError as e:
        raise ArtifactError(f"Error writing {path}: {e}") from e
    return path


def load_artifact(path: str, loader) -> Any:
    """Read a JSON file and hand it to a `from_dict` style loader"""
    data = load_json(path)
    try:
        return loader(data)
    except TilingError:
        raise
    except (AttributeError, KeyError, TypeError, ValueError) as e:
        raise ArtifactError(f"Error reading {path}: {e}") from e


def kind_of(data: Dict) -> str:
    """Guess what a JSON artifact holds from its keys"""
    if not isinstance(data, dict):
        return "unknown"
    if "levels" in data and "ground" in data:
        return "assembly"
    if "tiles" in data and "colors" in data:
        return "tileset"
    if "cells" in data and "w" in data:
        return "patch"
    if "layer1" in data:
        return "compiled"
    if "kind" in data:
        return "subshift"
    return "unknown"
