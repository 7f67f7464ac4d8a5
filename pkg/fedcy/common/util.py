"""
Seed derivation and JSON document helpers shared by the data, model and command code.
"""
from typing import Any, Dict, List, Union
import json
import logging
import os

import numpy as np

from fedcy.common.checks import DatasetError

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name

# Written into every file this package produces.
FORMAT_VERSION = 1

PathLike = Union[str, "os.PathLike[str]"]


def derive_rng(master_seed: int, *stream: int) -> np.random.Generator:
    """
    Returns a generator for the stream identified by ``stream`` (e.g. ``(round, client)``)
    under ``master_seed``. Distinct streams never share state, so results do not depend on
    the order in which streams are consumed.
    """
    sequence = np.random.SeedSequence(entropy=int(master_seed),
                                      spawn_key=tuple(int(key) for key in stream))
    return np.random.default_rng(sequence)


def dumps_json(document: Any, compact: bool = False) -> str:
    if compact:
        return json.dumps(document, sort_keys=True, separators=(",", ":")) + "\n"
    return json.dumps(document, sort_keys=True, indent=2) + "\n"


def write_json(path: PathLike, document: Any, compact: bool = False) -> None:
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as output_file:
        output_file.write(dumps_json(document, compact=compact))
    logger.debug("Wrote %s", path)


def read_json(path: PathLike) -> Any:
    if not os.path.exists(path):
        raise DatasetError(f"File not found: {path}")
    with open(path, "r", encoding="utf-8") as input_file:
        try:
            return json.load(input_file)
        except json.JSONDecodeError as error:
            raise DatasetError(f"{path} is not valid JSON (line {error.lineno}, "
                               f"column {error.colno}): {error.msg}") from error


def append_jsonl(path: PathLike, record: Dict[str, Any]) -> None:
    with open(path, "a", encoding="utf-8") as output_file:
        output_file.write(json.dumps(record, sort_keys=True) + "\n")


def read_jsonl(path: PathLike) -> List[Dict[str, Any]]:
    if not os.path.exists(path):
        raise DatasetError(f"File not found: {path}")
    with open(path, "r", encoding="utf-8") as input_file:
        return [json.loads(line) for line in input_file if line.strip()]


def check_format_version(document: Dict[str, Any], path: PathLike) -> None:
    version = document.get("format_version")
    if version != FORMAT_VERSION:
        raise DatasetError(f"{path} has format_version {version!r}, expected {FORMAT_VERSION}")
