"""
Checkpoint documents: the model config, where the weights came from, and every named array
as a shape plus row-major values. Floats are written with ``repr`` precision, so a
save -> load -> save cycle reproduces the file byte for byte.
"""
from collections import OrderedDict
from typing import Any, Dict, NamedTuple, Optional
import logging

import torch

from fedcy.common.checks import DatasetError
from fedcy.common.util import FORMAT_VERSION, PathLike, check_format_version, dumps_json, read_json
from fedcy.engine.functional import DTYPE
from fedcy.models.phase_recognizer import ModelConfig, ParameterSet, parameter_shapes

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name

CHECKPOINT_KIND = "fedcy-checkpoint"


class Checkpoint(NamedTuple):
    params: ParameterSet
    config: ModelConfig
    lineage: Dict[str, Any]


def _arrays_to_document(arrays: Dict[str, torch.Tensor]) -> Dict[str, Any]:
    return {name: {"shape": list(value.shape),
                   "values": [float(x) for x in value.detach().reshape(-1).tolist()]}
            for name, value in arrays.items()}


def _arrays_from_document(document: Dict[str, Any], names: Any) -> Dict[str, torch.Tensor]:
    arrays: Dict[str, torch.Tensor] = OrderedDict()
    for name in names:
        if name not in document:
            raise DatasetError(f"checkpoint is missing array {name!r}")
        entry = document[name]
        arrays[name] = torch.tensor(entry["values"], dtype=DTYPE).reshape(entry["shape"])
    return arrays


def checkpoint_document(params: ParameterSet,
                        config: ModelConfig,
                        lineage: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    params.check_matches(config)
    return {"format_version": FORMAT_VERSION,
            "kind": CHECKPOINT_KIND,
            "model": config.model_dump(mode="json"),
            "lineage": dict(lineage or {}),
            "omega": _arrays_to_document(params.omega),
            "theta": _arrays_to_document(params.theta)}


def save_params(params: ParameterSet,
                path: PathLike,
                config: ModelConfig,
                lineage: Optional[Dict[str, Any]] = None) -> None:
    """
    Writes ``params`` to ``path``. ``lineage`` records the seeds and run that produced them
    (e.g. ``{"master_seed": 3, "mode": "fedcy", "round": 7}``).
    """
    document = checkpoint_document(params, config, lineage)
    with open(path, "w", encoding="utf-8") as checkpoint_file:
        checkpoint_file.write(dumps_json(document, compact=True))
    logger.info("Saved checkpoint to %s", path)


def load_params(path: PathLike) -> Checkpoint:
    document = read_json(path)
    check_format_version(document, path)
    if document.get("kind") != CHECKPOINT_KIND:
        raise DatasetError(f"{path} is not a checkpoint (kind={document.get('kind')!r})")
    config = ModelConfig(**document["model"])
    omega_shapes, theta_shapes = parameter_shapes(config)
    params = ParameterSet(_arrays_from_document(document["omega"], omega_shapes),
                          _arrays_from_document(document["theta"], theta_shapes))
    params.check_matches(config)
    logger.info("Loaded checkpoint from %s", path)
    return Checkpoint(params, config, document.get("lineage", {}))
