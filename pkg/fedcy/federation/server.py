"""
Server-side aggregation. The global feature extractor is the data-weighted average of the
client feature extractors; the global classifier is the labeled client's classifier,
copied as is, except in the fully supervised FedAvg baseline which averages it too.
"""
from collections import OrderedDict
from typing import Dict, List, Sequence
import logging

import torch

from fedcy.common.checks import FederationError
from fedcy.engine.functional import DTYPE
from fedcy.models.phase_recognizer import ParameterSet

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name

WEIGHT_TOLERANCE = 1e-9


def data_fractions(sizes: Sequence[int]) -> List[float]:
    """
    Each client's share of the training frames.
    """
    total = sum(sizes)
    if total <= 0 or any(size < 0 for size in sizes):
        raise FederationError(f"cannot weight clients with training sizes {list(sizes)}")
    return [size / total for size in sizes]


def _check_payloads(local_params: Sequence[ParameterSet]) -> None:
    reference = local_params[0]
    for params in local_params:
        if not isinstance(params, ParameterSet):
            raise FederationError(f"aggregation payloads must be parameter sets, got {type(params)}")
        for group, arrays, expected in (("omega", params.omega, reference.omega),
                                        ("theta", params.theta, reference.theta)):
            if list(arrays) != list(expected):
                raise FederationError(f"{group} names differ between clients: {list(arrays)} and {list(expected)}")
            for name, value in arrays.items():
                if value.shape != expected[name].shape:
                    raise FederationError(f"{name} has shape {tuple(value.shape)} on one client and "
                                          f"{tuple(expected[name].shape)} on another")
                if value.requires_grad:
                    raise FederationError(f"{name} is still attached to a client's autograd graph")


def _weighted_average(arrays: Sequence[torch.Tensor], weights: torch.Tensor) -> torch.Tensor:
    stacked = torch.stack(list(arrays))
    average = torch.tensordot(weights, stacked, dims=1)
    # Rounding can leave the convex hull by an ulp.
    return torch.minimum(torch.maximum(average, stacked.min(dim=0).values), stacked.max(dim=0).values)


def aggregate(local_params: Sequence[ParameterSet],
              weights: Sequence[float],
              labeled_index: int,
              average_theta: bool = False) -> ParameterSet:
    """
    Parameters
    ----------
    local_params : ``Sequence[ParameterSet]``
        The clients' payloads.
    weights : ``Sequence[float]``
        Non-negative client weights summing to 1.
    labeled_index : ``int``
        Position of the labeled client, whose classifier becomes the global one.
    average_theta : ``bool``, optional (default = False)
        Average the classifiers like the feature extractors instead.
    """
    if not local_params:
        raise FederationError("nothing to aggregate")
    if len(weights) != len(local_params):
        raise FederationError(f"{len(weights)} weights for {len(local_params)} clients")
    if any(weight < 0 for weight in weights) or abs(sum(weights) - 1.0) > WEIGHT_TOLERANCE:
        raise FederationError(f"aggregation weights must be non-negative and sum to 1, got {list(weights)}")
    if not 0 <= labeled_index < len(local_params):
        raise FederationError(f"labeled index {labeled_index} out of range for {len(local_params)} clients")
    _check_payloads(local_params)
    weight_tensor = torch.tensor(list(weights), dtype=DTYPE)

    def average(group: str) -> Dict[str, torch.Tensor]:
        names = list(getattr(local_params[0], group))
        return OrderedDict((name, _weighted_average([getattr(params, group)[name] for params in local_params],
                                                    weight_tensor))
                           for name in names)

    omega = average("omega")
    if average_theta:
        theta = average("theta")
    else:
        theta = OrderedDict((name, value.detach().clone())
                            for name, value in local_params[labeled_index].theta.items())
    logger.debug("aggregated %d clients with weights %s", len(local_params), list(weights))
    return ParameterSet(omega, theta)
