"""
Cross-entropy and the labeled client's composite objective: mean cross-entropy over the
batch plus ``lambda_c`` times the supervised contrastive loss on the feature embeddings.
"""
from typing import NamedTuple, Sequence, Union
import logging

import torch

from fedcy.common.checks import ShapeError
from fedcy.engine.functional import DTYPE, as_array
from fedcy.losses.contrastive import ContrastiveConfig, supervised_contrastive_batch
from fedcy.models.phase_recognizer import ParameterSet, classify, extract_features

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name

PROBABILITY_FLOOR = 1e-12


def _check_one_hot(y: torch.Tensor) -> None:
    is_binary = bool(((y == 0) | (y == 1)).all())
    if not is_binary or not bool((y.sum(dim=-1) == 1).all()):
        raise ShapeError(f"targets must be one-hot rows, got {y.tolist()}")


def cross_entropy(y: torch.Tensor, p: torch.Tensor) -> torch.Tensor:
    """
    ``-sum_i y_i log(max(p_i, 1e-12))`` for a one-hot target ``y``.
    """
    y = as_array(y)
    p = as_array(p)
    if y.dim() != 1 or y.shape != p.shape:
        raise ShapeError(f"target {tuple(y.shape)} and probabilities {tuple(p.shape)} must be "
                         f"vectors of equal length")
    _check_one_hot(y)
    return -(y * torch.log(p.clamp_min(PROBABILITY_FLOOR))).sum()


def one_hot_labels(labels: Union[torch.Tensor, Sequence[int]], num_phases: int) -> torch.Tensor:
    """
    Rows of the identity for 1-based phase ids.
    """
    labels = torch.as_tensor(labels, dtype=torch.long).reshape(-1)
    if labels.numel() > 0 and (int(labels.min()) < 1 or int(labels.max()) > num_phases):
        raise ShapeError(f"phase ids must lie in [1, {num_phases}], got {labels.tolist()}")
    return torch.nn.functional.one_hot(labels - 1, num_phases).to(DTYPE)


def mean_cross_entropy(targets: torch.Tensor, probabilities: torch.Tensor) -> torch.Tensor:
    if targets.shape != probabilities.shape or targets.dim() != 2:
        raise ShapeError(f"targets {tuple(targets.shape)} and probabilities "
                         f"{tuple(probabilities.shape)} must be matrices of equal shape")
    _check_one_hot(targets)
    return -(targets * torch.log(probabilities.clamp_min(PROBABILITY_FLOOR))).sum(dim=1).mean()


class LabeledTerms(NamedTuple):
    cross_entropy: torch.Tensor
    contrastive: torch.Tensor
    total: torch.Tensor


def labeled_objective_terms(frames: torch.Tensor,
                            labels: Union[torch.Tensor, Sequence[int]],
                            params: ParameterSet,
                            cfg: ContrastiveConfig) -> LabeledTerms:
    frames = as_array(frames)
    labels = torch.as_tensor(labels, dtype=torch.long).reshape(-1)
    if frames.dim() != 2 or frames.shape[0] == 0:
        raise ShapeError("the labeled objective needs a non-empty batch of frames")
    if labels.shape[0] != frames.shape[0]:
        raise ShapeError(f"{frames.shape[0]} frames but {labels.shape[0]} labels")
    embeddings = extract_features(params, frames)
    probabilities = classify(params, embeddings)
    num_phases = probabilities.shape[1]
    ce = mean_cross_entropy(one_hot_labels(labels, num_phases), probabilities)
    if cfg.lambda_c == 0:
        contrastive = torch.zeros((), dtype=DTYPE)
        return LabeledTerms(ce, contrastive, ce)
    groups = [embeddings[labels == phase] for phase in range(1, num_phases + 1)]
    contrastive = supervised_contrastive_batch(groups, int(labels.shape[0]), cfg)
    return LabeledTerms(ce, contrastive, ce + cfg.lambda_c * contrastive)


def labeled_objective(frames: torch.Tensor,
                      labels: Union[torch.Tensor, Sequence[int]],
                      params: ParameterSet,
                      cfg: ContrastiveConfig) -> torch.Tensor:
    """
    Mean cross-entropy of ``classify(extract_features(frames))`` against ``labels`` (1-based
    phase ids) plus ``lambda_c`` times the supervised contrastive loss of the embeddings
    grouped by label. With ``lambda_c == 0`` the contrastive term is skipped.
    """
    return labeled_objective_terms(frames, labels, params, cfg).total
