"""
NT-xent for a single anchor and the supervised contrastive loss over a labeled batch, where
every same-class pair is a positive and every other-class embedding a negative.
"""
from typing import Literal, Sequence, Union
import logging

import torch
from pydantic import BaseModel, ConfigDict, NonNegativeFloat, PositiveFloat

from fedcy.common.checks import ShapeError
from fedcy.engine.functional import DTYPE, as_array, similarity_matrix

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name


class ContrastiveConfig(BaseModel):
    """
    Parameters
    ----------
    tau_nt : ``float``, optional (default = 0.1)
        NT-xent temperature.
    lambda_c : ``float``, optional (default = 10.0)
        Weight of the supervised contrastive term in the labeled client's objective.
    similarity : ``str``, optional (default = "cosine")
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    tau_nt: PositiveFloat = 0.1
    lambda_c: NonNegativeFloat = 10.0
    similarity: Literal["cosine", "negative_squared_distance"] = "cosine"


def _as_matrix(embeddings: Union[torch.Tensor, Sequence[torch.Tensor]], dim: int) -> torch.Tensor:
    if isinstance(embeddings, torch.Tensor):
        matrix = as_array(embeddings)
    elif len(embeddings) == 0:
        matrix = torch.zeros((0, dim), dtype=DTYPE)
    else:
        matrix = torch.stack([as_array(row) for row in embeddings])
    if matrix.numel() == 0:
        return matrix.reshape(0, dim)
    if matrix.dim() != 2 or matrix.shape[1] != dim:
        raise ShapeError(f"expected ({dim},)-dimensional embeddings, got {tuple(matrix.shape)}")
    return matrix


def ntxent(f_a: torch.Tensor,
           f_p: torch.Tensor,
           F_n: Union[torch.Tensor, Sequence[torch.Tensor]],  # pylint: disable=invalid-name
           cfg: ContrastiveConfig) -> torch.Tensor:
    """
    ``-log(exp(Q(f_a, f_p)/tau) / sum_{f in F_n + {f_p}} exp(Q(f_a, f)/tau))``, evaluated as
    a log-sum-exp. With no negatives the loss is exactly zero.
    """
    f_a = as_array(f_a)
    f_p = as_array(f_p)
    if f_a.dim() != 1 or f_a.shape != f_p.shape:
        raise ShapeError(f"anchor {tuple(f_a.shape)} and positive {tuple(f_p.shape)} must be "
                         f"vectors of equal length")
    negatives = _as_matrix(F_n, f_a.shape[0])
    candidates = torch.cat([f_p.unsqueeze(0), negatives])
    logits = similarity_matrix(f_a.unsqueeze(0), candidates, cfg.similarity)[0] / cfg.tau_nt
    if negatives.shape[0] == 0:
        return logits[0] - logits[0]
    return torch.logsumexp(logits, dim=0) - logits[0]


def supervised_contrastive_batch(class_embeddings: Sequence[torch.Tensor],
                                 batch_size: int,
                                 cfg: ContrastiveConfig) -> torch.Tensor:
    """
    Supervised contrastive loss of a batch grouped by class.

    Parameters
    ----------
    class_embeddings : ``Sequence[torch.Tensor]``
        One (n_i, d) matrix per class; empty classes are allowed.
    batch_size : ``int``
        ``|B|``, which must equal the total number of embeddings.

    Returns
    -------
    ``(1/|B|) sum_i sum_{a in X_i} (1/(n_i - 1)) sum_{p in X_i, p != a} ntxent(a, p, X_{j != i})``.
    Classes with fewer than two members have no positives and contribute nothing.
    """
    matrices = [as_array(embeddings) for embeddings in class_embeddings]
    total_size = sum(int(matrix.shape[0]) for matrix in matrices)
    if total_size != batch_size:
        raise ShapeError(f"class sets hold {total_size} embeddings but the batch size is {batch_size}")
    loss = torch.zeros((), dtype=DTYPE)
    for index, anchors in enumerate(matrices):
        size = anchors.shape[0]
        if size < 2:
            if size == 1:
                logger.debug("class %d has a single sample in this batch; no positives", index + 1)
            continue
        others = [matrix for other, matrix in enumerate(matrices) if other != index and matrix.shape[0] > 0]
        if not others:
            continue
        negatives = torch.cat(others)
        positive_logits = similarity_matrix(anchors, anchors, cfg.similarity) / cfg.tau_nt
        negative_lse = torch.logsumexp(similarity_matrix(anchors, negatives, cfg.similarity) / cfg.tau_nt,
                                       dim=1)
        # log(exp(s_p) + sum_n exp(s_n)) - s_p for every (anchor, positive) cell.
        pair_losses = torch.logaddexp(negative_lse.unsqueeze(1), positive_logits) - positive_logits
        off_diagonal = ~torch.eye(size, dtype=torch.bool)
        loss = loss + pair_losses[off_diagonal].sum() / (size - 1)
    return loss / batch_size
