"""
Temporal cycle consistency between two embedded sequences: soft nearest neighbours, the
Gaussian-prior cycle-back regression, the symmetric pair loss and the clip-batch objective
of the unlabeled clients.

Frame indices are 1-based inside the mean/variance computations.
"""
from itertools import combinations
from typing import Literal, Sequence, Tuple
import logging

import torch
from pydantic import BaseModel, ConfigDict, NonNegativeFloat, PositiveFloat

from fedcy.common.checks import ShapeError
from fedcy.engine.functional import DTYPE, as_array, similarity_matrix

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name


class TccConfig(BaseModel):
    """
    Parameters
    ----------
    tau_tcc : ``float``, optional (default = 0.05)
        Softmax temperature of the soft nearest neighbour.
    lambda_sigma : ``float``, optional (default = 1.0)
        Weight of the log-variance regularizer.
    lambda_t : ``float``, optional (default = 10.0)
        Weight of the clip-batch objective.
    variance_floor : ``float``, optional (default = 1e-6)
        Lower bound applied to the variance of the return distribution.
    similarity : ``str``, optional (default = "cosine")
        ``cosine`` or ``negative_squared_distance``.
    sigma_reading : ``str``, optional (default = "variance")
        ``variance`` divides the squared index error by the variance; ``literal`` divides it
        by the squared variance. Both regularize with ``log(variance)``.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    tau_tcc: PositiveFloat = 0.05
    lambda_sigma: NonNegativeFloat = 1.0
    lambda_t: NonNegativeFloat = 10.0
    variance_floor: PositiveFloat = 1e-6
    similarity: Literal["cosine", "negative_squared_distance"] = "cosine"
    sigma_reading: Literal["variance", "literal"] = "variance"


def _check_sequence(embeddings: torch.Tensor, name: str) -> torch.Tensor:
    embeddings = as_array(embeddings)
    if embeddings.dim() != 2 or embeddings.shape[0] == 0:
        raise ShapeError(f"{name} must be a non-empty (length, d) sequence, got {tuple(embeddings.shape)}")
    return embeddings


def soft_nearest_neighbor(u: torch.Tensor,
                          V: torch.Tensor,  # pylint: disable=invalid-name
                          cfg: TccConfig) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Returns ``(v_tilde, alpha)`` where ``alpha`` is the softmax over ``Q(u, v_i) / tau`` and
    ``v_tilde = sum_i alpha_i v_i``.
    """
    V = _check_sequence(V, "V")  # pylint: disable=invalid-name
    u = as_array(u)
    if u.dim() != 1 or u.shape[0] != V.shape[1]:
        raise ShapeError(f"u has shape {tuple(u.shape)}, V rows have {V.shape[1]} entries")
    logits = similarity_matrix(u.unsqueeze(0), V, cfg.similarity)[0] / cfg.tau_tcc
    alpha = torch.softmax(logits, dim=0)
    return alpha @ V, alpha


def _prior_penalty(target: torch.Tensor,
                   mu: torch.Tensor,
                   variance: torch.Tensor,
                   cfg: TccConfig) -> torch.Tensor:
    variance = variance.clamp_min(cfg.variance_floor)
    squared_error = (target - mu) ** 2
    denominator = variance ** 2 if cfg.sigma_reading == "literal" else variance
    return squared_error / denominator + cfg.lambda_sigma * torch.log(variance)


def _indices(length: int) -> torch.Tensor:
    return torch.arange(1, length + 1, dtype=DTYPE)


def cycle_back_loss(k: int,
                    U: torch.Tensor,  # pylint: disable=invalid-name
                    V: torch.Tensor,  # pylint: disable=invalid-name
                    cfg: TccConfig) -> torch.Tensor:
    """
    Cycle-back regression loss of the ``k``-th (1-based) embedding of ``U`` through ``V``:
    ``(k - mu)^2 / var + lambda_sigma * log(var)`` where ``mu`` and ``var`` are the mean and
    (floored) variance of the index distribution ``beta`` of ``v_tilde`` over ``U``.
    """
    U = _check_sequence(U, "U")  # pylint: disable=invalid-name
    if not 1 <= k <= U.shape[0]:
        raise ShapeError(f"index {k} out of range for a sequence of length {U.shape[0]}")
    v_tilde, _ = soft_nearest_neighbor(U[k - 1], V, cfg)
    _, beta = soft_nearest_neighbor(v_tilde, U, cfg)
    indices = _indices(U.shape[0])
    mu = beta @ indices
    variance = beta @ (indices - mu) ** 2
    return _prior_penalty(torch.tensor(float(k), dtype=DTYPE), mu, variance, cfg)


def cycle_back_losses(U: torch.Tensor,  # pylint: disable=invalid-name
                      V: torch.Tensor,  # pylint: disable=invalid-name
                      cfg: TccConfig) -> torch.Tensor:
    """
    ``cycle_back_loss(k, U, V)`` for every ``k`` at once.

    Returns
    -------
    ``torch.Tensor``, shape (len(U),)
    """
    U = _check_sequence(U, "U")  # pylint: disable=invalid-name
    V = _check_sequence(V, "V")  # pylint: disable=invalid-name
    if U.shape[1] != V.shape[1]:
        raise ShapeError(f"U and V embed into {U.shape[1]} and {V.shape[1]} dimensions")
    alpha = torch.softmax(similarity_matrix(U, V, cfg.similarity) / cfg.tau_tcc, dim=1)
    v_tilde = alpha @ V
    beta = torch.softmax(similarity_matrix(v_tilde, U, cfg.similarity) / cfg.tau_tcc, dim=1)
    indices = _indices(U.shape[0])
    mu = beta @ indices
    variance = (beta * (indices.unsqueeze(0) - mu.unsqueeze(1)) ** 2).sum(dim=1)
    return _prior_penalty(indices, mu, variance, cfg)


def tcc_pair_loss(U: torch.Tensor,  # pylint: disable=invalid-name
                  V: torch.Tensor,  # pylint: disable=invalid-name
                  cfg: TccConfig) -> torch.Tensor:
    """
    Symmetric consistency loss of two sequences: the cycle-back losses of every frame of
    ``U`` through ``V`` and of ``V`` through ``U``, averaged over ``len(U) + len(V)``.
    """
    forward = cycle_back_losses(U, V, cfg).sum()
    backward = cycle_back_losses(V, U, cfg).sum()
    return (forward + backward) / (U.shape[0] + V.shape[0])


def tcc_batch_objective(clip_embeddings: Sequence[torch.Tensor], cfg: TccConfig) -> torch.Tensor:
    """
    ``lambda_t / (|B| (|B| - 1))`` times the pair loss summed over ordered pairs of distinct
    clips. The pair loss is symmetric, so each unordered pair is computed once and counted
    twice.
    """
    if len(clip_embeddings) < 2:
        raise ShapeError(f"the clip objective needs at least 2 clips, got {len(clip_embeddings)}")
    batch_size = len(clip_embeddings)
    total = torch.zeros((), dtype=DTYPE)
    for first, second in combinations(range(batch_size), 2):
        total = total + 2.0 * tcc_pair_loss(clip_embeddings[first], clip_embeddings[second], cfg)
    return cfg.lambda_t * total / (batch_size * (batch_size - 1))
