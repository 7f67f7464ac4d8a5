"""
Tensor-level primitives shared by the expression nodes and the loss functions. Everything
here works on double precision ``torch.Tensor`` values; exponentials go through
``torch.softmax`` / ``torch.logsumexp``, which subtract the running maximum.
"""
from typing import Any

import numpy as np
import torch

from fedcy.common.checks import ConfigurationError, NonFiniteError, ShapeError

DTYPE = torch.float64

# Floor on the product of norms in cosine similarity.
COSINE_FLOOR = 1e-12

SIMILARITIES = ("cosine", "negative_squared_distance")


def as_array(value: Any) -> torch.Tensor:
    """
    Converts ``value`` (tensor, numpy array, nested list or number) to a double precision
    tensor. Tensors that are already double are returned as they are, so autograd history
    is preserved.
    """
    if isinstance(value, torch.Tensor):
        return value if value.dtype == DTYPE else value.to(DTYPE)
    return torch.as_tensor(np.asarray(value, dtype=np.float64))


def check_finite(tensor: torch.Tensor, what: str) -> torch.Tensor:
    if not bool(torch.isfinite(tensor).all()):
        raise NonFiniteError(f"non-finite value produced by {what}")
    return tensor


def is_scalar(tensor: torch.Tensor) -> bool:
    return tensor.dim() == 0


def cosine(u: torch.Tensor, v: torch.Tensor) -> torch.Tensor:
    if u.dim() != 1 or u.shape != v.shape:
        raise ShapeError(f"cosine expects two vectors of equal length, got {tuple(u.shape)} "
                         f"and {tuple(v.shape)}")
    denominator = (torch.linalg.vector_norm(u) * torch.linalg.vector_norm(v)).clamp_min(COSINE_FLOOR)
    return torch.dot(u, v) / denominator


def similarity_matrix(left: torch.Tensor, right: torch.Tensor, kind: str = "cosine") -> torch.Tensor:
    """
    Pairwise similarity between the rows of ``left`` (n, d) and ``right`` (m, d).

    Returns
    -------
    ``torch.Tensor``, shape (n, m)
        Cosine similarity, or the negative squared Euclidean distance when
        ``kind == "negative_squared_distance"``.
    """
    if left.dim() != 2 or right.dim() != 2 or left.shape[1] != right.shape[1]:
        raise ShapeError(f"similarity_matrix expects (n, d) and (m, d), got {tuple(left.shape)} "
                         f"and {tuple(right.shape)}")
    if kind == "cosine":
        norms = torch.outer(torch.linalg.vector_norm(left, dim=1),
                            torch.linalg.vector_norm(right, dim=1))
        return (left @ right.T) / norms.clamp_min(COSINE_FLOOR)
    if kind == "negative_squared_distance":
        differences = left.unsqueeze(1) - right.unsqueeze(0)
        return -(differences ** 2).sum(dim=-1)
    raise ConfigurationError(f"unknown similarity {kind!r}, expected one of {SIMILARITIES}")
