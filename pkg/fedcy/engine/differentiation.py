"""
Reverse-mode gradients of scalar expressions, and the central-difference estimate used to
verify them.
"""
from typing import Dict, Mapping, Sequence
import logging

import torch

from fedcy.common.checks import GradientError, UnboundLeafError
from fedcy.engine.expression import ArrayLike, Expression, Leaf, bind, forward_graph

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name

DEFAULT_STEP = 1e-5

# Denominator floor of ``relative_error``; below it the comparison is effectively absolute.
RELATIVE_ERROR_FLOOR = 1e-6


def _resolve_leaves(expression: Expression, wrt: Sequence[str]) -> Dict[str, Leaf]:
    leaves = expression.leaves()
    for name in wrt:
        if name not in leaves:
            raise GradientError(f"{name!r} is not a leaf of the expression")
    return leaves


def _check_scalar(root: torch.Tensor) -> None:
    if root.numel() != 1:
        raise GradientError(f"gradients need a scalar root, got shape {tuple(root.shape)}")


def gradient(expression: Expression,
             bindings: Mapping[str, ArrayLike],
             wrt: Sequence[str]) -> Dict[str, torch.Tensor]:
    """
    Returns d(root)/d(leaf) for every leaf named in ``wrt`` by reverse-mode accumulation.
    Leaves that do not influence the root get a zero array.
    """
    leaves = _resolve_leaves(expression, wrt)
    for name in wrt:
        if leaves[name].constant:
            raise GradientError(f"leaf {name!r} is constant")
    tensors = bind(bindings)
    for name in wrt:
        if name not in tensors:
            raise UnboundLeafError(f"leaf {name!r} is not bound")
    variables = {name: tensors[name].detach().clone().requires_grad_(True) for name in wrt}
    tensors.update(variables)
    with torch.enable_grad():
        root = forward_graph(expression, tensors)
        _check_scalar(root)
        if not root.requires_grad:
            return {name: torch.zeros_like(variables[name]).detach() for name in wrt}
        gradients = torch.autograd.grad(root.reshape(()), [variables[name] for name in wrt],
                                        allow_unused=True)
    return {name: (grad if grad is not None else torch.zeros_like(variables[name])).detach()
            for name, grad in zip(wrt, gradients)}


def numeric_gradient(expression: Expression,
                     bindings: Mapping[str, ArrayLike],
                     wrt: Sequence[str],
                     step: float = DEFAULT_STEP) -> Dict[str, torch.Tensor]:
    """
    Central-difference estimate ``(f(x + h) - f(x - h)) / 2h`` of the gradient, one
    coordinate at a time. Constant leaves get a zero array.
    """
    if not step > 0:
        raise GradientError(f"finite-difference step must be positive, got {step}")
    leaves = _resolve_leaves(expression, wrt)
    tensors = {name: value.detach().clone().contiguous() for name, value in bind(bindings).items()}

    def value_at() -> float:
        with torch.no_grad():
            root = forward_graph(expression, tensors)
        _check_scalar(root)
        return float(root.reshape(()))

    value_at()
    estimates: Dict[str, torch.Tensor] = {}
    for name in wrt:
        if name not in tensors:
            raise UnboundLeafError(f"leaf {name!r} is not bound")
        original = tensors[name]
        estimate = torch.zeros_like(original)
        if leaves[name].constant:
            estimates[name] = estimate
            continue
        flat_estimate = estimate.view(-1)
        for index in range(original.numel()):
            shifted = original.clone()
            flat = shifted.view(-1)
            flat[index] = original.view(-1)[index] + step
            tensors[name] = shifted
            upper = value_at()
            flat[index] = original.view(-1)[index] - step
            lower = value_at()
            flat_estimate[index] = (upper - lower) / (2.0 * step)
        tensors[name] = original
        estimates[name] = estimate
    return estimates


def relative_error(analytic: torch.Tensor, numeric: torch.Tensor) -> float:
    """
    ``||a - n|| / max(||a||, ||n||, RELATIVE_ERROR_FLOOR)`` over the flattened arrays.
    """
    difference = float(torch.linalg.vector_norm((analytic - numeric).reshape(-1)))
    scale = max(float(torch.linalg.vector_norm(analytic.reshape(-1))),
                float(torch.linalg.vector_norm(numeric.reshape(-1))),
                RELATIVE_ERROR_FLOOR)
    return difference / scale
