"""
Comparison of analytic and central-difference gradients for one expression instance.
"""
from typing import Callable, Dict, Mapping, NamedTuple, Optional, Sequence
import logging

import torch

from fedcy.engine.differentiation import DEFAULT_STEP, gradient, numeric_gradient, relative_error
from fedcy.engine.expression import ArrayLike, Expression

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name

DEFAULT_TOLERANCE = 1e-4

GradientHook = Callable[[Dict[str, torch.Tensor]], Dict[str, torch.Tensor]]


class GradientCheck(NamedTuple):
    component: str
    max_relative_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_relative_error < self.tolerance


def check_gradients(component: str,
                    expression: Expression,
                    bindings: Mapping[str, ArrayLike],
                    wrt: Sequence[str],
                    step: float = DEFAULT_STEP,
                    tolerance: float = DEFAULT_TOLERANCE,
                    gradient_hook: Optional[GradientHook] = None) -> GradientCheck:
    """
    Runs ``gradient`` and ``numeric_gradient`` on the same instance and reports the largest
    relative error over the requested leaves. ``gradient_hook`` may rewrite the analytic
    gradients before the comparison, which is how the harness checks that it can fail.
    """
    analytic = gradient(expression, bindings, wrt)
    if gradient_hook is not None:
        analytic = gradient_hook(analytic)
    numeric = numeric_gradient(expression, bindings, wrt, step=step)
    worst = max(relative_error(analytic[name], numeric[name]) for name in wrt)
    logger.debug("%s: max relative error %.3e", component, worst)
    return GradientCheck(component, worst, tolerance)
