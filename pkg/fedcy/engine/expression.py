"""
An immutable expression graph over named array leaves. Nodes compute with torch, so
reverse-mode derivatives come from ``torch.autograd``; this module only fixes the node
vocabulary, the shape rules and the evaluation order.
"""
from typing import Any, Callable, Dict, Mapping, Optional, Tuple, Union
import logging
import numbers

import torch
from overrides import overrides

from fedcy.common.checks import ConfigurationError, ShapeError, UnboundLeafError
from fedcy.engine import functional

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name

# Tensors, numpy arrays, nested lists or numbers.
ArrayLike = Any


class Expression:
    """
    A node of the computation graph. Subclasses implement ``forward`` on already evaluated
    input tensors; the graph is built bottom-up, so it cannot contain cycles.
    """
    __slots__ = ("_inputs",)

    def __init__(self, *inputs: "Expression") -> None:
        for node in inputs:
            if not isinstance(node, Expression):
                raise ConfigurationError(f"expression inputs must be expressions, got {type(node)}")
        self._inputs: Tuple["Expression", ...] = tuple(inputs)

    @property
    def inputs(self) -> Tuple["Expression", ...]:
        return self._inputs

    def forward(self, *values: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError

    def leaves(self) -> Dict[str, "Leaf"]:
        found: Dict[str, Leaf] = {}
        stack = [self]
        seen = set()
        while stack:
            node = stack.pop()
            if id(node) in seen:
                continue
            seen.add(id(node))
            if isinstance(node, Leaf):
                previous = found.get(node.name)
                if previous is not None and previous.constant != node.constant:
                    raise ConfigurationError(f"leaf {node.name!r} is declared both constant "
                                             f"and differentiable")
                found[node.name] = node
            stack.extend(node.inputs)
        return found

    def __add__(self, other: Union["Expression", float]) -> "Expression":
        return Add(self, lift(other))

    def __radd__(self, other: float) -> "Expression":
        return Add(lift(other), self)

    def __mul__(self, other: Union["Expression", float]) -> "Expression":
        return Mul(self, lift(other))

    def __rmul__(self, other: float) -> "Expression":
        return Mul(lift(other), self)

    def __neg__(self) -> "Expression":
        return Mul(Literal(-1.0), self)

    def __sub__(self, other: Union["Expression", float]) -> "Expression":
        return Add(self, -lift(other))

    def __matmul__(self, other: "Expression") -> "Expression":
        return MatMul(self, other)

    def __repr__(self) -> str:
        arguments = ", ".join(repr(node) for node in self.inputs)
        return f"{type(self).__name__}({arguments})"


def lift(value: Union[Expression, float]) -> Expression:
    if isinstance(value, Expression):
        return value
    if isinstance(value, numbers.Real):
        return Literal(float(value))
    raise ConfigurationError(f"cannot use {type(value)} in an expression")


class Leaf(Expression):
    """
    A named input. Constant leaves are bound like any other leaf but cannot be
    differentiated against.
    """
    __slots__ = ("name", "constant")

    def __init__(self, name: str, constant: bool = False) -> None:
        super().__init__()
        self.name = name
        self.constant = constant

    @overrides
    def forward(self, *values: torch.Tensor) -> torch.Tensor:
        raise UnboundLeafError(f"leaf {self.name!r} must be looked up in the bindings")

    @overrides
    def __repr__(self) -> str:
        return f"Leaf({self.name!r}{', constant' if self.constant else ''})"


def constant(name: str) -> Leaf:
    return Leaf(name, constant=True)


class Literal(Expression):
    __slots__ = ("value",)

    def __init__(self, value: float) -> None:
        super().__init__()
        self.value = float(value)

    @overrides
    def forward(self, *values: torch.Tensor) -> torch.Tensor:
        return torch.tensor(self.value, dtype=functional.DTYPE)

    @overrides
    def __repr__(self) -> str:
        return repr(self.value)


def _check_elementwise(left: torch.Tensor, right: torch.Tensor, operation: str) -> None:
    # Only scalar-with-array broadcasting is allowed.
    if left.shape != right.shape and not (functional.is_scalar(left) or functional.is_scalar(right)):
        raise ShapeError(f"{operation} of shapes {tuple(left.shape)} and {tuple(right.shape)}")


class Add(Expression):
    __slots__ = ()

    @overrides
    def forward(self, *values: torch.Tensor) -> torch.Tensor:
        left, right = values
        _check_elementwise(left, right, "add")
        return left + right


class Mul(Expression):
    __slots__ = ()

    @overrides
    def forward(self, *values: torch.Tensor) -> torch.Tensor:
        left, right = values
        _check_elementwise(left, right, "mul")
        return left * right


class Exp(Expression):
    __slots__ = ()

    @overrides
    def forward(self, *values: torch.Tensor) -> torch.Tensor:
        return torch.exp(values[0])


class Log(Expression):
    __slots__ = ()

    @overrides
    def forward(self, *values: torch.Tensor) -> torch.Tensor:
        return torch.log(values[0])


class Relu(Expression):
    __slots__ = ()

    @overrides
    def forward(self, *values: torch.Tensor) -> torch.Tensor:
        return torch.relu(values[0])


class _Reduction(Expression):
    __slots__ = ("axis",)

    def __init__(self, operand: Expression, axis: Optional[int] = None) -> None:
        super().__init__(operand)
        self.axis = axis

    def _check_axis(self, value: torch.Tensor) -> None:
        if self.axis is not None and not -value.dim() <= self.axis < value.dim():
            raise ShapeError(f"axis {self.axis} out of range for shape {tuple(value.shape)}")


class Sum(_Reduction):
    __slots__ = ()

    @overrides
    def forward(self, *values: torch.Tensor) -> torch.Tensor:
        self._check_axis(values[0])
        return values[0].sum() if self.axis is None else values[0].sum(dim=self.axis)


class Mean(_Reduction):
    __slots__ = ()

    @overrides
    def forward(self, *values: torch.Tensor) -> torch.Tensor:
        self._check_axis(values[0])
        if values[0].numel() == 0:
            raise ShapeError("mean of an empty array")
        return values[0].mean() if self.axis is None else values[0].mean(dim=self.axis)


class Softmax(_Reduction):
    __slots__ = ()

    def __init__(self, operand: Expression, axis: int = -1) -> None:
        super().__init__(operand, axis)

    @overrides
    def forward(self, *values: torch.Tensor) -> torch.Tensor:
        self._check_axis(values[0])
        if values[0].dim() == 0:
            raise ShapeError("softmax of a scalar")
        return torch.softmax(values[0], dim=self.axis)


class Dot(Expression):
    __slots__ = ()

    @overrides
    def forward(self, *values: torch.Tensor) -> torch.Tensor:
        left, right = values
        if left.dim() != 1 or left.shape != right.shape:
            raise ShapeError(f"dot of shapes {tuple(left.shape)} and {tuple(right.shape)}")
        return torch.dot(left, right)


class Norm(Expression):
    __slots__ = ()

    @overrides
    def forward(self, *values: torch.Tensor) -> torch.Tensor:
        return torch.linalg.vector_norm(values[0])


class Cosine(Expression):
    __slots__ = ()

    @overrides
    def forward(self, *values: torch.Tensor) -> torch.Tensor:
        return functional.cosine(*values)


class MatMul(Expression):
    __slots__ = ()

    @overrides
    def forward(self, *values: torch.Tensor) -> torch.Tensor:
        left, right = values
        if left.dim() not in (1, 2) or right.dim() not in (1, 2) or left.shape[-1] != right.shape[0]:
            raise ShapeError(f"matmul of shapes {tuple(left.shape)} and {tuple(right.shape)}")
        return left @ right


class Affine(Expression):
    """
    ``inputs @ weight + bias`` with ``inputs`` of shape (n,) or (batch, n), ``weight``
    (n, m) and ``bias`` (m,).
    """
    __slots__ = ()

    def __init__(self, inputs: Expression, weight: Expression, bias: Expression) -> None:
        super().__init__(inputs, weight, bias)

    @overrides
    def forward(self, *values: torch.Tensor) -> torch.Tensor:
        inputs, weight, bias = values
        if weight.dim() != 2 or bias.dim() != 1 or bias.shape[0] != weight.shape[1]:
            raise ShapeError(f"affine weight {tuple(weight.shape)} and bias {tuple(bias.shape)} "
                             f"do not fit together")
        if inputs.dim() not in (1, 2) or inputs.shape[-1] != weight.shape[0]:
            raise ShapeError(f"affine input {tuple(inputs.shape)} does not fit weight "
                             f"{tuple(weight.shape)}")
        return inputs @ weight + bias


class Apply(Expression):
    """
    Wraps a tensor function built from the primitives in ``fedcy.engine.functional``
    (losses, the model forward pass) as a single node.
    """
    __slots__ = ("function", "label")

    def __init__(self, function: Callable[..., torch.Tensor], *inputs: Expression,
                 label: Optional[str] = None) -> None:
        super().__init__(*inputs)
        self.function = function
        self.label = label or getattr(function, "__name__", "apply")

    @overrides
    def forward(self, *values: torch.Tensor) -> torch.Tensor:
        return functional.as_array(self.function(*values))

    @overrides
    def __repr__(self) -> str:
        arguments = ", ".join(repr(node) for node in self.inputs)
        return f"{self.label}({arguments})"


def bind(bindings: Mapping[str, ArrayLike]) -> Dict[str, torch.Tensor]:
    return {name: functional.as_array(value) for name, value in bindings.items()}


def forward_graph(expression: Expression, tensors: Mapping[str, torch.Tensor]) -> torch.Tensor:
    """
    Evaluates ``expression`` on already converted leaf tensors, computing every shared
    node once. Autograd history is recorded if the leaf tensors require it.
    """
    cache: Dict[int, torch.Tensor] = {}

    def visit(node: Expression) -> torch.Tensor:
        key = id(node)
        if key in cache:
            return cache[key]
        if isinstance(node, Leaf):
            if node.name not in tensors:
                raise UnboundLeafError(f"leaf {node.name!r} is not bound")
            value = tensors[node.name]
        else:
            value = node.forward(*(visit(child) for child in node.inputs))
        functional.check_finite(value, repr(node) if not isinstance(node, Apply) else node.label)
        cache[key] = value
        return value

    return visit(expression)


def evaluate(expression: Expression, bindings: Mapping[str, ArrayLike]) -> torch.Tensor:
    """
    Returns the value of ``expression`` with its leaves bound to ``bindings``. The result
    is a pure function of the bindings.
    """
    with torch.no_grad():
        return forward_graph(expression, bind(bindings)).detach()
