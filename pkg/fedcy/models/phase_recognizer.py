from collections import OrderedDict
from typing import Dict, Iterator, Tuple, Union
import logging
import math

import torch
from torch.func import functional_call
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, field_validator

from fedcy.common.checks import ShapeError, check_dimensions_match
from fedcy.common.util import derive_rng
from fedcy.engine.functional import DTYPE, as_array

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name

# Stream id under the seed passed to ``init_params``.
_INIT_STREAM = 0


class ModelConfig(BaseModel):
    """
    Sizes of the phase recognition model.

    Parameters
    ----------
    input_dim : ``int``
        Size of a synthetic frame feature vector.
    hidden_dims : ``Tuple[int, ...]``
        Widths of the rectified hidden layers of the feature extractor (at least one).
    embed_dim : ``int``
        Size ``d`` of the frame embedding the losses work on.
    num_phases : ``int``
        Number ``P`` of workflow phases the classifier predicts.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    input_dim: PositiveInt = 16
    hidden_dims: Tuple[PositiveInt, ...] = (32,)
    embed_dim: int = Field(default=16, ge=2)
    num_phases: PositiveInt = 6

    @field_validator("hidden_dims")
    @classmethod
    def _at_least_one_hidden_layer(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if len(value) < 1:
            raise ValueError("the feature extractor needs at least one hidden layer")
        return value


def parameter_shapes(config: ModelConfig) -> Tuple[Dict[str, Tuple[int, ...]], Dict[str, Tuple[int, ...]]]:
    """
    Names and shapes of the feature extractor (omega) and classifier (theta) parameters,
    as ``torch.nn.Linear`` lays them out: weights are ``(fan_out, fan_in)``.
    """
    skeleton = PhaseRecognizer(config, device="meta")
    return (OrderedDict((name, tuple(value.shape)) for name, value in skeleton.omega_parameters()),
            OrderedDict((name, tuple(value.shape)) for name, value in skeleton.theta_parameters()))


class PhaseRecognizer(torch.nn.Module):
    """
    The feature extractor ``phi`` (rectified hidden ``Linear`` layers and a linear embedding
    layer) and the classifier ``H`` on top of it. Federated code does not keep modules
    around: weights travel as ``ParameterSet`` snapshots and are applied with
    ``torch.func.functional_call``.
    """
    def __init__(self, config: ModelConfig, device: Union[str, torch.device] = "cpu") -> None:
        super().__init__()
        self.config = config
        layers: Dict[str, torch.nn.Module] = OrderedDict()
        fan_in = config.input_dim
        for index, width in enumerate(config.hidden_dims):
            layers[f"hidden_{index}"] = torch.nn.Linear(fan_in, width, dtype=DTYPE, device=device)
            layers[f"relu_{index}"] = torch.nn.ReLU()
            fan_in = width
        layers["embedding"] = torch.nn.Linear(fan_in, config.embed_dim, dtype=DTYPE, device=device)
        self.feature_extractor = torch.nn.Sequential(layers)
        self.classifier = torch.nn.Linear(config.embed_dim, config.num_phases, dtype=DTYPE, device=device)

    def omega_parameters(self) -> Iterator[Tuple[str, torch.nn.Parameter]]:
        return self.feature_extractor.named_parameters()

    def theta_parameters(self) -> Iterator[Tuple[str, torch.nn.Parameter]]:
        return self.classifier.named_parameters(prefix="classifier")

    def reset_parameters(self, generator: torch.Generator) -> None:
        """
        Weights uniform in ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]``, biases zero.
        """
        for module in self.modules():
            if isinstance(module, torch.nn.Linear):
                bound = 1.0 / math.sqrt(module.in_features)
                torch.nn.init.uniform_(module.weight, -bound, bound, generator=generator)
                torch.nn.init.zeros_(module.bias)

class ParameterSet:
    """
    The named arrays of one model: ``omega`` for the feature extractor and ``theta`` for the
    classifier. Instances handed between clients and the server are snapshots; use
    ``copy`` before modifying one in place.
    """
    def __init__(self, omega: Dict[str, torch.Tensor], theta: Dict[str, torch.Tensor]) -> None:
        self.omega: Dict[str, torch.Tensor] = OrderedDict(omega)
        self.theta: Dict[str, torch.Tensor] = OrderedDict(theta)

    @classmethod
    def from_module(cls, model: PhaseRecognizer) -> "ParameterSet":
        return cls(OrderedDict((name, value.detach().clone()) for name, value in model.omega_parameters()),
                   OrderedDict((name, value.detach().clone()) for name, value in model.theta_parameters()))

    def copy(self) -> "ParameterSet":
        return ParameterSet(OrderedDict((name, value.detach().clone()) for name, value in self.omega.items()),
                            OrderedDict((name, value.detach().clone()) for name, value in self.theta.items()))

    def items(self) -> Iterator[Tuple[str, torch.Tensor]]:
        yield from self.omega.items()
        yield from self.theta.items()

    def model_config(self) -> ModelConfig:
        """
        The config these arrays were built for, read off their shapes.
        """
        hidden = [self.omega[f"hidden_{index}.weight"] for index in range(_hidden_layer_count(self.omega))]
        if not hidden or "embedding.weight" not in self.omega or "classifier.weight" not in self.theta:
            raise ShapeError(f"{self!r} is not a phase recognizer")
        return ModelConfig(input_dim=hidden[0].shape[1],
                           hidden_dims=tuple(weight.shape[0] for weight in hidden),
                           embed_dim=self.omega["embedding.weight"].shape[0],
                           num_phases=self.theta["classifier.weight"].shape[0])

    def check_matches(self, config: ModelConfig) -> None:
        omega_shapes, theta_shapes = parameter_shapes(config)
        for group, arrays, shapes in (("omega", self.omega, omega_shapes), ("theta", self.theta, theta_shapes)):
            check_dimensions_match(sorted(arrays), sorted(shapes), f"{group} names", "config names")
            for name, shape in shapes.items():
                check_dimensions_match(tuple(arrays[name].shape), shape, name, "configured shape")

    def equals(self, other: "ParameterSet") -> bool:
        """
        Bit-for-bit equality of names, shapes and values.
        """
        if list(self.omega) != list(other.omega) or list(self.theta) != list(other.theta):
            return False
        return all(torch.equal(value, other_value)
                   for (_, value), (_, other_value) in zip(self.items(), other.items()))

    def __repr__(self) -> str:
        return f"ParameterSet(omega={list(self.omega)}, theta={list(self.theta)})"


def init_params(config: ModelConfig, seed: int) -> ParameterSet:
    """
    A freshly initialized ``PhaseRecognizer`` as a ``ParameterSet``. Deterministic given
    ``(config, seed)``; the global torch random state is not touched.
    """
    generator = torch.Generator().manual_seed(int(derive_rng(seed, _INIT_STREAM).integers(2 ** 62)))
    model = PhaseRecognizer(config, device="meta").to_empty(device="cpu")
    model.reset_parameters(generator)
    return ParameterSet.from_module(model)


def _hidden_layer_count(omega: Dict[str, torch.Tensor]) -> int:
    return sum(1 for name in omega if name.startswith("hidden_") and name.endswith(".weight"))


def extract_features(params: ParameterSet, frames: torch.Tensor) -> torch.Tensor:
    """
    The feature extractor ``phi`` with the weights of ``params``, applied to every row of
    ``frames`` independently.

    Parameters
    ----------
    frames : ``torch.Tensor``, shape (batch, input_dim)

    Returns
    -------
    ``torch.Tensor``, shape (batch, embed_dim)
    """
    frames = as_array(frames)
    if frames.dim() != 2:
        raise ShapeError(f"frames must be a (batch, input_dim) matrix, got {tuple(frames.shape)}")
    check_dimensions_match(frames.shape[1], params.omega["hidden_0.weight"].shape[1],
                           "frame dim", "feature extractor input dim")
    # A fresh skeleton per call: functional_call swaps attributes on the module it is given.
    skeleton = PhaseRecognizer(params.model_config(), device="meta")
    return functional_call(skeleton.feature_extractor, params.omega, (frames,))


def classify(params: ParameterSet, embeddings: torch.Tensor) -> torch.Tensor:
    """
    The classifier ``H``: one affine layer and a softmax over phases.

    Returns
    -------
    ``torch.Tensor``, shape (batch, num_phases)
        Rows are phase probability vectors.
    """
    embeddings = as_array(embeddings)
    if embeddings.dim() != 2:
        raise ShapeError(f"embeddings must be a (batch, embed_dim) matrix, got {tuple(embeddings.shape)}")
    check_dimensions_match(embeddings.shape[1], params.theta["classifier.weight"].shape[1],
                           "embedding dim", "classifier input dim")
    logits = torch.nn.functional.linear(embeddings, params.theta["classifier.weight"],
                                        params.theta["classifier.bias"])
    return torch.softmax(logits, dim=1)
