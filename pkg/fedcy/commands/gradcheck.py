"""
``python -m fedcy gradcheck [--component all|engine|losses|<name>] [--seed 0] [--instances 50]``

Compares reverse-mode gradients with central differences on random small instances of
every differentiable component and prints the largest relative error per component. The
exit status is 1 if any component fails.
"""
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple
import argparse
import logging

import numpy as np
import torch
from overrides import overrides

from fedcy.commands.subcommand import Subcommand, add_common_arguments
from fedcy.common.checks import ConfigurationError
from fedcy.common.util import derive_rng
from fedcy.engine.expression import (Affine, Apply, Cosine, Dot, Exp, Expression, Leaf, Log, Mean,
                                     Norm, Relu, Softmax, Sum, constant)
from fedcy.engine.gradcheck import DEFAULT_TOLERANCE, GradientCheck, GradientHook, check_gradients
from fedcy.losses.contrastive import ContrastiveConfig, ntxent, supervised_contrastive_batch
from fedcy.losses.cycle_consistency import (TccConfig, cycle_back_loss, tcc_batch_objective,
                                            tcc_pair_loss)
from fedcy.losses.objectives import cross_entropy, labeled_objective
from fedcy.models.phase_recognizer import ModelConfig, ParameterSet, extract_features, parameter_shapes

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name

# Smoother than the training defaults, so random instances stay far from the variance floor.
TAU_TCC = 1.0
TAU_NT = 0.5

Instance = Tuple[Expression, Dict[str, np.ndarray], List[str]]


def _uniform(rng: np.random.Generator, *shape: int) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, size=shape)


def _tcc_config(instance: int) -> TccConfig:
    return TccConfig(tau_tcc=TAU_TCC, sigma_reading=("variance", "literal")[instance % 2])


def _contrastive_config(instance: int) -> ContrastiveConfig:
    return ContrastiveConfig(tau_nt=TAU_NT,
                             similarity=("cosine", "negative_squared_distance")[instance % 2])


def _small_model(rng: np.random.Generator, num_phases: int) -> ModelConfig:
    return ModelConfig(input_dim=int(rng.integers(3, 9)), hidden_dims=(4,),
                       embed_dim=int(rng.integers(3, 9)), num_phases=num_phases)


def _parameter_leaves(config: ModelConfig,
                      rng: np.random.Generator) -> Tuple[List[str], List[str], Dict[str, np.ndarray]]:
    omega_shapes, theta_shapes = parameter_shapes(config)
    bindings = {name: _uniform(rng, *shape) for name, shape in {**omega_shapes, **theta_shapes}.items()}
    return list(omega_shapes), list(theta_shapes), bindings


def _parameter_set(omega_names: Sequence[str], theta_names: Sequence[str],
                   arrays: Sequence[torch.Tensor]) -> ParameterSet:
    split = len(omega_names)
    return ParameterSet(dict(zip(omega_names, arrays[:split])), dict(zip(theta_names, arrays[split:])))


def mlp_instance(rng: np.random.Generator, _: int) -> Instance:
    n, d, h = int(rng.integers(2, 7)), int(rng.integers(3, 9)), 4
    expression = Sum(Affine(Relu(Affine(Leaf("x"), Leaf("w1"), Leaf("b1"))), Leaf("w2"), Leaf("b2")))
    bindings = {"x": _uniform(rng, n, d), "w1": _uniform(rng, d, h), "b1": _uniform(rng, h),
                "w2": _uniform(rng, h, 3), "b2": _uniform(rng, 3)}
    return expression, bindings, list(bindings)


def primitives_instance(rng: np.random.Generator, _: int) -> Instance:
    d = int(rng.integers(3, 9))
    u, v = Leaf("u"), Leaf("v")
    expression = (Mean(Log(Softmax(u))) + Dot(u, v) * Cosine(u, v) + Norm(Exp(v))
                  + Dot(constant("c"), u))
    bindings = {"u": _uniform(rng, d), "v": _uniform(rng, d), "c": _uniform(rng, d)}
    return expression, bindings, ["u", "v"]


def extract_features_instance(rng: np.random.Generator, _: int) -> Instance:
    config = _small_model(rng, 3)
    omega_names, theta_names, bindings = _parameter_leaves(config, rng)
    bindings["frames"] = _uniform(rng, int(rng.integers(2, 7)), config.input_dim)

    def features(frames: torch.Tensor, *arrays: torch.Tensor) -> torch.Tensor:
        return extract_features(_parameter_set(omega_names, theta_names, arrays), frames)

    expression = Sum(Apply(features, Leaf("frames"), *(Leaf(name) for name in omega_names + theta_names),
                           label="extract_features"))
    return expression, bindings, ["frames"] + omega_names


def cycle_back_loss_instance(rng: np.random.Generator, instance: int) -> Instance:
    d, n, m = int(rng.integers(3, 9)), int(rng.integers(2, 7)), int(rng.integers(2, 7))
    k = int(rng.integers(1, n + 1))
    cfg = _tcc_config(instance)
    expression = Apply(lambda U, V: cycle_back_loss(k, U, V, cfg), Leaf("U"), Leaf("V"),
                       label="cycle_back_loss")
    return expression, {"U": _uniform(rng, n, d), "V": _uniform(rng, m, d)}, ["U", "V"]


def tcc_pair_loss_instance(rng: np.random.Generator, instance: int) -> Instance:
    d, n, m = int(rng.integers(3, 9)), int(rng.integers(2, 7)), int(rng.integers(2, 7))
    cfg = _tcc_config(instance)
    expression = Apply(lambda U, V: tcc_pair_loss(U, V, cfg), Leaf("U"), Leaf("V"), label="tcc_pair_loss")
    return expression, {"U": _uniform(rng, n, d), "V": _uniform(rng, m, d)}, ["U", "V"]


def tcc_batch_objective_instance(rng: np.random.Generator, instance: int) -> Instance:
    d, k, batch = int(rng.integers(3, 9)), int(rng.integers(2, 7)), int(rng.integers(2, 5))
    cfg = _tcc_config(instance)
    names = [f"clip_{index}" for index in range(batch)]
    expression = Apply(lambda *clips: tcc_batch_objective(list(clips), cfg),
                       *(Leaf(name) for name in names), label="tcc_batch_objective")
    return expression, {name: _uniform(rng, k, d) for name in names}, names


def ntxent_instance(rng: np.random.Generator, instance: int) -> Instance:
    d, negatives = int(rng.integers(3, 9)), int(rng.integers(1, 6))
    cfg = _contrastive_config(instance)
    expression = Apply(lambda a, p, n: ntxent(a, p, n, cfg), Leaf("anchor"), Leaf("positive"),
                       Leaf("negatives"), label="ntxent")
    bindings = {"anchor": _uniform(rng, d), "positive": _uniform(rng, d),
                "negatives": _uniform(rng, negatives, d)}
    return expression, bindings, list(bindings)


def supervised_contrastive_instance(rng: np.random.Generator, instance: int) -> Instance:
    d, num_classes = int(rng.integers(3, 9)), int(rng.integers(2, 4))
    # Every class has at least two members so each one contributes positives.
    sizes = [int(size) for size in rng.integers(2, 4, size=num_classes)]
    cfg = _contrastive_config(instance)
    names = [f"class_{index}" for index in range(num_classes)]
    expression = Apply(lambda *groups: supervised_contrastive_batch(list(groups), sum(sizes), cfg),
                       *(Leaf(name) for name in names), label="supervised_contrastive_batch")
    return expression, {name: _uniform(rng, size, d) for name, size in zip(names, sizes)}, names


def cross_entropy_instance(rng: np.random.Generator, _: int) -> Instance:
    num_phases = int(rng.integers(2, 7))
    target = np.zeros(num_phases)
    target[int(rng.integers(num_phases))] = 1.0
    expression = Apply(lambda y, z: cross_entropy(y, torch.softmax(z, dim=0)), constant("y"), Leaf("z"),
                       label="cross_entropy")
    return expression, {"y": target, "z": _uniform(rng, num_phases)}, ["z"]


def labeled_objective_instance(rng: np.random.Generator, instance: int) -> Instance:
    num_phases = 3
    config = _small_model(rng, num_phases)
    omega_names, theta_names, bindings = _parameter_leaves(config, rng)
    batch = int(rng.integers(4, 7))
    labels = [int(label) for label in rng.integers(1, num_phases + 1, size=batch)]
    bindings["frames"] = _uniform(rng, batch, config.input_dim)
    cfg = _contrastive_config(instance)

    def objective(frames: torch.Tensor, *arrays: torch.Tensor) -> torch.Tensor:
        return labeled_objective(frames, labels, _parameter_set(omega_names, theta_names, arrays), cfg)

    expression = Apply(objective, Leaf("frames"), *(Leaf(name) for name in omega_names + theta_names),
                       label="labeled_objective")
    return expression, bindings, omega_names + theta_names


InstanceBuilder = Callable[[np.random.Generator, int], Instance]

ENGINE_COMPONENTS: Dict[str, InstanceBuilder] = {
        "mlp": mlp_instance,
        "primitives": primitives_instance,
        "extract_features": extract_features_instance,
}
LOSS_COMPONENTS: Dict[str, InstanceBuilder] = {
        "cycle_back_loss": cycle_back_loss_instance,
        "tcc_pair_loss": tcc_pair_loss_instance,
        "tcc_batch_objective": tcc_batch_objective_instance,
        "ntxent": ntxent_instance,
        "supervised_contrastive_batch": supervised_contrastive_instance,
        "cross_entropy": cross_entropy_instance,
        "labeled_objective": labeled_objective_instance,
}
COMPONENTS: Dict[str, InstanceBuilder] = {**ENGINE_COMPONENTS, **LOSS_COMPONENTS}
SELECTORS = ("all", "engine", "losses") + tuple(COMPONENTS)


def select_components(selector: str) -> List[str]:
    if selector == "all":
        return list(COMPONENTS)
    if selector == "engine":
        return list(ENGINE_COMPONENTS)
    if selector == "losses":
        return list(LOSS_COMPONENTS)
    if selector in COMPONENTS:
        return [selector]
    raise ConfigurationError(f"unknown gradcheck component {selector!r}, expected one of {SELECTORS}")


def corrupt_gradients(gradients: Dict[str, torch.Tensor]) -> Dict[str, torch.Tensor]:
    """
    Test hook: distorts every analytic gradient so that a working harness must fail.
    """
    return {name: value * 2.0 + 1e-2 for name, value in gradients.items()}


class ComponentResult(NamedTuple):
    component: str
    instances: int
    max_relative_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_relative_error < self.tolerance


def check_component(component: str,
                    seed: int = 0,
                    instances: int = 50,
                    tolerance: float = DEFAULT_TOLERANCE,
                    gradient_hook: Optional[GradientHook] = None) -> ComponentResult:
    """
    Checks ``instances`` random instances of ``component``; instance ``i`` is drawn from
    its own stream of ``seed``, so any failing instance can be rebuilt on its own.
    """
    builder = COMPONENTS[component]
    stream = list(COMPONENTS).index(component)
    checks: List[GradientCheck] = []
    for instance in range(instances):
        expression, bindings, wrt = builder(derive_rng(seed, stream, instance), instance)
        checks.append(check_gradients(component, expression, bindings, wrt,
                                      tolerance=tolerance, gradient_hook=gradient_hook))
    worst = max(check.max_relative_error for check in checks)
    result = ComponentResult(component, instances, worst, tolerance)
    logger.info("%s: %s (max relative error %.3e over %d instances)", component,
                "passed" if result.passed else "FAILED", worst, instances)
    return result


class Gradcheck(Subcommand):
    @overrides
    def add_subparser(self, name: str, parser: argparse._SubParsersAction) -> argparse.ArgumentParser:  # pylint: disable=protected-access
        description = "Compare analytic gradients with central differences."
        subparser = parser.add_parser(name, description=description, help=description,
                                      formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        subparser.add_argument("--component", choices=SELECTORS, default="all",
                               help="component or component group to check")
        subparser.add_argument("--seed", type=int, default=0, help="seed of the random instances")
        subparser.add_argument("--instances", type=int, default=50, help="random instances per component")
        subparser.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
        add_common_arguments(subparser)
        subparser.set_defaults(func=gradcheck_from_args)
        return subparser


def gradcheck_from_args(args: argparse.Namespace) -> int:
    results = cmd_gradcheck(args.component, seed=args.seed, instances=args.instances,
                            inject_fault=args.inject_fault)
    print(format_results(results))
    return 0 if all(result.passed for result in results) else 1


def format_results(results: Sequence[ComponentResult]) -> str:
    width = max(len("component"), *(len(result.component) for result in results))
    lines = [f"{'component':<{width}}  instances  max_rel_error  status"]
    for result in results:
        status = "pass" if result.passed else "FAIL"
        lines.append(f"{result.component:<{width}}  {result.instances:>9}  "
                     f"{result.max_relative_error:>13.3e}  {status}")
    return "\n".join(lines)


def cmd_gradcheck(component: str = "all",
                  seed: int = 0,
                  instances: int = 50,
                  inject_fault: bool = False) -> List[ComponentResult]:
    if instances < 1:
        raise ConfigurationError(f"instances must be positive, got {instances}")
    hook = corrupt_gradients if inject_fault else None
    return [check_component(name, seed=seed, instances=instances, gradient_hook=hook)
            for name in select_components(component)]
