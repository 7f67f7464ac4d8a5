# pylint: disable=no-self-use,invalid-name
import numpy as np
import pytest
import torch

from fedcy.common.checks import GradientError
from fedcy.engine import (Affine, Cosine, Dot, Exp, Leaf, Log, Mean, Norm, Relu, Softmax, Sum, constant,
                          gradient, numeric_gradient, relative_error)
from fedcy.engine.gradcheck import check_gradients


def two_layer_network():
    return Sum(Affine(Relu(Affine(Leaf("x"), Leaf("w1"), Leaf("b1"))), Leaf("w2"), Leaf("b2")))


def network_bindings(seed):
    rng = np.random.default_rng(seed)
    return {"x": rng.uniform(-1, 1, (4, 5)), "w1": rng.uniform(-1, 1, (5, 4)), "b1": rng.uniform(-1, 1, 4),
            "w2": rng.uniform(-1, 1, (4, 3)), "b2": rng.uniform(-1, 1, 3)}


class TestGradient:
    def test_square(self):
        x = Leaf("x")
        grads = gradient(x * x, {"x": 3.0}, ["x"])
        assert float(grads["x"]) == 6.0

    def test_sum_of_softmax_is_flat(self):
        grads = gradient(Sum(Softmax(Leaf("z"))), {"z": [0.3, -1.2, 2.0, 0.5]}, ["z"])
        np.testing.assert_allclose(grads["z"].numpy(), np.zeros(4), atol=1e-12)

    def test_cosine_at_orthogonal_vectors_matches_numeric(self):
        expression = Cosine(Leaf("u"), Leaf("w"))
        bindings = {"u": [1.0, 0.0], "w": [0.0, 1.0]}
        analytic = gradient(expression, bindings, ["u", "w"])
        numeric = numeric_gradient(expression, bindings, ["u", "w"])
        for name in ("u", "w"):
            np.testing.assert_allclose(analytic[name].numpy(), numeric[name].numpy(), atol=1e-6)
        np.testing.assert_allclose(analytic["u"].numpy(), [0.0, 1.0], atol=1e-12)

    def test_unused_leaf_gets_zero_gradient(self):
        expression = Sum(Leaf("x")) + Sum(constant("c") * Leaf("y") * 0.0)
        grads = gradient(expression, {"x": [1.0, 2.0], "y": [3.0], "c": [1.0]}, ["x", "y"])
        np.testing.assert_allclose(grads["x"].numpy(), [1.0, 1.0])
        np.testing.assert_allclose(grads["y"].numpy(), [0.0])

    def test_non_scalar_root(self):
        with pytest.raises(GradientError):
            gradient(Exp(Leaf("x")), {"x": [1.0, 2.0]}, ["x"])

    def test_constant_leaf(self):
        with pytest.raises(GradientError):
            gradient(Dot(constant("c"), Leaf("x")), {"c": [1.0], "x": [2.0]}, ["c"])

    def test_unknown_leaf(self):
        with pytest.raises(GradientError):
            gradient(Sum(Leaf("x")), {"x": [1.0]}, ["y"])

    def test_does_not_modify_bindings(self):
        bindings = network_bindings(0)
        original = {name: value.copy() for name, value in bindings.items()}
        gradient(two_layer_network(), bindings, list(bindings))
        numeric_gradient(two_layer_network(), bindings, list(bindings))
        for name, value in bindings.items():
            np.testing.assert_array_equal(value, original[name])


class TestNumericGradient:
    def test_square(self):
        x = Leaf("x")
        grads = numeric_gradient(x * x, {"x": 3.0}, ["x"], step=1e-5)
        assert abs(float(grads["x"]) - 6.0) < 1e-8

    def test_constant_leaf_is_zero(self):
        grads = numeric_gradient(Dot(constant("c"), Leaf("x")), {"c": [1.0, 2.0], "x": [2.0, 3.0]}, ["c"])
        np.testing.assert_array_equal(grads["c"].numpy(), [0.0, 0.0])

    @pytest.mark.parametrize("step", [0.0, -1e-5])
    def test_step_must_be_positive(self, step):
        with pytest.raises(GradientError):
            numeric_gradient(Sum(Leaf("x")), {"x": [1.0]}, ["x"], step=step)

    def test_agrees_with_gradient_on_a_two_layer_network(self):
        bindings = network_bindings(11)
        check = check_gradients("network", two_layer_network(), bindings, list(bindings))
        assert check.passed


class TestRelativeError:
    def test_identical_arrays(self):
        assert relative_error(torch.ones(3, dtype=torch.float64), torch.ones(3, dtype=torch.float64)) == 0.0

    def test_uses_the_larger_norm(self):
        error = relative_error(torch.tensor([2.0], dtype=torch.float64), torch.tensor([1.0], dtype=torch.float64))
        assert error == 0.5

    def test_tiny_gradients_compare_absolutely(self):
        error = relative_error(torch.tensor([1e-9], dtype=torch.float64), torch.zeros(1, dtype=torch.float64))
        assert error < 1e-2


def random_primitive_instance(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(3, 9))
    u, v = Leaf("u"), Leaf("v")
    expression = (Mean(Log(Softmax(u))) + Dot(u, v) * Cosine(u, v) + Norm(Exp(v))
                  + Mean(Relu(u) * v))
    return expression, {"u": rng.uniform(-1, 1, d), "v": rng.uniform(-1, 1, d)}


class TestGradientOracle:
    @pytest.mark.parametrize("seed", range(100))
    def test_network_gradients(self, seed):
        bindings = network_bindings(seed)
        assert check_gradients("network", two_layer_network(), bindings, list(bindings)).passed

    @pytest.mark.parametrize("seed", range(100))
    def test_primitive_gradients(self, seed):
        expression, bindings = random_primitive_instance(seed)
        assert check_gradients("primitives", expression, bindings, ["u", "v"]).passed


class TestCheckGradients:
    def test_hook_that_corrupts_gradients_fails(self):
        bindings = network_bindings(1)
        check = check_gradients("network", two_layer_network(), bindings, list(bindings),
                                gradient_hook=lambda grads: {k: v * 2.0 + 1e-2 for k, v in grads.items()})
        assert not check.passed
        assert check.max_relative_error > check.tolerance
