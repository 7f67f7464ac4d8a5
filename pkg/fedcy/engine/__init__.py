from fedcy.engine.differentiation import gradient, numeric_gradient, relative_error
from fedcy.engine.expression import (Add, Affine, Apply, Cosine, Dot, Exp, Expression, Leaf,
                                     Literal, Log, MatMul, Mean, Mul, Norm, Relu, Softmax, Sum,
                                     constant, evaluate)
from fedcy.engine.functional import DTYPE, as_array, check_finite, similarity_matrix
from fedcy.engine.gradcheck import GradientCheck, check_gradients
