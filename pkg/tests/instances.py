"""Random problem builders shared by the tests."""

import numpy as np

from vilayer import Activation, DenseOperator, FeatureConv2d, build_problem
from vilayer.linops import BiasAugmented, KernelConv2d
from vilayer.constraints import WHOLE_SPACE

ACTIVATIONS = (Activation("identity"), Activation("relu"), Activation("leaky_relu", 0.01),
               Activation("leaky_relu", 0.001))


def dense_ops(rng, K, m, d, scale=1.0):
    return [DenseOperator(scale * rng.standard_normal((m, d))) for _ in range(K)]


def solvable_dense(rng, K=8, m=6, d=5, activation=Activation(), constraint=WHOLE_SPACE,
                   theta_star=None):
    """Targets ``y_k = R(L_k theta*)`` with ``theta* in C``; returns ``(problem, theta*)``."""
    ops = dense_ops(rng, K, m, d)
    if theta_star is None:
        theta_star = constraint.project(rng.standard_normal(d))
    targets = [activation(op.apply(theta_star)) for op in ops]
    weights = rng.uniform(0.5, 1.5, K)
    return build_problem(ops, targets, activation, constraint, weights=weights), theta_star


def random_dense(rng, K=6, m=4, d=3, activation=Activation(), constraint=WHOLE_SPACE,
                 weights=None):
    ops = dense_ops(rng, K, m, d)
    targets = [rng.standard_normal(m) for _ in range(K)]
    return build_problem(ops, targets, activation, constraint, weights=weights)


def random_conv(rng, K=4, c_in=2, n=6, ksize=3, activation=Activation("leaky_relu", 0.01)):
    ops = [FeatureConv2d(rng.standard_normal((c_in, n, n)), (c_in, 1, ksize, ksize))
           for _ in range(K)]
    targets = [rng.standard_normal((n, n)) for _ in range(K)]
    return build_problem(ops, targets, activation)


def random_operators(rng):
    yield DenseOperator(rng.standard_normal((7, 5)))
    yield DenseOperator(rng.standard_normal((12, 6)), (2, 3), (3, 4))
    yield FeatureConv2d(rng.standard_normal((3, 6, 7)), (3, 1, 3, 5))
    yield FeatureConv2d(rng.standard_normal((2, 5, 5)), (2, 3, 3, 3))
    yield FeatureConv2d(rng.standard_normal((1, 4, 4)), (1, 1, 2, 4))
    yield KernelConv2d(rng.standard_normal((1, 2, 3, 3)), (6, 5))
    yield KernelConv2d(rng.standard_normal((2, 1, 4, 2)), (5, 5))
    yield BiasAugmented(FeatureConv2d(rng.standard_normal((2, 4, 4)), (2, 1, 3, 3)))
