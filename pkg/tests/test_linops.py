import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from instances import random_operators
from oracles import dot, flat, jacobi_singular_values, naive_conv2d
from vilayer.linops import (BiasAugmented, DenseOperator, FeatureConv2d, KernelConv2d,
                            ShapeError, conv2d, conv2d_input_adjoint, identity,
                            operator_norm_sq)


class TestExamples:
    def test_dense_diagonal(self):
        op = DenseOperator([[1.0, 0.0], [0.0, 2.0]])
        np.testing.assert_array_equal(op.apply(np.array([3.0, 4.0])), [3.0, 8.0])

    def test_dense_transpose(self):
        op = DenseOperator([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(op.adjoint_apply(np.array([1.0, 1.0])), [4.0, 6.0])

    def test_scalar_conv(self):
        op = FeatureConv2d(np.array([[[5.0]]]), (1, 1, 1, 1))
        np.testing.assert_array_equal(op.apply(np.full((1, 1, 1, 1), 2.0)), [[10.0]])

    def test_ones_window_center(self):
        op = FeatureConv2d(np.ones((1, 3, 3)), (1, 1, 3, 3))
        out = op.apply(np.ones((1, 1, 3, 3)))
        assert out[1, 1] == 9.0
        # zero padding: corners see a 2x2 patch, edges a 2x3 one
        np.testing.assert_array_equal(out, [[4, 6, 4], [6, 9, 6], [4, 6, 4]])

    def test_zero_cotangent(self, rng):
        for op in random_operators(rng):
            assert not np.any(op.adjoint_apply(np.zeros(op.codomain_shape)))

    def test_output_shapes(self, rng):
        op = FeatureConv2d(rng.standard_normal((4, 9, 7)), (4, 1, 5, 5))
        assert op.codomain_shape == (9, 7)
        op = FeatureConv2d(rng.standard_normal((4, 9, 7)), (4, 2, 5, 5))
        assert op.codomain_shape == (2, 9, 7)


class TestShapes:
    def test_apply_rejects_wrong_shape(self):
        with pytest.raises(ShapeError):
            identity(3).apply(np.zeros(4))

    def test_adjoint_rejects_wrong_shape(self, rng):
        op = FeatureConv2d(rng.standard_normal((2, 5, 5)), (2, 1, 3, 3))
        with pytest.raises(ShapeError):
            op.adjoint_apply(np.zeros((4, 4)))

    def test_kernel_channel_mismatch(self, rng):
        with pytest.raises(ShapeError):
            FeatureConv2d(rng.standard_normal((2, 5, 5)), (3, 1, 3, 3))

    def test_bad_matrix_shape(self):
        with pytest.raises(ShapeError):
            DenseOperator(np.zeros((6, 4)), (5,), (6,))


class TestAdjoint:
    def test_adjoint_identity_random_pairs(self, rng):
        for op in random_operators(rng):
            for _ in range(100):
                u = rng.standard_normal(op.domain_shape)
                v = rng.standard_normal(op.codomain_shape)
                lhs = float(np.vdot(op.apply(u), v))
                rhs = float(np.vdot(u, op.adjoint_apply(v)))
                assert abs(lhs - rhs) <= 1e-10 * (1 + abs(lhs))

    def test_conv_adjoint_against_loop_inner_products(self, rng):
        op = FeatureConv2d(np.ones((1, 3, 3)), (1, 1, 3, 3))
        for _ in range(100):
            w = rng.standard_normal((1, 1, 3, 3))
            v = rng.standard_normal((3, 3))
            lhs = dot(flat(naive_conv2d(np.ones((1, 3, 3)), w)), flat(v))
            rhs = dot(flat(w), flat(op.adjoint_apply(v)))
            assert abs(lhs - rhs) <= 1e-10 * (1 + abs(lhs))

    def test_input_adjoint_is_transposed_convolution(self, rng):
        kernel = rng.standard_normal((2, 3, 3, 3))
        op = KernelConv2d(kernel, (5, 6))
        v = rng.standard_normal((3, 5, 6))
        np.testing.assert_allclose(op.adjoint_apply(v), conv2d_input_adjoint(kernel, v),
                                   rtol=0, atol=1e-13)


class TestLinearity:
    def test_linearity(self, rng):
        for op in random_operators(rng):
            u, v = rng.standard_normal((2,) + op.domain_shape)
            if isinstance(op, BiasAugmented):
                continue  # affine in the weights, linear on the augmented domain
            a, b = rng.standard_normal(2)
            lhs = op.apply(a * u + b * v)
            rhs = a * op.apply(u) + b * op.apply(v)
            np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * np.abs(rhs).max())

    def test_bias_augmented_is_linear_on_its_domain(self, rng):
        op = BiasAugmented(FeatureConv2d(rng.standard_normal((2, 4, 4)), (2, 1, 3, 3)))
        u, v = rng.standard_normal((2, op.domain_size))
        lhs = op.apply(2.0 * u - 3.0 * v)
        rhs = 2.0 * op.apply(u) - 3.0 * op.apply(v)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)

    def test_bias_split(self, rng):
        base = FeatureConv2d(rng.standard_normal((1, 4, 4)), (1, 1, 3, 3))
        op = BiasAugmented(base)
        w = rng.standard_normal((1, 1, 3, 3))
        b = rng.standard_normal((4, 4))
        u = np.concatenate([w.ravel(), b.ravel()])
        np.testing.assert_array_equal(op.apply(u), base.apply(w) + b)


class TestNaiveConvExact:
    def test_exhaustive_small_sizes(self, rng):
        for H in range(1, 9):
            for W in (1, 3, H, 8):
                for h in range(1, 6):
                    for w in (1, h, 5):
                        c_in, c_out = rng.integers(1, 4, 2)
                        x = rng.standard_normal((c_in, H, W))
                        k = rng.standard_normal((c_in, c_out, h, w))
                        np.testing.assert_array_equal(conv2d(x, k), np.array(naive_conv2d(x, k)))

    @settings(max_examples=60, deadline=None)
    @given(H=st.integers(1, 8), W=st.integers(1, 8), h=st.integers(1, 5), w=st.integers(1, 5),
           c_in=st.integers(1, 3), seed=st.integers(0, 2**32 - 1))
    def test_random_sizes(self, H, W, h, w, c_in, seed):
        r = np.random.default_rng(seed)
        x = r.standard_normal((c_in, H, W))
        k = r.standard_normal((c_in, 1, h, w))
        op = FeatureConv2d(x, k.shape)
        np.testing.assert_array_equal(op.apply(k), np.array(naive_conv2d(x, k))[0])


class TestNorm:
    def test_diagonal(self):
        est = operator_norm_sq(DenseOperator(np.diag([3.0, 4.0])))
        assert est.norm_sq == pytest.approx(16.0, rel=1e-9)

    def test_nilpotent_shift(self):
        est = operator_norm_sq(DenseOperator([[0.0, 1.0], [0.0, 0.0]]))
        assert est.norm_sq == pytest.approx(1.0, rel=1e-9)

    def test_zero_operator(self):
        est = operator_norm_sq(DenseOperator(np.zeros((3, 2))))
        assert est.norm_sq == 0.0 and est.iterations == 0

    def test_random_8x6_against_jacobi(self, rng):
        A = rng.standard_normal((8, 6))
        expected = jacobi_singular_values(A)[0] ** 2
        assert operator_norm_sq(DenseOperator(A)).norm_sq == pytest.approx(expected, rel=1e-6)

    def test_deterministic(self, rng):
        op = FeatureConv2d(rng.standard_normal((3, 8, 8)), (3, 1, 5, 5))
        assert operator_norm_sq(op) == operator_norm_sq(op)

    def test_domination(self, rng):
        for op in random_operators(rng):
            ns = operator_norm_sq(op).norm_sq
            for _ in range(50):
                u = rng.standard_normal(op.domain_shape)
                Lu = op.apply(u)
                assert np.vdot(Lu, Lu) <= ns * np.vdot(u, u) * (1 + 1e-6)

    def test_rejects_nonpositive_tol(self):
        with pytest.raises(ValueError):
            operator_norm_sq(identity(2), tol=0)
