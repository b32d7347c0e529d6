"""Linear operators with exact adjoints and power-iteration norm estimates.

Two concrete families are provided:

* :class:`DenseOperator` -- an explicit matrix acting on flattened arrays.
* Multi-channel 2-D convolutions with zero "same" padding, seen either as a
  map of the kernel for fixed features (:class:`FeatureConv2d`, the operator
  used to train a last layer) or as a map of the image for a fixed kernel
  (:class:`KernelConv2d`, used by frozen network layers).

Convolutions follow the deep-learning convention (cross-correlation)::

    out[o, i, j] = sum_{c, a, b} w[c, o, a, b] * x[c, i + a - pt, j + b - pl]

with ``pt = (h - 1) // 2`` and ``pl = (w - 1) // 2``, out-of-range pixels
being zero.  The sum runs sequentially over ``(c, a, b)`` in row-major order
so that results are bit-reproducible.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit
from numpy.lib.stride_tricks import sliding_window_view

POWER_SEED = 0xC0FFEE
DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 10_000


class ShapeError(ValueError):
    """Raised when an array does not conform to an operator's shape."""


def as_shape(dims) -> tuple:
    dims = (int(dims),) if np.ndim(dims) == 0 else tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise ShapeError(f"invalid shape {dims}: need at least one dim, all >= 1")
    return dims


def size_of(shape) -> int:
    return int(np.prod(shape, dtype=np.int64))


def _conform(x, shape, what):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != shape:
        raise ShapeError(f"{what} has shape {x.shape}, expected {shape}")
    return x


class LinearOperator:
    """Base class: a linear map from ``domain_shape`` to ``codomain_shape``.

    Subclasses implement ``_apply`` and ``_adjoint``; the public methods
    check shapes.  Operators are immutable once constructed.
    """

    kind = "abstract"
    domain_shape: tuple
    codomain_shape: tuple

    def apply(self, u):
        return self._apply(_conform(u, self.domain_shape, "input"))

    def adjoint_apply(self, v):
        return self._adjoint(_conform(v, self.codomain_shape, "adjoint input"))

    def __call__(self, u):
        return self.apply(u)

    @property
    def domain_size(self):
        return size_of(self.domain_shape)

    @property
    def codomain_size(self):
        return size_of(self.codomain_shape)

    def _apply(self, u):
        raise NotImplementedError

    def _adjoint(self, v):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.domain_shape} -> {self.codomain_shape})"


class DenseOperator(LinearOperator):
    """A matrix of size ``|codomain| x |domain|`` acting on flattened arrays."""

    kind = "dense"

    def __init__(self, matrix, domain_shape=None, codomain_shape=None):
        matrix = np.array(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise ShapeError(f"dense payload must be 2-D, got {matrix.ndim}-D")
        self.domain_shape = as_shape(domain_shape or (matrix.shape[1],))
        self.codomain_shape = as_shape(codomain_shape or (matrix.shape[0],))
        if matrix.shape != (size_of(self.codomain_shape), size_of(self.domain_shape)):
            raise ShapeError(
                f"matrix {matrix.shape} incompatible with "
                f"{self.domain_shape} -> {self.codomain_shape}"
            )
        matrix.setflags(write=False)
        self.matrix = matrix

    def _apply(self, u):
        return (self.matrix @ u.ravel()).reshape(self.codomain_shape)

    def _adjoint(self, v):
        return (self.matrix.T @ v.ravel()).reshape(self.domain_shape)


def identity(shape) -> DenseOperator:
    shape = as_shape(shape)
    return DenseOperator(np.eye(size_of(shape)), shape, shape)


# -- convolution kernels ------------------------------------------------------

def _as_chw(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        return x[None]
    if x.ndim != 3:
        raise ShapeError(f"expected an image [H, W] or [C, H, W], got shape {x.shape}")
    return x


def _pad_amounts(h, w):
    top, left = (h - 1) // 2, (w - 1) // 2
    return (top, h - 1 - top), (left, w - 1 - left)


def image_columns(x, kernel_hw):
    """Return the window matrix of ``x`` with shape ``(C*h*w, H*W)``.

    Row ``(c, a, b)`` holds the zero-padded image of channel ``c`` shifted
    by ``(a - pt, b - pl)``.
    """
    x = _as_chw(x)
    h, w = kernel_hw
    (pt, pb), (pl, pr) = _pad_amounts(h, w)
    c, height, width = x.shape
    padded = np.pad(x, ((0, 0), (pt, pb), (pl, pr)))
    win = sliding_window_view(padded, (h, w), axis=(1, 2))  # (C, H, W, h, w)
    return np.ascontiguousarray(win.transpose(0, 3, 4, 1, 2)).reshape(c * h * w, height * width)


@njit(cache=True)
def _conv_padded(padded, kernel, height, width):
    # per output pixel the products are added in (c, a, b) row-major order
    c_in, c_out, h, w = kernel.shape
    out = np.zeros((c_out, height, width))
    for o in range(c_out):
        for c in range(c_in):
            for a in range(h):
                for b in range(w):
                    t = kernel[c, o, a, b]
                    for i in range(height):
                        for j in range(width):
                            out[o, i, j] += padded[c, i + a, j + b] * t
    return out


def pad_same(x, kernel_hw):
    (pt, pb), (pl, pr) = _pad_amounts(*kernel_hw)
    return np.pad(_as_chw(x), ((0, 0), (pt, pb), (pl, pr)))


def conv2d(x, kernel):
    """Multi-channel 2-D convolution with zero "same" padding.

    Parameters
    ----------
    x : array, shape (C_in, H, W) or (H, W)
    kernel : array, shape (C_in, C_out, h, w)

    Returns
    -------
    array, shape (C_out, H, W)
    """
    x = _as_chw(x)
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 4 or kernel.shape[0] != x.shape[0]:
        raise ShapeError(f"kernel {kernel.shape} does not match input {x.shape}")
    return _conv_padded(pad_same(x, kernel.shape[2:]), np.ascontiguousarray(kernel), *x.shape[1:])


def conv2d_kernel_adjoint(x, v, kernel_hw):
    """Adjoint of ``w -> conv2d(x, w)``: correlate ``x`` with ``v``."""
    x = _as_chw(x)
    v = _as_chw(v)
    h, w = kernel_hw
    cols = image_columns(x, (h, w))
    prod = cols @ v.reshape(v.shape[0], -1).T  # (C_in*h*w, C_out)
    return prod.reshape(x.shape[0], h, w, v.shape[0]).transpose(0, 3, 1, 2).copy()


def conv2d_input_adjoint(kernel, v):
    """Adjoint of ``x -> conv2d(x, kernel)`` (a transposed convolution)."""
    kernel = np.asarray(kernel, dtype=np.float64)
    v = _as_chw(v)
    c_in, c_out, h, w = kernel.shape
    (pt, pb), (pl, pr) = _pad_amounts(h, w)
    height, width = v.shape[1:]
    out = np.zeros((c_in, height + h - 1, width + w - 1))
    for a in range(h):
        for b in range(w):
            # out_padded[c, i + a, j + b] += w[c, o, a, b] * v[o, i, j]
            out[:, a:a + height, b:b + width] += np.tensordot(kernel[:, :, a, b], v, axes=(1, 0))
    return out[:, pt:pt + height, pl:pl + width]


def transposed_conv2d(kernel, v):
    """Same map as :func:`conv2d_input_adjoint`, computed as a correlation
    with the flipped, channel-swapped kernel and mirrored padding."""
    kernel = np.asarray(kernel, dtype=np.float64)
    v = _as_chw(v)
    h, w = kernel.shape[2:]
    (pt, pb), (pl, pr) = _pad_amounts(h, w)
    padded = np.pad(v, ((0, 0), (pb, pt), (pr, pl)))
    flipped = np.ascontiguousarray(kernel[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
    return _conv_padded(padded, flipped, *v.shape[1:])


class FeatureConv2d(LinearOperator):
    """Kernel-to-image map ``w -> x * w`` for fixed features ``x``.

    This is the per-sample operator of last-layer training: the domain is
    the kernel stack ``(C_in, C_out, h, w)`` and the codomain the output
    image, ``(H, W)`` when ``C_out == 1`` and ``(C_out, H, W)`` otherwise.
    """

    kind = "conv2d"

    def __init__(self, features, kernel_shape):
        features = _as_chw(features).copy()
        kernel_shape = as_shape(kernel_shape)
        if len(kernel_shape) != 4 or kernel_shape[0] != features.shape[0]:
            raise ShapeError(
                f"kernel shape {kernel_shape} must be (C_in={features.shape[0]}, C_out, h, w)"
            )
        features.setflags(write=False)
        self.features = features
        self.domain_shape = kernel_shape
        c_out = kernel_shape[1]
        spatial = features.shape[1:]
        self.codomain_shape = spatial if c_out == 1 else (c_out,) + spatial
        self._padded = pad_same(features, kernel_shape[2:])
        cols = image_columns(features, kernel_shape[2:])
        cols.setflags(write=False)
        self._cols = cols

    @property
    def padding(self):
        return "zero-same"

    def _apply(self, u):
        out = _conv_padded(self._padded, np.ascontiguousarray(u), *self.features.shape[1:])
        return out.reshape(self.codomain_shape)

    def _adjoint(self, v):
        c_in, c_out, h, w = self.domain_shape
        vmat = v.reshape(c_out, -1)
        prod = self._cols @ vmat.T
        return prod.reshape(c_in, h, w, c_out).transpose(0, 3, 1, 2).copy()


class KernelConv2d(LinearOperator):
    """Image-to-image map ``x -> x * w`` for a fixed kernel ``w``."""

    kind = "conv2d"

    def __init__(self, kernel, spatial):
        kernel = np.array(kernel, dtype=np.float64)
        if kernel.ndim != 4:
            raise ShapeError(f"kernel must be 4-D (C_in, C_out, h, w), got {kernel.shape}")
        kernel.setflags(write=False)
        self.kernel = kernel
        spatial = as_shape(spatial)
        c_in, c_out = kernel.shape[:2]
        self.domain_shape = spatial if c_in == 1 else (c_in,) + spatial
        self.codomain_shape = spatial if c_out == 1 else (c_out,) + spatial

    def _apply(self, u):
        return conv2d(u, self.kernel).reshape(self.codomain_shape)

    def _adjoint(self, v):
        return transposed_conv2d(self.kernel, v).reshape(self.domain_shape)


class BiasAugmented(LinearOperator):
    """``(w, b) -> L w + b`` on the flat space of weights followed by a bias.

    The bias lives in the codomain of ``L``; the adjoint returns
    ``(L* v, v)`` flattened.
    """

    def __init__(self, op: LinearOperator):
        self.base = op
        self.kind = op.kind
        self.codomain_shape = op.codomain_shape
        self.domain_shape = (op.domain_size + op.codomain_size,)

    def split(self, u):
        n = self.base.domain_size
        return u[:n].reshape(self.base.domain_shape), u[n:].reshape(self.codomain_shape)

    def _apply(self, u):
        w, b = self.split(u)
        return self.base.apply(w) + b

    def _adjoint(self, v):
        return np.concatenate([self.base.adjoint_apply(v).ravel(), v.ravel()])


# -- norm estimation ------------------------------------------------------------

@dataclass(frozen=True)
class NormEstimate:
    norm_sq: float
    iterations: int
    residual: float


def operator_norm_sq(op: LinearOperator, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                     seed=POWER_SEED) -> NormEstimate:
    """Estimate ``||L||^2`` by power iteration on ``L* L``.

    The iteration starts from a seeded Gaussian vector and stops once two
    successive Rayleigh quotients differ by less than ``tol`` (absolute) or
    after ``max_iter`` iterations.  ``residual`` is the last such difference.
    A zero operator returns ``norm_sq = 0`` straight away.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.domain_shape)
    x /= np.linalg.norm(x)
    y = op.adjoint_apply(op.apply(x))
    rq = float(np.vdot(x, y))
    if not np.any(y):
        return NormEstimate(0.0, 0, 0.0)
    residual = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return NormEstimate(0.0, it, 0.0)
        x = y / ny
        y = op.adjoint_apply(op.apply(x))
        new_rq = float(np.vdot(x, y))
        residual = abs(new_rq - rq)
        rq = new_rq
        if residual < tol:
            break
    return NormEstimate(max(rq, 0.0), it, residual)
