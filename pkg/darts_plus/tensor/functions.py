"""
Differentiable operations.

Each op is a Function subclass registered under its tag. `forward` receives the
input arrays and returns the output array; `backward` receives the gradient of
the loss with respect to the output plus the same input arrays, and returns one
gradient per input (None where no gradient flows).

Convolutions and pools loop over kernel offsets and contract channels with
numpy, so the reduction order is fixed and results are bit-reproducible.
"""

from typing import Any, ClassVar

import numpy as np

from darts_plus.errors import ShapeError, UnImplementedError


class Function:
    tag: ClassVar[str] = ""
    registry: ClassVar[dict[str, type["Function"]]] = {}

    def __init_subclass__(cls, **kwargs: Any):
        super().__init_subclass__(**kwargs)
        if cls.tag:
            Function.registry[cls.tag] = cls

    def check(self, *xs: np.ndarray) -> None:
        return None

    def forward(self, *xs: np.ndarray) -> np.ndarray:
        raise UnImplementedError("forward", self.__class__.__name__)

    def backward(self, grad: np.ndarray, *xs: np.ndarray) -> tuple[np.ndarray | None, ...]:
        raise UnImplementedError("backward", self.__class__.__name__)

    def _fail(self, xs: tuple[np.ndarray, ...], detail: str) -> None:
        raise ShapeError(self.tag, [x.shape for x in xs], detail)


def make_function(op: str, **attrs: Any) -> Function:
    try:
        cls = Function.registry[op]
    except KeyError:
        raise UnImplementedError(op, "Graph") from None
    return cls(**attrs)


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -x))


def _softmax(x: np.ndarray, axis: int) -> np.ndarray:
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


# ---------------------------------------------------------------- elementwise


class Add(Function):
    tag = "add"

    def check(self, a, b):
        if a.shape != b.shape:
            self._fail((a, b), "operands must have equal shapes")

    def forward(self, a, b):
        return a + b

    def backward(self, grad, a, b):
        return grad, grad


class Mul(Function):
    tag = "mul"

    def check(self, a, b):
        if a.shape != b.shape:
            self._fail((a, b), "operands must have equal shapes")

    def forward(self, a, b):
        return a * b

    def backward(self, grad, a, b):
        return grad * b, grad * a


class Scale(Function):
    tag = "scale"

    def __init__(self, factor: float):
        self.factor = float(factor)

    def forward(self, x):
        return x * self.factor

    def backward(self, grad, x):
        return (grad * self.factor,)


class Shift(Function):
    tag = "shift"

    def __init__(self, value: float):
        self.value = float(value)

    def forward(self, x):
        return x + self.value

    def backward(self, grad, x):
        return (grad,)


class ScalarMul(Function):
    """Multiply a tensor by a one-element tensor."""

    tag = "scalar_mul"

    def check(self, s, x):
        if s.size != 1:
            self._fail((s, x), "first operand must hold a single value")

    def forward(self, s, x):
        return s.reshape(-1)[0] * x

    def backward(self, grad, s, x):
        return np.sum(grad * x).reshape(s.shape), s.reshape(-1)[0] * grad


class Relu(Function):
    tag = "relu"

    def forward(self, x):
        return np.maximum(x, 0.0)

    def backward(self, grad, x):
        # subgradient 0 at exactly 0
        return (grad * (x > 0.0),)


class Sigmoid(Function):
    tag = "sigmoid"

    def forward(self, x):
        return _stable_sigmoid(x)

    def backward(self, grad, x):
        y = _stable_sigmoid(x)
        return (grad * y * (1.0 - y),)


class Softplus(Function):
    tag = "softplus"

    def forward(self, x):
        return np.logaddexp(0.0, x)

    def backward(self, grad, x):
        return (grad * _stable_sigmoid(x),)


# ----------------------------------------------------------------- reductions


class Sum(Function):
    tag = "sum"

    def forward(self, x):
        return np.asarray(np.sum(x))

    def backward(self, grad, x):
        return (np.full(x.shape, grad.reshape(-1)[0]),)


class Mean(Function):
    tag = "mean"

    def forward(self, x):
        return np.asarray(np.mean(x))

    def backward(self, grad, x):
        return (np.full(x.shape, grad.reshape(-1)[0] / x.size),)


class L2Norm(Function):
    tag = "l2_norm"

    def forward(self, x):
        return np.asarray(np.sqrt(np.sum(x * x)))

    def backward(self, grad, x):
        norm = np.sqrt(np.sum(x * x))
        if norm == 0.0:
            return (np.zeros_like(x),)
        return (grad.reshape(-1)[0] * x / norm,)


class Softmax(Function):
    tag = "softmax"

    def __init__(self, axis: int = -1):
        self.axis = axis

    def forward(self, x):
        return _softmax(x, self.axis)

    def backward(self, grad, x):
        y = _softmax(x, self.axis)
        return (y * (grad - np.sum(grad * y, axis=self.axis, keepdims=True)),)


class LogSumExp(Function):
    tag = "logsumexp"

    def __init__(self, axis: int = -1):
        self.axis = axis

    def forward(self, x):
        m = np.max(x, axis=self.axis, keepdims=True)
        out = m + np.log(np.sum(np.exp(x - m), axis=self.axis, keepdims=True))
        return np.squeeze(out, axis=self.axis)

    def backward(self, grad, x):
        return (np.expand_dims(grad, self.axis) * _softmax(x, self.axis),)


class CrossEntropy(Function):
    """Mean softmax cross-entropy of [B, K] logits against integer labels."""

    tag = "cross_entropy"

    def __init__(self, labels: np.ndarray):
        self.labels = np.asarray(labels, dtype=np.int64)

    def check(self, logits):
        if logits.ndim != 2 or logits.shape[0] != self.labels.shape[0]:
            self._fail((logits, self.labels), "logits must be [B, K] with B labels")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= logits.shape[1]):
            self._fail((logits, self.labels), "label out of range")

    def forward(self, logits):
        rows = np.arange(logits.shape[0])
        m = np.max(logits, axis=1, keepdims=True)
        lse = m[:, 0] + np.log(np.sum(np.exp(logits - m), axis=1))
        return np.asarray(np.mean(lse - logits[rows, self.labels]))

    def backward(self, grad, logits):
        rows = np.arange(logits.shape[0])
        d = _softmax(logits, 1)
        d[rows, self.labels] -= 1.0
        return (d * (grad.reshape(-1)[0] / logits.shape[0]),)


# -------------------------------------------------------------------- shaping


class Reshape(Function):
    tag = "reshape"

    def __init__(self, shape: tuple[int, ...]):
        self.shape = tuple(shape)

    def check(self, x):
        if int(np.prod(self.shape)) != x.size:
            self._fail((x,), f"cannot reshape to {self.shape}")

    def forward(self, x):
        return x.reshape(self.shape).copy()

    def backward(self, grad, x):
        return (grad.reshape(x.shape),)


class Row(Function):
    tag = "row"

    def __init__(self, index: int):
        self.index = int(index)

    def check(self, x):
        if x.ndim != 2 or not 0 <= self.index < x.shape[0]:
            self._fail((x,), f"row {self.index} out of range")

    def forward(self, x):
        return x[self.index].copy()

    def backward(self, grad, x):
        d = np.zeros_like(x)
        d[self.index] = grad
        return (d,)


class Concat(Function):
    tag = "concat"

    def __init__(self, axis: int = 1):
        self.axis = axis

    def check(self, *xs):
        if not xs:
            self._fail(xs, "nothing to concatenate")
        ref = list(xs[0].shape)
        for x in xs[1:]:
            other = list(x.shape)
            if len(other) != len(ref):
                self._fail(xs, "rank mismatch")
            other[self.axis] = ref[self.axis]
            if other != ref:
                self._fail(xs, f"only axis {self.axis} may differ")

    def forward(self, *xs):
        return np.concatenate(xs, axis=self.axis)

    def backward(self, grad, *xs):
        bounds = np.cumsum([x.shape[self.axis] for x in xs])[:-1]
        return tuple(np.split(grad, bounds, axis=self.axis))


class Mix(Function):
    """Weighted sum sum_k w[k] * xs[k] with a differentiable weight vector."""

    tag = "mix"

    def check(self, w, *xs):
        if w.ndim != 1 or w.shape[0] != len(xs):
            self._fail((w, *xs), "one weight per operand required")
        for x in xs[1:]:
            if x.shape != xs[0].shape:
                self._fail((w, *xs), "operands must have equal shapes")

    def forward(self, w, *xs):
        out = np.zeros_like(xs[0])
        for k, x in enumerate(xs):
            out += w[k] * x
        return out

    def backward(self, grad, w, *xs):
        dw = np.array([np.sum(grad * x) for x in xs])
        return (dw, *(w[k] * grad for k in range(len(xs))))


# ------------------------------------------------------------------ dense/conv


class MatMul(Function):
    tag = "matmul"

    def check(self, a, b):
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            self._fail((a, b), "inner dimensions must match")

    def forward(self, a, b):
        return a @ b

    def backward(self, grad, a, b):
        return grad @ b.T, a.T @ grad


class BiasAdd(Function):
    tag = "bias_add"

    def check(self, x, b):
        if b.ndim != 1 or x.ndim < 1 or x.shape[-1] != b.shape[0]:
            self._fail((x, b), "bias must match the last axis")

    def forward(self, x, b):
        return x + b

    def backward(self, grad, x, b):
        return grad, grad.reshape(-1, b.shape[0]).sum(axis=0)


def _out_size(size: int, kernel: int, stride: int, padding: int, dilation: int) -> int:
    return (size + 2 * padding - dilation * (kernel - 1) - 1) // stride + 1


class _Windowed(Function):
    """Shared plumbing for ops that slide a kernel over NCHW input."""

    def __init__(self, stride: int = 1, padding: int = 0, dilation: int = 1):
        self.stride = int(stride)
        self.padding = int(padding)
        self.dilation = int(dilation)

    def _pad(self, x: np.ndarray, value: float = 0.0) -> np.ndarray:
        p = self.padding
        if p == 0:
            return x
        return np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)), constant_values=value)

    def _window(self, i: int, j: int, ho: int, wo: int) -> tuple[slice, slice, slice, slice]:
        s, d = self.stride, self.dilation
        return (
            slice(None),
            slice(None),
            slice(i * d, i * d + s * (ho - 1) + 1, s),
            slice(j * d, j * d + s * (wo - 1) + 1, s),
        )

    def _out_hw(self, x: np.ndarray, kh: int, kw: int) -> tuple[int, int]:
        ho = _out_size(x.shape[2], kh, self.stride, self.padding, self.dilation)
        wo = _out_size(x.shape[3], kw, self.stride, self.padding, self.dilation)
        return ho, wo

    def _unpad(self, xp: np.ndarray, x: np.ndarray) -> np.ndarray:
        p = self.padding
        return xp[:, :, p : p + x.shape[2], p : p + x.shape[3]]


class Conv2d(_Windowed):
    tag = "conv2d"

    def check(self, x, w):
        if x.ndim != 4 or w.ndim != 4:
            self._fail((x, w), "expected NCHW input and OIHW kernel")
        if x.shape[1] != w.shape[1]:
            self._fail((x, w), "input channels do not match kernel")
        ho, wo = self._out_hw(x, w.shape[2], w.shape[3])
        if ho < 1 or wo < 1:
            self._fail((x, w), "kernel larger than padded input")

    def forward(self, x, w):
        kh, kw = w.shape[2], w.shape[3]
        ho, wo = self._out_hw(x, kh, kw)
        xp = self._pad(x)
        out = np.zeros((x.shape[0], w.shape[0], ho, wo))
        for i in range(kh):
            for j in range(kw):
                patch = xp[self._window(i, j, ho, wo)]
                out += np.tensordot(patch, w[:, :, i, j], axes=([1], [1])).transpose(0, 3, 1, 2)
        return out

    def backward(self, grad, x, w):
        kh, kw = w.shape[2], w.shape[3]
        ho, wo = grad.shape[2], grad.shape[3]
        xp = self._pad(x)
        dxp = np.zeros_like(xp)
        dw = np.zeros_like(w)
        for i in range(kh):
            for j in range(kw):
                window = self._window(i, j, ho, wo)
                dw[:, :, i, j] = np.tensordot(grad, xp[window], axes=([0, 2, 3], [0, 2, 3]))
                dxp[window] += np.tensordot(grad, w[:, :, i, j], axes=([1], [0])).transpose(0, 3, 1, 2)
        return self._unpad(dxp, x), dw


class DepthwiseConv2d(_Windowed):
    tag = "depthwise_conv2d"

    def check(self, x, w):
        if x.ndim != 4 or w.ndim != 4 or w.shape[1] != 1 or w.shape[0] != x.shape[1]:
            self._fail((x, w), "expected NCHW input and [C, 1, kh, kw] kernel")
        ho, wo = self._out_hw(x, w.shape[2], w.shape[3])
        if ho < 1 or wo < 1:
            self._fail((x, w), "kernel larger than padded input")

    def forward(self, x, w):
        kh, kw = w.shape[2], w.shape[3]
        ho, wo = self._out_hw(x, kh, kw)
        xp = self._pad(x)
        out = np.zeros((x.shape[0], x.shape[1], ho, wo))
        for i in range(kh):
            for j in range(kw):
                out += xp[self._window(i, j, ho, wo)] * w[:, 0, i, j][None, :, None, None]
        return out

    def backward(self, grad, x, w):
        kh, kw = w.shape[2], w.shape[3]
        ho, wo = grad.shape[2], grad.shape[3]
        xp = self._pad(x)
        dxp = np.zeros_like(xp)
        dw = np.zeros_like(w)
        for i in range(kh):
            for j in range(kw):
                window = self._window(i, j, ho, wo)
                dw[:, 0, i, j] = np.sum(grad * xp[window], axis=(0, 2, 3))
                dxp[window] += grad * w[:, 0, i, j][None, :, None, None]
        return self._unpad(dxp, x), dw


class MaxPool2d(_Windowed):
    tag = "max_pool2d"

    def __init__(self, kernel: int = 3, stride: int = 1, padding: int = 1):
        super().__init__(stride=stride, padding=padding)
        self.kernel = int(kernel)

    def check(self, x):
        if x.ndim != 4:
            self._fail((x,), "expected NCHW input")

    def _windows(self, x):
        k = self.kernel
        ho, wo = self._out_hw(x, k, k)
        xp = self._pad(x, -np.inf)
        stacked = np.stack(
            [xp[self._window(i, j, ho, wo)] for i in range(k) for j in range(k)], axis=0
        )
        # argmax returns the first maximal offset, which fixes tie-breaking
        return stacked, np.argmax(stacked, axis=0), ho, wo

    def forward(self, x):
        stacked, idx, _, _ = self._windows(x)
        return np.take_along_axis(stacked, idx[None], axis=0)[0]

    def backward(self, grad, x):
        _, idx, ho, wo = self._windows(x)
        k = self.kernel
        dxp = np.zeros((x.shape[0], x.shape[1], x.shape[2] + 2 * self.padding, x.shape[3] + 2 * self.padding))
        for offset in range(k * k):
            i, j = divmod(offset, k)
            dxp[self._window(i, j, ho, wo)] += grad * (idx == offset)
        return (self._unpad(dxp, x),)


class AvgPool2d(_Windowed):
    """Average pooling that excludes padded cells from the divisor."""

    tag = "avg_pool2d"

    def __init__(self, kernel: int = 3, stride: int = 1, padding: int = 1):
        super().__init__(stride=stride, padding=padding)
        self.kernel = int(kernel)

    def check(self, x):
        if x.ndim != 4:
            self._fail((x,), "expected NCHW input")

    def _counts(self, x, ho, wo):
        ones = self._pad(np.ones((1, 1, x.shape[2], x.shape[3])))
        counts = np.zeros((1, 1, ho, wo))
        k = self.kernel
        for i in range(k):
            for j in range(k):
                counts += ones[self._window(i, j, ho, wo)]
        return counts

    def forward(self, x):
        k = self.kernel
        ho, wo = self._out_hw(x, k, k)
        xp = self._pad(x)
        total = np.zeros((x.shape[0], x.shape[1], ho, wo))
        for i in range(k):
            for j in range(k):
                total += xp[self._window(i, j, ho, wo)]
        return total / self._counts(x, ho, wo)

    def backward(self, grad, x):
        k = self.kernel
        ho, wo = grad.shape[2], grad.shape[3]
        share = grad / self._counts(x, ho, wo)
        dxp = self._pad(np.zeros_like(x))
        for i in range(k):
            for j in range(k):
                dxp[self._window(i, j, ho, wo)] += share
        return (self._unpad(dxp, x),)


class GlobalAvgPool(Function):
    tag = "global_avg_pool"

    def check(self, x):
        if x.ndim != 4:
            self._fail((x,), "expected NCHW input")

    def forward(self, x):
        return x.mean(axis=(2, 3))

    def backward(self, grad, x):
        hw = x.shape[2] * x.shape[3]
        return (np.broadcast_to(grad[:, :, None, None] / hw, x.shape).copy(),)


class BatchNorm(Function):
    """
    Per-channel standardization with a learned affine.

    With `mean`/`var` given the op normalizes with those frozen statistics;
    otherwise it uses the batch statistics and differentiates through them.
    """

    tag = "batch_norm"

    def __init__(self, eps: float = 1e-5, mean: np.ndarray | None = None, var: np.ndarray | None = None):
        self.eps = float(eps)
        self.mean = mean
        self.var = var

    def check(self, x, gamma, beta):
        c = x.shape[1] if x.ndim == 4 else -1
        if x.ndim != 4 or gamma.shape != (c,) or beta.shape != (c,):
            self._fail((x, gamma, beta), "expected NCHW input with per-channel affine")

    def _stats(self, x):
        if self.mean is not None and self.var is not None:
            return self.mean, self.var
        return x.mean(axis=(0, 2, 3)), x.var(axis=(0, 2, 3))

    def forward(self, x, gamma, beta):
        mean, var = self._stats(x)
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
        return xhat * gamma[None, :, None, None] + beta[None, :, None, None]

    def backward(self, grad, x, gamma, beta):
        mean, var = self._stats(x)
        inv_std = (1.0 / np.sqrt(var + self.eps))[None, :, None, None]
        xhat = (x - mean[None, :, None, None]) * inv_std
        axes = (0, 2, 3)
        dgamma = np.sum(grad * xhat, axis=axes)
        dbeta = np.sum(grad, axis=axes)
        dxhat = grad * gamma[None, :, None, None]
        if self.mean is not None and self.var is not None:
            return dxhat * inv_std, dgamma, dbeta
        m = x.shape[0] * x.shape[2] * x.shape[3]
        dx = (inv_std / m) * (
            m * dxhat
            - np.sum(dxhat, axis=axes, keepdims=True)
            - xhat * np.sum(dxhat * xhat, axis=axes, keepdims=True)
        )
        return dx, dgamma, dbeta
