"""Neural layers with explicit forward/backward passes on numpy arrays.

All activations are float64 (batch, channels, height, width) arrays. Each
layer caches what its backward pass needs; gradients accumulate into
Parameter.grad so a step can sum contributions from several paths.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "Parameter",
    "LayerSpec",
    "Module",
    "Conv2d",
    "BatchNorm2d",
    "Softplus",
    "LeakyReLU",
    "Sigmoid",
    "AvgPool2",
    "NearestUp2",
    "GlobalAvgPool",
    "DenseBlock",
    "AttentionGate",
    "conv2d_forward",
    "conv2d_backward",
]


class Parameter:
    """Named tensor with an accumulated gradient and a trainable flag."""

    __slots__ = ("value", "grad", "trainable")

    def __init__(self, value: np.ndarray, trainable: bool = True):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.trainable = trainable

    def accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = grad.copy()
        else:
            self.grad += grad

    def zero_grad(self) -> None:
        self.grad = None


@dataclass(frozen=True)
class LayerSpec:
    """Shape-level description of a layer: kind tag, kernel, trainability."""

    kind: str
    kernel: tuple[int, ...] | None
    trainable: bool


class Module:
    """Minimal container: named parameters, buffers, and child modules."""

    def __init__(self) -> None:
        self._params: dict[str, Parameter] = {}
        self._buffers: dict[str, np.ndarray] = {}
        self._children: dict[str, Module] = {}

    def add_param(self, name: str, value: np.ndarray, trainable: bool = True) -> Parameter:
        param = Parameter(value, trainable=trainable)
        self._params[name] = param
        return param

    def add_child(self, name: str, child: "Module") -> "Module":
        self._children[name] = child
        return child

    def named_parameters(self, prefix: str = "") -> list[tuple[str, Parameter]]:
        out = [(prefix + name, p) for name, p in self._params.items()]
        for cname, child in self._children.items():
            out.extend(child.named_parameters(prefix + cname + "."))
        return out

    def named_buffers(self, prefix: str = "") -> list[tuple[str, np.ndarray]]:
        out = [(prefix + name, b) for name, b in self._buffers.items()]
        for cname, child in self._children.items():
            out.extend(child.named_buffers(prefix + cname + "."))
        return out

    def set_buffer(self, name: str, value: np.ndarray) -> None:
        self._buffers[name] = value

    def zero_grads(self) -> None:
        for _, p in self.named_parameters():
            p.zero_grad()

    def spec(self) -> LayerSpec:
        return LayerSpec(kind=type(self).__name__.upper(), kernel=None, trainable=True)


def _resolve_padding(
    padding: str | int | tuple[int, int, int, int], kh: int, kw: int, stride: int
) -> tuple[int, int, int, int]:
    if padding == "same":
        if stride != 1:
            raise ValueError("'same' padding requires stride 1")
        ph0 = (kh - 1) // 2
        pw0 = (kw - 1) // 2
        return ph0, kh - 1 - ph0, pw0, kw - 1 - pw0
    if padding == "valid":
        return 0, 0, 0, 0
    if isinstance(padding, int):
        return padding, padding, padding, padding
    if len(padding) == 4:
        return tuple(padding)  # type: ignore[return-value]
    raise ValueError(f"bad padding spec {padding!r}")


def _zero_pad(x: np.ndarray, pads: tuple[int, int, int, int]) -> np.ndarray:
    ph0, ph1, pw0, pw1 = pads
    if ph0 == ph1 == pw0 == pw1 == 0:
        return x
    b, c, h, w = x.shape
    xp = np.zeros((b, c, h + ph0 + ph1, w + pw0 + pw1))
    xp[:, :, ph0 : ph0 + h, pw0 : pw0 + w] = x
    return xp


def _im2col(
    x: np.ndarray, kh: int, kw: int, stride: int, pads: tuple[int, int, int, int]
) -> np.ndarray:
    if kh == kw == 1 and pads == (0, 0, 0, 0):
        return np.ascontiguousarray(x[:, :, ::stride, ::stride].transpose(0, 2, 3, 1))
    xp = _zero_pad(x, pads)
    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    b, c, ho, wo, _, _ = windows.shape
    return np.ascontiguousarray(windows.transpose(0, 2, 3, 1, 4, 5)).reshape(
        b, ho, wo, c * kh * kw
    )


def conv2d_forward(
    x: np.ndarray,
    w: np.ndarray,
    b: np.ndarray | None = None,
    stride: int = 1,
    padding: str | int | tuple[int, int, int, int] = "same",
) -> np.ndarray:
    """Cross-correlation of a batch with a (out, in, kh, kw) kernel stack."""
    if x.ndim != 4 or w.ndim != 4:
        raise ValueError(f"need 4-D input and kernel, got {x.shape} and {w.shape}")
    out_ch, in_ch, kh, kw = w.shape
    if x.shape[1] != in_ch:
        raise ValueError(f"input has {x.shape[1]} channels, kernel expects {in_ch}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    pads = _resolve_padding(padding, kh, kw, stride)
    cols = _im2col(x, kh, kw, stride, pads)
    y = cols @ w.reshape(out_ch, -1).T
    if b is not None:
        y = y + b
    return np.ascontiguousarray(y.transpose(0, 3, 1, 2))


def conv2d_backward(
    x: np.ndarray,
    w: np.ndarray,
    grad_out: np.ndarray,
    stride: int = 1,
    padding: str | int | tuple[int, int, int, int] = "same",
    cols: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact gradients (grad_x, grad_w, grad_b) of conv2d_forward."""
    out_ch, in_ch, kh, kw = w.shape
    pads = _resolve_padding(padding, kh, kw, stride)
    if cols is None:
        cols = _im2col(x, kh, kw, stride, pads)
    b, ho, wo, _ = cols.shape
    if grad_out.shape != (b, out_ch, ho, wo):
        raise ValueError(
            f"grad_out shape {grad_out.shape} does not match output ({b}, {out_ch}, {ho}, {wo})"
        )
    g = grad_out.transpose(0, 2, 3, 1)
    grad_w = np.tensordot(g, cols, axes=([0, 1, 2], [0, 1, 2])).reshape(w.shape)
    grad_b = g.sum(axis=(0, 1, 2))
    gcols = (g @ w.reshape(out_ch, -1)).reshape(b, ho, wo, in_ch, kh, kw)
    gcols = gcols.transpose(0, 3, 1, 2, 4, 5)
    ph0, ph1, pw0, pw1 = pads
    h, wid = x.shape[2], x.shape[3]
    grad_xp = np.zeros((b, in_ch, h + ph0 + ph1, wid + pw0 + pw1))
    for i in range(kh):
        for j in range(kw):
            grad_xp[:, :, i : i + ho * stride : stride, j : j + wo * stride : stride] += gcols[
                :, :, :, :, i, j
            ]
    grad_x = grad_xp[:, :, ph0 : ph0 + h, pw0 : pw0 + wid]
    return grad_x, grad_w, grad_b


class Conv2d(Module):
    """Convolution layer; 'zero' init gives the residual-exit identity start."""

    def __init__(
        self,
        in_ch: int,
        out_ch: int,
        kernel: int | tuple[int, int] = 3,
        stride: int = 1,
        padding: str | int | tuple[int, int, int, int] = "same",
        bias: bool = True,
        rng: np.random.Generator | None = None,
        init: str = "he",
        weight: np.ndarray | None = None,
        trainable: bool = True,
    ):
        super().__init__()
        kh, kw = (kernel, kernel) if isinstance(kernel, int) else kernel
        self.stride = stride
        self.padding = padding
        if weight is not None:
            value = np.asarray(weight, dtype=np.float64)
            if value.shape != (out_ch, in_ch, kh, kw):
                raise ValueError(f"weight shape {value.shape} != {(out_ch, in_ch, kh, kw)}")
        elif init == "zero":
            value = np.zeros((out_ch, in_ch, kh, kw))
        else:
            if rng is None:
                raise ValueError("random init needs an rng")
            std = np.sqrt(2.0 / (in_ch * kh * kw))
            value = rng.standard_normal((out_ch, in_ch, kh, kw)) * std
        self.w = self.add_param("w", value, trainable=trainable)
        self.b = self.add_param("b", np.zeros(out_ch), trainable=trainable) if bias else None
        self._cache: tuple | None = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        out_ch, in_ch, kh, kw = self.w.value.shape
        pads = _resolve_padding(self.padding, kh, kw, self.stride)
        cols = _im2col(x, kh, kw, self.stride, pads)
        y = cols @ self.w.value.reshape(out_ch, -1).T
        if self.b is not None:
            y = y + self.b.value
        self._cache = (x.shape, cols)
        return np.ascontiguousarray(y.transpose(0, 3, 1, 2))

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        x_shape, cols = self._cache
        grad_x, grad_w, grad_b = conv2d_backward(
            np.empty(x_shape), self.w.value, grad_out, self.stride, self.padding, cols=cols
        )
        self.w.accumulate(grad_w)
        if self.b is not None:
            self.b.accumulate(grad_b)
        return grad_x

    def spec(self) -> LayerSpec:
        return LayerSpec(kind="CONV", kernel=self.w.value.shape, trainable=self.w.trainable)


class BatchNorm2d(Module):
    """Per-channel batch normalization; running stats freeze at eval time."""

    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__()
        self.gamma = self.add_param("gamma", np.ones(channels))
        self.beta = self.add_param("beta", np.zeros(channels))
        self.set_buffer("running_mean", np.zeros(channels))
        self.set_buffer("running_var", np.ones(channels))
        self.momentum = momentum
        self.eps = eps
        self._cache: tuple | None = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        if training:
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            inv = 1.0 / np.sqrt(var + self.eps)
            xhat = (x - mean[None, :, None, None]) * inv[None, :, None, None]
            m = self.momentum
            self._buffers["running_mean"] = (1 - m) * self._buffers["running_mean"] + m * mean
            self._buffers["running_var"] = (1 - m) * self._buffers["running_var"] + m * var
            self._cache = ("train", xhat, inv)
        else:
            inv = 1.0 / np.sqrt(self._buffers["running_var"] + self.eps)
            xhat = (x - self._buffers["running_mean"][None, :, None, None]) * inv[
                None, :, None, None
            ]
            self._cache = ("eval", xhat, inv)
        return self.gamma.value[None, :, None, None] * xhat + self.beta.value[None, :, None, None]

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        mode, xhat, inv = self._cache
        self.gamma.accumulate((grad_out * xhat).sum(axis=(0, 2, 3)))
        self.beta.accumulate(grad_out.sum(axis=(0, 2, 3)))
        dxhat = grad_out * self.gamma.value[None, :, None, None]
        if mode == "eval":
            return dxhat * inv[None, :, None, None]
        n = grad_out.shape[0] * grad_out.shape[2] * grad_out.shape[3]
        sum_dxhat = dxhat.sum(axis=(0, 2, 3), keepdims=True)
        sum_dxhat_xhat = (dxhat * xhat).sum(axis=(0, 2, 3), keepdims=True)
        return (inv[None, :, None, None] / n) * (n * dxhat - sum_dxhat - xhat * sum_dxhat_xhat)

    def spec(self) -> LayerSpec:
        return LayerSpec(kind="BATCHNORM", kernel=self.gamma.value.shape, trainable=True)


class Softplus(Module):
    """Smooth rectifier log(1 + e^x).

    Chosen over the hard rectifier so that every backward pass is testable
    against central finite differences: a kink crossed by the +-eps probe
    produces O(1) relative error regardless of implementation correctness,
    while a C-infinity activation keeps the comparison meaningful for every
    parameter.
    """

    def __init__(self) -> None:
        super().__init__()
        self._x: np.ndarray | None = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        self._x = x
        return np.logaddexp(0.0, x)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return grad_out * 0.5 * (1.0 + np.tanh(0.5 * self._x))

    def spec(self) -> LayerSpec:
        return LayerSpec(kind="ACTIVATION", kernel=None, trainable=False)


class LeakyReLU(Module):
    def __init__(self, alpha: float = 0.2) -> None:
        super().__init__()
        self.alpha = alpha
        self._mask: np.ndarray | None = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        self._mask = x > 0
        return np.where(self._mask, x, self.alpha * x)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return np.where(self._mask, grad_out, self.alpha * grad_out)

    def spec(self) -> LayerSpec:
        return LayerSpec(kind="ACTIVATION", kernel=None, trainable=False)


class Sigmoid(Module):
    def __init__(self) -> None:
        super().__init__()
        self._out: np.ndarray | None = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        # tanh form avoids overflow of exp(-x) for large negative inputs
        self._out = 0.5 * (1.0 + np.tanh(0.5 * x))
        return self._out

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return grad_out * self._out * (1.0 - self._out)

    def spec(self) -> LayerSpec:
        return LayerSpec(kind="ACTIVATION", kernel=None, trainable=False)


class AvgPool2(Module):
    """2x2 average pooling; spatial dims must be even."""

    def __init__(self) -> None:
        super().__init__()
        self._shape: tuple | None = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        b, c, h, w = x.shape
        if h % 2 or w % 2:
            raise ValueError(f"pooling needs even spatial dims, got {h}x{w}")
        self._shape = x.shape
        return x.reshape(b, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5))

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return np.repeat(np.repeat(grad_out, 2, axis=2), 2, axis=3) / 4.0

    def spec(self) -> LayerSpec:
        return LayerSpec(kind="DOWNSAMPLE", kernel=None, trainable=False)


class NearestUp2(Module):
    """Nearest-neighbor 2x upsampling."""

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        return np.repeat(np.repeat(x, 2, axis=2), 2, axis=3)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        b, c, h, w = grad_out.shape
        return grad_out.reshape(b, c, h // 2, 2, w // 2, 2).sum(axis=(3, 5))

    def spec(self) -> LayerSpec:
        return LayerSpec(kind="UPSAMPLE", kernel=None, trainable=False)


class GlobalAvgPool(Module):
    def __init__(self) -> None:
        super().__init__()
        self._hw: tuple[int, int] | None = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        self._hw = x.shape[2:]
        return x.mean(axis=(2, 3))

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        h, w = self._hw
        return np.broadcast_to(grad_out[:, :, None, None], grad_out.shape + (h, w)).copy() / (
            h * w
        )

    def spec(self) -> LayerSpec:
        return LayerSpec(kind="DOWNSAMPLE", kernel=None, trainable=False)


class DenseBlock(Module):
    """Densely connected cell: growth convolutions feeding a channel-restoring
    fusion layer, so output width equals input width."""

    def __init__(
        self, channels: int, growth: int, num_layers: int = 5, rng: np.random.Generator = None
    ):
        super().__init__()
        if num_layers < 2:
            raise ValueError(f"dense block needs >= 2 layers, got {num_layers}")
        self.channels = channels
        self.growth = growth
        self.grow_convs: list[Conv2d] = []
        self.acts: list[Softplus] = []
        width = channels
        for i in range(num_layers - 1):
            conv = Conv2d(width, growth, kernel=3, padding="same", rng=rng)
            self.add_child(f"conv{i}", conv)
            self.grow_convs.append(conv)
            self.acts.append(Softplus())
            width += growth
        self.fuse = Conv2d(width, channels, kernel=1, padding="valid", rng=rng)
        self.add_child("fuse", self.fuse)
        self._widths: list[int] = []

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        feats = [x]
        for conv, act in zip(self.grow_convs, self.acts):
            z = conv.forward(np.concatenate(feats, axis=1), training)
            feats.append(act.forward(z, training))
        self._widths = [f.shape[1] for f in feats]
        return self.fuse.forward(np.concatenate(feats, axis=1), training)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        dcat = self.fuse.backward(grad_out)
        grads = []
        offset = 0
        for width in self._widths:
            grads.append(dcat[:, offset : offset + width])
            offset += width
        grads = [g.copy() for g in grads]
        for i in range(len(self.grow_convs) - 1, -1, -1):
            dz = self.acts[i].backward(grads[i + 1])
            dinp = self.grow_convs[i].backward(dz)
            offset = 0
            for j in range(i + 1):
                grads[j] += dinp[:, offset : offset + self._widths[j]]
                offset += self._widths[j]
        return grads[0]

    def spec(self) -> LayerSpec:
        return LayerSpec(kind="DENSE_BLOCK", kernel=(self.channels, self.growth), trainable=True)


class AttentionGate(Module):
    """Per-channel sigmoid gate driven by the skip's global average."""

    def __init__(self, channels: int, rng: np.random.Generator):
        super().__init__()
        self.w = self.add_param("w", rng.standard_normal((channels, channels)) * 0.1)
        self.b = self.add_param("b", np.zeros(channels))
        self._cache: tuple | None = None

    def forward(self, skip: np.ndarray, training: bool = False) -> np.ndarray:
        gap = skip.mean(axis=(2, 3))
        gate = 1.0 / (1.0 + np.exp(-(gap @ self.w.value.T + self.b.value)))
        self._cache = (skip, gap, gate)
        return skip * gate[:, :, None, None]

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        skip, gap, gate = self._cache
        h, w = skip.shape[2:]
        dskip = grad_out * gate[:, :, None, None]
        dgate = (grad_out * skip).sum(axis=(2, 3))
        dz = dgate * gate * (1.0 - gate)
        self.w.accumulate(dz.T @ gap)
        self.b.accumulate(dz.sum(axis=0))
        dgap = dz @ self.w.value
        dskip += dgap[:, :, None, None] / (h * w)
        return dskip

    def spec(self) -> LayerSpec:
        return LayerSpec(kind="ATTENTION_GATE", kernel=self.w.value.shape, trainable=True)
