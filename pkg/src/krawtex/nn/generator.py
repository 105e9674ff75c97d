"""Two-branch dehazing generator in the moment-transform domain.

Pipeline: a frozen stride-1 analysis convolution produces the 64-band
frequency cube; bands below the split point feed a deep 3-row/6-column grid
of dense blocks with attention-gated skips, the remaining bands feed a
shallow 4-level encoder-decoder. Both branches predict additive corrections
(their exit convolutions start at zero), the corrected cube goes through a
trainable synthesis layer initialized to the exact block inverse, and the
result is clamped to [0, 1]. At initialization the whole network is the
identity map.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..krawtchouk import BASIS_SIZE, NUM_BANDS, KrawtchoukParams, basis_set
from ..transform import BLOCK_ANCHOR
from .layers import (
    AttentionGate,
    AvgPool2,
    BatchNorm2d,
    Conv2d,
    DenseBlock,
    LayerSpec,
    Module,
    NearestUp2,
    Softplus,
)

__all__ = ["GeneratorConfig", "Generator", "KrawtchoukAnalysis", "KrawtchoukSynthesis"]


@dataclass(frozen=True)
class GeneratorConfig:
    """Architecture knobs; defaults give the desk-scale reference model."""

    split_point: int = 60
    scale: float = 1.0
    p: float = 0.5
    grid_rows: int = 3
    grid_cols: int = 6
    dense_layers: int = 5
    high_depth: int = 4

    def __post_init__(self) -> None:
        if not 1 <= self.split_point <= NUM_BANDS - 1:
            raise ValueError(f"split point must be in [1, {NUM_BANDS - 1}]")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    @property
    def low_width(self) -> int:
        return max(2, round(6 * self.scale))

    def row_width(self, row: int) -> int:
        """Down transitions halve the feature count, up transitions double it."""
        return max(1, self.low_width // (2**row))

    def row_growth(self, row: int) -> int:
        return max(1, self.row_width(row) // 2)

    @property
    def high_width(self) -> int:
        return max(2, round(6 * self.scale))


class KrawtchoukAnalysis(Module):
    """Frozen stride-1 'same' correlation with the 64 basis filters."""

    def __init__(self, params: KrawtchoukParams):
        super().__init__()
        basis = basis_set(params)
        self.conv = self.add_child(
            "conv",
            Conv2d(
                1,
                NUM_BANDS,
                kernel=BASIS_SIZE,
                padding="same",
                bias=False,
                weight=basis.filters[:, None, :, :],
                trainable=False,
            ),
        )

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        return self.conv.forward(x, training)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return self.conv.backward(grad_out)

    def spec(self) -> LayerSpec:
        return LayerSpec(kind="CONV", kernel=self.conv.w.value.shape, trainable=False)


class KrawtchoukSynthesis(Module):
    """Trainable 64-to-1 synthesis convolution with 8x8 kernels.

    Reads the cube at the block-anchor positions (where the stride-1 maps
    coincide with the non-overlapping block coefficients) and paints each 8x8
    output block as the kernel-weighted sum of its 64 coefficients. With
    kernels equal to the basis filters this inverts the analysis layer
    exactly, borders included.
    """

    def __init__(self, params: KrawtchoukParams):
        super().__init__()
        basis = basis_set(params)
        self.kernels = self.add_param("kernels", basis.filters.copy())
        self.bias = self.add_param("bias", np.zeros(1))
        self._cache: tuple | None = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        b, ch, h, w = x.shape
        if ch != NUM_BANDS:
            raise ValueError(f"synthesis expects {NUM_BANDS} channels, got {ch}")
        anchors = x[:, :, BLOCK_ANCHOR::BASIS_SIZE, BLOCK_ANCHOR::BASIS_SIZE]
        # (b, k, i, j) x (k, r, c) -> (b, i, j, r, c) -> (b, i, r, j, c)
        y = np.tensordot(anchors, self.kernels.value, axes=([1], [0]))
        y = y.transpose(0, 1, 3, 2, 4).reshape(b, 1, h, w) + self.bias.value[0]
        self._cache = (x.shape, anchors)
        return y

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        x_shape, anchors = self._cache
        b, _, h, w = grad_out.shape
        hb, wb = h // BASIS_SIZE, w // BASIS_SIZE
        d = grad_out.reshape(b, hb, BASIS_SIZE, wb, BASIS_SIZE).transpose(0, 1, 3, 2, 4)
        # d is (b, i, j, r, c); contract batch and block-grid axes with anchors
        self.kernels.accumulate(np.tensordot(anchors, d, axes=([0, 2, 3], [0, 1, 2])))
        self.bias.accumulate(np.array([grad_out.sum()]))
        danchors = np.tensordot(d, self.kernels.value, axes=([3, 4], [1, 2]))
        grad_x = np.zeros(x_shape)
        grad_x[:, :, BLOCK_ANCHOR::BASIS_SIZE, BLOCK_ANCHOR::BASIS_SIZE] = danchors.transpose(
            0, 3, 1, 2
        )
        return grad_x

    def spec(self) -> LayerSpec:
        return LayerSpec(kind="CONV", kernel=(1,) + self.kernels.value.shape, trainable=True)


class _LowBranch(Module):
    """3-row, 6-column grid: three downsampling columns, three upsampling
    columns, one dense block per visited cell, attention gates on skips."""

    def __init__(self, config: GeneratorConfig, rng: np.random.Generator, exit_init: str):
        super().__init__()
        t = config.split_point
        w0, w1, w2 = (config.row_width(r) for r in range(3))
        g0, g1, g2 = (config.row_growth(r) for r in range(3))
        dl = config.dense_layers
        self.entry = self.add_child("entry", Conv2d(t, w0, kernel=1, padding="valid", rng=rng))
        self.cell0 = self.add_child("cell0", DenseBlock(w0, g0, dl, rng))
        self.pool01 = AvgPool2()
        self.down01 = self.add_child("down01", Conv2d(w0, w1, kernel=1, padding="valid", rng=rng))
        self.cell1 = self.add_child("cell1", DenseBlock(w1, g1, dl, rng))
        self.pool12 = AvgPool2()
        self.down12 = self.add_child("down12", Conv2d(w1, w2, kernel=1, padding="valid", rng=rng))
        self.cell2 = self.add_child("cell2", DenseBlock(w2, g2, dl, rng))
        self.cell3 = self.add_child("cell3", DenseBlock(w2, g2, dl, rng))
        self.up21 = NearestUp2()
        self.upc21 = self.add_child("upc21", Conv2d(w2, w1, kernel=1, padding="valid", rng=rng))
        self.att1 = self.add_child("att1", AttentionGate(w1, rng))
        self.cell4 = self.add_child("cell4", DenseBlock(w1, g1, dl, rng))
        self.up10 = NearestUp2()
        self.upc10 = self.add_child("upc10", Conv2d(w1, w0, kernel=1, padding="valid", rng=rng))
        self.att0 = self.add_child("att0", AttentionGate(w0, rng))
        self.cell5 = self.add_child("cell5", DenseBlock(w0, g0, dl, rng))
        self.exit = self.add_child(
            "exit", Conv2d(w0, t, kernel=1, padding="valid", rng=rng, init=exit_init)
        )

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        e = self.entry.forward(x, training)
        c0 = self.cell0.forward(e, training)
        c1 = self.cell1.forward(self.down01.forward(self.pool01.forward(c0), training), training)
        c2 = self.cell2.forward(self.down12.forward(self.pool12.forward(c1), training), training)
        c3 = self.cell3.forward(c2, training)
        u1 = self.upc21.forward(self.up21.forward(c3), training) + self.att1.forward(c1, training)
        c4 = self.cell4.forward(u1, training)
        u0 = self.upc10.forward(self.up10.forward(c4), training) + self.att0.forward(c0, training)
        c5 = self.cell5.forward(u0, training)
        return x + self.exit.forward(c5, training)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        du0 = self.cell5.backward(self.exit.backward(grad_out))
        dc4 = self.up10.backward(self.upc10.backward(du0))
        dc0_skip = self.att0.backward(du0)
        du1 = self.cell4.backward(dc4)
        dc3 = self.up21.backward(self.upc21.backward(du1))
        dc1_skip = self.att1.backward(du1)
        dc2 = self.cell3.backward(dc3)
        dc1 = self.pool12.backward(self.down12.backward(self.cell2.backward(dc2)))
        dc1 += dc1_skip
        dc0 = self.pool01.backward(self.down01.backward(self.cell1.backward(dc1)))
        dc0 += dc0_skip
        de = self.cell0.backward(dc0)
        return grad_out + self.entry.backward(de)


class _HighBranch(Module):
    """4-level encoder-decoder with batch norm and additive skips."""

    def __init__(self, config: GeneratorConfig, rng: np.random.Generator, exit_init: str):
        super().__init__()
        ch = NUM_BANDS - config.split_point
        w = config.high_width
        self.depth = config.high_depth
        self.entry = self.add_child("entry", Conv2d(ch, w, kernel=1, padding="valid", rng=rng))
        self.enc_convs, self.enc_bns, self.enc_acts, self.pools = [], [], [], []
        self.dec_convs, self.dec_bns, self.dec_acts, self.ups = [], [], [], []
        for i in range(self.depth):
            self.enc_convs.append(
                self.add_child(f"enc{i}", Conv2d(w, w, kernel=3, padding="same", rng=rng))
            )
            self.enc_bns.append(self.add_child(f"enc_bn{i}", BatchNorm2d(w)))
            self.enc_acts.append(Softplus())
            if i < self.depth - 1:
                self.pools.append(AvgPool2())
        for i in range(self.depth):
            self.dec_convs.append(
                self.add_child(f"dec{i}", Conv2d(w, w, kernel=3, padding="same", rng=rng))
            )
            self.dec_bns.append(self.add_child(f"dec_bn{i}", BatchNorm2d(w)))
            self.dec_acts.append(Softplus())
            if i > 0:
                self.ups.append(NearestUp2())
        self.exit = self.add_child(
            "exit", Conv2d(w, ch, kernel=1, padding="valid", rng=rng, init=exit_init)
        )

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        h = self.entry.forward(x, training)
        skips = []
        for i in range(self.depth):
            h = self.enc_acts[i].forward(
                self.enc_bns[i].forward(self.enc_convs[i].forward(h, training), training)
            )
            skips.append(h)
            if i < self.depth - 1:
                h = self.pools[i].forward(h)
        for i in range(self.depth):
            if i > 0:
                h = self.ups[i - 1].forward(h) + skips[self.depth - 1 - i]
            h = self.dec_acts[i].forward(
                self.dec_bns[i].forward(self.dec_convs[i].forward(h, training), training)
            )
        return x + self.exit.forward(h, training)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        dh = self.exit.backward(grad_out)
        dskips = [None] * self.depth
        for i in range(self.depth - 1, -1, -1):
            dh = self.dec_convs[i].backward(
                self.dec_bns[i].backward(self.dec_acts[i].backward(dh))
            )
            if i > 0:
                dskips[self.depth - 1 - i] = dh.copy()
                dh = self.ups[i - 1].backward(dh)
        for i in range(self.depth - 1, -1, -1):
            if i < self.depth - 1:
                dh = self.pools[i].backward(dh)
            if dskips[i] is not None:
                dh = dh + dskips[i]
            dh = self.enc_convs[i].backward(
                self.enc_bns[i].backward(self.enc_acts[i].backward(dh))
            )
        return grad_out + self.entry.backward(dh)


class Generator(Module):
    """Full analysis -> two-branch correction -> synthesis generator."""

    def __init__(
        self,
        config: GeneratorConfig = GeneratorConfig(),
        seed: int = 0,
        init: str = "identity",
    ):
        super().__init__()
        if init not in ("identity", "random"):
            raise ValueError(f"unknown init mode {init!r}")
        self.config = config
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        params = KrawtchoukParams(p=config.p, size=BASIS_SIZE)
        exit_init = "zero" if init == "identity" else "he"
        self.analysis = self.add_child("kcl", KrawtchoukAnalysis(params))
        self.low = self.add_child("low", _LowBranch(config, rng, exit_init))
        self.high = self.add_child("high", _HighBranch(config, rng, exit_init))
        self.synthesis = self.add_child("ikcl", KrawtchoukSynthesis(params))
        if init == "random":
            small = np.random.default_rng(np.random.SeedSequence([seed, 1]))
            for branch in (self.low, self.high):
                exit_conv = branch.exit
                exit_conv.w.value = small.standard_normal(exit_conv.w.value.shape) * 0.002
        self._clamp_mask: np.ndarray | None = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        if x.ndim != 4 or x.shape[1] != 1:
            raise ValueError(f"generator expects (B, 1, H, W) input, got {x.shape}")
        h, w = x.shape[2], x.shape[3]
        if h < 16 or w < 16 or h % BASIS_SIZE or w % BASIS_SIZE:
            raise ValueError(
                f"spatial size must be >= 16 and divisible by {BASIS_SIZE}, got {h}x{w}"
            )
        t = self.config.split_point
        cube = self.analysis.forward(x, training)
        low_out = self.low.forward(cube[:, :t], training)
        high_out = self.high.forward(cube[:, t:], training)
        merged = np.concatenate([low_out, high_out], axis=1)
        raw = self.synthesis.forward(merged, training)
        self._clamp_mask = (raw >= 0.0) & (raw <= 1.0)
        return np.clip(raw, 0.0, 1.0)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        """Backpropagate through synthesis and both branches.

        Returns the gradient with respect to the 64-band cube. The frozen
        analysis layer is not traversed here (its input is data, its weights
        are not updated); call ``analysis.backward`` directly when the
        gradient through the fixed transform is wanted.
        """
        t = self.config.split_point
        graw = np.where(self._clamp_mask, grad_out, 0.0)
        dmerged = self.synthesis.backward(graw)
        dlow = self.low.backward(dmerged[:, :t])
        dhigh = self.high.backward(dmerged[:, t:])
        return np.concatenate([dlow, dhigh], axis=1)
