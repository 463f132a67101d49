"""Generator and discriminator: configs, parameter containers, forward and
backward passes.

The generator is an encoder-decoder with skip connections. Encoder level i
(1-based) feeds its activation into decoder level (levels - i) via channel
concatenation; the bottleneck has no skip. All sampling layers use 4x4
kernels with stride 2 and padding 1, so spatial dims must be divisible by
2**levels (256 for the default 8-level build).

The discriminator is a patch classifier over concatenated image+mask pairs:
three stride-2 convs with LeakyReLU, then a stride-1 conv with sigmoid,
giving an (H/8 - 1) x (W/8 - 1) probability map.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import ops
from .errors import BadShape, MixedShapes

KERNEL = 4


@dataclass(frozen=True)
class GeneratorConfig:
    base_filters: int = 64
    in_channels: int = 3
    out_channels: int = 1
    dropout_rate: float = 0.5
    leaky_slope: float = 0.2
    levels: int = 8

    def __post_init__(self):
        if self.base_filters < 1:
            raise ValueError("base_filters must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if not 0.0 < self.leaky_slope < 1.0:
            raise ValueError("leaky_slope must be in (0, 1)")
        if not 2 <= self.levels <= 8:
            raise ValueError("levels must be in 2..8")

    def encoder_channels(self) -> list[int]:
        """Output channels per encoder level: f, 2f, 4f, then 8f capped."""
        return [min(2 ** i, 8) * self.base_filters for i in range(self.levels)]

    def decoder_channels(self) -> list[int]:
        """Output channels per decoder level, mirroring the encoder."""
        enc = self.encoder_channels()
        return [enc[self.levels - 1 - j] for j in range(1, self.levels)] + [
            self.out_channels
        ]

    def decoder_in_channels(self) -> list[int]:
        """Input channels per decoder level; levels 2.. double via skips."""
        enc = self.encoder_channels()
        dec = self.decoder_channels()
        ins = [enc[-1]]
        for j in range(2, self.levels + 1):
            ins.append(dec[j - 2] + enc[self.levels - j])
        return ins


@dataclass(frozen=True)
class DiscriminatorConfig:
    base_filters: int = 64
    in_channels: int = 4
    leaky_slope: float = 0.2

    def __post_init__(self):
        if self.base_filters < 1:
            raise ValueError("base_filters must be >= 1")

    def channels(self) -> list[int]:
        f = self.base_filters
        return [f, 2 * f, 4 * f, 1]


@dataclass
class GeneratorParams:
    enc_w: list[np.ndarray]
    enc_b: list[np.ndarray]
    dec_w: list[np.ndarray]  # conv-transpose layout [Cin, Cout, k, k]
    dec_b: list[np.ndarray]

    def named_tensors(self):
        """Fixed iteration order used by checkpoints and the optimizer."""
        for i, (w, b) in enumerate(zip(self.enc_w, self.enc_b), start=1):
            yield f"enc{i}.w", w
            yield f"enc{i}.b", b
        for i, (w, b) in enumerate(zip(self.dec_w, self.dec_b), start=1):
            yield f"dec{i}.w", w
            yield f"dec{i}.b", b

    def num_params(self) -> int:
        return sum(t.size for _, t in self.named_tensors())

    def astype(self, dtype) -> "GeneratorParams":
        return GeneratorParams(
            enc_w=[w.astype(dtype) for w in self.enc_w],
            enc_b=[b.astype(dtype) for b in self.enc_b],
            dec_w=[w.astype(dtype) for w in self.dec_w],
            dec_b=[b.astype(dtype) for b in self.dec_b],
        )


@dataclass
class DiscriminatorParams:
    w: list[np.ndarray]
    b: list[np.ndarray]

    def named_tensors(self):
        for i, (w, b) in enumerate(zip(self.w, self.b), start=1):
            yield f"conv{i}.w", w
            yield f"conv{i}.b", b

    def num_params(self) -> int:
        return sum(t.size for _, t in self.named_tensors())

    def astype(self, dtype) -> "DiscriminatorParams":
        return DiscriminatorParams(
            w=[w.astype(dtype) for w in self.w],
            b=[b.astype(dtype) for b in self.b],
        )


def _conv_std(cin: int, weight_std) -> float:
    # fan-in scaled: without normalization layers a fixed small std makes
    # activations vanish through 8 levels and the output tanh saturate
    if weight_std == "fan_in":
        return float(np.sqrt(2.0 / (cin * KERNEL * KERNEL)))
    return float(weight_std)


def _deconv_std(cin: int, weight_std) -> float:
    # stride-2 transposed conv: each output pixel sees cin * (k/stride)**2 taps
    if weight_std == "fan_in":
        return float(np.sqrt(2.0 / (cin * KERNEL)))
    return float(weight_std)


def init_generator(
    cfg: GeneratorConfig, seed: int, dtype=np.float32, weight_std="fan_in"
) -> GeneratorParams:
    """Zero-mean Gaussian weights, zero biases, deterministic per seed.

    weight_std is "fan_in" (scaled per layer) or a fixed float.
    """
    rng = np.random.Generator(np.random.Philox(key=[seed, 0x67656E]))
    enc = cfg.encoder_channels()
    dec = cfg.decoder_channels()
    dec_in = cfg.decoder_in_channels()
    enc_w, enc_b, dec_w, dec_b = [], [], [], []
    cin = cfg.in_channels
    for cout in enc:
        std = _conv_std(cin, weight_std)
        enc_w.append((rng.standard_normal((cout, cin, KERNEL, KERNEL)) * std).astype(dtype))
        enc_b.append(np.zeros(cout, dtype=dtype))
        cin = cout
    for cin, cout in zip(dec_in, dec):
        std = _deconv_std(cin, weight_std)
        dec_w.append((rng.standard_normal((cin, cout, KERNEL, KERNEL)) * std).astype(dtype))
        dec_b.append(np.zeros(cout, dtype=dtype))
    return GeneratorParams(enc_w=enc_w, enc_b=enc_b, dec_w=dec_w, dec_b=dec_b)


def init_discriminator(
    cfg: DiscriminatorConfig, seed: int, dtype=np.float32, weight_std="fan_in"
) -> DiscriminatorParams:
    rng = np.random.Generator(np.random.Philox(key=[seed, 0x646973]))
    w, b = [], []
    cin = cfg.in_channels
    for cout in cfg.channels():
        std = _conv_std(cin, weight_std)
        w.append((rng.standard_normal((cout, cin, KERNEL, KERNEL)) * std).astype(dtype))
        b.append(np.zeros(cout, dtype=dtype))
        cin = cout
    return DiscriminatorParams(w=w, b=b)


def generator_forward(
    params: GeneratorParams,
    cfg: GeneratorConfig,
    x: np.ndarray,
    training: bool = False,
    dropout_rng: np.random.Generator | None = None,
    want_cache: bool = False,
):
    """Run the generator; returns the tanh mask [B, out, H, W].

    With want_cache=True returns (y, cache) for use with generator_backward.
    Dropout is applied on all decoder levels except the last, only when
    training is set (pass dropout_rng for reproducible masks).
    """
    b, c, h, w = x.shape
    div = 2 ** cfg.levels
    if c != cfg.in_channels:
        raise BadShape(f"expected {cfg.in_channels} input channels, got {c}")
    if h % div or w % div:
        raise BadShape(f"H and W must be divisible by {div}, got {h}x{w}")
    if training and dropout_rng is None and cfg.dropout_rate > 0:
        dropout_rng = np.random.default_rng(0)
    drop_rng = dropout_rng if training else None

    enc_caches = []
    enc_acts = []
    a = x
    for i in range(cfg.levels):
        z, c_conv = ops.conv2d_forward(a, params.enc_w[i], params.enc_b[i], 2, 1)
        a, c_act = ops.leaky_relu_forward(z, cfg.leaky_slope)
        enc_caches.append((c_conv, c_act))
        enc_acts.append(a)

    dec_caches = []
    h_act = enc_acts[-1]
    for j in range(cfg.levels):
        if j == 0:
            inp = h_act
            skip_ch = 0
        else:
            skip = enc_acts[cfg.levels - 1 - j]
            skip_ch = skip.shape[1]
            inp = ops.concat_channels(h_act, skip)
        z, c_conv = ops.conv_transpose2d_forward(
            inp, params.dec_w[j], params.dec_b[j], 2, 1
        )
        if j < cfg.levels - 1:
            r, c_act = ops.relu_forward(z)
            h_act, c_drop = ops.dropout_forward(r, cfg.dropout_rate, drop_rng)
            dec_caches.append((c_conv, c_act, c_drop, skip_ch))
        else:
            y, c_act = ops.tanh_forward(z)
            dec_caches.append((c_conv, c_act, None, skip_ch))
    if want_cache:
        return y, (cfg, enc_caches, dec_caches)
    return y


def generator_backward(grad_y: np.ndarray, cache):
    """Gradients of a scalar loss w.r.t. every generator parameter.

    Returns a dict keyed like GeneratorParams.named_tensors().
    """
    cfg, enc_caches, dec_caches = cache
    grads: dict[str, np.ndarray] = {}
    skip_grads: dict[int, np.ndarray] = {}

    g = None
    for j in range(cfg.levels - 1, -1, -1):
        c_conv, c_act, c_drop, skip_ch = dec_caches[j]
        if j == cfg.levels - 1:
            gz = ops.tanh_backward(grad_y, c_act)
        else:
            gr = ops.dropout_backward(g, c_drop)
            gz = ops.relu_backward(gr, c_act)
        gin, gw, gb = ops.conv_transpose2d_backward(gz, c_conv)
        grads[f"dec{j + 1}.w"] = gw
        grads[f"dec{j + 1}.b"] = gb
        if skip_ch:
            gin, gskip = ops.split_channels(gin, gin.shape[1] - skip_ch)
            skip_grads[cfg.levels - 1 - j] = gskip
        g = gin

    for i in range(cfg.levels - 1, -1, -1):
        c_conv, c_act = enc_caches[i]
        if i in skip_grads:
            g = g + skip_grads[i]
        gz = ops.leaky_relu_backward(g, c_act)
        g, gw, gb = ops.conv2d_backward(gz, c_conv)
        grads[f"enc{i + 1}.w"] = gw
        grads[f"enc{i + 1}.b"] = gb
    return grads


def concat_condition(x: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Channel-wise concatenation of image and mask, image channels first."""
    if x.shape[0] != m.shape[0] or x.shape[2:] != m.shape[2:]:
        raise MixedShapes(f"image {x.shape} and mask {m.shape} do not align")
    return ops.concat_channels(x, m)


def discriminator_forward(
    params: DiscriminatorParams,
    cfg: DiscriminatorConfig,
    c: np.ndarray,
    want_cache: bool = False,
):
    """Returns (probs [B,1,h,w], features) where features is the activation
    entering the final classification conv (the feature-matching hook)."""
    b, ch, h, w = c.shape
    if ch != cfg.in_channels:
        raise BadShape(f"expected {cfg.in_channels} channels, got {ch}")
    if h % 8 or w % 8:
        raise BadShape(f"H and W must be divisible by 8, got {h}x{w}")
    caches = []
    a = c
    for i in range(3):
        z, c_conv = ops.conv2d_forward(a, params.w[i], params.b[i], 2, 1)
        a, c_act = ops.leaky_relu_forward(z, cfg.leaky_slope)
        caches.append((c_conv, c_act))
    features = a
    z, c_conv = ops.conv2d_forward(a, params.w[3], params.b[3], 1, 1)
    probs, c_act = ops.sigmoid_forward(z)
    caches.append((c_conv, c_act))
    if want_cache:
        return probs, features, caches
    return probs, features


def discriminator_backward(grad_probs, caches, grad_features=None):
    """Gradients w.r.t. discriminator parameters and its input.

    grad_features, when given, is added at the feature-matching hook point
    (the input of the final conv). Returns (grads dict, grad_input).
    """
    c_conv, c_act = caches[3]
    gz = ops.sigmoid_backward(grad_probs, c_act)
    g, gw, gb = ops.conv2d_backward(gz, c_conv)
    grads = {"conv4.w": gw, "conv4.b": gb}
    if grad_features is not None:
        g = g + grad_features
    for i in range(2, -1, -1):
        c_conv, c_act = caches[i]
        gz = ops.leaky_relu_backward(g, c_act)
        g, gw, gb = ops.conv2d_backward(gz, c_conv)
        grads[f"conv{i + 1}.w"] = gw
        grads[f"conv{i + 1}.b"] = gb
    return grads, g
