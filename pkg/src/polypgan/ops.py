"""Differentiable array operations built on numpy.

Every op returns (output, cache); the matching *_backward takes the cache
plus the upstream gradient and returns gradients for inputs and parameters.
Convolutions use im2col with a strided view; the scatter step (col2im)
loops only over the k*k kernel offsets so the per-pixel work stays inside
numpy.
"""

from __future__ import annotations

import numpy as np


def _pad_hw(x: np.ndarray, pad: int) -> np.ndarray:
    if pad == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))


def _im2col(xp: np.ndarray, k: int, stride: int) -> np.ndarray:
    """Patch matrix [B, C*k*k, Ho*Wo] from an already padded input [B, C, H, W]."""
    b, c, h, w = xp.shape
    ho = (h - k) // stride + 1
    wo = (w - k) // stride + 1
    sb, sc, sh, sw = xp.strides
    view = np.lib.stride_tricks.as_strided(
        xp,
        shape=(b, c, k, k, ho, wo),
        strides=(sb, sc, sh, sw, sh * stride, sw * stride),
        writeable=False,
    )
    return np.ascontiguousarray(view).reshape(b, c * k * k, ho * wo)


def _col2im(cols: np.ndarray, c: int, h: int, w: int, k: int, stride: int, pad: int) -> np.ndarray:
    """Scatter-add patch columns back to an image of shape [B, C, H, W]."""
    b = cols.shape[0]
    hp, wp = h + 2 * pad, w + 2 * pad
    ho = (hp - k) // stride + 1
    wo = (wp - k) // stride + 1
    cols = cols.reshape(b, c, k, k, ho, wo)
    out = np.zeros((b, c, hp, wp), dtype=cols.dtype)
    for i in range(k):
        for j in range(k):
            out[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += cols[
                :, :, i, j
            ]
    if pad:
        out = out[:, :, pad : pad + h, pad : pad + w]
    return out


def conv2d_forward(x, w, b, stride: int, pad: int):
    """x [B,Cin,H,W], w [Cout,Cin,k,k], b [Cout] -> y [B,Cout,Ho,Wo]."""
    bsz, cin, h, wdt = x.shape
    cout, _, k, _ = w.shape
    cols = _im2col(_pad_hw(x, pad), k, stride)
    y = np.matmul(w.reshape(cout, -1), cols) + b[:, None]
    ho = (h + 2 * pad - k) // stride + 1
    wo = (wdt + 2 * pad - k) // stride + 1
    y = y.reshape(bsz, cout, ho, wo)
    cache = (cols, x.shape, w, stride, pad)
    return y, cache


def conv2d_backward(grad_y, cache):
    cols, x_shape, w, stride, pad = cache
    bsz, cin, h, wdt = x_shape
    cout, _, k, _ = w.shape
    gy = grad_y.reshape(bsz, cout, -1)
    grad_w = np.einsum("bop,bcp->oc", gy, cols).reshape(w.shape)
    grad_b = gy.sum(axis=(0, 2))
    grad_cols = np.matmul(w.reshape(cout, -1).T, gy)
    grad_x = _col2im(grad_cols, cin, h, wdt, k, stride, pad)
    return grad_x, grad_w, grad_b


def conv_transpose2d_forward(x, w, b, stride: int, pad: int):
    """x [B,Cin,H,W], w [Cin,Cout,k,k], b [Cout] -> y [B,Cout,Ho,Wo].

    Ho = (H-1)*stride - 2*pad + k; implemented as the adjoint of conv2d.
    """
    bsz, cin, h, wdt = x.shape
    _, cout, k, _ = w.shape
    ho = (h - 1) * stride - 2 * pad + k
    wo = (wdt - 1) * stride - 2 * pad + k
    cols = np.matmul(w.reshape(cin, -1).T, x.reshape(bsz, cin, -1))
    y = _col2im_from_positions(cols, cout, ho, wo, k, stride, pad, h, wdt)
    y += b[None, :, None, None]
    cache = (x, w, stride, pad, (ho, wo))
    return y, cache


def _col2im_from_positions(cols, c, ho, wo, k, stride, pad, hi, wi):
    """Scatter columns indexed by *input* positions onto the larger output."""
    b = cols.shape[0]
    cols = cols.reshape(b, c, k, k, hi, wi)
    out = np.zeros((b, c, ho + 2 * pad, wo + 2 * pad), dtype=cols.dtype)
    for i in range(k):
        for j in range(k):
            out[:, :, i : i + stride * hi : stride, j : j + stride * wi : stride] += cols[
                :, :, i, j
            ]
    if pad:
        out = out[:, :, pad : pad + ho, pad : pad + wo]
    return out


def conv_transpose2d_backward(grad_y, cache):
    x, w, stride, pad, _ = cache
    bsz, cin, hi, wi = x.shape
    _, cout, k, _ = w.shape
    gy_cols = _im2col(_pad_hw(grad_y, pad), k, stride)  # [B, Cout*k*k, hi*wi]
    grad_x = np.matmul(w.reshape(cin, -1), gy_cols).reshape(x.shape)
    grad_w = np.einsum("bci,bpi->cp", x.reshape(bsz, cin, -1), gy_cols).reshape(w.shape)
    grad_b = grad_y.sum(axis=(0, 2, 3))
    return grad_x, grad_w, grad_b


def leaky_relu_forward(x, slope: float):
    y = np.where(x >= 0, x, slope * x)
    return y, (x >= 0, slope)


def leaky_relu_backward(grad_y, cache):
    pos, slope = cache
    return np.where(pos, grad_y, slope * grad_y)


def relu_forward(x):
    pos = x > 0
    return x * pos, pos


def relu_backward(grad_y, cache):
    return grad_y * cache


def tanh_forward(x):
    y = np.tanh(x)
    return y, y


def tanh_backward(grad_y, y):
    return grad_y * (1.0 - y * y)


def sigmoid_forward(x):
    # split by sign for numerical stability
    y = np.empty_like(x)
    pos = x >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    y[~pos] = ex / (1.0 + ex)
    return y, y


def sigmoid_backward(grad_y, y):
    return grad_y * y * (1.0 - y)


def dropout_forward(x, rate: float, rng: np.random.Generator | None):
    """Inverted dropout; rng=None means inference (identity)."""
    if rng is None or rate <= 0.0:
        return x, None
    keep = (rng.random(x.shape) >= rate).astype(x.dtype)
    scale = 1.0 / (1.0 - rate)
    return x * keep * scale, keep * scale


def dropout_backward(grad_y, cache):
    if cache is None:
        return grad_y
    return grad_y * cache


def concat_channels(a, b):
    return np.concatenate([a, b], axis=1)


def split_channels(grad, n_first: int):
    return grad[:, :n_first], grad[:, n_first:]
