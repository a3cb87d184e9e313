"""Layer forward and backward passes in float64 numpy.

Conventions: activations are (n, c, h, w), fully connected inputs flatten
row-major to (n, d). Convolution is valid cross-correlation with stride 1
and no padding; pooling windows never overlap. Every backward pass is the
exact adjoint of its forward pass, which is what the finite-difference
checks in the test suite verify.
"""

from typing import Optional, Tuple

import numpy as np

from ..errors import ParameterError, ShapeError
from ..seeding import uniform_generator


def conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Valid cross-correlation. x (n,c,h,w), w (f,c,kh,kw), b (f,)."""
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeError(f"conv expects 4-d tensors, got {x.shape} and {w.shape}")
    n, c, h, wd = x.shape
    f, wc, kh, kw = w.shape
    if wc != c:
        raise ShapeError(f"kernel channels {wc} != input channels {c}")
    if b.shape != (f,):
        raise ShapeError(f"bias shape {b.shape} != ({f},)")
    if kh > h or kw > wd:
        raise ShapeError(f"kernel {kh}x{kw} exceeds input {h}x{wd}")
    oh, ow = h - kh + 1, wd - kw + 1
    windows = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(2, 3))
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n, oh * ow, c * kh * kw)
    wf = w.reshape(f, c * kh * kw)
    out = (cols @ wf.T + b).transpose(0, 2, 1).reshape(n, f, oh, ow)
    return out, (x.shape, cols, wf, (kh, kw))


def conv_backward(dout: np.ndarray, cache, need_dx: bool = True):
    x_shape, cols, wf, (kh, kw) = cache
    n, c, h, wd = x_shape
    f = wf.shape[0]
    _, _, oh, ow = dout.shape
    dout_f = dout.reshape(n, f, oh * ow)
    dw = np.einsum("nfp,npk->fk", dout_f, cols).reshape(f, c, kh, kw)
    db = dout.sum(axis=(0, 2, 3))
    if not need_dx:
        return None, dw, db
    dcols = np.einsum("nfp,fk->npk", dout_f, wf)
    dcols = dcols.reshape(n, oh, ow, c, kh, kw)
    dx = np.zeros(x_shape)
    for i in range(kh):
        for j in range(kw):
            dx[:, :, i : i + oh, j : j + ow] += dcols[:, :, :, :, i, j].transpose(
                0, 3, 1, 2
            )
    return dx, dw, db


def maxpool_forward(x: np.ndarray, ph: int, pw: int):
    """Non-overlapping max pooling; dims must divide exactly."""
    if x.ndim != 4:
        raise ShapeError(f"maxpool expects a 4-d tensor, got {x.shape}")
    n, c, h, w = x.shape
    if ph < 1 or pw < 1:
        raise ParameterError(f"pool size must be >= 1, got {ph}x{pw}")
    if h % ph or w % pw:
        raise ShapeError(f"input {h}x{w} not divisible by pool {ph}x{pw}")
    oh, ow = h // ph, w // pw
    tiles = x.reshape(n, c, oh, ph, ow, pw).transpose(0, 1, 2, 4, 3, 5)
    flat = tiles.reshape(n, c, oh, ow, ph * pw)
    # argmax takes the first maximum, i.e. the row-major winner on ties.
    arg = flat.argmax(axis=-1)
    out = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
    return out, (x.shape, (ph, pw), arg)


def maxpool_backward(dout: np.ndarray, cache):
    x_shape, (ph, pw), arg = cache
    n, c, h, w = x_shape
    oh, ow = h // ph, w // pw
    dflat = np.zeros((n, c, oh, ow, ph * pw))
    np.put_along_axis(dflat, arg[..., None], dout[..., None], axis=-1)
    return (
        dflat.reshape(n, c, oh, ow, ph, pw)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, h, w)
    )


def relu_forward(x: np.ndarray):
    return np.maximum(x, 0.0), x


def relu_backward(dout: np.ndarray, cache):
    # Subgradient 0 at exactly 0.
    return dout * (cache > 0.0)


def crop_forward(x: np.ndarray, ch: int, cw: int):
    """Keep the top-left ch x cw region (drops trailing rows/cols)."""
    if x.ndim != 4:
        raise ShapeError(f"crop expects a 4-d tensor, got {x.shape}")
    if ch > x.shape[2] or cw > x.shape[3]:
        raise ShapeError(f"crop {ch}x{cw} larger than input {x.shape[2]}x{x.shape[3]}")
    return np.ascontiguousarray(x[:, :, :ch, :cw]), x.shape


def crop_backward(dout: np.ndarray, cache):
    dx = np.zeros(cache)
    dx[:, :, : dout.shape[2], : dout.shape[3]] = dout
    return dx


def fc_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Affine layer; 4-d inputs are flattened row-major first."""
    orig_shape = x.shape
    if x.ndim == 4:
        x = x.reshape(x.shape[0], -1)
    elif x.ndim != 2:
        raise ShapeError(f"fc expects a 2-d or 4-d tensor, got {orig_shape}")
    if x.shape[1] != w.shape[0]:
        raise ShapeError(f"fc input width {x.shape[1]} != weight rows {w.shape[0]}")
    if b.shape != (w.shape[1],):
        raise ShapeError(f"bias shape {b.shape} != ({w.shape[1]},)")
    return x @ w + b, (x, w, orig_shape)


def fc_backward(dout: np.ndarray, cache):
    x, w, orig_shape = cache
    dw = x.T @ dout
    db = dout.sum(axis=0)
    dx = (dout @ w.T).reshape(orig_shape)
    return dx, dw, db


def dropout_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    return (rng.random(shape) >= rate).astype(np.float64)


def apply_dropout(x: np.ndarray, rate: float, mask: Optional[np.ndarray]):
    """Inverted dropout: train-time scaling by 1/(1-rate), inference identity."""
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"dropout rate must be in [0, 1), got {rate}")
    if mask is None:
        return x, None
    return x * mask / (1.0 - rate), mask


def dropout(x: np.ndarray, rate: float, train: bool, seed: int = 0):
    """Standalone seeded dropout; returns (out, mask or None)."""
    if not train or rate == 0.0:
        out, _ = apply_dropout(x, rate, None)
        return out, None
    mask = dropout_mask(x.shape, rate, uniform_generator(seed))
    return apply_dropout(x, rate, mask)


def dropout_backward(dout: np.ndarray, rate: float, mask: Optional[np.ndarray]):
    if mask is None:
        return dout
    return dout * mask / (1.0 - rate)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean NLL of a softmax over class logits.

    Computed through logsumexp with max subtraction, so huge logits stay
    finite. Returns (loss, probs, dlogits) where dlogits is the gradient
    (probs - onehot) / n.
    """
    if logits.ndim != 2:
        raise ShapeError(f"logits must be (n, classes), got {logits.shape}")
    n, k = logits.shape
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ShapeError(f"labels shape {labels.shape} != ({n},)")
    if labels.min() < 0 or labels.max() >= k:
        raise ParameterError(f"labels must lie in [0, {k}), got {labels}")
    m = logits.max(axis=1, keepdims=True)
    shifted = logits - m
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True)) + m
    log_probs = logits - lse
    loss = float(-log_probs[np.arange(n), labels].mean())
    probs = np.exp(log_probs)
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n
    return loss, probs, dlogits
