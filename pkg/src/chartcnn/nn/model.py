"""Layer stacks, parameter storage, training-step primitives, checkpoints.

An ArchitectureSpec is a declarative layer list over a fixed input shape.
Validation walks the whole shape chain at construction time, so a stack
that cannot run (kernel larger than its input, pool on a non-divisible
map, wrong logit count) fails before any training starts. Where a pool
does not divide its input, builders insert an explicit crop layer that
drops trailing rows and columns; the crop shows up in the architecture
dump like any other layer.
"""

import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import (
    ArchitectureError,
    FormatError,
    NumericError,
    ParameterError,
    ShapeError,
)
from ..seeding import uniform_generator
from . import layers as L

LAYER_KINDS = ("conv", "maxpool", "relu", "fc", "dropout", "crop")

_MAGIC = b"CCNNCKP1"
_CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    filters: int = 0
    kh: int = 0
    kw: int = 0
    ph: int = 0
    pw: int = 0
    units: int = 0
    rate: float = 0.0
    ch: int = 0
    cw: int = 0

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ParameterError(f"unknown layer kind {self.kind!r}")

    def to_dict(self) -> dict:
        keep = {
            "conv": ("filters", "kh", "kw"),
            "maxpool": ("ph", "pw"),
            "relu": (),
            "fc": ("units",),
            "dropout": ("rate",),
            "crop": ("ch", "cw"),
        }[self.kind]
        d = {"kind": self.kind}
        d.update({k: getattr(self, k) for k in keep})
        return d

    @staticmethod
    def from_dict(d: dict) -> "LayerSpec":
        return LayerSpec(**d)


def conv(filters: int, kh: int, kw: int) -> LayerSpec:
    return LayerSpec("conv", filters=filters, kh=kh, kw=kw)


def maxpool(ph: int = 2, pw: int = 2) -> LayerSpec:
    return LayerSpec("maxpool", ph=ph, pw=pw)


def relu() -> LayerSpec:
    return LayerSpec("relu")


def fc(units: int) -> LayerSpec:
    return LayerSpec("fc", units=units)


def dropout(rate: float) -> LayerSpec:
    return LayerSpec("dropout", rate=rate)


def crop(ch: int, cw: int) -> LayerSpec:
    return LayerSpec("crop", ch=ch, cw=cw)


@dataclass(frozen=True)
class ArchitectureSpec:
    """Input shape (c, h, w), ordered layers, and the logit count."""

    input_shape: Tuple[int, int, int]
    layers: Tuple[LayerSpec, ...]
    n_classes: int = 3

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "input_shape", tuple(self.input_shape))
        self.shape_chain()

    def shape_chain(self) -> List[Tuple[int, ...]]:
        """Output shape after each layer; raises ArchitectureError on a break."""
        c, h, w = self.input_shape
        if c < 1 or h < 1 or w < 1:
            raise ArchitectureError(f"bad input shape {self.input_shape}")
        shape: Tuple[int, ...] = (c, h, w)
        chain = []
        for i, spec in enumerate(self.layers):
            where = f"layer {i} ({spec.kind})"
            if spec.kind == "conv":
                if len(shape) != 3:
                    raise ArchitectureError(f"{where}: conv after flatten")
                c, h, w = shape
                if spec.kh > h or spec.kw > w:
                    raise ArchitectureError(
                        f"{where}: kernel {spec.kh}x{spec.kw} exceeds map {h}x{w}"
                    )
                if spec.filters < 1 or spec.kh < 1 or spec.kw < 1:
                    raise ArchitectureError(f"{where}: bad conv geometry")
                shape = (spec.filters, h - spec.kh + 1, w - spec.kw + 1)
            elif spec.kind == "maxpool":
                if len(shape) != 3:
                    raise ArchitectureError(f"{where}: pool after flatten")
                c, h, w = shape
                if spec.ph < 1 or spec.pw < 1:
                    raise ArchitectureError(f"{where}: bad pool geometry")
                if h % spec.ph or w % spec.pw:
                    raise ArchitectureError(
                        f"{where}: map {h}x{w} not divisible by {spec.ph}x{spec.pw}"
                    )
                if h == 0 or w == 0:
                    raise ArchitectureError(f"{where}: empty map")
                shape = (c, h // spec.ph, w // spec.pw)
            elif spec.kind == "crop":
                if len(shape) != 3:
                    raise ArchitectureError(f"{where}: crop after flatten")
                c, h, w = shape
                if not (1 <= spec.ch <= h and 1 <= spec.cw <= w):
                    raise ArchitectureError(
                        f"{where}: crop {spec.ch}x{spec.cw} invalid for map {h}x{w}"
                    )
                shape = (c, spec.ch, spec.cw)
            elif spec.kind == "relu":
                pass
            elif spec.kind == "dropout":
                if not 0.0 <= spec.rate < 1.0:
                    raise ArchitectureError(f"{where}: rate {spec.rate} not in [0,1)")
            elif spec.kind == "fc":
                if spec.units < 1:
                    raise ArchitectureError(f"{where}: units must be >= 1")
                shape = (spec.units,)
            chain.append(shape)
        if not self.layers or self.layers[-1].kind != "fc":
            raise ArchitectureError("last layer must be fully connected")
        if chain[-1] != (self.n_classes,):
            raise ArchitectureError(
                f"final layer emits {chain[-1]}, expected ({self.n_classes},) logits"
            )
        return chain

    def to_dict(self) -> dict:
        return {
            "input_shape": list(self.input_shape),
            "n_classes": self.n_classes,
            "layers": [l.to_dict() for l in self.layers],
        }

    @staticmethod
    def from_dict(d: dict) -> "ArchitectureSpec":
        return ArchitectureSpec(
            input_shape=tuple(d["input_shape"]),
            layers=tuple(LayerSpec.from_dict(ld) for ld in d["layers"]),
            n_classes=d["n_classes"],
        )


def stack_with_crops(
    raw: Sequence[LayerSpec], input_shape: Tuple[int, int, int]
) -> Tuple[LayerSpec, ...]:
    """Insert crop layers so every pool sees a divisible map."""
    c, h, w = input_shape
    shape: Tuple[int, ...] = (c, h, w)
    out: List[LayerSpec] = []
    for spec in raw:
        if spec.kind == "maxpool" and len(shape) == 3:
            c, h, w = shape
            ch, cw = h - h % spec.ph, w - w % spec.pw
            if ch < spec.ph or cw < spec.pw:
                raise ArchitectureError(
                    f"map {h}x{w} too small for pool {spec.ph}x{spec.pw}"
                )
            if (ch, cw) != (h, w):
                out.append(crop(ch, cw))
                shape = (c, ch, cw)
        out.append(spec)
        # Track shape forward for the next pool decision.
        if spec.kind == "conv":
            c, h, w = shape
            if spec.kh > h or spec.kw > w:
                raise ArchitectureError(
                    f"kernel {spec.kh}x{spec.kw} exceeds map {h}x{w}"
                )
            shape = (spec.filters, h - spec.kh + 1, w - spec.kw + 1)
        elif spec.kind == "maxpool":
            c, h, w = shape
            shape = (c, h // spec.ph, w // spec.pw)
        elif spec.kind == "crop":
            c, h, w = shape
            shape = (c, spec.ch, spec.cw)
        elif spec.kind == "fc":
            shape = (spec.units,)
    return tuple(out)


class Network:
    """An architecture plus its parameter tensors.

    Parameters are float64 arrays keyed layer{i}_w / layer{i}_b. He-style
    initialization draws uniformly from +-sqrt(6 / fan_in) with the given
    seed; biases start at zero.
    """

    def __init__(self, spec: ArchitectureSpec, init_seed: int = 0):
        self.spec = spec
        self.init_seed = init_seed
        self.params: Dict[str, np.ndarray] = {}
        self._init_params()

    def _init_params(self):
        rng = uniform_generator(self.init_seed)
        shape: Tuple[int, ...] = self.spec.input_shape
        chain = self.spec.shape_chain()
        for i, layer in enumerate(self.spec.layers):
            if layer.kind == "conv":
                c = shape[0]
                fan_in = c * layer.kh * layer.kw
                limit = np.sqrt(6.0 / fan_in)
                self.params[f"layer{i}_w"] = rng.uniform(
                    -limit, limit, size=(layer.filters, c, layer.kh, layer.kw)
                )
                self.params[f"layer{i}_b"] = np.zeros(layer.filters)
            elif layer.kind == "fc":
                fan_in = int(np.prod(shape))
                limit = np.sqrt(6.0 / fan_in)
                self.params[f"layer{i}_w"] = rng.uniform(
                    -limit, limit, size=(fan_in, layer.units)
                )
                self.params[f"layer{i}_b"] = np.zeros(layer.units)
            shape = chain[i]

    def forward(
        self,
        x: np.ndarray,
        train: bool = False,
        rng: Optional[np.random.Generator] = None,
    ):
        """Run the stack; returns (logits, caches) for a later backward."""
        if x.ndim != 4 or x.shape[1:] != self.spec.input_shape:
            raise ShapeError(
                f"input {x.shape} does not match (n,)+{self.spec.input_shape}"
            )
        caches = []
        out = x
        for i, layer in enumerate(self.spec.layers):
            if layer.kind == "conv":
                out, cache = L.conv_forward(
                    out, self.params[f"layer{i}_w"], self.params[f"layer{i}_b"]
                )
            elif layer.kind == "maxpool":
                out, cache = L.maxpool_forward(out, layer.ph, layer.pw)
            elif layer.kind == "relu":
                out, cache = L.relu_forward(out)
            elif layer.kind == "crop":
                out, cache = L.crop_forward(out, layer.ch, layer.cw)
            elif layer.kind == "dropout":
                mask = None
                if train and layer.rate > 0.0:
                    if rng is None:
                        raise ParameterError(
                            "training through dropout needs a random generator"
                        )
                    mask = L.dropout_mask(out.shape, layer.rate, rng)
                out, cache = L.apply_dropout(out, layer.rate, mask)
            else:
                out, cache = L.fc_forward(
                    out, self.params[f"layer{i}_w"], self.params[f"layer{i}_b"]
                )
            caches.append(cache)
        return out, caches

    def loss_and_grads(
        self,
        x: np.ndarray,
        y: np.ndarray,
        train: bool = True,
        rng: Optional[np.random.Generator] = None,
    ):
        """Mean cross-entropy loss, softmax probabilities, and parameter grads."""
        logits, caches = self.forward(x, train=train, rng=rng)
        loss, probs, dout = L.softmax_cross_entropy(logits, y)
        if not np.isfinite(loss):
            raise NumericError("loss is not finite")
        grads: Dict[str, np.ndarray] = {}
        for i in range(len(self.spec.layers) - 1, -1, -1):
            layer = self.spec.layers[i]
            cache = caches[i]
            if layer.kind == "conv":
                dout, dw, db = L.conv_backward(dout, cache, need_dx=(i > 0))
                grads[f"layer{i}_w"] = dw
                grads[f"layer{i}_b"] = db
            elif layer.kind == "maxpool":
                dout = L.maxpool_backward(dout, cache)
            elif layer.kind == "relu":
                dout = L.relu_backward(dout, cache)
            elif layer.kind == "crop":
                dout = L.crop_backward(dout, cache)
            elif layer.kind == "dropout":
                dout = L.dropout_backward(dout, layer.rate, cache)
            else:
                dout, dw, db = L.fc_backward(dout, cache)
                grads[f"layer{i}_w"] = dw
                grads[f"layer{i}_b"] = db
        return loss, probs, grads

    def loss(self, x: np.ndarray, y: np.ndarray) -> float:
        logits, _ = self.forward(x, train=False)
        loss, _, _ = L.softmax_cross_entropy(logits, y)
        return loss

    def predict(self, x: np.ndarray) -> np.ndarray:
        logits, _ = self.forward(x, train=False)
        return logits.argmax(axis=1)

    def sgd_step(self, grads: Dict[str, np.ndarray], lr: float):
        if lr <= 0.0:
            raise ParameterError(f"learning rate must be > 0, got {lr}")
        for name, g in grads.items():
            self.params[name] -= lr * g

    def n_params(self) -> int:
        return sum(p.size for p in self.params.values())


def gradient_check(
    network: Network,
    x: np.ndarray,
    y: np.ndarray,
    epsilon: float = 1e-5,
    coords_per_tensor: int = 200,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Every coordinate of small tensors is checked; larger tensors get a
    seeded random subsample of coords_per_tensor coordinates. Relative
    error is |a - n| / max(1e-8, |a| + |n|). Dropout runs in inference
    mode so the loss surface is smooth and deterministic. The probe must
    stay small: relu and maxpool make the loss piecewise linear, and a
    probe wider than the distance to the nearest kink measures a chord
    across two linear pieces instead of the local slope.
    """
    if not 1e-7 <= epsilon <= 1e-3:
        raise ParameterError(f"epsilon must lie in [1e-7, 1e-3], got {epsilon}")
    _, _, grads = network.loss_and_grads(x, y, train=False)
    rng = uniform_generator(seed)
    worst = 0.0
    for name in sorted(network.params):
        p = network.params[name]
        flat = p.reshape(-1)
        gflat = grads[name].reshape(-1)
        if flat.size <= coords_per_tensor:
            coords = np.arange(flat.size)
        else:
            coords = rng.choice(flat.size, size=coords_per_tensor, replace=False)
        for idx in coords:
            orig = flat[idx]
            flat[idx] = orig + epsilon
            up = network.loss(x, y)
            flat[idx] = orig - epsilon
            down = network.loss(x, y)
            flat[idx] = orig
            numeric = (up - down) / (2.0 * epsilon)
            if not np.isfinite(numeric):
                raise NumericError(f"non-finite finite-difference at {name}[{idx}]")
            analytic = gflat[idx]
            err = abs(analytic - numeric) / max(1e-8, abs(analytic) + abs(numeric))
            worst = max(worst, err)
    return worst


def save_checkpoint(network: Network, path) -> None:
    """Versioned binary dump: architecture, seeds, and exact float64 tensors."""
    names = sorted(network.params)
    header = {
        "version": _CHECKPOINT_VERSION,
        "arch": network.spec.to_dict(),
        "init_seed": network.init_seed,
        "tensors": [[n, list(network.params[n].shape)] for n in names],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for n in names:
            fh.write(np.ascontiguousarray(network.params[n], dtype="<f8").tobytes())


def load_checkpoint(path) -> Network:
    """Exact inverse of save_checkpoint."""
    try:
        with open(path, "rb") as fh:
            magic = fh.read(len(_MAGIC))
            if magic != _MAGIC:
                raise FormatError(f"{path} is not a checkpoint file")
            (hlen,) = struct.unpack("<Q", fh.read(8))
            header = json.loads(fh.read(hlen).decode("utf-8"))
            if header.get("version") != _CHECKPOINT_VERSION:
                raise FormatError(f"unsupported checkpoint version in {path}")
            spec = ArchitectureSpec.from_dict(header["arch"])
            network = Network(spec, init_seed=header["init_seed"])
            for name, shape in header["tensors"]:
                count = int(np.prod(shape))
                buf = fh.read(count * 8)
                if len(buf) != count * 8:
                    raise FormatError(f"truncated tensor {name} in {path}")
                network.params[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    except (struct.error, json.JSONDecodeError, KeyError, UnicodeDecodeError) as exc:
        raise FormatError(f"corrupt checkpoint {path}: {exc}") from None
    return network
