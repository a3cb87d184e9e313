"""Mini-batch SGD training and the day-by-day moving-window harness.

Training is deliberately plain: a fixed number of epochs of shuffled
mini-batches with constant-rate SGD and no early stopping. All shuffling
and dropout noise derives from the config seed, so one (seed, data)
pair always produces the same parameter trajectory bit for bit.
"""

import csv
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .dataset import WindowSpec, build_samples, render_warmup
from .errors import InsufficientDataError, NumericError, ParameterError
from .evaluation import ConfusionMatrix, confusion
from .gbm import PricePath
from .labeler import Label, StrategySpec
from .nn.layers import softmax_cross_entropy
from .nn.model import ArchitectureSpec, Network
from .raster import ChartSpec
from .seeding import derive_seed, uniform_generator
from .series import IndicatorSet

_SHUFFLE_TAG = 11
_DROPOUT_TAG = 12
_STEP_TAG = 13


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch_size: int = 32
    learning_rate: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ParameterError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ParameterError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0.0:
            raise ParameterError(
                f"learning_rate must be > 0, got {self.learning_rate}"
            )


@dataclass
class TrainHistory:
    """Per-epoch averages; epoch numbering starts at 1 in the CSV."""

    train_loss: List[float] = field(default_factory=list)
    train_acc: List[float] = field(default_factory=list)
    val_loss: List[float] = field(default_factory=list)
    val_acc: List[float] = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["epoch", "train_loss", "train_acc", "val_loss", "val_acc"])
            for i in range(len(self.train_loss)):
                writer.writerow(
                    [
                        i + 1,
                        repr(self.train_loss[i]),
                        repr(self.train_acc[i]),
                        repr(self.val_loss[i]),
                        repr(self.val_acc[i]),
                    ]
                )

    @staticmethod
    def from_csv(path) -> "TrainHistory":
        hist = TrainHistory()
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                hist.train_loss.append(float(row["train_loss"]))
                hist.train_acc.append(float(row["train_acc"]))
                hist.val_loss.append(float(row["val_loss"]))
                hist.val_acc.append(float(row["val_acc"]))
        return hist


def _sgd_epoch(network, x, y, config, shuffle_rng, dropout_rng, epoch):
    n = x.shape[0]
    order = shuffle_rng.permutation(n)
    loss_sum, correct = 0.0, 0
    for lo in range(0, n, config.batch_size):
        idx = order[lo : lo + config.batch_size]
        xb, yb = x[idx], y[idx]
        try:
            loss, probs, grads = network.loss_and_grads(
                xb, yb, train=True, rng=dropout_rng
            )
        except NumericError:
            raise NumericError(
                f"non-finite loss at epoch {epoch}, batch {lo // config.batch_size}"
            ) from None
        network.sgd_step(grads, config.learning_rate)
        loss_sum += loss * len(idx)
        correct += int((probs.argmax(axis=1) == yb).sum())
    return loss_sum / n, correct / n


def evaluate(
    network: Network, x: np.ndarray, y: np.ndarray, batch_size: int = 256
) -> Tuple[float, float, np.ndarray]:
    """Inference-mode mean loss, accuracy, and predicted class indices."""
    if x.shape[0] == 0:
        raise InsufficientDataError("cannot evaluate on an empty set")
    losses, preds = 0.0, []
    for lo in range(0, x.shape[0], batch_size):
        xb, yb = x[lo : lo + batch_size], y[lo : lo + batch_size]
        logits, _ = network.forward(xb, train=False)
        loss, probs, _ = softmax_cross_entropy(logits, yb)
        losses += loss * xb.shape[0]
        preds.append(probs.argmax(axis=1))
    preds = np.concatenate(preds)
    return losses / x.shape[0], float((preds == y).mean()), preds


def train_model(
    arch: ArchitectureSpec,
    train: Tuple[np.ndarray, np.ndarray],
    val: Tuple[np.ndarray, np.ndarray],
    config: TrainConfig,
    init_seed: Optional[int] = None,
) -> Tuple[Network, TrainHistory]:
    """Train a fresh network for the configured number of epochs.

    Training metrics are averaged over the epoch's mini-batches (dropout
    active); validation runs in inference mode after each epoch.
    """
    x_train, y_train = train
    if x_train.shape[0] == 0:
        raise InsufficientDataError("training split is empty")
    network = Network(arch, init_seed=config.seed if init_seed is None else init_seed)
    shuffle_rng = uniform_generator(derive_seed(config.seed, _SHUFFLE_TAG))
    dropout_rng = uniform_generator(derive_seed(config.seed, _DROPOUT_TAG))
    history = TrainHistory()
    for epoch in range(1, config.epochs + 1):
        tl, ta = _sgd_epoch(
            network, x_train, y_train, config, shuffle_rng, dropout_rng, epoch
        )
        vl, va, _ = evaluate(network, val[0], val[1])
        history.train_loss.append(tl)
        history.train_acc.append(ta)
        history.val_loss.append(vl)
        history.val_acc.append(va)
    return network, history


@dataclass
class StepRecord:
    """One moving-window step: the day predicted and what happened."""

    step: int
    day: int
    predicted: Label
    actual: Label
    degenerate: bool


def _majority_label(labels: Sequence[Label]) -> Label:
    counts = Counter(labels)
    # Ties break toward the smaller class index for determinism.
    return sorted(counts, key=lambda lab: (-counts[lab], lab.class_index))[0]


def run_moving_window(
    path: PricePath,
    region: int,
    wspec: WindowSpec,
    strategy: StrategySpec,
    chart: ChartSpec,
    arch_for_input,
    config: TrainConfig,
    master_seed: int,
    series_roles: Sequence[str] = ("close",),
    max_steps: Optional[int] = None,
) -> Tuple[List[StepRecord], ConfusionMatrix]:
    """Walk a path one day at a time, training a fresh model per step.

    Step s trains on every window inside days [s, s + region) and then
    predicts the label of the window ending on the region's last day,
    whose outcome is realized on the first out-of-region day. With the
    next-day rule this is exactly the classic setup: a 20-day region
    yields 16 five-day training images and a prediction for day 21.
    Single-class steps skip training and fall back to that class.
    """
    if region < wspec.window + 1:
        raise ParameterError(
            f"region {region} too small for window {wspec.window}"
        )
    needed_ma = set(strategy.ma_windows)
    for role in series_roles:
        if role.startswith("ma"):
            needed_ma.add(int(role[2:]))
    indicators = IndicatorSet.compute(path, needed_ma) if needed_ma else None

    arch = arch_for_input
    records: List[StepRecord] = []

    # Steps overlap heavily, so render every labelable window once up front.
    all_samples = build_samples(
        path,
        indicators,
        WindowSpec(wspec.window, wspec.holding, stride=1),
        strategy,
        chart,
        series_roles,
    )
    cache: Dict[int, Tuple[np.ndarray, Label]] = {
        s.start: (s.image.pixels, s.label) for s in all_samples
    }

    s = render_warmup(series_roles)
    while True:
        last_start = s + region - wspec.window
        if last_start not in cache:
            break
        if max_steps is not None and len(records) >= max_steps:
            break
        starts = range(s, last_start + 1)
        images = np.stack([cache[i][0] for i in starts]).astype(np.float64) / 255.0
        x = np.ascontiguousarray(images.transpose(0, 3, 1, 2))
        labels = [cache[i][1] for i in starts]
        y = np.array([lab.class_index for lab in labels], dtype=np.int64)
        actual = labels[-1]
        day = s + region

        if len(set(labels)) < 2:
            records.append(
                StepRecord(len(records), day, _majority_label(labels), actual, True)
            )
        else:
            step_seed = derive_seed(master_seed, _STEP_TAG, len(records))
            step_config = TrainConfig(
                epochs=config.epochs,
                batch_size=config.batch_size,
                learning_rate=config.learning_rate,
                seed=step_seed,
            )
            network = Network(arch, init_seed=step_seed)
            shuffle_rng = uniform_generator(derive_seed(step_seed, _SHUFFLE_TAG))
            dropout_rng = uniform_generator(derive_seed(step_seed, _DROPOUT_TAG))
            for epoch in range(1, step_config.epochs + 1):
                _sgd_epoch(network, x, y, step_config, shuffle_rng, dropout_rng, epoch)
            pred_idx = int(network.predict(x[-1:])[0])
            records.append(
                StepRecord(
                    len(records), day, Label.from_class_index(pred_idx), actual, False
                )
            )
        s += 1

    if not records:
        raise InsufficientDataError("path too short for a single moving-window step")
    matrix = confusion(
        [r.predicted for r in records], [r.actual for r in records]
    )
    return records, matrix
