"""Windowing paths into labeled chart images, splitting, and manifests.

Windows of W consecutive days slide along a path with a fixed stride. The
first start index is the warm-up (longest rendered moving average minus
one) so every indicator line is fully defined across every chart, and the
last window must leave H future days for its label:

    count = floor((L - warmup - W - H) / stride) + 1

A dataset directory holds images/{path_id}_{start}.png, a manifest.csv
with columns filename,label,path_id,start,end,split, and a meta.json with
the generation parameters.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    ConsistencyError,
    DataError,
    InsufficientDataError,
    ParameterError,
)
from .gbm import PricePath
from .labeler import CLASS_NAMES, Label, StrategySpec, label_window
from .raster import ChartImage, ChartSpec, load_image, render_chart, resize_image, save_image
from .seeding import uniform_generator
from .series import IndicatorSet

MANIFEST_COLUMNS = ("filename", "label", "path_id", "start", "end", "split")
SPLIT_NAMES = ("train", "val", "test")


@dataclass(frozen=True)
class WindowSpec:
    """Window length W, label horizon H, and stride between starts."""

    window: int
    holding: int = 1
    stride: int = 1

    def __post_init__(self):
        if self.window < 2:
            raise ParameterError(f"window must be >= 2, got {self.window}")
        if self.holding < 1:
            raise ParameterError(f"holding must be >= 1, got {self.holding}")
        if self.stride < 1:
            raise ParameterError(f"stride must be >= 1, got {self.stride}")


def window_count(length: int, window: int, holding: int, stride: int = 1, warmup: int = 0) -> int:
    """How many windows fit; holding may be 0 for pure image counting."""
    if window < 1 or holding < 0 or stride < 1 or warmup < 0:
        raise ParameterError("window >= 1, holding >= 0, stride >= 1, warmup >= 0")
    free = length - warmup - window - holding
    if free < 0:
        return 0
    return free // stride + 1


def window_starts(length: int, window: int, holding: int, stride: int = 1, warmup: int = 0) -> List[int]:
    n = window_count(length, window, holding, stride, warmup)
    return [warmup + i * stride for i in range(n)]


@dataclass
class LabeledSample:
    """One chart window with its label and provenance."""

    label: Label
    path_id: int
    start: int
    end: int
    split: str = ""
    filename: str = ""
    image: Optional[ChartImage] = None


def parse_role(role: str) -> Tuple[str, Optional[int]]:
    """Split a series role like 'close' or 'ma10' into (kind, ma window)."""
    if role in ("close", "open"):
        return role, None
    if role.startswith("ma") and role[2:].isdigit() and int(role[2:]) >= 1:
        return "ma", int(role[2:])
    raise ParameterError(f"unknown series role {role!r}")


def rendered_ma_windows(series_roles: Sequence[str]) -> List[int]:
    return sorted(k for kind, k in map(parse_role, series_roles) if kind == "ma")


def render_warmup(series_roles: Sequence[str]) -> int:
    """Warm-up days implied by the longest rendered moving average."""
    mas = rendered_ma_windows(series_roles)
    return max(mas) - 1 if mas else 0


def _window_series(path, indicators, series_roles, start, end):
    # Moving averages first, then open, then close last so the price line
    # survives every crossing.
    named = []
    for role in series_roles:
        kind, k = parse_role(role)
        if kind == "ma":
            named.append((0, k, role, indicators.ma[k]))
        elif kind == "open":
            if path.open is None:
                raise DataError("series role 'open' needs a path with opens")
            named.append((1, 0, role, path.open))
        else:
            named.append((2, 0, role, path.close))
    named.sort(key=lambda item: (item[0], item[1]))
    return [(role, arr[start : end + 1]) for _, _, role, arr in named]


def build_samples(
    path: PricePath,
    indicators: Optional[IndicatorSet],
    wspec: WindowSpec,
    strategy: StrategySpec,
    chart: ChartSpec,
    series_roles: Sequence[str] = ("close",),
) -> List[LabeledSample]:
    """Render and label every window of one path.

    The window geometry must agree with the strategy's, because the label
    formula reads the horizon from the strategy.
    """
    if wspec.window != strategy.window or wspec.holding != strategy.holding:
        raise ParameterError(
            "window spec and strategy disagree on window/holding geometry"
        )
    needed = set(rendered_ma_windows(series_roles)) | set(strategy.ma_windows)
    if needed and (indicators is None or not needed <= set(indicators.ma)):
        raise DataError(f"indicator set is missing moving averages {sorted(needed)}")

    warmup = render_warmup(series_roles)
    starts = window_starts(len(path), wspec.window, wspec.holding, wspec.stride, warmup)
    if not starts:
        raise InsufficientDataError(
            f"path of length {len(path)} is too short for W={wspec.window}, "
            f"H={wspec.holding}, warmup={warmup}"
        )
    samples = []
    for start in starts:
        end = start + wspec.window - 1
        image = render_chart(_window_series(path, indicators, series_roles, start, end), chart)
        image.window_span = (start, end)
        samples.append(
            LabeledSample(
                label=label_window(path, indicators, end, strategy),
                path_id=path.path_id,
                start=start,
                end=end,
                image=image,
            )
        )
    return samples


def split_dataset(
    samples: Sequence[LabeledSample],
    ratios: Tuple[float, float, float],
    seed: int,
) -> Tuple[List[LabeledSample], List[LabeledSample], List[LabeledSample]]:
    """Shuffle once with the seed, then cut contiguously at the ratios.

    Every sample lands in exactly one split and each split size is within
    one of its exact share. Sets the split field on each sample.
    """
    if len(ratios) != 3 or any(r <= 0.0 for r in ratios):
        raise ParameterError(f"need three positive ratios, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ParameterError(f"ratios must sum to 1, got {sum(ratios)}")
    if not samples:
        raise InsufficientDataError("cannot split an empty sample list")
    order = uniform_generator(seed).permutation(len(samples))
    shuffled = [samples[i] for i in order]
    n = len(shuffled)
    cut1 = int(np.floor(ratios[0] * n + 0.5))
    cut2 = int(np.floor((ratios[0] + ratios[1]) * n + 0.5))
    parts = (shuffled[:cut1], shuffled[cut1:cut2], shuffled[cut2:])
    for name, part in zip(SPLIT_NAMES, parts):
        for s in part:
            s.split = name
    return parts


def balanced_subset(
    samples: Sequence[LabeledSample], seed: int, per_class: Optional[int] = None
) -> List[LabeledSample]:
    """Seeded subsample with equal class counts (the minimum support).

    Useful because threshold rules usually make Hold dominate.
    """
    by_class: Dict[Label, List[LabeledSample]] = {lab: [] for lab in Label}
    for s in samples:
        by_class[s.label].append(s)
    supports = [len(v) for v in by_class.values()]
    if min(supports) == 0:
        raise InsufficientDataError(
            f"balanced subset needs every class present, supports={supports}"
        )
    take = min(supports) if per_class is None else min(per_class, min(supports))
    rng = uniform_generator(seed)
    chosen = []
    for lab in sorted(by_class, key=int):
        group = by_class[lab]
        idx = rng.permutation(len(group))[:take]
        chosen.extend(group[i] for i in sorted(idx))
    return chosen


def class_counts(samples: Sequence[LabeledSample]) -> Dict[str, int]:
    counts = {name: 0 for name in CLASS_NAMES}
    for s in samples:
        counts[CLASS_NAMES[s.label.class_index]] += 1
    return counts


def write_manifest(
    samples: Sequence[LabeledSample],
    directory,
    meta: Optional[dict] = None,
) -> Path:
    """Write images/, manifest.csv, and meta.json for a sample list."""
    directory = Path(directory)
    images_dir = directory / "images"
    images_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for s in samples:
        if s.image is None:
            raise DataError(
                f"sample {s.path_id}_{s.start} has no rendered image to save"
            )
        s.filename = f"{s.path_id}_{s.start}.png"
        save_image(s.image, images_dir / s.filename)
        rows.append([s.filename, int(s.label), s.path_id, s.start, s.end, s.split])
    with open(directory / "manifest.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        writer.writerows(rows)
    payload = dict(meta or {})
    payload["class_counts"] = class_counts(samples)
    payload["n_samples"] = len(samples)
    with open(directory / "meta.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return directory


def read_manifest(directory) -> List[LabeledSample]:
    """Read manifest.csv back; every referenced image must exist."""
    directory = Path(directory)
    manifest = directory / "manifest.csv"
    if not manifest.exists():
        raise ConsistencyError(f"no manifest.csv in {directory}")
    samples = []
    with open(manifest, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != MANIFEST_COLUMNS:
            raise ConsistencyError(
                f"manifest columns {reader.fieldnames} != {list(MANIFEST_COLUMNS)}"
            )
        for row in reader:
            image_path = directory / "images" / row["filename"]
            if not image_path.exists():
                raise ConsistencyError(f"manifest references missing {image_path}")
            samples.append(
                LabeledSample(
                    label=Label(int(row["label"])),
                    path_id=int(row["path_id"]),
                    start=int(row["start"]),
                    end=int(row["end"]),
                    split=row["split"],
                    filename=row["filename"],
                )
            )
    return samples


def load_tensors(
    directory,
    samples: Sequence[LabeledSample],
    input_hw: Optional[Tuple[int, int]] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Load sample images as (n, c, h, w) float64 in [0, 1] plus class indices.

    Images are resized bilinearly when input_hw differs from the stored
    size. In-memory images are used as-is; others are read from disk.
    """
    if not samples:
        raise InsufficientDataError("no samples to load")
    directory = Path(directory) if directory is not None else None
    imgs = []
    labels = np.empty(len(samples), dtype=np.int64)
    for i, s in enumerate(samples):
        img = s.image
        if img is None:
            if directory is None or not s.filename:
                raise DataError("sample has neither an image nor a filename")
            img = load_image(directory / "images" / s.filename)
        if input_hw is not None and (img.height, img.width) != tuple(input_hw):
            img = resize_image(img, input_hw[0], input_hw[1])
        imgs.append(img.pixels)
        labels[i] = s.label.class_index
    x = np.stack(imgs).astype(np.float64) / 255.0
    return np.ascontiguousarray(x.transpose(0, 3, 1, 2)), labels
