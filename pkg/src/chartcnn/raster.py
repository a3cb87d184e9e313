"""Chart rasterization: axis-free line charts drawn straight into byte buffers.

Charts carry no axes, ticks, or text. Sample i of a length-L series lands on
column round(i * (width-1) / (L-1)); values map to rows with larger values
higher on the canvas. Consecutive samples are joined by hard non-anti-aliased
digital line segments: one pixel per column at the rounded interpolated row,
plus the vertical run connecting it to the previous column so steep segments
stay 4-connected. round(x) is floor(x + 0.5) throughout, which keeps the
pixel-level invariants (column coverage, monotone embedding under a shared
scale) exactly true.

With invert=True, series colors are painted onto a black canvas; with
invert=False the complement colors go onto white, so inverting one buffer
yields the other.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    DataError,
    FormatError,
    ParameterError,
    ResolutionError,
    ShapeError,
)

SCALING_MODES = ("window-minmax", "joint-minmax", "fixed-range")

DEFAULT_COLORS: Dict[str, Tuple[int, int, int]] = {
    "close": (255, 255, 255),
    "open": (255, 0, 255),
    "ma5": (255, 0, 0),
    "ma7": (0, 255, 255),
    "ma10": (0, 0, 255),
    "ma20": (0, 255, 0),
}


def _round_half_up(x):
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5).astype(np.int64)


@dataclass(frozen=True)
class ChartSpec:
    """Canvas geometry and drawing rules for rendered charts."""

    width: int = 150
    height: int = 100
    channels: int = 3
    invert: bool = True
    scaling: str = "window-minmax"
    lo: Optional[float] = None
    hi: Optional[float] = None
    thickness: int = 1
    colors: Dict[str, Tuple[int, int, int]] = field(
        default_factory=lambda: dict(DEFAULT_COLORS)
    )

    def __post_init__(self):
        if self.width < 8 or self.height < 8:
            raise ParameterError(
                f"canvas must be at least 8x8, got {self.height}x{self.width}"
            )
        if self.channels not in (1, 3):
            raise ParameterError(f"channels must be 1 or 3, got {self.channels}")
        if self.scaling not in SCALING_MODES:
            raise ParameterError(
                f"scaling must be one of {SCALING_MODES}, got {self.scaling!r}"
            )
        if self.scaling == "fixed-range":
            if self.lo is None or self.hi is None or not self.lo < self.hi:
                raise ParameterError("fixed-range scaling needs lo < hi")
        if self.thickness < 1:
            raise ParameterError(f"thickness must be >= 1, got {self.thickness}")
        if self.channels == 3:
            used = list(self.colors.values())
            if len(set(used)) != len(used):
                raise ParameterError("series colors must be pairwise distinct")
            for name, c in self.colors.items():
                if len(c) != 3 or any(not 0 <= v <= 255 for v in c):
                    raise ParameterError(f"bad color for {name!r}: {c}")


@dataclass
class ChartImage:
    """A rendered chart: row-major byte buffer plus its source window."""

    pixels: np.ndarray
    window_span: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        self.pixels = np.ascontiguousarray(self.pixels, dtype=np.uint8)
        if self.pixels.ndim != 3 or self.pixels.shape[2] not in (1, 3):
            raise ShapeError(
                f"pixels must be (height, width, 1|3), got {self.pixels.shape}"
            )

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]


def _series_bounds(series, spec):
    if spec.scaling == "fixed-range":
        return [(spec.lo, spec.hi)] * len(series)
    if spec.scaling == "joint-minmax":
        allv = np.concatenate([v for _, v in series])
        return [(float(allv.min()), float(allv.max()))] * len(series)
    return [(float(v.min()), float(v.max())) for _, v in series]


def _value_rows(values, lo, hi, height):
    """Map values to integer rows; larger values sit higher (smaller row)."""
    if hi > lo:
        frac = np.clip((values - lo) / (hi - lo), 0.0, 1.0)
        return (height - 1) - _round_half_up(frac * (height - 1))
    mid = _round_half_up((height - 1) / 2.0)
    return np.full(values.shape, mid, dtype=np.int64)


def _polyline_spans(cols, rows, width):
    """Per-column (top, bottom) row intervals covered by the polyline."""
    xs = np.arange(cols[0], cols[-1] + 1)
    center = _round_half_up(np.interp(xs, cols, rows.astype(np.float64)))
    prev = np.concatenate([[center[0]], center[:-1]])
    return xs, np.minimum(center, prev), np.maximum(center, prev)


def _paint_spans(canvas, xs, top, bot, color, thickness):
    height, width = canvas.shape[:2]
    pad_lo = (thickness - 1) // 2
    pad_hi = thickness // 2
    top = np.clip(top - pad_lo, 0, height - 1)
    bot = np.clip(bot + pad_hi, 0, height - 1)
    lengths = bot - top + 1
    # Grouped arange: consecutive integers within each column span.
    flat_rows = np.repeat(top, lengths) + (
        np.arange(lengths.sum()) - np.repeat(np.cumsum(lengths) - lengths, lengths)
    )
    base_cols = np.repeat(xs, lengths)
    for dx in range(-pad_lo, pad_hi + 1):
        cols = np.clip(base_cols + dx, 0, width - 1)
        canvas[flat_rows, cols] = color


def render_chart(
    series: Sequence[Tuple[str, np.ndarray]], spec: ChartSpec
) -> ChartImage:
    """Render named series onto one canvas.

    Series are drawn in list order and later series overwrite earlier ones
    where they cross, so callers list the price line last to keep it fully
    visible. All series must share one length L with 2 <= L <= width.
    """
    if not series:
        raise ParameterError("need at least one series to render")
    arrays = []
    for name, values in series:
        v = np.asarray(values, dtype=np.float64)
        if v.ndim != 1:
            raise ShapeError(f"series {name!r} must be 1-d")
        if not np.all(np.isfinite(v)):
            raise DataError(f"series {name!r} contains non-finite values")
        arrays.append((name, v))
    length = arrays[0][1].size
    if any(v.size != length for _, v in arrays):
        raise ShapeError("all series must have equal length")
    if length < 2:
        raise DataError("need at least 2 samples to draw segments")
    if length > spec.width:
        raise ResolutionError(
            f"{length} samples do not fit a width-{spec.width} canvas"
        )
    if spec.channels == 3:
        for name, _ in arrays:
            if name not in spec.colors:
                raise ParameterError(f"no color assigned for series {name!r}")

    background = 0 if spec.invert else 255
    canvas = np.full((spec.height, spec.width, spec.channels), background, np.uint8)
    cols = _round_half_up(
        np.arange(length) * (spec.width - 1) / (length - 1)
    )
    for (name, values), (lo, hi) in zip(arrays, _series_bounds(arrays, spec)):
        rows = _value_rows(values, lo, hi, spec.height)
        xs, top, bot = _polyline_spans(cols, rows, spec.width)
        if spec.channels == 3:
            color = np.array(spec.colors[name], dtype=np.uint8)
        else:
            color = np.array([255], dtype=np.uint8)
        if not spec.invert:
            color = 255 - color
        _paint_spans(canvas, xs, top, bot, color, spec.thickness)
    return ChartImage(pixels=canvas, window_span=(0, length - 1))


def invert_image(image: ChartImage) -> ChartImage:
    """Complement every byte; applying it twice returns the original."""
    return ChartImage(pixels=255 - image.pixels, window_span=image.window_span)


def resize_image(image: ChartImage, height: int, width: int) -> ChartImage:
    """Bilinear resize with corner alignment, per channel.

    Resizing to the current size returns a byte-identical copy.
    """
    if height < 1 or width < 1:
        raise ParameterError(f"target size must be positive, got {height}x{width}")
    src = image.pixels.astype(np.float64)
    sh, sw = image.height, image.width
    if (sh, sw) == (height, width):
        return ChartImage(pixels=image.pixels.copy(), window_span=image.window_span)

    ys = np.arange(height) * ((sh - 1) / (height - 1)) if height > 1 else np.zeros(1)
    xs = np.arange(width) * ((sw - 1) / (width - 1)) if width > 1 else np.zeros(1)
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, sh - 1)
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, sw - 1)
    y1 = np.minimum(y0 + 1, sh - 1)
    x1 = np.minimum(x0 + 1, sw - 1)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]
    out = (
        src[np.ix_(y0, x0)] * (1 - fy) * (1 - fx)
        + src[np.ix_(y0, x1)] * (1 - fy) * fx
        + src[np.ix_(y1, x0)] * fy * (1 - fx)
        + src[np.ix_(y1, x1)] * fy * fx
    )
    pixels = np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)
    return ChartImage(pixels=pixels, window_span=image.window_span)


def save_image(image: ChartImage, path) -> None:
    """Write the chart as a lossless 8-bit PNG (grayscale or RGB)."""
    arr = image.pixels[:, :, 0] if image.channels == 1 else image.pixels
    Image.fromarray(arr, mode="L" if image.channels == 1 else "RGB").save(
        path, format="PNG"
    )


def load_image(path) -> ChartImage:
    """Read a PNG back into a ChartImage with exact pixel bytes."""
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode not in ("L", "RGB"):
                raise FormatError(f"unsupported image mode {img.mode!r} in {path}")
            arr = np.asarray(img, dtype=np.uint8)
    except (UnidentifiedImageError, OSError) as exc:
        raise FormatError(f"cannot decode image {path}: {exc}") from None
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return ChartImage(pixels=arr, window_span=None)
