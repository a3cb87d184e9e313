"""chartcnn: price-path simulation, chart rasterization, and CNN training.

The package turns simulated (or ingested) daily price series into labeled
chart images and trains a small convolutional network on them, end to end
and bit-for-bit reproducibly from a single master seed.
"""

from .config import DEFAULTS, PRESETS, RunConfig, expand_config, validate_config
from .dataset import (
    LabeledSample,
    WindowSpec,
    balanced_subset,
    build_samples,
    class_counts,
    load_tensors,
    read_manifest,
    split_dataset,
    window_count,
    window_starts,
    write_manifest,
)
from .errors import (
    ArchitectureError,
    ChartCnnError,
    ConfigError,
    ConsistencyError,
    DataError,
    DependencyError,
    FormatError,
    InsufficientDataError,
    NumericError,
    OutOfRangeError,
    ParameterError,
    ParseError,
    ResolutionError,
    ShapeError,
)
from .evaluation import ConfusionMatrix, confusion, metrics_report, read_report, write_report
from .gbm import TRADING_DT, GbmParams, PricePath, calibrate_gbm, simulate_ohlc_path, simulate_path
from .labeler import CLASS_NAMES, CLASS_ORDER, Label, StrategySpec, label_window
from .nn.model import (
    ArchitectureSpec,
    LayerSpec,
    Network,
    gradient_check,
    load_checkpoint,
    save_checkpoint,
)
from .nn.presets import ARCHITECTURES, build_architecture
from .raster import (
    DEFAULT_COLORS,
    ChartImage,
    ChartSpec,
    invert_image,
    load_image,
    render_chart,
    resize_image,
    save_image,
)
from .seeding import GaussianStream, derive_seed, normal_variates, uniform_generator
from .series import IndicatorSet, ingest_price_csv, moving_average, write_price_csv
from .trainer import (
    StepRecord,
    TrainConfig,
    TrainHistory,
    evaluate,
    run_moving_window,
    train_model,
)

__version__ = "0.1.0"

__all__ = [
    "ARCHITECTURES",
    "ArchitectureError",
    "ArchitectureSpec",
    "CLASS_NAMES",
    "CLASS_ORDER",
    "ChartCnnError",
    "ChartImage",
    "ChartSpec",
    "ConfigError",
    "ConfusionMatrix",
    "ConsistencyError",
    "DataError",
    "DEFAULT_COLORS",
    "DEFAULTS",
    "DependencyError",
    "FormatError",
    "GaussianStream",
    "GbmParams",
    "InsufficientDataError",
    "IndicatorSet",
    "Label",
    "LabeledSample",
    "LayerSpec",
    "Network",
    "NumericError",
    "OutOfRangeError",
    "ParameterError",
    "ParseError",
    "PRESETS",
    "PricePath",
    "ResolutionError",
    "RunConfig",
    "ShapeError",
    "StepRecord",
    "StrategySpec",
    "TRADING_DT",
    "TrainConfig",
    "TrainHistory",
    "WindowSpec",
    "balanced_subset",
    "build_architecture",
    "build_samples",
    "calibrate_gbm",
    "class_counts",
    "confusion",
    "derive_seed",
    "evaluate",
    "expand_config",
    "gradient_check",
    "ingest_price_csv",
    "invert_image",
    "label_window",
    "load_checkpoint",
    "load_image",
    "load_tensors",
    "metrics_report",
    "moving_average",
    "normal_variates",
    "read_manifest",
    "read_report",
    "render_chart",
    "resize_image",
    "run_moving_window",
    "save_checkpoint",
    "save_image",
    "simulate_ohlc_path",
    "simulate_path",
    "split_dataset",
    "train_model",
    "uniform_generator",
    "validate_config",
    "window_count",
    "window_starts",
    "write_manifest",
    "write_price_csv",
    "write_report",
]
