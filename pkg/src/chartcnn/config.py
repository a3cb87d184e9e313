"""Run configuration: presets, validation, and typed accessors.

A run config is a JSON object. A `preset` field expands to a full
configuration before validation, and any explicitly given fields override
the preset's values. Validation collects every violation instead of
stopping at the first.

Presets:
  experiment1  price-threshold labels (1%/1%), 20-day windows, 5-day
               holding, a deliberately hard target used to show
               overfitting on a small corpus.
  experiment2  ma-alignment labels over MA 5/7/10 at 1%, 100 paths of 90
               daily steps at r=1%, sigma=25%.
  experiment3  open-close-gap labels (2% buy / 1% sell) with open prices
               simulated at half steps, MA 5/10/20 lines on the charts.
  workflow1    day-by-day moving window over one two-year path with
               next-day labels and a fresh model per step.
"""

import copy
import json
import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .errors import ConfigError, ParameterError
from .gbm import TRADING_DT, GbmParams
from .labeler import STRATEGY_KINDS, StrategySpec
from .nn.presets import ARCHITECTURES, build_architecture
from .raster import DEFAULT_COLORS, SCALING_MODES, ChartSpec
from .seeding import derive_seed
from .trainer import TrainConfig

SEED_PATHS = 1
SEED_SPLIT = 2
SEED_MODEL = 3
SEED_TRAIN = 4
SEED_BALANCE = 5

STAGES = ("simulate", "dataset", "train", "eval", "all")
MODES = ("batch", "moving-window")

DEFAULTS: dict = {
    "preset": None,
    "mode": "batch",
    "master_seed": 20240915,
    "out": "run_out",
    "threads": 1,
    "gbm": {
        "r": 0.01,
        "sigma": 0.25,
        "dt": TRADING_DT,
        "s0": 100.0,
        "n_steps": 90,
        "n_paths": 100,
        "ohlc": False,
    },
    "data": {
        "window": 20,
        "holding": 3,
        "stride": 1,
        "split": [0.5, 0.25, 0.25],
        "balanced_train": True,
    },
    "strategy": {
        "kind": "ma-alignment",
        "buy_th": 0.01,
        "sell_th": 0.01,
        "ma_fast": 5,
        "ma_mid": 7,
        "ma_slow": 10,
    },
    "chart": {
        "width": 150,
        "height": 100,
        "channels": 3,
        "invert": True,
        "scaling": "joint-minmax",
        "lo": None,
        "hi": None,
        "thickness": 1,
        "series": ["ma5", "ma7", "ma10", "close"],
    },
    "model": {
        "arch": "mini-alex",
        "input": [50, 75],
        "filters": None,
    },
    "train": {
        "epochs": 60,
        "batch_size": 32,
        "learning_rate": 0.01,
    },
    "moving_window": {
        "region": 20,
        "max_steps": 100,
    },
}

PRESETS: Dict[str, dict] = {
    "experiment1": {
        "mode": "batch",
        "gbm": {"n_paths": 20, "ohlc": False},
        "data": {"window": 20, "holding": 5, "balanced_train": False},
        "strategy": {"kind": "price-threshold", "buy_th": 0.01, "sell_th": 0.01},
        "chart": {"series": ["ma5", "ma10", "ma20", "close"]},
        "train": {"epochs": 100},
    },
    "experiment2": {
        "mode": "batch",
        "gbm": {"n_paths": 100, "ohlc": False},
        "data": {"window": 20, "holding": 3, "balanced_train": True},
        "strategy": {
            "kind": "ma-alignment",
            "buy_th": 0.01,
            "sell_th": 0.01,
            "ma_fast": 5,
            "ma_mid": 7,
            "ma_slow": 10,
        },
        "chart": {"series": ["ma5", "ma7", "ma10", "close"]},
        "train": {"epochs": 60},
    },
    "experiment3": {
        "mode": "batch",
        "gbm": {"n_paths": 100, "ohlc": True},
        "data": {"window": 15, "holding": 5, "balanced_train": True},
        "strategy": {"kind": "open-close-gap", "buy_th": 0.02, "sell_th": 0.01},
        "chart": {"series": ["ma5", "ma10", "ma20", "open", "close"]},
        "train": {"epochs": 60},
    },
    "workflow1": {
        "mode": "moving-window",
        "gbm": {"n_steps": 504, "n_paths": 1, "ohlc": False},
        "data": {"window": 5, "holding": 1},
        "strategy": {"kind": "next-day", "buy_th": 0.01, "sell_th": 0.01},
        "chart": {
            "width": 48,
            "height": 32,
            "channels": 1,
            "scaling": "window-minmax",
            "series": ["close"],
        },
        "model": {"arch": "a1", "input": [32, 48]},
        "train": {"epochs": 30, "batch_size": 16},
        "moving_window": {"region": 20, "max_steps": 100},
    },
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def expand_config(raw: dict) -> dict:
    """Resolve a user config against its preset and the defaults."""
    if not isinstance(raw, dict):
        raise ConfigError(["config: top level must be a JSON object"])
    preset = raw.get("preset")
    base = DEFAULTS
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(
                [f"preset: unknown preset {preset!r}, choose from {sorted(PRESETS)}"]
            )
        base = _merge(DEFAULTS, PRESETS[preset])
    resolved = _merge(base, raw)
    resolved["preset"] = preset
    return resolved


def _check_number(violations, section, key, value, minimum=None, strict=False):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        violations.append(f"{section}.{key}: must be a finite number, got {value!r}")
        return
    if minimum is not None:
        if strict and not value > minimum:
            violations.append(f"{section}.{key}: must be > {minimum}, got {value}")
        elif not strict and not value >= minimum:
            violations.append(f"{section}.{key}: must be >= {minimum}, got {value}")


def _check_int(violations, section, key, value, minimum):
    if not isinstance(value, int) or isinstance(value, bool):
        violations.append(f"{section}.{key}: must be an integer, got {value!r}")
        return
    if value < minimum:
        violations.append(f"{section}.{key}: must be >= {minimum}, got {value}")


def validate_config(cfg: dict) -> List[str]:
    """Every violated field, as 'section.key: reason' strings."""
    v: List[str] = []
    if cfg.get("mode") not in MODES:
        v.append(f"mode: must be one of {MODES}, got {cfg.get('mode')!r}")
    _check_int(v, "", "master_seed", cfg.get("master_seed"), 0)
    _check_int(v, "", "threads", cfg.get("threads"), 1)
    if not isinstance(cfg.get("out"), str) or not cfg["out"]:
        v.append("out: must be a non-empty path string")

    g = cfg.get("gbm", {})
    _check_number(v, "gbm", "r", g.get("r"))
    _check_number(v, "gbm", "sigma", g.get("sigma"), minimum=0.0)
    _check_number(v, "gbm", "dt", g.get("dt"), minimum=0.0, strict=True)
    _check_number(v, "gbm", "s0", g.get("s0"), minimum=0.0, strict=True)
    _check_int(v, "gbm", "n_steps", g.get("n_steps"), 1)
    _check_int(v, "gbm", "n_paths", g.get("n_paths"), 1)
    if not isinstance(g.get("ohlc"), bool):
        v.append(f"gbm.ohlc: must be true or false, got {g.get('ohlc')!r}")

    d = cfg.get("data", {})
    _check_int(v, "data", "window", d.get("window"), 2)
    _check_int(v, "data", "holding", d.get("holding"), 1)
    _check_int(v, "data", "stride", d.get("stride"), 1)
    split = d.get("split")
    if (
        not isinstance(split, list)
        or len(split) != 3
        or any(not isinstance(r, (int, float)) or r <= 0 for r in split)
    ):
        v.append(f"data.split: must be three positive ratios, got {split!r}")
    elif abs(sum(split) - 1.0) > 1e-9:
        v.append(f"data.split: ratios must sum to 1, got {sum(split)}")
    if not isinstance(d.get("balanced_train"), bool):
        v.append("data.balanced_train: must be true or false")

    s = cfg.get("strategy", {})
    if s.get("kind") not in STRATEGY_KINDS:
        v.append(f"strategy.kind: must be one of {STRATEGY_KINDS}, got {s.get('kind')!r}")
    _check_number(v, "strategy", "buy_th", s.get("buy_th"), minimum=0.0, strict=True)
    _check_number(v, "strategy", "sell_th", s.get("sell_th"), minimum=0.0, strict=True)
    if s.get("kind") == "ma-alignment":
        mas = [s.get("ma_fast"), s.get("ma_mid"), s.get("ma_slow")]
        if any(not isinstance(m, int) or m < 1 for m in mas):
            v.append(f"strategy.ma_fast/ma_mid/ma_slow: must be positive integers, got {mas}")
        elif not mas[0] < mas[1] < mas[2]:
            v.append(f"strategy.ma_fast/ma_mid/ma_slow: must be increasing, got {mas}")
    if s.get("kind") == "next-day" and d.get("holding") not in (None, 1):
        v.append("data.holding: next-day strategy requires holding = 1")
    if s.get("kind") == "open-close-gap" and g.get("ohlc") is False:
        v.append("gbm.ohlc: open-close-gap strategy needs simulated open prices")

    c = cfg.get("chart", {})
    _check_int(v, "chart", "width", c.get("width"), 8)
    _check_int(v, "chart", "height", c.get("height"), 8)
    if c.get("channels") not in (1, 3):
        v.append(f"chart.channels: must be 1 or 3, got {c.get('channels')!r}")
    if c.get("scaling") not in SCALING_MODES:
        v.append(f"chart.scaling: must be one of {SCALING_MODES}, got {c.get('scaling')!r}")
    elif c.get("scaling") == "fixed-range":
        lo, hi = c.get("lo"), c.get("hi")
        if not isinstance(lo, (int, float)) or not isinstance(hi, (int, float)) or not lo < hi:
            v.append(f"chart.lo/hi: fixed-range scaling needs lo < hi, got {lo!r}, {hi!r}")
    _check_int(v, "chart", "thickness", c.get("thickness"), 1)
    roles = c.get("series")
    if not isinstance(roles, list) or not roles:
        v.append(f"chart.series: must be a non-empty list of roles, got {roles!r}")
    else:
        for role in roles:
            if role in ("close", "open"):
                if role == "open" and g.get("ohlc") is False:
                    v.append("chart.series: 'open' needs gbm.ohlc = true")
            elif isinstance(role, str) and role.startswith("ma") and role[2:].isdigit():
                if c.get("channels") == 3 and role not in DEFAULT_COLORS:
                    v.append(f"chart.series: no default color for {role!r}")
            else:
                v.append(f"chart.series: unknown role {role!r}")
        if isinstance(c.get("width"), int) and isinstance(d.get("window"), int):
            if d["window"] > c["width"]:
                v.append(
                    f"data.window: {d['window']} samples exceed chart width {c['width']}"
                )

    m = cfg.get("model", {})
    if m.get("arch") not in ARCHITECTURES:
        v.append(f"model.arch: must be one of {sorted(ARCHITECTURES)}, got {m.get('arch')!r}")
    inp = m.get("input")
    if (
        not isinstance(inp, list)
        or len(inp) != 2
        or any(not isinstance(x, int) or x < 8 for x in inp)
    ):
        v.append(f"model.input: must be [height, width] with entries >= 8, got {inp!r}")
    if m.get("filters") is not None:
        _check_int(v, "model", "filters", m.get("filters"), 1)

    t = cfg.get("train", {})
    _check_int(v, "train", "epochs", t.get("epochs"), 1)
    _check_int(v, "train", "batch_size", t.get("batch_size"), 1)
    _check_number(v, "train", "learning_rate", t.get("learning_rate"), minimum=0.0, strict=True)

    mw = cfg.get("moving_window", {})
    _check_int(v, "moving_window", "region", mw.get("region"), 3)
    if mw.get("max_steps") is not None:
        _check_int(v, "moving_window", "max_steps", mw.get("max_steps"), 1)
    if (
        cfg.get("mode") == "moving-window"
        and isinstance(mw.get("region"), int)
        and isinstance(d.get("window"), int)
        and mw["region"] < d["window"] + 1
    ):
        v.append(
            f"moving_window.region: must exceed data.window, got {mw['region']}"
        )

    # The simulated paths must admit at least one labeled window.
    if not v and cfg["mode"] == "batch":
        length = g["n_steps"] + 1
        warmup = _config_warmup(cfg)
        if length - warmup - d["window"] - d["holding"] < 0:
            v.append(
                "gbm.n_steps: paths of length "
                f"{length} are too short for warmup {warmup} + window "
                f"{d['window']} + holding {d['holding']}"
            )
    return v


def _config_warmup(cfg: dict) -> int:
    mas = [int(r[2:]) for r in cfg["chart"]["series"] if r.startswith("ma")]
    return max(mas) - 1 if mas else 0


class RunConfig:
    """A validated, fully resolved run configuration."""

    def __init__(self, resolved: dict):
        violations = validate_config(resolved)
        if violations:
            raise ConfigError(violations)
        self._cfg = resolved

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        return cls(expand_config(raw))

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except FileNotFoundError:
            raise ConfigError([f"config: file not found: {path}"]) from None
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config: invalid JSON in {path}: {exc}"]) from None
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return copy.deepcopy(self._cfg)

    def __getitem__(self, key):
        return self._cfg[key]

    def override(self, **top_level) -> "RunConfig":
        merged = _merge(self._cfg, {k: v for k, v in top_level.items() if v is not None})
        return RunConfig(merged)

    # Typed views ---------------------------------------------------------

    @property
    def mode(self) -> str:
        return self._cfg["mode"]

    @property
    def master_seed(self) -> int:
        return self._cfg["master_seed"]

    @property
    def out_dir(self) -> Path:
        return Path(self._cfg["out"])

    @property
    def threads(self) -> int:
        return self._cfg["threads"]

    def gbm_params(self) -> GbmParams:
        g = self._cfg["gbm"]
        return GbmParams(r=g["r"], sigma=g["sigma"], dt=g["dt"], s0=g["s0"])

    def strategy_spec(self) -> StrategySpec:
        s = self._cfg["strategy"]
        d = self._cfg["data"]
        kwargs = dict(
            kind=s["kind"],
            window=d["window"],
            holding=d["holding"],
            buy_th=s["buy_th"],
            sell_th=s["sell_th"],
        )
        if s["kind"] == "ma-alignment":
            kwargs.update(
                ma_fast=s["ma_fast"], ma_mid=s["ma_mid"], ma_slow=s["ma_slow"]
            )
        return StrategySpec(**kwargs)

    def chart_spec(self) -> ChartSpec:
        c = self._cfg["chart"]
        return ChartSpec(
            width=c["width"],
            height=c["height"],
            channels=c["channels"],
            invert=c["invert"],
            scaling=c["scaling"],
            lo=c["lo"],
            hi=c["hi"],
            thickness=c["thickness"],
        )

    def architecture(self):
        m = self._cfg["model"]
        return build_architecture(
            m["arch"],
            hw=tuple(m["input"]),
            channels=self._cfg["chart"]["channels"],
            filters=m["filters"],
        )

    def train_config(self) -> TrainConfig:
        t = self._cfg["train"]
        return TrainConfig(
            epochs=t["epochs"],
            batch_size=t["batch_size"],
            learning_rate=t["learning_rate"],
            seed=derive_seed(self.master_seed, SEED_TRAIN),
        )

    def seeds(self) -> dict:
        master = self.master_seed
        return {
            "master": master,
            "paths": derive_seed(master, SEED_PATHS),
            "split": derive_seed(master, SEED_SPLIT),
            "model_init": derive_seed(master, SEED_MODEL),
            "train": derive_seed(master, SEED_TRAIN),
            "balance": derive_seed(master, SEED_BALANCE),
        }
