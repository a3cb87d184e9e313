import json

import pytest

from chartcnn.config import (
    DEFAULTS,
    PRESETS,
    SEED_TRAIN,
    RunConfig,
    expand_config,
    validate_config,
)
from chartcnn.errors import ConfigError
from chartcnn.seeding import derive_seed


class TestExpand:
    def test_defaults_validate(self):
        cfg = RunConfig.from_dict({})
        assert cfg.mode == "batch"
        assert cfg.master_seed == DEFAULTS["master_seed"]
        assert cfg["preset"] is None

    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_each_preset_validates(self, name):
        cfg = RunConfig.from_dict({"preset": name})
        assert cfg["preset"] == name

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="unknown preset"):
            RunConfig.from_dict({"preset": "experiment9"})

    def test_non_dict_rejected(self):
        with pytest.raises(ConfigError, match="top level"):
            expand_config([1, 2])

    def test_user_overrides_preset(self):
        cfg = RunConfig.from_dict({"preset": "experiment2", "train": {"epochs": 3}})
        assert cfg["train"]["epochs"] == 3
        # untouched preset values survive the merge
        assert cfg["strategy"]["kind"] == "ma-alignment"
        assert cfg["train"]["batch_size"] == DEFAULTS["train"]["batch_size"]

    def test_nested_merge_keeps_siblings(self):
        cfg = RunConfig.from_dict({"chart": {"width": 200}})
        assert cfg["chart"]["width"] == 200
        assert cfg["chart"]["series"] == DEFAULTS["chart"]["series"]

    def test_expand_does_not_mutate_defaults(self):
        before = json.dumps(DEFAULTS, sort_keys=True, default=str)
        RunConfig.from_dict({"gbm": {"sigma": 0.5}, "preset": "experiment1"})
        assert json.dumps(DEFAULTS, sort_keys=True, default=str) == before


class TestValidation:
    def test_collects_every_violation(self):
        raw = expand_config(
            {
                "gbm": {"sigma": -1.0},
                "data": {"window": 1},
                "chart": {"channels": 4},
            }
        )
        violations = validate_config(raw)
        joined = "\n".join(violations)
        assert "gbm.sigma" in joined
        assert "data.window" in joined
        assert "chart.channels" in joined
        assert len(violations) >= 3

    def test_config_error_carries_violations(self):
        with pytest.raises(ConfigError) as exc:
            RunConfig.from_dict({"gbm": {"sigma": -1.0}, "data": {"window": 1}})
        assert len(exc.value.violations) >= 2

    @pytest.mark.parametrize(
        "raw,needle",
        [
            ({"mode": "level"}, "mode:"),
            ({"master_seed": -1}, "master_seed"),
            ({"master_seed": True}, "master_seed"),
            ({"threads": 0}, "threads"),
            ({"out": ""}, "out:"),
            ({"gbm": {"dt": 0.0}}, "gbm.dt"),
            ({"gbm": {"s0": -5}}, "gbm.s0"),
            ({"gbm": {"n_paths": 0}}, "gbm.n_paths"),
            ({"gbm": {"ohlc": "yes"}}, "gbm.ohlc"),
            ({"data": {"split": [0.5, 0.5]}}, "data.split"),
            ({"data": {"split": [0.5, 0.4, 0.2]}}, "data.split"),
            ({"data": {"balanced_train": 1}}, "data.balanced_train"),
            ({"strategy": {"kind": "momentum"}}, "strategy.kind"),
            ({"strategy": {"buy_th": 0.0}}, "strategy.buy_th"),
            ({"strategy": {"ma_fast": 9}}, "increasing"),
            ({"chart": {"scaling": "zscore"}}, "chart.scaling"),
            ({"chart": {"series": []}}, "chart.series"),
            ({"chart": {"series": ["volume"]}}, "unknown role"),
            ({"model": {"arch": "vgg"}}, "model.arch"),
            ({"model": {"input": [32]}}, "model.input"),
            ({"model": {"filters": 0}}, "model.filters"),
            ({"train": {"learning_rate": 0}}, "train.learning_rate"),
            ({"moving_window": {"region": 2}}, "moving_window.region"),
        ],
    )
    def test_single_field_violations(self, raw, needle):
        violations = validate_config(expand_config(raw))
        assert any(needle in item for item in violations), violations

    def test_next_day_needs_holding_one(self):
        raw = {"strategy": {"kind": "next-day"}, "data": {"holding": 3}}
        violations = validate_config(expand_config(raw))
        assert any("holding = 1" in item for item in violations)

    def test_open_close_gap_needs_ohlc(self):
        raw = {
            "preset": "experiment3",
            "gbm": {"ohlc": False},
            "chart": {"series": ["ma5", "ma10", "ma20", "close"]},
        }
        violations = validate_config(expand_config(raw))
        assert any("open-close-gap" in item for item in violations)

    def test_open_series_needs_ohlc(self):
        raw = {"chart": {"series": ["open", "close"]}}
        violations = validate_config(expand_config(raw))
        assert any("'open' needs gbm.ohlc" in item for item in violations)

    def test_ma_role_without_color_on_rgb(self):
        raw = {"chart": {"series": ["ma3", "close"]}}
        violations = validate_config(expand_config(raw))
        assert any("no default color" in item for item in violations)
        # single-channel charts ignore the color table
        raw["chart"]["channels"] = 1
        assert validate_config(expand_config(raw)) == []

    def test_window_wider_than_chart(self):
        raw = {"data": {"window": 200}, "gbm": {"n_steps": 400}}
        violations = validate_config(expand_config(raw))
        assert any("exceed chart width" in item for item in violations)

    def test_fixed_range_needs_bounds(self):
        raw = {"chart": {"scaling": "fixed-range", "lo": 2.0, "hi": 1.0}}
        violations = validate_config(expand_config(raw))
        assert any("lo < hi" in item for item in violations)

    def test_region_must_exceed_window(self):
        raw = {
            "preset": "workflow1",
            "moving_window": {"region": 5},
        }
        violations = validate_config(expand_config(raw))
        assert any("must exceed data.window" in item for item in violations)

    def test_paths_long_enough_for_one_window(self):
        # warmup 19 (ma20) + window 20 + holding 3 needs length >= 42
        raw = {
            "gbm": {"n_steps": 30},
            "chart": {"series": ["ma20", "close"]},
            "strategy": {"kind": "price-threshold"},
        }
        violations = validate_config(expand_config(raw))
        assert any("too short" in item for item in violations)
        raw["gbm"]["n_steps"] = 41
        assert validate_config(expand_config(raw)) == []


class TestFileLoading:
    def test_from_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"preset": "experiment2", "threads": 2}))
        cfg = RunConfig.from_file(path)
        assert cfg.threads == 2
        assert cfg["preset"] == "experiment2"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="file not found"):
            RunConfig.from_file(tmp_path / "nope.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="invalid JSON"):
            RunConfig.from_file(path)


class TestRunConfig:
    def test_override_returns_new_validated(self):
        cfg = RunConfig.from_dict({})
        out = cfg.override(threads=4, out="elsewhere")
        assert out.threads == 4
        assert str(out.out_dir) == "elsewhere"
        assert cfg.threads == 1

    def test_override_skips_none(self):
        cfg = RunConfig.from_dict({"threads": 3})
        assert cfg.override(threads=None).threads == 3

    def test_override_validates(self):
        cfg = RunConfig.from_dict({})
        with pytest.raises(ConfigError):
            cfg.override(threads=0)

    def test_to_dict_is_a_copy(self):
        cfg = RunConfig.from_dict({})
        d = cfg.to_dict()
        d["gbm"]["sigma"] = -9.0
        assert cfg["gbm"]["sigma"] == DEFAULTS["gbm"]["sigma"]

    def test_gbm_params_view(self):
        cfg = RunConfig.from_dict({"gbm": {"r": 0.03, "sigma": 0.4}})
        p = cfg.gbm_params()
        assert (p.r, p.sigma, p.s0) == (0.03, 0.4, 100.0)

    def test_strategy_spec_view(self):
        cfg = RunConfig.from_dict({"preset": "experiment2"})
        spec = cfg.strategy_spec()
        assert spec.kind == "ma-alignment"
        assert (spec.window, spec.holding) == (20, 3)
        assert spec.ma_windows == (5, 7, 10)

    def test_chart_spec_view(self):
        cfg = RunConfig.from_dict({"preset": "workflow1"})
        chart = cfg.chart_spec()
        assert (chart.width, chart.height, chart.channels) == (48, 32, 1)
        assert chart.scaling == "window-minmax"

    def test_architecture_view(self):
        cfg = RunConfig.from_dict({"preset": "workflow1"})
        arch = cfg.architecture()
        assert arch.input_shape == (1, 32, 48)

    def test_train_config_view(self):
        cfg = RunConfig.from_dict({"master_seed": 99})
        tc = cfg.train_config()
        assert tc.epochs == DEFAULTS["train"]["epochs"]
        assert tc.seed == derive_seed(99, SEED_TRAIN)

    def test_seeds_are_derived_and_distinct(self):
        cfg = RunConfig.from_dict({"master_seed": 7})
        seeds = cfg.seeds()
        assert seeds["master"] == 7
        assert seeds["paths"] == derive_seed(7, 1)
        assert seeds["split"] == derive_seed(7, 2)
        assert seeds["model_init"] == derive_seed(7, 3)
        assert seeds["train"] == derive_seed(7, 4)
        assert seeds["balance"] == derive_seed(7, 5)
        assert len(set(seeds.values())) == 6
