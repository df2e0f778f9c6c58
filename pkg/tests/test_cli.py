"""Command-line contract: row counts, exit codes, estimates, round trips."""

import json
import math

import numpy as np
import pytest

from loadsynth.cli import (
    estimate_file_size,
    main,
    parse_duration,
    read_series_csv,
    write_series_csv,
)
from loadsynth.compose import GenerationRequest
from loadsynth.core import parse_resolution
from loadsynth.errors import ParseError
from loadsynth.ingest import write_level_datasets
from loadsynth.modelio import ModelBundle

WEEK_S = 604_800.0
YEAR_S = 52 * WEEK_S


@pytest.fixture(scope="session")
def bundle_path(tiny_models, tmp_path_factory):
    path = tmp_path_factory.mktemp("bundle") / "models.lsb"
    ModelBundle(models=tiny_models, provenance={"source": "tiny"}).save(path)
    return path


class TestParseDuration:
    @pytest.mark.parametrize(
        "text,want",
        [
            ("90s", 90.0),
            ("10min", 600.0),
            ("2.5h", 9000.0),
            ("1d", 86_400.0),
            ("13wk", 13 * WEEK_S),
            ("1yr", YEAR_S),
        ],
    )
    def test_accepts(self, text, want):
        assert parse_duration(text) == want

    @pytest.mark.parametrize("text", ["", "1", "d", "1 d", "-1d", "1.5.2h", "1mo", "0s"])
    def test_rejects(self, text):
        with pytest.raises(ParseError):
            parse_duration(text)


class TestEstimate:
    def test_documented_formula(self):
        req = GenerationRequest(1, 0, parse_resolution("1/10min"), 86_400.0)
        est = estimate_file_size(req)
        header = len("timestamp,load_1\n")
        assert est == 144 * (20 + 10) + header

    def test_load_count_scales_row_bytes(self):
        one = GenerationRequest(1, 0, parse_resolution("1/h"), 86_400.0)
        two = GenerationRequest(1, 1, parse_resolution("1/h"), 86_400.0)
        assert estimate_file_size(two) - estimate_file_size(one) == 24 * 10 + len(",load_2")


class TestGenerate:
    def test_day_at_ten_minutes(self, bundle_path, tmp_path):
        out = tmp_path / "day.csv"
        code = main(
            [
                "generate", "--bundle", str(bundle_path), "--residential", "1",
                "--resolution", "1/10min", "--length", "1d", "--season", "winter",
                "--seed", "3", "--output", str(out),
            ]
        )
        assert code == 0
        stamps, series = read_series_csv(out)
        assert series.shape == (1, 144)
        assert stamps[0] == "2021-01-01T00:00:00"
        assert stamps[1] == "2021-01-01T00:10:00"
        assert np.all(series > 0)

    def test_estimate_accuracy_three_resolutions(self, bundle_path, tmp_path):
        for res, length in (("1/wk", "13wk"), ("1/h", "3d"), ("1/10min", "1d")):
            out = tmp_path / "est.csv"
            code = main(
                [
                    "generate", "--bundle", str(bundle_path), "--residential", "1",
                    "--industrial", "1", "--resolution", res, "--length", length,
                    "--seed", "4", "--output", str(out), "--base-mw", "60",
                ]
            )
            assert code == 0
            req = GenerationRequest(
                1, 1, parse_resolution(res), parse_duration(length), base_mw=60.0
            )
            est = estimate_file_size(req)
            actual = out.stat().st_size
            assert abs(est - actual) / actual < 0.15, (res, est, actual)

    def test_estimate_only_prints_bytes(self, bundle_path, capsys):
        code = main(
            [
                "generate", "--bundle", str(bundle_path), "--residential", "1",
                "--resolution", "1/h", "--length", "1d", "--estimate-only",
                "--output", "/nonexistent/dir/x.csv",
            ]
        )
        assert code == 0
        printed = int(capsys.readouterr().out.strip())
        assert printed > 0

    def test_season_override_warning_for_full_year(self, bundle_path, tmp_path, capsys):
        out = tmp_path / "year.csv"
        code = main(
            [
                "generate", "--bundle", str(bundle_path), "--residential", "1",
                "--resolution", "1/wk", "--length", "1yr", "--season", "summer",
                "--output", str(out),
            ]
        )
        assert code == 0
        err = capsys.readouterr().err
        assert "overridden" in err
        _, series = read_series_csv(out)
        assert series.shape == (1, 52)

    def test_resolution_too_fine_exits_2(self, bundle_path):
        code = main(
            [
                "generate", "--bundle", str(bundle_path), "--residential", "1",
                "--resolution", "60/s", "--length", "60s", "--output", "x.csv",
            ]
        )
        assert code == 2

    def test_explicit_season_too_long_exits_2(self, bundle_path):
        code = main(
            [
                "generate", "--bundle", str(bundle_path), "--residential", "1",
                "--resolution", "1/wk", "--length", "20wk", "--season", "winter",
                "--output", "x.csv",
            ]
        )
        assert code == 2

    def test_missing_bundle_exits_3(self, tmp_path, monkeypatch):
        monkeypatch.delenv("LOADSYNTH_BUNDLE", raising=False)
        code = main(
            [
                "generate", "--bundle", str(tmp_path / "nope.lsb"), "--residential", "1",
                "--resolution", "1/h", "--length", "1d", "--output", str(tmp_path / "x.csv"),
            ]
        )
        assert code == 3

    def test_no_bundle_flag_uses_env(self, bundle_path, tmp_path, monkeypatch):
        monkeypatch.setenv("LOADSYNTH_BUNDLE", str(bundle_path))
        out = tmp_path / "env.csv"
        code = main(
            [
                "generate", "--residential", "1", "--resolution", "1/h",
                "--length", "1d", "--output", str(out),
            ]
        )
        assert code == 0
        assert out.exists()

    def test_csv_round_trip_at_printed_precision(self, bundle_path, tmp_path, tiny_models):
        from loadsynth.compose import synthesize

        out = tmp_path / "rt.csv"
        main(
            [
                "generate", "--bundle", str(bundle_path), "--residential", "2",
                "--industrial", "1", "--resolution", "1/h", "--length", "2d",
                "--seed", "11", "--base-mw", "42.5", "--output", str(out),
            ]
        )
        req = GenerationRequest(
            2, 1, parse_resolution("1/h"), 2 * 86_400.0, seed=11, base_mw=42.5
        )
        _, want = synthesize(req, tiny_models)
        _, got = read_series_csv(out)
        np.testing.assert_allclose(got, want, rtol=5e-6)

    def test_config_file_supplies_flags_and_cli_overrides(self, bundle_path, tmp_path):
        config = tmp_path / "gen.json"
        config.write_text(
            json.dumps(
                {
                    "bundle": str(bundle_path),
                    "residential": 2,
                    "resolution": "1/h",
                    "length": "1d",
                    "output": str(tmp_path / "from_config.csv"),
                }
            )
        )
        code = main(["generate", "--config", str(config)])
        assert code == 0
        _, series = read_series_csv(tmp_path / "from_config.csv")
        assert series.shape == (2, 24)

        code = main(
            ["generate", "--config", str(config), "--output", str(tmp_path / "override.csv"),
             "--residential", "1"]
        )
        assert code == 0
        _, series = read_series_csv(tmp_path / "override.csv")
        assert series.shape == (1, 24)

    def test_unknown_config_key_exits_2(self, bundle_path, tmp_path):
        config = tmp_path / "bad.json"
        config.write_text(json.dumps({"no_such_flag": 1}))
        code = main(["generate", "--config", str(config), "--resolution", "1/h",
                     "--length", "1d", "--residential", "1"])
        assert code == 2


class TestTrainCli:
    def test_mini_train_and_generate(self, tmp_path):
        bundle = tmp_path / "mini.lsb"
        code = main(
            [
                "train", "--toy-seed", "5", "--toy-loads", "2", "--toy-years", "2",
                "--l1-windows", "24", "--l2-profiles", "40", "--l1-epochs", "1",
                "--l2-epochs", "1", "--l3-epochs", "1", "--batch-size", "8",
                "--seed", "77", "--output", str(bundle),
            ]
        )
        assert code == 0
        assert bundle.exists()
        assert (tmp_path / "mini.lsb.train_log.json").exists()
        loaded = ModelBundle.load(bundle)
        assert loaded.provenance["seeds"] == {"l1": 77, "l2": 78, "l3": 79, "l4": 80}
        out = tmp_path / "gen.csv"
        code = main(
            [
                "generate", "--bundle", str(bundle), "--industrial", "1",
                "--resolution", "1/h", "--length", "1d", "--output", str(out),
            ]
        )
        assert code == 0

    def test_missing_data_dir_exits_3(self, tmp_path):
        code = main(
            ["train", "--data", str(tmp_path / "nodata"), "--output", str(tmp_path / "b.lsb")]
        )
        assert code == 3


class TestOtherSubcommands:
    def test_simulate_block_means(self, tmp_path):
        out = tmp_path / "sim.csv"
        code = main(
            [
                "simulate", "--load-class", "industrial", "--duration", "2h",
                "--seed", "9", "--block-s", "30", "--output", str(out),
            ]
        )
        assert code == 0
        _, series = read_series_csv(out)
        assert series.shape == (1, 240)

    def test_simulate_full_rate(self, tmp_path):
        out = tmp_path / "sim30.csv"
        code = main(
            ["simulate", "--duration", "60s", "--seed", "1", "--output", str(out)]
        )
        assert code == 0
        _, series = read_series_csv(out)
        assert series.shape == (1, 1800)

    def test_ingest_series_round_trip(self, tmp_path):
        from loadsynth.toydata import ToyLoadConfig, simulate_ground_truth

        cfg = ToyLoadConfig.residential(seed=3, base_mw=25.0)
        series = simulate_ground_truth(cfg, 2 * 3600.0)
        src = tmp_path / "series.csv"
        write_series_csv(src, np.arange(series.size) / 30.0, series[None, :])
        out_dir = tmp_path / "datasets"
        code = main(
            [
                "ingest", "--series", str(src), "--load-class", "residential",
                "--output-dir", str(out_dir),
            ]
        )
        assert code == 0
        assert (out_dir / "level1.csv").exists()
        assert (out_dir / "level_meta.json").exists()

    def test_validate_reports(self, bundle_path, tiny_datasets, tmp_path):
        data_dir = tmp_path / "data"
        write_level_datasets(tiny_datasets, data_dir)
        out_dir = tmp_path / "reports"
        code = main(
            [
                "validate", "--bundle", str(bundle_path), "--data", str(data_dir),
                "--output-dir", str(out_dir), "--seed", "3",
            ]
        )
        assert code == 0
        assert (out_dir / "metrics.csv").exists()
        assert (out_dir / "summary.txt").exists()
        assert (out_dir / "psd_l1_real.csv").exists()
        text = (out_dir / "summary.txt").read_text()
        assert "amplitude distance" in text
