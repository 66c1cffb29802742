"""Job layer: artifact writing, quintile studies, reports, tables."""

from __future__ import annotations

import json
from datetime import date as Date

import pytest

from betablend.backtester import BacktestConfig
from betablend.exceptions import ConfigError, EngineError
from betablend.runner import (
    load_market_data,
    parse_date,
    quintile_schedules,
    report_table,
    resolve_data_path,
    run_backtest_job,
    run_features_job,
    run_quintiles_job,
    run_report_job,
    run_synth_job,
    spearman_correlation,
    write_json,
)
from betablend.synth import SynthConfig, write_fixture

PANEL = SynthConfig(
    n_symbols=15, n_days=189, start=Date(2021, 1, 1), seed=7,
    market_vol=0.006, market_drift=0.0003, idio_vol=0.009,
    drift_scale=0.004, persistence=0.9,
)


@pytest.fixture(scope="module")
def panel_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("runner_panel") / "data.csv"
    write_fixture(PANEL, path)
    return path


def panel_config(panel_csv, **overrides):
    base = dict(
        data_path=str(panel_csv),
        benchmark="BENCH",
        strategy="combo",
        low_beta_count=5,
        n_rounds=10,
    )
    base.update(overrides)
    return BacktestConfig(**base)


class TestSmallHelpers:
    def test_parse_date(self):
        assert parse_date("2021-03-01") == Date(2021, 3, 1)
        with pytest.raises(ConfigError):
            parse_date("03/01/2021")

    def test_write_json_sorted_with_newline(self, tmp_path):
        path = tmp_path / "x.json"
        write_json(path, {"b": 1, "a": 2})
        text = path.read_text()
        assert text.index('"a"') < text.index('"b"')
        assert text.endswith("\n")

    def test_resolve_data_path_relative(self):
        config = BacktestConfig(data_path="data.csv")
        resolved = resolve_data_path(config, "/some/dir")
        assert resolved.data_path == "/some/dir/data.csv"

    def test_resolve_data_path_absolute_untouched(self):
        config = BacktestConfig(data_path="/abs/data.csv")
        assert resolve_data_path(config, "/some/dir").data_path == "/abs/data.csv"


class TestSpearman:
    def test_perfect_orderings(self):
        assert spearman_correlation([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0)
        assert spearman_correlation([1, 2, 3], [5, 0, -5]) == pytest.approx(-1.0)

    def test_known_value(self):
        # d^2 sums to 4 over n=5: rho = 1 - 6*4/(5*24) = 0.8
        assert spearman_correlation(
            [1, 2, 3, 4, 5], [2, 1, 4, 3, 5]
        ) == pytest.approx(0.8, abs=1e-12)

    def test_ties_get_average_ranks(self):
        rho = spearman_correlation([1, 2, 2, 4], [1, 3, 3, 7])
        assert rho == pytest.approx(1.0)

    def test_constant_input_rejected(self):
        with pytest.raises(EngineError):
            spearman_correlation([1, 1, 1], [1, 2, 3])

    def test_length_mismatch_rejected(self):
        with pytest.raises(EngineError):
            spearman_correlation([1, 2], [1, 2, 3])


class TestBacktestJob:
    def test_artifacts_and_payload(self, panel_csv, tmp_path):
        config = panel_config(panel_csv)
        payload = run_backtest_job(config, tmp_path / "out")
        for name in ("equity_curve.csv", "trades.csv", "positions.csv", "report.json"):
            assert (tmp_path / "out" / name).exists()
        assert payload["config"]["strategy"] == "combo"
        assert payload["window"]["n_rebalances"] >= 3
        assert payload["metrics"]["n_days"] == payload["window"]["n_days"]
        on_disk = json.loads((tmp_path / "out" / "report.json").read_text())
        assert on_disk == payload

    def test_dump_models(self, panel_csv, tmp_path):
        config = panel_config(panel_csv, strategy="momentum")
        run_backtest_job(config, tmp_path / "out", dump_models=True)
        models = json.loads((tmp_path / "out" / "models.json").read_text())
        assert len(models) >= 3
        for entry in models:
            assert set(entry) == {"date", "model"}
            assert entry["model"]["version"] == 1
            assert entry["model"]["stumps"]

    def test_repeat_runs_byte_identical(self, panel_csv, tmp_path):
        config = panel_config(panel_csv)
        run_backtest_job(config, tmp_path / "a")
        run_backtest_job(config, tmp_path / "b")
        for name in ("equity_curve.csv", "trades.csv", "positions.csv", "report.json"):
            assert (tmp_path / "a" / name).read_bytes() == (
                tmp_path / "b" / name
            ).read_bytes()


class TestQuintilesJob:
    def test_summary_and_files(self, panel_csv, tmp_path):
        config = panel_config(panel_csv)
        summary = run_quintiles_job(config, tmp_path / "q")
        for k in range(1, 6):
            assert (tmp_path / "q" / f"quintile_{k}.csv").exists()
        assert set(summary["quintiles"]) == {"1", "2", "3", "4", "5"}
        assert -1.0 <= summary["spearman"] <= 1.0
        assert summary["monotone"] == (summary["spearman"] <= -0.8)
        assert (tmp_path / "q" / "quintiles.json").exists()

    def test_five_symbol_universe_single_member_quintiles(self, tmp_path):
        tiny = SynthConfig(
            n_symbols=5, n_days=168, start=Date(2021, 1, 1), seed=3,
            persistence=0.8,
        )
        path = tmp_path / "tiny.csv"
        write_fixture(tiny, path)
        config = BacktestConfig(
            data_path=str(path), benchmark="BENCH", strategy="momentum", n_rounds=5
        )
        data = load_market_data(config)
        _, schedules = quintile_schedules(config, data)
        for k in range(1, 6):
            for target in schedules[k].values():
                if target.weights:
                    assert len(target.weights) == 1
                    assert list(target.weights.values()) == [1.0]


class TestFeaturesJob:
    def test_snapshot_written(self, panel_csv, tmp_path):
        config = panel_config(panel_csv)
        result = run_features_job(config, tmp_path / "f")
        assert result["n_symbols"] == 15
        lines = (tmp_path / "f" / "features.csv").read_text().splitlines()
        assert len(lines) == 16

    def test_non_trading_date_snaps_back(self, panel_csv, tmp_path):
        config = panel_config(panel_csv)
        result = run_features_job(
            config, tmp_path / "f", as_of=Date(2021, 8, 1)
        )  # a Sunday
        assert result["as_of"] == "2021-07-30"

    def test_date_before_data_rejected(self, panel_csv, tmp_path):
        config = panel_config(panel_csv)
        with pytest.raises(EngineError):
            run_features_job(config, tmp_path / "f", as_of=Date(2019, 1, 1))


class TestSynthJob:
    def test_writes_file_and_summary(self, tmp_path):
        out = tmp_path / "nested" / "data.csv"
        summary = run_synth_job(SynthConfig(n_symbols=4, n_days=30, seed=1), out)
        assert out.exists()
        assert summary["n_symbols"] == 4
        assert summary["benchmark"] == "BENCH"


class TestReportJob:
    def test_recomputed_metrics_match_run(self, panel_csv, tmp_path):
        config = panel_config(panel_csv)
        payload = run_backtest_job(config, tmp_path / "out")
        recomputed = run_report_job(
            tmp_path / "out" / "equity_curve.csv", config,
            out_path=tmp_path / "report2.json",
        )
        for key in ("total_return", "sharpe", "beta", "max_drawdown"):
            assert recomputed["metrics"][key] == pytest.approx(
                payload["metrics"][key], abs=1e-6
            )
        assert (tmp_path / "report2.json").exists()


class TestReportTable:
    def payload(self, strategy="combo", leverage=1.0, metrics="ok"):
        metric_block = None
        if metrics == "ok":
            metric_block = {
                "total_return": 0.25, "annualized_return": 0.12,
                "sharpe": 1.10, "sharpe_reason": None, "beta": 0.05,
                "max_drawdown": 0.08, "annual_volatility": 0.11,
                "risk_free_rate": 0.0, "n_days": 500,
                "start": "2021-01-04", "end": "2022-12-30",
            }
        return {
            "metrics": metric_block,
            "config": {"strategy": strategy, "leverage": leverage},
            "window": {},
        }

    def test_grid_layout(self):
        table = report_table([self.payload(), self.payload("mvp", 2.0)])
        lines = table.splitlines()
        assert lines[0].split() == [
            "strategy", "ret%", "ann%", "sharpe", "beta", "maxdd%", "vol%",
        ]
        assert lines[2].startswith("combo")
        assert "25.0" in lines[2]
        assert lines[3].startswith("mvp x2")

    def test_wiped_out_row(self):
        table = report_table([self.payload(metrics=None)])
        assert "n/a" in table.splitlines()[-1]
