import math

import pytest

from lmlce.cli import (
    CSV_HEADER,
    TEMPLATE,
    CliError,
    csv_text,
    emit_csv,
    emit_plot,
    figure_specs,
    format_float,
    main,
    parse_and_validate,
    read_csv,
    rows_to_csv,
)
from lmlce.harness import FrameErrors, RunResult, ScenarioConfig, SweepSpec, run_sweep


def small_result(estimators=("mmse", "lml-patdg"), xs=(0.0, 10.0, 20.0)):
    res = RunResult("S1", "snr", "nmse", 7, tuple(estimators))
    for i, est in enumerate(estimators):
        for j, x in enumerate(xs):
            res.stats(est, x).add(FrameErrors(0.1 * (i + 1) / (j + 1), 1.0, 1, 10))
            res.stats(est, x).add(FrameErrors(0.2 * (i + 1) / (j + 1), 1.5, 0, 10))
    return res


class TestParse:
    def test_happy_path(self, tmp_path):
        out = tmp_path / "s1.csv"
        conf = parse_and_validate(["run", "--scenario", "s1", "--estimators", "mmse,lml-patdg", "--snr", "-10:30:5",
                                   "--runs", "2000", "--seed", "7", "--out", str(out)])
        spec = conf.specs[0]
        assert spec.scenario.id == "S1"
        assert spec.estimators == ("mmse", "lml-patdg")
        assert spec.grid == tuple(float(x) for x in range(-10, 31, 5))
        assert (spec.runs, spec.seed, conf.out) == (2000, 7, str(out))

    def test_divisibility_rejected(self):
        with pytest.raises(CliError, match="not divisible by pilot_interval=3") as exc:
            parse_and_validate(["run", "--pilot-interval", "3", "--subcarriers", "410"])
        assert exc.value.field == "pilot_interval"

    def test_stdout_default(self):
        assert parse_and_validate(["run"]).out == "-"

    def test_unwritable_output(self, tmp_path):
        with pytest.raises(CliError) as exc:
            parse_and_validate(["run", "--out", str(tmp_path / "missing" / "x.csv")])
        assert exc.value.field == "out"

    def test_unknown_flag(self):
        with pytest.raises(CliError):
            parse_and_validate(["run", "--frobnicate"])

    def test_unknown_estimator(self):
        with pytest.raises(CliError) as exc:
            parse_and_validate(["run", "--estimators", "mmse,dnn"])
        assert exc.value.field == "estimators"

    def test_sto_beyond_cp(self):
        with pytest.raises(CliError) as exc:
            parse_and_validate(["run", "--scenario", "s2", "--theta-min", "-100"])
        assert exc.value.field == "theta_min"

    def test_config_file_and_override(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text(TEMPLATE.replace("runs = 2000", "runs = 12").replace("scenario = s1", "scenario = s3"))
        conf = parse_and_validate(["run", "--config", str(cfg), "--runs", "5"])
        assert conf.specs[0].runs == 5
        assert conf.specs[0].scenario.id == "S3"

    def test_config_bad_key(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[harness]\nrunz = 3\n")
        with pytest.raises(CliError) as exc:
            parse_and_validate(["run", "--config", str(cfg)])
        assert exc.value.field == "runz"

    def test_config_bad_value(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[ofdm]\ntaps = two\n")
        with pytest.raises(CliError) as exc:
            parse_and_validate(["run", "--config", str(cfg)])
        assert exc.value.field == "taps"

    def test_grid_forms(self):
        assert parse_and_validate(["run", "--ebn0", "0,10,5"]).specs[0].grid == (0.0, 5.0, 10.0)
        with pytest.raises(CliError):
            parse_and_validate(["run", "--snr", "10:0:5"])


class TestCsv:
    def test_zero_value_format(self):
        assert format_float(0.0) == "0.00000000e0"
        assert format_float(1.25e-3) == "1.25000000e-3"
        assert format_float(123456789.0) == "1.23456789e8"

    def test_row_order_and_count(self):
        text = csv_text(small_result())
        lines = text.splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        keys = [tuple(line.split(",")[1:4:2]) for line in lines[1:]]
        assert keys == [("mmse", "0"), ("mmse", "10"), ("mmse", "20"),
                        ("lml-patdg", "0"), ("lml-patdg", "10"), ("lml-patdg", "20")]

    def test_single_zero_point(self):
        res = RunResult("S1", "snr", "nmse", 0, ("genie",))
        res.stats("genie", 10).add(FrameErrors(0.0, 2.0, 0, 4))
        assert csv_text(res).splitlines()[1] == "S1,genie,snr,10,nmse,0.00000000e0,nan,1,0"

    def test_round_trip(self, tmp_path):
        res = small_result()
        path = tmp_path / "r.csv"
        text = emit_csv(res, path)
        rows = read_csv(path)
        assert rows_to_csv(rows) == text
        for row, orig in zip(rows, res.rows()):
            assert row["value"] == pytest.approx(orig["value"], rel=1e-8)
            assert (row["runs"], row["seed"], row["estimator"]) == (orig["runs"], orig["seed"], orig["estimator"])

    def test_stdout(self, capsys):
        emit_csv(small_result(), None)
        assert capsys.readouterr().out.startswith("scenario,")

    def test_same_seed_same_bytes(self):
        spec = SweepSpec(ScenarioConfig.s1(), ("mmse", "lml-patdg"), "nmse", "snr", (0, 10), runs=3, seed=11)
        assert csv_text(run_sweep(spec)) == csv_text(run_sweep(spec))

    def test_malformed(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            read_csv(bad)


class TestPlot:
    def _fig_csv(self, tmp_path, figure, estimators, x_axis="snr", metric="nmse"):
        res = RunResult("S1", x_axis, metric, 0, tuple(estimators))
        for x in (0.0, 10.0, 20.0):
            for est in estimators:
                res.stats(est, x).add(FrameErrors(0.5 / (x + 1), 1.0, 1, 100))
        path = tmp_path / f"fig{figure}.csv"
        emit_csv(res, path)
        return path

    def test_nmse_preset_series(self, tmp_path):
        ests = figure_specs(4, runs=1)[0].estimators
        path = self._fig_csv(tmp_path, 4, ests + ("genie",))
        out = tmp_path / "fig4.svg"
        labels = emit_plot(path, 4, out)
        assert labels == ["MMSE", "LS", "LML-PATDG", "LML-DDTDG"]
        assert out.read_text().lstrip().startswith("<?xml")

    def test_dataset_preset_axis(self, tmp_path):
        path = self._fig_csv(tmp_path, 5, ("lml-patdg", "lml-true", "mmse"), x_axis="dataset")
        out = tmp_path / "fig5.svg"
        emit_plot(path, 5, out)
        assert "Size of dataset" in out.read_text()
        assert figure_specs(5, runs=1)[0].x_axis == "dataset"

    def test_empty_series_error(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text(",".join(CSV_HEADER) + "\n")
        out = tmp_path / "empty.svg"
        with pytest.raises(ValueError):
            emit_plot(path, None, out)
        assert not out.exists()

    def test_missing_preset_series(self, tmp_path):
        path = self._fig_csv(tmp_path, 4, ("mmse",))
        with pytest.raises(ValueError, match="absent"):
            emit_plot(path, 4, tmp_path / "x.svg")

    def test_plot_is_pure_function_of_csv(self, tmp_path):
        path = self._fig_csv(tmp_path, 4, ("mmse", "ls", "lml-patdg", "lml-ddtdg"))
        emit_plot(path, 4, tmp_path / "a.svg")
        emit_plot(path, 4, tmp_path / "b.svg")
        assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


class TestMain:
    def test_exit_codes(self, tmp_path, capsys):
        assert main(["run", "--subcarriers", "410"]) == 2
        bad = tmp_path / "bad.csv"
        bad.write_text("nonsense\n")
        assert main(["plot", str(bad), "--out", str(tmp_path / "p.svg")]) == 3
        assert main(["config-template"]) == 0
        assert "[harness]" in capsys.readouterr().out

    def test_run_writes_csv(self, tmp_path):
        out = tmp_path / "o.csv"
        assert main(["run", "--estimators", "mmse,ls", "--snr", "-10:0:10", "--runs", "2", "--out", str(out)]) == 0
        rows = read_csv(out)
        assert [(r["estimator"], r["x_db"]) for r in rows] == [("mmse", -10), ("mmse", 0), ("ls", -10), ("ls", 0)]
        assert all(math.isfinite(r["value"]) for r in rows)

    def test_reproduce_with_plot(self, tmp_path):
        out, svg = tmp_path / "f7.csv", tmp_path / "f7.svg"
        assert main(["reproduce", "--figure", "7", "--runs", "1", "--out", str(out), "--plot", str(svg)]) == 0
        scenarios = {r["scenario"] for r in read_csv(out)}
        assert len(scenarios) == 2
        assert svg.exists()

    def test_unknown_figure(self):
        assert main(["reproduce", "--figure", "3"]) == 2
