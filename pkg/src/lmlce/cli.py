"""Command-line front end: sweeps, figure presets, CSV and SVG output.

Exit codes: 0 success, 2 invalid configuration, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import logging
import math
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .harness import (
    ESTIMATORS,
    METRICS,
    WORKERS_ENV,
    RunResult,
    ScenarioConfig,
    SweepSpec,
    offline_models,
    run_sweep,
)
from .ofdm import ConfigError, OfdmConfig

log = logging.getLogger("lmlce")

CSV_HEADER = ("scenario", "estimator", "x_axis", "x_db", "metric", "value", "stderr", "runs", "seed")
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

LABELS = {
    "genie": "Genie",
    "ls": "LS",
    "linear": "Linear interp.",
    "mmse": "MMSE",
    "ammse": "AMMSE",
    "du-mmse": "DU-MMSE",
    "da-lmmse": "DA-LMMSE",
    "lml-patdg": "LML-PATDG",
    "lml-ddtdg": "LML-DDTDG",
    "lml-true": "LML (true labels)",
    "celm-patdg": "C-ELM (online)",
    "lml-offline": "LML (offline)",
    "celm-offline": "C-ELM (offline)",
}
AXIS_LABELS = {"snr": "SNR (dB)", "ebn0": "Eb/N0 (dB)", "dataset": "Size of dataset"}


class CliError(Exception):
    """Invalid configuration; ``field`` names the offending setting."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


# figure presets -----------------------------------------------------------------------

EBN0_GRID = tuple(range(0, 31, 5))


def figure_specs(figure: int, runs: int = 2000, seed: int = 0, profile: str = "pedestrian_b") -> list[SweepSpec]:
    """Sweeps behind each reproduced figure (4 to 9)."""
    common = dict(runs=runs, seed=seed)
    if figure == 4:
        return [SweepSpec(ScenarioConfig.s1(profile), ("mmse", "ls", "lml-patdg", "lml-ddtdg"), "nmse", "snr",
                          tuple(range(-10, 31, 5)), **common)]
    if figure == 5:
        return [SweepSpec(ScenarioConfig.s1(profile), ("lml-patdg", "lml-true", "mmse"), "nmse", "dataset",
                          (40, 80, 160, 280, 406, 812), fixed_snr_db=-10.0, **common)]
    if figure == 6:
        return [SweepSpec(ScenarioConfig.s2(th, 0.0, profile), ("linear", "lml-patdg", "ammse"), "ber", "ebn0",
                          EBN0_GRID, **common) for th in (-20, -40)]
    if figure == 7:
        return [SweepSpec(ScenarioConfig.s2(0, eps, profile), ("lml-patdg", "ammse"), "ber", "ebn0", EBN0_GRID,
                          **common) for eps in (0.01, 0.05)]
    if figure == 8:
        return [SweepSpec(ScenarioConfig.s3(profile=profile), ("du-mmse", "da-lmmse", "lml-patdg", "celm-patdg"),
                          "ber", "ebn0", EBN0_GRID, **common)]
    if figure == 9:
        return [SweepSpec(ScenarioConfig.changing(profile), ("lml-patdg", "celm-offline", "lml-offline"), "ber",
                          "ebn0", EBN0_GRID, **common)]
    raise CliError("figure", f"no preset for figure {figure}; choose 4-9")


def run_specs(specs: list[SweepSpec], workers: int | None = None) -> list[RunResult]:
    results = []
    for spec in specs:
        offline = offline_models(spec) if spec.scenario.id == "CHANGING" else None
        results.append(run_sweep(spec, offline=offline, workers=workers))
    return results


# CSV ----------------------------------------------------------------------------------


def format_float(v: float) -> str:
    """Scientific notation with 9 significant digits and a bare exponent (``1.25000000e-3``)."""
    if math.isnan(v):
        return "nan"
    mant, exp = f"{v:.8e}".split("e")
    return f"{mant}e{int(exp)}"


def format_x(x: float) -> str:
    return f"{x:g}"


def csv_text(results) -> str:
    if isinstance(results, RunResult):
        results = [results]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    n = 0
    for res in results:
        for row in res.rows():
            writer.writerow([row["scenario"], row["estimator"], row["x_axis"], format_x(row["x_db"]), row["metric"],
                             format_float(row["value"]), format_float(row["stderr"]), row["runs"], row["seed"]])
            n += 1
    if not n:
        raise ValueError("no results to write")
    return buf.getvalue()


def emit_csv(results, path=None) -> str:
    """Write the result table to ``path`` (stdout when ``None`` or ``-``); return the text."""
    text = csv_text(results)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
    return text


def read_csv(path_or_text) -> list[dict]:
    """Parse an emitted CSV back into typed rows."""
    text = path_or_text
    if isinstance(path_or_text, Path) or (isinstance(path_or_text, str) and "\n" not in path_or_text):
        text = Path(path_or_text).read_text()
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader, ()))
    if header != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {header}")
    rows = []
    for lineno, rec in enumerate(reader, 2):
        if len(rec) != len(CSV_HEADER):
            raise ValueError(f"line {lineno}: expected {len(CSV_HEADER)} fields, got {len(rec)}")
        try:
            rows.append({
                "scenario": rec[0],
                "estimator": rec[1],
                "x_axis": rec[2],
                "x_db": float(rec[3]),
                "metric": rec[4],
                "value": float(rec[5]),
                "stderr": float(rec[6]),
                "runs": int(rec[7]),
                "seed": int(rec[8]),
            })
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([r["scenario"], r["estimator"], r["x_axis"], format_x(r["x_db"]), r["metric"],
                         format_float(r["value"]), format_float(r["stderr"]), r["runs"], r["seed"]])
    return buf.getvalue()


def series_from_rows(rows: list[dict]) -> dict:
    """``{(scenario, estimator): [(x, value), ...]}`` in file order."""
    series: dict = {}
    for r in rows:
        series.setdefault((r["scenario"], r["estimator"]), []).append((r["x_db"], r["value"]))
    return series


# plotting -----------------------------------------------------------------------------


def emit_plot(csv_path, figure: int | None, out_path) -> list[str]:
    """Render a CSV as a log-scale SVG, one line per (scenario, estimator).

    With ``figure`` set, only that preset's estimators are drawn and each of
    them must be present. Returns the legend labels.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = read_csv(csv_path)
    if not rows:
        raise ValueError(f"{csv_path}: no data rows")
    series = series_from_rows(rows)
    if figure is not None:
        wanted = [e for spec in figure_specs(figure, runs=1) for e in spec.estimators]
        missing = sorted(set(wanted) - {e for _, e in series})
        if missing:
            raise ValueError(f"figure {figure} needs series {missing} that are absent from {csv_path}")
        series = {k: v for k, v in series.items() if k[1] in wanted}
    multi = len({s for s, _ in series}) > 1
    plt.rcParams["svg.hashsalt"] = "lmlce"
    plt.rcParams["svg.fonttype"] = "none"
    fig, ax = plt.subplots(figsize=(6, 4.5))
    labels = []
    for (scen, est), pts in series.items():
        pts = [(x, y) for x, y in sorted(pts) if y > 0 and math.isfinite(y)]
        if not pts:
            raise ValueError(f"series {scen}/{est} has no positive values to draw on a log scale")
        label = LABELS.get(est, est) + (f" [{scen}]" if multi else "")
        xs, ys = zip(*pts)
        ax.semilogy(xs, ys, marker="o", label=label)
        labels.append(label)
    ax.set_xlabel(AXIS_LABELS.get(rows[0]["x_axis"], rows[0]["x_axis"]))
    ax.set_ylabel(rows[0]["metric"].upper())
    if figure is not None:
        ax.set_title(f"Figure {figure}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return labels


# configuration ------------------------------------------------------------------------

TEMPLATE = """\
# lmlce configuration; command-line flags override these values.

[harness]
scenario = s1
# s2 only
theta_min = 0
epsilon_max = 0.0
# s3 only
clip_ratio = 1.0
estimators = mmse,ls,lml-patdg,lml-ddtdg
metric = nmse
# snr, ebn0 or dataset
x_axis = snr
# start:stop:step (inclusive) or a comma list
grid = -10:30:5
# SNR used when x_axis = dataset
fixed_snr = -10
runs = 2000
seed = 0

[channel]
profile = pedestrian_b

[ofdm]
subcarriers = 409
pilot_interval = 3
taps = 2
n_block_pilot = 1
n_data = 9

[output]
out = -
plot =
"""

_FIELDS = {
    "scenario": ("harness", str),
    "theta_min": ("harness", int),
    "epsilon_max": ("harness", float),
    "clip_ratio": ("harness", float),
    "estimators": ("harness", str),
    "metric": ("harness", str),
    "x_axis": ("harness", str),
    "grid": ("harness", str),
    "fixed_snr": ("harness", float),
    "runs": ("harness", int),
    "seed": ("harness", int),
    "profile": ("channel", str),
    "subcarriers": ("ofdm", int),
    "pilot_interval": ("ofdm", int),
    "taps": ("ofdm", int),
    "n_block_pilot": ("ofdm", int),
    "n_data": ("ofdm", int),
    "out": ("output", str),
    "plot": ("output", str),
}
_DEFAULTS = {
    "scenario": "s1",
    "theta_min": 0,
    "epsilon_max": 0.0,
    "clip_ratio": 1.0,
    "estimators": "mmse,ls,lml-patdg,lml-ddtdg",
    "metric": "nmse",
    "x_axis": "snr",
    "grid": "-10:30:5",
    "fixed_snr": -10.0,
    "runs": 2000,
    "seed": 0,
    "profile": "pedestrian_b",
    "subcarriers": 409,
    "pilot_interval": 3,
    "taps": 2,
    "n_block_pilot": 1,
    "n_data": 9,
    "out": "-",
    "plot": "",
}


@dataclass
class CliConfig:
    """Validated command line."""

    command: str
    specs: list = field(default_factory=list)
    out: str = "-"
    plot: str | None = None
    figure: int | None = None
    workers: int | None = None
    csv_in: str | None = None
    settings: dict = field(default_factory=dict)


def parse_grid(text: str, name: str = "grid") -> tuple:
    """``start:stop:step`` (stop inclusive) or ``a,b,c``."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, stop, step = parts
            if step <= 0 or stop < start:
                raise CliError(name, f"need step > 0 and stop >= start, got {text!r}")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(round(start + i * step, 10) for i in range(n))
        values = tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise CliError(name, f"cannot parse {text!r}; use start:stop:step or a comma list") from None
    if not values:
        raise CliError(name, "grid is empty")
    return tuple(sorted(values))


_NEG_VALUE = re.compile(r"^-[\d.]")
_VALUE_OPTIONS = {"--snr", "--ebn0", "--dataset", "--grid", "--theta-min", "--fixed-snr", "--seed"}


def _join_negative_values(argv):
    """Let grid options take values such as ``-10:30:5``."""
    out = []
    it = iter(argv)
    for tok in it:
        if tok in _VALUE_OPTIONS:
            nxt = next(it, None)
            if nxt is not None and _NEG_VALUE.match(nxt):
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
            continue
        out.append(tok)
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("argv", message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lmlce", description="OFDM channel-estimation simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one sweep")
    run.add_argument("--config", help="INI file; flags override its values")
    run.add_argument("--scenario")
    run.add_argument("--theta-min", type=int, dest="theta_min")
    run.add_argument("--epsilon-max", type=float, dest="epsilon_max")
    run.add_argument("--clip-ratio", type=float, dest="clip_ratio")
    run.add_argument("--estimators", help=f"comma list from: {','.join(ESTIMATORS)}")
    run.add_argument("--metric", choices=METRICS)
    axis = run.add_mutually_exclusive_group()
    axis.add_argument("--snr", help="SNR grid in dB")
    axis.add_argument("--ebn0", help="Eb/N0 grid in dB")
    axis.add_argument("--dataset", help="training-set sizes")
    run.add_argument("--fixed-snr", type=float, dest="fixed_snr", help="SNR for --dataset sweeps")
    run.add_argument("--runs", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--profile")
    run.add_argument("--subcarriers", type=int)
    run.add_argument("--pilot-interval", type=int, dest="pilot_interval")
    run.add_argument("--taps", type=int)
    run.add_argument("--n-block-pilot", type=int, dest="n_block_pilot")
    run.add_argument("--n-data", type=int, dest="n_data")
    run.add_argument("--out")
    run.add_argument("--plot", help="also write an SVG plot here")
    run.add_argument("--workers", type=int, help=f"worker processes (default ${WORKERS_ENV} or 1)")

    rep = sub.add_parser("reproduce", help="run a figure preset")
    rep.add_argument("--figure", type=int, required=True)
    rep.add_argument("--runs", type=int, default=2000)
    rep.add_argument("--seed", type=int, default=0)
    rep.add_argument("--profile", default="pedestrian_b")
    rep.add_argument("--out", default="-")
    rep.add_argument("--plot")
    rep.add_argument("--workers", type=int)

    sub.add_parser("config-template", help="print a commented configuration file")

    plot = sub.add_parser("plot", help="render an emitted CSV as SVG")
    plot.add_argument("csv")
    plot.add_argument("--figure", type=int)
    plot.add_argument("--out", required=True)
    return p


def _check_writable(path: str, name: str) -> None:
    if path in ("-", "", None):
        return
    target = Path(path)
    parent = target.parent if str(target.parent) else Path(".")
    if target.is_dir():
        raise CliError(name, f"{path} is a directory")
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise CliError(name, f"cannot write to {path}")


def _load_config_file(path: str) -> dict:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise CliError("config", f"cannot read {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise CliError("config", str(exc).splitlines()[0]) from None
    values = {}
    known_sections = {s for s, _ in _FIELDS.values()}
    for section in cp.sections():
        if section not in known_sections:
            raise CliError("config", f"unknown section [{section}]")
        for key, raw in cp.items(section):
            if key not in _FIELDS or _FIELDS[key][0] != section:
                raise CliError(key, f"unknown key in [{section}]")
            conv = _FIELDS[key][1]
            try:
                values[key] = conv(raw) if raw.strip() or conv is str else None
            except ValueError:
                raise CliError(key, f"expected {conv.__name__}, got {raw!r}") from None
    return values


def _build_run(ns) -> CliConfig:
    settings = dict(_DEFAULTS)
    if ns.config:
        settings.update({k: v for k, v in _load_config_file(ns.config).items() if v is not None})
    for key in _FIELDS:
        val = getattr(ns, key, None)
        if val is not None:
            settings[key] = val
    for axis_name in ("snr", "ebn0", "dataset"):
        val = getattr(ns, axis_name)
        if val is not None:
            settings["x_axis"], settings["grid"] = axis_name, val

    if settings["runs"] < 1:
        raise CliError("runs", "must be >= 1")
    try:
        cfg = OfdmConfig(k_used=settings["subcarriers"], pilot_interval=settings["pilot_interval"],
                         taps=settings["taps"], n_block_pilot=settings["n_block_pilot"], n_data=settings["n_data"])
    except ConfigError as exc:
        name = {"k_used": "subcarriers"}.get(exc.field, exc.field)
        raise CliError(name, str(exc).split(": ", 1)[1]) from None

    from .channel import load_profile

    try:
        profile = load_profile(settings["profile"])
    except ValueError as exc:
        raise CliError("profile", str(exc)) from None
    if profile.max_delay_samples(cfg.sample_rate) >= cfg.cp_len:
        raise CliError("profile", "channel spans the whole cyclic prefix")

    scen_id = settings["scenario"].upper()
    try:
        if scen_id == "S1":
            scenario = ScenarioConfig.s1(settings["profile"])
        elif scen_id == "S2":
            scenario = ScenarioConfig.s2(settings["theta_min"], settings["epsilon_max"], settings["profile"])
            if -scenario.theta_min + profile.max_delay_samples(cfg.sample_rate) > cfg.cp_len:
                raise CliError("theta_min", "|theta_min| plus the channel length exceeds the cyclic prefix")
        elif scen_id == "S3":
            scenario = ScenarioConfig.s3(settings["clip_ratio"], settings["profile"])
        elif scen_id == "CHANGING":
            scenario = ScenarioConfig.changing(settings["profile"])
        else:
            raise CliError("scenario", f"unknown scenario {settings['scenario']!r}; use s1, s2, s3 or changing")
    except ValueError as exc:
        raise CliError("scenario", str(exc)) from None

    estimators = tuple(e.strip() for e in settings["estimators"].split(",") if e.strip())
    unknown = [e for e in estimators if e not in ESTIMATORS]
    if unknown or not estimators:
        raise CliError("estimators", f"unknown {unknown}; choose from {','.join(ESTIMATORS)}")
    if settings["metric"] not in METRICS:
        raise CliError("metric", f"must be one of {METRICS}")
    if settings["x_axis"] not in ("snr", "ebn0", "dataset"):
        raise CliError("x_axis", "must be snr, ebn0 or dataset")
    grid = parse_grid(str(settings["grid"]), settings["x_axis"])
    try:
        spec = SweepSpec(scenario, estimators, settings["metric"], settings["x_axis"], grid, settings["runs"],
                         settings["seed"], cfg, fixed_snr_db=settings["fixed_snr"])
    except ValueError as exc:
        raise CliError(settings["x_axis"] if "dataset" in str(exc) else "estimators", str(exc)) from None
    _check_writable(settings["out"], "out")
    plot = settings["plot"] or None
    _check_writable(plot, "plot")
    return CliConfig("run", [spec], settings["out"], plot, workers=ns.workers, settings=settings)


def parse_and_validate(argv) -> CliConfig:
    """Parse ``argv`` (without the program name) into a validated configuration.

    Raises
    ------
    CliError
        For unknown flags and any violated invariant; ``field`` names the setting.
    """
    ns = build_parser().parse_args(_join_negative_values(list(argv)))
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(message)s")
    if ns.command == "run":
        return _build_run(ns)
    if ns.command == "reproduce":
        if ns.runs < 1:
            raise CliError("runs", "must be >= 1")
        specs = figure_specs(ns.figure, ns.runs, ns.seed, ns.profile)
        _check_writable(ns.out, "out")
        _check_writable(ns.plot, "plot")
        return CliConfig("reproduce", specs, ns.out, ns.plot, ns.figure, ns.workers)
    if ns.command == "plot":
        if ns.figure is not None:
            figure_specs(ns.figure, runs=1)
        if not Path(ns.csv).is_file():
            raise CliError("csv", f"{ns.csv} does not exist")
        _check_writable(ns.out, "out")
        return CliConfig("plot", out=ns.out, figure=ns.figure, csv_in=ns.csv)
    return CliConfig(ns.command)


def execute(conf: CliConfig) -> None:
    if conf.command == "config-template":
        sys.stdout.write(TEMPLATE)
        return
    if conf.command == "plot":
        emit_plot(conf.csv_in, conf.figure, conf.out)
        return
    results = run_specs(conf.specs, conf.workers)
    emit_csv(results, conf.out)
    if conf.plot:
        if conf.out in ("-", None):
            tmp = Path(conf.plot).with_suffix(".csv")
            emit_csv(results, tmp)
            emit_plot(tmp, conf.figure, conf.plot)
        else:
            emit_plot(conf.out, conf.figure, conf.plot)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        conf = parse_and_validate(argv)
    except CliError as exc:
        print(f"lmlce: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        execute(conf)
    except Exception as exc:  # noqa: BLE001 - reported with the runtime exit code
        log.debug("failure", exc_info=True)
        print(f"lmlce: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
