"""Monte Carlo link simulation, metrics and sweeps.

All estimators in a sweep are evaluated on the same simulated frames (paired
comparison): the frame seed depends on the master seed, the scenario, the
x-axis point and the run index, never on the estimator.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .channel import (
    ImpairmentConfig,
    ScenarioImpairmentStats,
    apply_sto_cfo,
    cfr,
    clip,
    effective_cfr,
    load_profile,
    propagate,
    sample_realization,
)
from .estimators import (
    ElmEstimator,
    LinearEstimator,
    MmseContext,
    ammse_weights,
    apply_linear,
    calibrated_da_lmmse,
    da_lmmse_weights,
    celm_apply,
    celm_train,
    linear_interp_weights,
    mmse_weights,
)
from .numerics import derive_seed, make_rng
from .ofdm import FrameGrid, GroupLayout, OfdmConfig, build_frame, demodulate, modulate, pilot_indices, zf_equalize_detect
from .training import ddtdg_generate_and_fit, fit_weights, ideal_label_dataset, patdg_extract, window_count

log = logging.getLogger(__name__)

WORKERS_ENV = "LMLCE_WORKERS"
QPSK_BITS = 2

ESTIMATORS = (
    "genie",
    "ls",
    "linear",
    "mmse",
    "ammse",
    "du-mmse",
    "da-lmmse",
    "lml-patdg",
    "lml-ddtdg",
    "lml-true",
    "celm-patdg",
    "lml-offline",
    "celm-offline",
)
OFFLINE_ESTIMATORS = ("lml-offline", "celm-offline")
METRICS = ("nmse", "ber")
X_AXES = ("snr", "ebn0", "dataset")


# scenarios ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioConfig:
    """Channel condition of a sweep.

    ``S1``: ideal linear channel. ``S2``: STO and/or CFO drawn per frame.
    ``S3``: transmitter clipping at ``clip_ratio`` times the signal RMS.
    ``CHANGING``: every frame picks one of S1, S2(-20, 0.01), S3.
    """

    id: str = "S1"
    theta_min: int = 0
    epsilon_max: float = 0.0
    clipping: bool = False
    clip_ratio: float = 1.0
    profile: str = "pedestrian_b"

    def __post_init__(self):
        ident = self.id.upper()
        object.__setattr__(self, "id", ident)
        if ident not in ("S1", "S2", "S3", "CHANGING"):
            raise ValueError(f"unknown scenario {self.id!r}")
        ScenarioImpairmentStats(self.theta_min, self.epsilon_max)
        if ident in ("S1", "S3") and (self.theta_min or self.epsilon_max):
            raise ValueError(f"{ident} has perfect synchronisation (theta_min=0, epsilon_max=0)")
        if ident in ("S1", "S2") and self.clipping:
            raise ValueError(f"{ident} has no clipping")
        if ident == "S3" and not self.clipping:
            object.__setattr__(self, "clipping", True)

    @classmethod
    def s1(cls, profile: str = "pedestrian_b"):
        return cls("S1", profile=profile)

    @classmethod
    def s2(cls, theta_min: int = -20, epsilon_max: float = 0.0, profile: str = "pedestrian_b"):
        return cls("S2", theta_min=theta_min, epsilon_max=epsilon_max, profile=profile)

    @classmethod
    def s3(cls, clip_ratio: float = 1.0, profile: str = "pedestrian_b"):
        return cls("S3", clipping=True, clip_ratio=clip_ratio, profile=profile)

    @classmethod
    def changing(cls, profile: str = "pedestrian_b"):
        return cls("CHANGING", profile=profile)

    @property
    def stats(self) -> ScenarioImpairmentStats:
        return ScenarioImpairmentStats(self.theta_min, self.epsilon_max)

    @property
    def label(self) -> str:
        if self.id == "S2":
            return f"S2(theta_min={self.theta_min};eps_max={self.epsilon_max:g})"
        if self.id == "S3" and self.clip_ratio != 1.0:
            return f"S3(clip_ratio={self.clip_ratio:g})"
        return self.id

    @property
    def key(self) -> str:
        """Seed-derivation key; differs whenever the frame statistics differ."""
        return f"{self.label}|{self.profile}"

    def components(self) -> tuple["ScenarioConfig", ...]:
        if self.id != "CHANGING":
            return (self,)
        return (
            ScenarioConfig.s1(self.profile),
            ScenarioConfig.s2(-20, 0.01, self.profile),
            ScenarioConfig.s3(profile=self.profile),
        )

    def draw(self, rng: np.random.Generator) -> ImpairmentConfig:
        return self.stats.draw(rng, clipping=self.clipping, clip_ratio=self.clip_ratio)


def ebn0_to_snr(ebn0_db: float, bits_per_symbol: int = QPSK_BITS) -> float:
    """Per-subcarrier SNR from Eb/N0; CP and pilot overhead are not counted."""
    return ebn0_db + 10.0 * math.log10(bits_per_symbol)


def snr_to_ebn0(snr_db: float, bits_per_symbol: int = QPSK_BITS) -> float:
    return snr_db - 10.0 * math.log10(bits_per_symbol)


def snr_to_noise_var(snr_db: float) -> float:
    """Noise variance per subcarrier for unit-power symbols and unit-power channel."""
    return 10.0 ** (-snr_db / 10.0)


# link simulation ----------------------------------------------------------------------


@dataclass(frozen=True)
class FrameObservation:
    """Everything the receiver sees for one frame, plus the ground truth."""

    frame: FrameGrid
    rx: np.ndarray
    h_true: np.ndarray
    impairment: ImpairmentConfig
    noise_var: float


def simulate_frame(cfg: OfdmConfig, scenario: ScenarioConfig, noise_var: float, rng: np.random.Generator,
                   profile=None) -> FrameObservation:
    """Draw channel, impairments and payload; run TX, channel and RX front end."""
    profile = profile or load_profile(scenario.profile)
    real = sample_realization(profile, cfg, rng)
    imp = scenario.draw(rng)
    if -imp.theta + real.cir.size - 1 > cfg.cp_len:
        raise ValueError(f"|theta|={-imp.theta} plus channel length {real.cir.size} exceeds the CP")
    frame = build_frame(cfg, rng)
    tx = modulate(frame, cfg)
    if imp.clipping:
        tx = clip(tx, imp.clip_ratio)
    y = apply_sto_cfo(propagate(tx, real, noise_var, rng), imp, cfg)
    h_true = effective_cfr(cfr(real, cfg), imp, cfg, cfg.n_symbols)
    return FrameObservation(frame, demodulate(y, cfg), h_true, imp, noise_var)


@dataclass
class EstimatorContext:
    """Pre-computed weights and frozen models shared by every frame of a sweep point."""

    cfg: OfdmConfig
    layout: GroupLayout
    fixed: dict = field(default_factory=dict)
    offline: dict = field(default_factory=dict)
    n_hidden: int = 8
    train_size: int | None = None


@dataclass(frozen=True)
class FrameErrors:
    """Per-frame metric components for one estimator."""

    sq_err: float
    power: float
    bit_errors: int
    bits: int
    flags: int = 0


def _ber_part(obs: FrameObservation, cfg: OfdmConfig, y_data, h_d) -> tuple[int, int, int]:
    bits, _, flagged = zf_equalize_detect(y_data, h_d)
    errors = int(np.count_nonzero(bits != obs.frame.data_bits))
    return errors, bits.size, flagged


def run_frame(obs: FrameObservation, estimators, ctx: EstimatorContext, rng: np.random.Generator | None = None):
    """Evaluate estimators on one simulated frame.

    Online estimators train on this frame only (PATDG on its block pilot
    symbols, DDTDG on each data symbol). NMSE components are taken at the
    data subcarriers of the data symbols; for ``ls`` they are taken at the
    comb pilots and its bit decisions use linear interpolation.

    Returns
    -------
    dict
        ``{estimator: FrameErrors}``
    """
    if isinstance(estimators, str):
        estimators = (estimators,)
    cfg, layout = ctx.cfg, ctx.layout
    n_p = cfg.n_block_pilot
    pil = pilot_indices(cfg)
    data_pos = layout.data_order

    y = obs.rx[n_p:]
    h = obs.h_true[n_p:]
    h_ls = np.zeros_like(y)
    h_ls[:, pil] = y[:, pil] / cfg.pilot_values()
    hp_groups = h_ls[:, layout.pilots]
    truth = h[:, data_pos]
    y_data = y[:, data_pos]

    block_ls = None
    if n_p:
        block_ls = obs.rx[:n_p] / obs.frame.block

    out = {}
    for name in estimators:
        flags = 0
        if name == "genie":
            h_d = truth
        elif name == "ls":
            err = h_ls[:, pil] - h[:, pil]
            h_d = apply_linear(linear_interp_weights(layout), hp_groups).reshape(truth.shape)
            be, nb, fl = _ber_part(obs, cfg, y_data, h_d)
            out[name] = FrameErrors(float(np.sum(np.abs(err) ** 2)), float(np.sum(np.abs(h[:, pil]) ** 2)), be, nb, fl)
            continue
        elif name in ctx.fixed:
            h_d = apply_linear(ctx.fixed[name], hp_groups)
        elif name in ("lml-patdg", "lml-true", "celm-patdg"):
            if block_ls is None:
                raise ValueError(f"{name} needs at least one block pilot symbol")
            if name == "lml-true":
                ts = ideal_label_dataset(block_ls, obs.h_true[:n_p], cfg, layout)
            else:
                ts = patdg_extract(block_ls, cfg, layout)
            if ctx.train_size is not None:
                ts = ts.head(ctx.train_size)
            if name == "celm-patdg":
                elm = celm_train(ts.x_i, ts.y_o, ctx.n_hidden, rng if rng is not None else make_rng(0))
                h_d = celm_apply(elm, hp_groups)
            else:
                est = fit_weights(ts, name=name)
                flags += int(est.rank_deficient)
                h_d = apply_linear(est, hp_groups)
        elif name == "lml-ddtdg":
            h_d = np.empty((cfg.n_data, layout.n_groups, cfg.group_data), dtype=np.complex128)
            for i in range(cfg.n_data):
                res = ddtdg_generate_and_fit(y[i], cfg, layout)
                h_d[i] = res.h_d
                flags += res.n_flagged + int(res.estimator.rank_deficient)
        elif name in ctx.offline:
            model = ctx.offline[name]
            if isinstance(model, ElmEstimator):
                h_d = celm_apply(model, hp_groups)
            else:
                h_d = apply_linear(model, hp_groups)
        else:
            raise KeyError(f"estimator {name!r} is not available in this context")
        h_d = np.asarray(h_d).reshape(truth.shape)
        be, nb, fl = _ber_part(obs, cfg, y_data, h_d)
        out[name] = FrameErrors(
            float(np.sum(np.abs(h_d - truth) ** 2)), float(np.sum(np.abs(truth) ** 2)), be, nb, flags + fl
        )
    return out


# accumulation -------------------------------------------------------------------------


@dataclass
class RatioStat:
    """Exact running sums for a ratio estimate ``sum(num) / sum(den)``.

    Sums are kept as ``Fraction`` so merging is associative and commutative
    bit-for-bit.
    """

    num: Fraction = Fraction(0)
    den: Fraction = Fraction(0)
    num2: Fraction = Fraction(0)
    den2: Fraction = Fraction(0)
    numden: Fraction = Fraction(0)
    n: int = 0

    def add(self, num: float, den: float) -> None:
        a, b = Fraction(num), Fraction(den)
        self.num += a
        self.den += b
        self.num2 += a * a
        self.den2 += b * b
        self.numden += a * b
        self.n += 1

    def merge(self, other: "RatioStat") -> "RatioStat":
        return RatioStat(
            self.num + other.num,
            self.den + other.den,
            self.num2 + other.num2,
            self.den2 + other.den2,
            self.numden + other.numden,
            self.n + other.n,
        )

    @property
    def value(self) -> float:
        return float(self.num / self.den) if self.den else float("nan")

    @property
    def stderr(self) -> float:
        """Delta-method standard error of the ratio over runs."""
        if self.n < 2 or not self.den:
            return float("nan")
        r = self.num / self.den
        ss = self.num2 - 2 * r * self.numden + r * r * self.den2
        var = float(ss) / (self.n - 1)
        mean_den = float(self.den) / self.n
        return math.sqrt(max(var, 0.0) / self.n) / mean_den


@dataclass
class PointStats:
    nmse: RatioStat = field(default_factory=RatioStat)
    ber: RatioStat = field(default_factory=RatioStat)
    flags: int = 0
    runs: int = 0

    def add(self, fe: FrameErrors) -> None:
        self.nmse.add(fe.sq_err, fe.power)
        self.ber.add(fe.bit_errors, fe.bits)
        self.flags += fe.flags
        self.runs += 1

    def merge(self, other: "PointStats") -> "PointStats":
        return PointStats(self.nmse.merge(other.nmse), self.ber.merge(other.ber), self.flags + other.flags,
                          self.runs + other.runs)

    def metric(self, metric: str) -> RatioStat:
        return self.nmse if metric == "nmse" else self.ber


def nmse_accumulate(h_hat_d, h_d, acc: RatioStat | None = None) -> RatioStat:
    """Add ``||h_hat - h||^2`` and ``||h||^2`` to ``acc``; ``acc.value`` is the NMSE."""
    h_hat_d = np.asarray(h_hat_d)
    h_d = np.asarray(h_d)
    if h_hat_d.shape != h_d.shape:
        raise ValueError(f"shape mismatch {h_hat_d.shape} vs {h_d.shape}")
    acc = acc if acc is not None else RatioStat()
    acc.add(float(np.sum(np.abs(h_hat_d - h_d) ** 2)), float(np.sum(np.abs(h_d) ** 2)))
    return acc


@dataclass
class RunResult:
    """Accumulated statistics per ``(estimator, x)``; merge is addition."""

    scenario: str
    x_axis: str
    metric: str
    seed: int
    estimators: tuple
    points: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def stats(self, estimator: str, x: float) -> PointStats:
        return self.points.setdefault((estimator, float(x)), PointStats())

    def merge(self, other: "RunResult") -> "RunResult":
        merged = dict(self.points)
        for key, st in other.points.items():
            merged[key] = merged[key].merge(st) if key in merged else st
        ests = tuple(dict.fromkeys(self.estimators + other.estimators))
        return RunResult(self.scenario, self.x_axis, self.metric, self.seed, ests, merged, dict(self.meta))

    def xs(self) -> list:
        return sorted({x for _, x in self.points})

    def value(self, estimator: str, x: float, metric: str | None = None) -> float:
        return self.points[(estimator, float(x))].metric(metric or self.metric).value

    def stderr(self, estimator: str, x: float, metric: str | None = None) -> float:
        return self.points[(estimator, float(x))].metric(metric or self.metric).stderr

    def rows(self):
        """Table rows ordered by estimator (sweep order), then x ascending."""
        for est in self.estimators:
            for x in self.xs():
                st = self.points.get((est, x))
                if st is None:
                    continue
                m = st.metric(self.metric)
                yield {
                    "scenario": self.scenario,
                    "estimator": est,
                    "x_axis": self.x_axis,
                    "x_db": x,
                    "metric": self.metric,
                    "value": m.value,
                    "stderr": m.stderr,
                    "runs": st.runs,
                    "seed": self.seed,
                }


# sweeps -------------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    """One curve family: a scenario, estimators and an x-axis grid."""

    scenario: ScenarioConfig
    estimators: tuple
    metric: str = "nmse"
    x_axis: str = "snr"
    grid: tuple = (0.0,)
    runs: int = 2000
    seed: int = 0
    cfg: OfdmConfig = field(default_factory=OfdmConfig)
    fixed_snr_db: float = -10.0
    n_hidden: int = 8
    calibration_runs: int = 200
    offline_scenario: ScenarioConfig = field(default_factory=ScenarioConfig.s3)
    offline_ebn0_db: float = 22.0
    offline_dataset_size: int = 100_000

    def __post_init__(self):
        object.__setattr__(self, "estimators", tuple(self.estimators))
        object.__setattr__(self, "grid", tuple(float(x) for x in self.grid))
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if not self.grid:
            raise ValueError("grid must be non-empty")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        if self.x_axis not in X_AXES:
            raise ValueError(f"x_axis must be one of {X_AXES}")
        unknown = [e for e in self.estimators if e not in ESTIMATORS]
        if unknown or not self.estimators:
            raise ValueError(f"unknown estimators {unknown}; choose from {', '.join(ESTIMATORS)}")
        if self.x_axis == "dataset" and any(x <= self.cfg.taps or x != int(x) for x in self.grid):
            raise ValueError("dataset sizes must be integers larger than the number of taps")

    def point_snr(self, x: float) -> float:
        if self.x_axis == "snr":
            return x
        if self.x_axis == "ebn0":
            return ebn0_to_snr(x)
        return self.fixed_snr_db

    def point_cfg(self, x: float) -> OfdmConfig:
        if self.x_axis != "dataset":
            return self.cfg
        n_p = max(self.cfg.n_block_pilot, math.ceil(int(x) / window_count(self.cfg)))
        return replace(self.cfg, n_block_pilot=n_p)

    def point_key(self, x: float) -> str:
        return f"{self.x_axis}:{x:g}"


def build_context(spec: SweepSpec, scenario: ScenarioConfig, x: float, offline: dict | None = None) -> EstimatorContext:
    """Closed-form weights for one sweep point (genie statistics and noise variance)."""
    cfg = spec.point_cfg(x)
    layout = GroupLayout.from_config(cfg)
    noise_var = snr_to_noise_var(spec.point_snr(x))
    profile = load_profile(scenario.profile)
    mctx = MmseContext.from_profile(profile, cfg, layout, noise_var)
    fixed = {"linear": linear_interp_weights(layout)}
    wanted = set(spec.estimators)
    if wanted & {"mmse", "du-mmse"}:
        fixed["mmse"] = mmse_weights(mctx)
        fixed["du-mmse"] = mmse_weights(mctx, name="du-mmse")
    if "ammse" in wanted:
        fixed["ammse"] = ammse_weights(mctx, scenario.stats)
    if "da-lmmse" in wanted:
        if scenario.clipping:
            seed = int(derive_seed(spec.seed, "da-calibration", scenario.key).generate_state(1)[0])
            fixed["da-lmmse"], _ = calibrated_da_lmmse(mctx, cfg, scenario.clip_ratio, spec.calibration_runs, seed)
        else:
            fixed["da-lmmse"] = da_lmmse_weights(mctx, 0.0)
    ctx = EstimatorContext(cfg, layout, fixed, dict(offline or {}), spec.n_hidden)
    if spec.x_axis == "dataset":
        ctx.train_size = int(x)
    missing = [e for e in wanted & set(OFFLINE_ESTIMATORS) if e not in ctx.offline]
    if missing:
        raise ValueError(f"offline estimators {missing} need pre-trained models")
    return ctx


def run_seed(master_seed: int, scenario: ScenarioConfig, point_key: str, run_index: int) -> np.random.SeedSequence:
    """Per-run seed; the estimator is deliberately not part of it."""
    return derive_seed(master_seed, scenario.key, point_key, run_index)


def _run_one(spec: SweepSpec, scenario: ScenarioConfig, x: float, run_index: int, ctx: EstimatorContext, profile):
    frame_ss, aux_ss = run_seed(spec.seed, scenario, spec.point_key(x), run_index).spawn(2)
    rng = make_rng(frame_ss)
    obs = simulate_frame(ctx.cfg, scenario, snr_to_noise_var(spec.point_snr(x)), rng, profile)
    return run_frame(obs, spec.estimators, ctx, make_rng(aux_ss))


def _run_chunk(args):
    spec, scenario, x, runs, ctx = args
    profile = load_profile(scenario.profile)
    return [_run_one(spec, scenario, x, r, ctx, profile) for r in runs]


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _execute(jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [_run_chunk(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_chunk, jobs))


def _chunks(n: int, parts: int):
    size = max(1, math.ceil(n / parts))
    return [range(i, min(n, i + size)) for i in range(0, n, size)]


def run_sweep(spec: SweepSpec, offline: dict | None = None, workers: int | None = None) -> RunResult:
    """Run ``spec.runs`` frames per grid point and accumulate every estimator.

    Results do not depend on ``workers``: seeds are fixed per run and sums
    are exact.
    """
    if spec.scenario.id == "CHANGING":
        return run_changing_scenario(spec, offline or {}, workers=workers)
    workers = workers or worker_count()
    if any(e in OFFLINE_ESTIMATORS for e in spec.estimators) and offline is None:
        offline = offline_models(spec)
    result = RunResult(spec.scenario.label, spec.x_axis, spec.metric, spec.seed, spec.estimators)
    for x in spec.grid:
        ctx = build_context(spec, spec.scenario, x, offline)
        jobs = [(spec, spec.scenario, x, chunk, ctx) for chunk in _chunks(spec.runs, workers)]
        for chunk in _execute(jobs, workers):
            for per_est in chunk:
                for est, fe in per_est.items():
                    result.stats(est, x).add(fe)
        log.info("%s %s=%g done (%d runs)", spec.scenario.label, spec.x_axis, x, spec.runs)
    return result


# changing scenarios and offline training ----------------------------------------------


def draw_component(master_seed: int, point_key: str, run_index: int, n_components: int = 3) -> int:
    rng = make_rng(derive_seed(master_seed, "CHANGING-draw", point_key, run_index))
    return int(rng.integers(n_components))


def run_changing_scenario(spec: SweepSpec, offline: dict, workers: int | None = None, forced: int | None = None) -> RunResult:
    """Every frame draws S1, S2(-20, 0.01) or S3 with equal probability.

    A run whose draw is scenario ``c`` uses exactly the frame seed a sweep of
    ``c`` alone would use, so forcing every draw to S1 reproduces an S1
    sweep. Offline estimators keep the weights in ``offline``; online ones
    retrain per frame.
    """
    workers = workers or worker_count()
    missing = [e for e in spec.estimators if e in OFFLINE_ESTIMATORS and e not in offline]
    if missing:
        raise ValueError(f"missing pre-trained baselines: {missing}")
    components = spec.scenario.components()
    result = RunResult("CHANGING", spec.x_axis, spec.metric, spec.seed, spec.estimators)
    counts = np.zeros(len(components), dtype=int)
    for x in spec.grid:
        pk = spec.point_key(x)
        picks = [forced if forced is not None else draw_component(spec.seed, pk, r, len(components))
                 for r in range(spec.runs)]
        for c, comp in enumerate(components):
            runs = [r for r, p in enumerate(picks) if p == c]
            counts[c] += len(runs)
            if not runs:
                continue
            sub = replace(spec, scenario=comp)
            ctx = build_context(sub, comp, x, offline)
            size = max(1, math.ceil(len(runs) / workers))
            jobs = [(sub, comp, x, runs[i : i + size], ctx) for i in range(0, len(runs), size)]
            for chunk in _execute(jobs, workers):
                for per_est in chunk:
                    for est, fe in per_est.items():
                        result.stats(est, x).add(fe)
    result.meta["draw_counts"] = counts.tolist()
    return result


def collect_ideal_dataset(cfg: OfdmConfig, scenario: ScenarioConfig, snr_db: float, dataset_size: int,
                          seed: int):
    """Simulate frames until ``dataset_size`` true-label pairs are collected."""
    profile = load_profile(scenario.profile)
    layout = GroupLayout.from_config(cfg)
    noise_var = snr_to_noise_var(snr_db)
    xs, ys = [], []
    total = 0
    i = 0
    while total < dataset_size:
        rng = make_rng(derive_seed(seed, "offline", scenario.key, f"snr:{snr_db:g}", i))
        comp = scenario.components()[int(rng.integers(len(scenario.components())))]
        obs = simulate_frame(cfg, comp, noise_var, rng, profile)
        n_p = max(cfg.n_block_pilot, 1)
        ts = ideal_label_dataset(obs.rx[:n_p] / obs.frame.symbols[:n_p], obs.h_true[:n_p], cfg, layout)
        xs.append(ts.x_i)
        ys.append(ts.y_o)
        total += ts.size
        i += 1
    x = np.concatenate(xs, axis=1)[:, :dataset_size]
    y = np.concatenate(ys, axis=1)[:, :dataset_size]
    return x, y


def offline_train(kind: str, cfg: OfdmConfig, train_scenario: ScenarioConfig | None = None,
                  train_ebn0_db: float = 22.0, dataset_size: int = 100_000, seed: int = 0, n_hidden: int = 8,
                  snr_db: float | None = None):
    """Train a frozen LML or C-ELM estimator on true-label data.

    Defaults mirror the offline baseline: Scenario 3 at Eb/N0 = 22 dB.
    ``snr_db`` overrides the Eb/N0 conversion when given.
    """
    train_scenario = train_scenario or ScenarioConfig.s3()
    if kind not in ("lml", "celm"):
        raise ValueError(f"offline training supports 'lml' or 'celm', not {kind!r}")
    floor = n_hidden if kind == "celm" else cfg.taps
    if dataset_size <= floor:
        raise ValueError(f"dataset_size must exceed {floor}")
    snr = ebn0_to_snr(train_ebn0_db) if snr_db is None else snr_db
    x, y = collect_ideal_dataset(cfg, train_scenario, snr, dataset_size, seed)
    if kind == "lml":
        from .training import TrainingSet

        return fit_weights(TrainingSet(x, y, "true"), name="lml-offline")
    rng = make_rng(derive_seed(seed, "celm-offline-init"))
    elm = celm_train(x, y, n_hidden, rng)
    return replace(elm, name="celm-offline")


def offline_models(spec: SweepSpec) -> dict:
    """Train whichever offline baselines ``spec`` asks for."""
    models = {}
    for name in spec.estimators:
        if name not in OFFLINE_ESTIMATORS:
            continue
        kind = name.split("-")[0]
        models[name] = offline_train(kind, spec.cfg, spec.offline_scenario, spec.offline_ebn0_db,
                                     spec.offline_dataset_size, seed=spec.seed, n_hidden=spec.n_hidden)
    return models


__all__ = [
    "ESTIMATORS",
    "EstimatorContext",
    "FrameErrors",
    "FrameObservation",
    "LinearEstimator",
    "PointStats",
    "RatioStat",
    "RunResult",
    "ScenarioConfig",
    "SweepSpec",
    "build_context",
    "ebn0_to_snr",
    "nmse_accumulate",
    "offline_train",
    "run_changing_scenario",
    "run_frame",
    "run_sweep",
    "simulate_frame",
    "snr_to_ebn0",
]
