"""Channel interpolators operating on one group of ``taps`` pilots.

All linear estimators share the form ``h_d = W @ h_p`` with an
``(S, M)`` matrix ``W`` applied identically to every group. They differ
only in how ``W`` is obtained: fixed linear interpolation, closed-form
MMSE variants, or a least-squares fit (see :mod:`lmlce.training`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import PowerDelayProfile, ScenarioImpairmentStats, clip, freq_correlation
from .numerics import herm_solve, make_rng, pinv
from .ofdm import GroupLayout, OfdmConfig, build_frame, demodulate, modulate


@dataclass(frozen=True)
class LinearEstimator:
    """Per-group interpolation weights ``w`` of shape ``(S, M)``."""

    w: np.ndarray
    name: str = "linear"
    rank_deficient: bool = False

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.complex128)
        if w.ndim != 2:
            raise ValueError(f"weights must be a matrix, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights contain non-finite entries")
        object.__setattr__(self, "w", w)

    @property
    def shape(self):
        return self.w.shape

    def __call__(self, h_p):
        return apply_linear(self, h_p)


def apply_linear(est: LinearEstimator, h_p) -> np.ndarray:
    """Apply ``W`` to pilot estimates of shape ``(..., M)``; returns ``(..., S)``."""
    h_p = np.asarray(h_p, dtype=np.complex128)
    if h_p.shape[-1] != est.w.shape[1]:
        raise ValueError(f"estimator expects {est.w.shape[1]} pilots per group, got {h_p.shape[-1]}")
    return h_p @ est.w.T


def ls_pilot_estimate(y_p, x_p) -> np.ndarray:
    """Least-squares estimate ``y / x`` at known-symbol positions."""
    y_p = np.asarray(y_p, dtype=np.complex128)
    x_p = np.asarray(x_p, dtype=np.complex128)
    if np.any(x_p == 0):
        raise ZeroDivisionError("LS estimate needs non-zero known symbols")
    return y_p / x_p


def group_pilots(values, layout: GroupLayout) -> np.ndarray:
    """Gather ``(..., n_groups, M)`` pilot-aligned entries from full-band values."""
    return np.asarray(values)[..., layout.pilots]


def scatter_groups(h_d_groups, layout: GroupLayout) -> np.ndarray:
    """Flatten ``(..., n_groups, S)`` group outputs into data-position order."""
    h = np.asarray(h_d_groups)
    return h.reshape(*h.shape[:-2], -1)


def linear_interp_weights(layout: GroupLayout) -> LinearEstimator:
    """Piecewise-linear interpolation between the two bracketing pilots."""
    p_off = layout.pilot_offsets
    d_off = layout.data_offsets
    w = np.zeros((d_off.size, p_off.size))
    for s, o in enumerate(d_off):
        j = np.searchsorted(p_off, o) - 1
        frac = (o - p_off[j]) / (p_off[j + 1] - p_off[j])
        w[s, j] = 1.0 - frac
        w[s, j + 1] = frac
    return LinearEstimator(w, name="linear")


def interpolate_linear(pilot_estimates, layout: GroupLayout) -> np.ndarray:
    """Linear interpolation from full-band values (pilot entries used) to group data positions.

    ``pilot_estimates`` has the active-subcarrier length on its last axis;
    only the pilot positions are read. Returns ``(..., n_groups, S)``.
    """
    return apply_linear(linear_interp_weights(layout), group_pilots(pilot_estimates, layout))


@dataclass(frozen=True)
class MmseContext:
    """Second-order statistics for one group.

    ``lag_dp`` and ``lag_pp`` hold the subcarrier distances behind each
    correlation entry, so STO averaging can be applied afterwards.
    """

    r_dp: np.ndarray
    r_pp: np.ndarray
    noise_var: float
    lag_dp: np.ndarray | None = None
    lag_pp: np.ndarray | None = None
    n_dft: int | None = None

    def __post_init__(self):
        if self.noise_var < 0:
            raise ValueError("noise_var must be non-negative")

    @classmethod
    def from_profile(cls, profile: PowerDelayProfile, cfg: OfdmConfig, layout: GroupLayout, noise_var: float):
        p_off = layout.pilot_offsets
        d_off = layout.data_offsets
        lag_dp = d_off[:, None] - p_off[None, :]
        lag_pp = p_off[:, None] - p_off[None, :]
        return cls(
            r_dp=freq_correlation(profile, lag_dp, cfg),
            r_pp=freq_correlation(profile, lag_pp, cfg),
            noise_var=float(noise_var),
            lag_dp=lag_dp,
            lag_pp=lag_pp,
            n_dft=cfg.n_dft,
        )

    def with_noise(self, noise_var: float) -> "MmseContext":
        return MmseContext(self.r_dp, self.r_pp, float(noise_var), self.lag_dp, self.lag_pp, self.n_dft)


def mmse_weights(ctx: MmseContext, name: str = "mmse") -> LinearEstimator:
    """``W = R_dp (R_pp + noise_var I)^-1``, solved as a Hermitian system."""
    m = ctx.r_pp.shape[0]
    a = ctx.r_pp + ctx.noise_var * np.eye(m)
    # W^H = A^-1 R_dp^H because A is Hermitian
    w_h = herm_solve(a, ctx.r_dp.conj().T)
    return LinearEstimator(w_h.conj().T, name=name)


def sto_average_factor(dk, theta_min: int, n_dft: int):
    """``E[exp(2j*pi*dk*theta/n_dft)]`` with theta uniform on ``{theta_min, ..., 0}``."""
    thetas = np.arange(theta_min, 1)
    dk = np.asarray(dk, dtype=float)
    out = np.exp(2j * np.pi * np.multiply.outer(dk, thetas) / n_dft).mean(axis=-1)
    return complex(out) if out.ndim == 0 else out


def ammse_weights(ctx: MmseContext, stats: ScenarioImpairmentStats) -> LinearEstimator:
    """MMSE on correlations averaged over the STO distribution."""
    if stats.theta_min == 0:
        return mmse_weights(ctx, name="ammse")
    if ctx.lag_dp is None or ctx.n_dft is None:
        raise ValueError("STO averaging needs a context built with subcarrier lags")
    averaged = MmseContext(
        r_dp=ctx.r_dp * sto_average_factor(ctx.lag_dp, stats.theta_min, ctx.n_dft),
        r_pp=ctx.r_pp * sto_average_factor(ctx.lag_pp, stats.theta_min, ctx.n_dft),
        noise_var=ctx.noise_var,
        lag_dp=ctx.lag_dp,
        lag_pp=ctx.lag_pp,
        n_dft=ctx.n_dft,
    )
    return mmse_weights(averaged, name="ammse")


def measure_clip_distortion(cfg: OfdmConfig, clip_ratio: float, runs: int, rng: np.random.Generator) -> float:
    """Mean per-bin power of ``DFT(clipped) - DFT(unclipped)`` over the active bins.

    Each run modulates and clips one random frame the same way the link
    simulation does.
    """
    if runs <= 0:
        raise ValueError("calibration needs at least one run")
    total = 0.0
    count = 0
    for _ in range(runs):
        frame = build_frame(cfg, rng)
        rx = demodulate(clip(modulate(frame, cfg), clip_ratio), cfg)
        diff = rx - frame.symbols
        total += float(np.sum(np.abs(diff) ** 2))
        count += diff.size
    return total / count


def da_lmmse_weights(ctx: MmseContext, clip_distortion: float) -> LinearEstimator:
    """Distortion-aware LMMSE: MMSE with noise variance inflated by ``clip_distortion``.

    ``clip_distortion`` comes from :func:`measure_clip_distortion`.
    """
    return mmse_weights(ctx.with_noise(ctx.noise_var + clip_distortion), name="da-lmmse")


def calibrated_da_lmmse(ctx: MmseContext, cfg: OfdmConfig, clip_ratio: float, calibration_runs: int, seed: int = 0):
    """Calibrate the clipping distortion and return the DA-LMMSE estimator."""
    if calibration_runs <= 0:
        raise ValueError("calibration_runs must be positive")
    sigma_clip = measure_clip_distortion(cfg, clip_ratio, calibration_runs, make_rng(seed))
    return da_lmmse_weights(ctx, sigma_clip), sigma_clip


# C-ELM ------------------------------------------------------------------------------


def split_asinh(z):
    """Inverse hyperbolic sine on real and imaginary parts separately."""
    return np.arcsinh(z.real) + 1j * np.arcsinh(z.imag)


ACTIVATIONS = {
    "asinh": split_asinh,
    "identity": lambda z: z,
}


@dataclass(frozen=True)
class ElmEstimator:
    """Complex extreme learning machine with a frozen random hidden layer."""

    input_weights: np.ndarray
    biases: np.ndarray
    output_weights: np.ndarray
    activation: str = "asinh"
    name: str = field(default="celm")

    def hidden(self, x) -> np.ndarray:
        """Hidden-layer outputs for inputs ``x`` of shape ``(M, T)``."""
        return ACTIVATIONS[self.activation](self.input_weights @ x + self.biases[:, None])

    def __call__(self, h_p):
        return celm_apply(self, h_p)


def celm_train(inputs, labels, n_hidden: int, rng: np.random.Generator, activation: str = "asinh") -> ElmEstimator:
    """Fit the output layer by least squares over a random hidden layer.

    Parameters
    ----------
    inputs : array_like, shape (M, T)
    labels : array_like, shape (S, T)
    n_hidden : int
        Hidden neurons ``L``; training requires ``T > L``.
    rng : numpy.random.Generator
        Draws the unit-variance complex input weights and biases.
    """
    x = np.asarray(inputs, dtype=np.complex128)
    y = np.asarray(labels, dtype=np.complex128)
    if activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}")
    if x.shape[1] != y.shape[1]:
        raise ValueError("inputs and labels need the same number of columns")
    if x.shape[1] <= n_hidden:
        raise ValueError(f"C-ELM training needs more samples ({x.shape[1]}) than hidden neurons ({n_hidden})")
    a = (rng.standard_normal((n_hidden, x.shape[0])) + 1j * rng.standard_normal((n_hidden, x.shape[0]))) * np.sqrt(0.5)
    b = (rng.standard_normal(n_hidden) + 1j * rng.standard_normal(n_hidden)) * np.sqrt(0.5)
    h = ACTIVATIONS[activation](a @ x + b[:, None])
    beta = y @ pinv(h)
    return ElmEstimator(a, b, beta, activation)


def celm_apply(est: ElmEstimator, h_p) -> np.ndarray:
    """Evaluate on pilot estimates shaped ``(..., M)``; returns ``(..., S)``."""
    h_p = np.asarray(h_p, dtype=np.complex128)
    lead = h_p.shape[:-1]
    x = h_p.reshape(-1, h_p.shape[-1]).T
    out = est.output_weights @ est.hidden(x)
    return out.T.reshape(*lead, -1)


# text matrix I/O ----------------------------------------------------------------------


def save_matrix(path, w) -> None:
    """Write a complex matrix as rows of ``re im`` pairs."""
    w = np.atleast_2d(np.asarray(w, dtype=np.complex128))
    lines = [f"# {w.shape[0]} {w.shape[1]}"]
    for row in w:
        lines.append(" ".join(f"{v.real:.17e} {v.imag:.17e}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_matrix(path) -> np.ndarray:
    rows = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        vals = np.array(line.split(), dtype=float)
        if vals.size % 2:
            raise ValueError(f"odd number of values in row: {raw!r}")
        rows.append(vals[0::2] + 1j * vals[1::2])
    if not rows or len({r.size for r in rows}) != 1:
        raise ValueError(f"{path}: empty or ragged matrix")
    return np.vstack(rows)


def save_estimator(path, est: LinearEstimator) -> None:
    save_matrix(path, est.w)


def load_estimator(path, name: str = "loaded") -> LinearEstimator:
    return LinearEstimator(load_matrix(path), name=name)
