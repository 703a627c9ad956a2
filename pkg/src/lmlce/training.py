"""Online training data for the linear learned estimator, and its LS fit.

Training pairs are cut from a full-band LS channel estimate: every window
of ``(taps - 1) * pilot_interval + 1`` consecutive subcarriers yields one
pair, the entries at pilot-spaced offsets forming the input and the rest
the label. The full-band estimate comes from a block pilot symbol (PATDG)
or from one data symbol whose detected data is fed back as pilots (DDTDG).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .estimators import (
    LinearEstimator,
    apply_linear,
    group_pilots,
    interpolate_linear,
    ls_pilot_estimate,
)
from .numerics import matrix_rank, pinv
from .ofdm import GroupLayout, OfdmConfig, pilot_indices, qpsk_map, zf_equalize_detect


@dataclass(frozen=True)
class TrainingSet:
    """Aligned input columns ``x_i`` (M, T) and label columns ``y_o`` (S, T)."""

    x_i: np.ndarray
    y_o: np.ndarray
    label_kind: str = "estimated"

    def __post_init__(self):
        if self.x_i.shape[1] != self.y_o.shape[1]:
            raise ValueError(f"{self.x_i.shape[1]} inputs but {self.y_o.shape[1]} labels")
        if self.label_kind not in ("estimated", "true"):
            raise ValueError(f"label_kind must be 'estimated' or 'true', not {self.label_kind!r}")

    @property
    def size(self) -> int:
        return self.x_i.shape[1]

    def head(self, n: int) -> "TrainingSet":
        """First ``n`` pairs."""
        return TrainingSet(self.x_i[:, :n], self.y_o[:, :n], self.label_kind)


def block_pilot_ls(rx_bins, known) -> np.ndarray:
    """LS channel estimate on every active subcarrier of a fully known symbol."""
    return ls_pilot_estimate(rx_bins, known)


def sliding_window_count(k_used: int, taps: int, pilot_interval: int) -> int:
    """Unit-stride windows of ``(taps - 1) * pilot_interval + 1`` subcarriers in a band of ``k_used``."""
    span = (taps - 1) * pilot_interval + 1
    if k_used < span:
        raise ValueError(f"k_used={k_used} is shorter than one window ({span})")
    return k_used - span + 1


def window_count(cfg: OfdmConfig) -> int:
    """Training pairs per full-band estimate: ``k_used - (taps - 1) * pilot_interval``."""
    return sliding_window_count(cfg.k_used, cfg.taps, cfg.pilot_interval)


def _window_indices(cfg: OfdmConfig, layout: GroupLayout):
    starts = np.arange(window_count(cfg))
    return starts[:, None] + layout.pilot_offsets, starts[:, None] + layout.data_offsets


def patdg_extract(h_hat_full, cfg: OfdmConfig, layout: GroupLayout | None = None, labels_full=None) -> TrainingSet:
    """Slide a unit-stride window over full-band estimates.

    Parameters
    ----------
    h_hat_full : array_like, shape (k_used,) or (n_symbols, k_used)
        LS estimates from one or more block pilot symbols. Windows are
        ordered symbol-major.
    labels_full : array_like, optional
        Same shape; if given, labels are read from it (ideal labels) instead
        of from ``h_hat_full``.
    """
    layout = layout or GroupLayout.from_config(cfg)
    h = np.atleast_2d(np.asarray(h_hat_full, dtype=np.complex128))
    if h.shape[-1] != cfg.k_used:
        raise ValueError(f"expected {cfg.k_used} subcarriers, got {h.shape[-1]}")
    if cfg.k_used < cfg.window_span:
        raise ValueError(f"k_used={cfg.k_used} is shorter than one window ({cfg.window_span})")
    src = h if labels_full is None else np.atleast_2d(np.asarray(labels_full, dtype=np.complex128))
    p_idx, d_idx = _window_indices(cfg, layout)
    x = h[:, p_idx].reshape(-1, p_idx.shape[1]).T
    y = src[:, d_idx].reshape(-1, d_idx.shape[1]).T
    return TrainingSet(x, y, "estimated" if labels_full is None else "true")


def ideal_label_dataset(h_hat_full, h_true_full, cfg: OfdmConfig, layout: GroupLayout | None = None) -> TrainingSet:
    """Windows with LS inputs and true-channel labels."""
    return patdg_extract(h_hat_full, cfg, layout, labels_full=h_true_full)


def fit_weights(ts: TrainingSet, name: str = "lml") -> LinearEstimator:
    """Least-squares weights ``Y_O @ pinv(X_I)``.

    A rank-deficient input matrix still yields the minimum-norm solution;
    the estimator is flagged with ``rank_deficient=True``.
    """
    m, t = ts.x_i.shape
    if t <= m:
        raise ValueError(f"fit needs more samples than inputs (T={t}, M={m})")
    w = ts.y_o @ pinv(ts.x_i)
    return LinearEstimator(w, name=name, rank_deficient=matrix_rank(ts.x_i) < m)


def training_loss(w, ts: TrainingSet) -> float:
    """Sum of squared residuals ``||W X - Y||_F^2``."""
    return float(np.sum(np.abs(np.asarray(w) @ ts.x_i - ts.y_o) ** 2))


@dataclass(frozen=True)
class DdtdgResult:
    """Fitted weights plus refined and initial ``(n_groups, S)`` estimates."""

    estimator: LinearEstimator
    h_d: np.ndarray
    h_d_initial: np.ndarray
    n_flagged: int


def ddtdg_generate_and_fit(rx_bins, cfg: OfdmConfig, layout: GroupLayout | None = None) -> DdtdgResult:
    """Decision-directed training on one data symbol, then re-estimation.

    1. LS at the comb pilots.
    2. Linear interpolation to the data subcarriers.
    3. Zero-forcing and hard decisions.
    4. Full-band LS with the decisions (and known pilots) as reference.
    5. Sliding-window training pairs from that estimate.
    6. Least-squares fit of the weights.
    7. Weights applied to the step-1 pilot estimates.
    """
    layout = layout or GroupLayout.from_config(cfg)
    rx_bins = np.asarray(rx_bins, dtype=np.complex128)
    pil = pilot_indices(cfg)
    pilot_vals = cfg.pilot_values()

    h_ls = np.zeros(cfg.k_used, dtype=np.complex128)
    h_ls[pil] = ls_pilot_estimate(rx_bins[pil], pilot_vals)
    h_init = interpolate_linear(h_ls, layout)

    data_pos = layout.data_order
    bits, _, n_flagged = zf_equalize_detect(rx_bins[data_pos], h_init.reshape(-1))
    reference = np.empty(cfg.k_used, dtype=np.complex128)
    reference[pil] = pilot_vals
    reference[data_pos] = qpsk_map(bits)

    h_full = block_pilot_ls(rx_bins, reference)
    est = fit_weights(patdg_extract(h_full, cfg, layout), name="lml-ddtdg")
    h_d = apply_linear(est, group_pilots(h_ls, layout))
    return DdtdgResult(est, h_d, h_init, n_flagged)


def dump_training_set(path, ts: TrainingSet) -> None:
    """Write one line per training pair: inputs then labels as ``re im`` pairs."""
    cols = np.vstack([ts.x_i, ts.y_o]).T
    lines = [f"# label_kind={ts.label_kind} M={ts.x_i.shape[0]} S={ts.y_o.shape[0]} T={ts.size}"]
    for col in cols:
        lines.append(" ".join(f"{v.real:.17e} {v.imag:.17e}" for v in col))
    Path(path).write_text("\n".join(lines) + "\n")


def load_training_set(path) -> TrainingSet:
    text = Path(path).read_text().splitlines()
    meta = dict(tok.split("=") for tok in text[0].lstrip("# ").split())
    m, s = int(meta["M"]), int(meta["S"])
    rows = [np.array(line.split(), dtype=float) for line in text[1:] if line.strip()]
    data = np.array([r[0::2] + 1j * r[1::2] for r in rows]).reshape(-1, m + s).T
    return TrainingSet(data[:m], data[m:], meta["label_kind"])
