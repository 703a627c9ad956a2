"""OFDM frame layout and the transmit/receive chain.

Subcarrier indices handled here are positions inside the block of
``k_used`` active subcarriers (0-based). The active block is contiguous and
centred on the DFT grid: position ``i`` sits at signed frequency
``i - (k_used - 1) // 2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .numerics import dft, idft, make_rng

PILOT_SEED = 20210708
ZF_FLOOR = 1e-12
SQRT_HALF = np.sqrt(0.5)


class ConfigError(ValueError):
    """An OFDM configuration violates one of its structural invariants."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass(frozen=True)
class OfdmConfig:
    """Frame and grid constants.

    Defaults follow the simulated system (512-point DFT, CP 128, 10 MHz,
    pilot interval 3, two taps, one block pilot and nine data symbols) except
    ``k_used``, which is 409 rather than 410 so that both band edges carry a
    pilot.
    """

    n_dft: int = 512
    cp_len: int = 128
    k_used: int = 409
    pilot_interval: int = 3
    taps: int = 2
    n_block_pilot: int = 1
    n_data: int = 9
    sample_rate: float = 10e6

    def __post_init__(self):
        if self.n_dft < 2:
            raise ConfigError("n_dft", "must be at least 2")
        if not 0 <= self.cp_len < self.n_dft:
            raise ConfigError("cp_len", f"must satisfy 0 <= cp_len < n_dft ({self.n_dft})")
        if not 2 <= self.k_used <= self.n_dft:
            raise ConfigError("k_used", f"must lie in [2, n_dft={self.n_dft}]")
        if self.pilot_interval < 2:
            raise ConfigError(
                "pilot_interval", "must be >= 2; with 1 every subcarrier is a pilot and groups have no data"
            )
        if (self.k_used - 1) % self.pilot_interval:
            raise ConfigError(
                "pilot_interval",
                f"(k_used - 1) = {self.k_used - 1} is not divisible by pilot_interval={self.pilot_interval}; "
                "pilots must sit on both band edges",
            )
        if self.taps < 2:
            raise ConfigError("taps", "estimator needs at least 2 pilots per group")
        if (self.n_pilots - 1) % (self.taps - 1):
            raise ConfigError(
                "taps", f"(P - 1) = {self.n_pilots - 1} is not divisible by (taps - 1) = {self.taps - 1}"
            )
        if self.n_block_pilot < 0:
            raise ConfigError("n_block_pilot", "must be non-negative")
        if self.n_data < 1:
            raise ConfigError("n_data", "must be at least 1")
        if self.sample_rate <= 0:
            raise ConfigError("sample_rate", "must be positive")

    @property
    def n_pilots(self) -> int:
        return (self.k_used - 1) // self.pilot_interval + 1

    @property
    def n_groups(self) -> int:
        return (self.n_pilots - 1) // (self.taps - 1)

    @property
    def group_data(self) -> int:
        """Data subcarriers per group (S)."""
        return (self.taps - 1) * (self.pilot_interval - 1)

    @property
    def window_span(self) -> int:
        """Subcarriers covered by one group, boundary pilots included."""
        return (self.taps - 1) * self.pilot_interval + 1

    @property
    def n_symbols(self) -> int:
        return self.n_block_pilot + self.n_data

    @property
    def symbol_len(self) -> int:
        return self.n_dft + self.cp_len

    @property
    def n_data_bins(self) -> int:
        return self.k_used - self.n_pilots

    @property
    def bits_per_frame(self) -> int:
        return 2 * self.n_data * self.n_data_bins

    def freqs(self) -> np.ndarray:
        """Signed DFT frequency index of every active subcarrier."""
        return np.arange(self.k_used) - (self.k_used - 1) // 2

    def used_bins(self) -> np.ndarray:
        """FFT bin index (0..n_dft-1) of every active subcarrier."""
        return self.freqs() % self.n_dft

    def pilot_positions(self) -> np.ndarray:
        return pilot_indices(self)

    def data_positions(self) -> np.ndarray:
        mask = np.ones(self.k_used, dtype=bool)
        mask[pilot_indices(self)] = False
        return np.flatnonzero(mask)

    def pilot_values(self) -> np.ndarray:
        """Comb pilot symbols, identical at transmitter and receiver."""
        return _pilot_values(self.n_pilots).copy()


@lru_cache(maxsize=None)
def _pilot_values(n_pilots: int) -> np.ndarray:
    rng = make_rng(PILOT_SEED)
    return qpsk_map(rng.integers(0, 2, 2 * n_pilots, dtype=np.uint8))


def pilot_indices(cfg: OfdmConfig) -> np.ndarray:
    """0-based positions ``0, D, 2D, ..., k_used-1`` of the comb pilots."""
    return np.arange(0, cfg.k_used, cfg.pilot_interval)


@dataclass(frozen=True)
class GroupLayout:
    """Pilot and data positions of every group.

    Adjacent groups share their boundary pilot. ``pilots`` has shape
    ``(n_groups, taps)`` and ``data`` shape ``(n_groups, group_data)``.
    """

    pilots: np.ndarray
    data: np.ndarray

    @classmethod
    def from_config(cls, cfg: OfdmConfig) -> "GroupLayout":
        return _layout(cfg)

    @classmethod
    def _build(cls, cfg: OfdmConfig) -> "GroupLayout":
        pil = pilot_indices(cfg)
        step = cfg.taps - 1
        pilots = np.stack([pil[g * step : g * step + cfg.taps] for g in range(cfg.n_groups)])
        first = pilots[:, :1]
        offsets = np.array([o for o in range(cfg.window_span) if o % cfg.pilot_interval])
        data = first + offsets[None, :]
        return cls(pilots=pilots, data=data)

    @property
    def n_groups(self) -> int:
        return self.pilots.shape[0]

    @cached_property
    def pilot_offsets(self) -> np.ndarray:
        """Pilot positions relative to the group's first pilot."""
        return self.pilots[0] - self.pilots[0, 0]

    @cached_property
    def data_offsets(self) -> np.ndarray:
        return self.data[0] - self.pilots[0, 0]

    @cached_property
    def data_order(self) -> np.ndarray:
        """Flattened group data positions; equals ``cfg.data_positions()``."""
        return self.data.reshape(-1)


@lru_cache(maxsize=64)
def _layout(cfg: OfdmConfig) -> GroupLayout:
    return GroupLayout._build(cfg)


def extract_group(values, k: int, layout: GroupLayout):
    """Return the (pilot-aligned, data-aligned) entries of group ``k``."""
    if not 0 <= k < layout.n_groups:
        raise IndexError(f"group {k} out of range [0, {layout.n_groups})")
    values = np.asarray(values)
    return values[..., layout.pilots[k]], values[..., layout.data[k]]


def qpsk_map(bits) -> np.ndarray:
    """Gray QPSK: ``(b0, b1) -> ((1 - 2 b0) + 1j (1 - 2 b1)) / sqrt(2)``."""
    bits = np.asarray(bits, dtype=np.int8)
    if bits.shape[-1] % 2:
        raise ValueError(f"qpsk_map needs an even number of bits, got {bits.shape[-1]}")
    pairs = bits.reshape(*bits.shape[:-1], bits.shape[-1] // 2, 2)
    return ((1 - 2 * pairs[..., 0]) + 1j * (1 - 2 * pairs[..., 1])) * SQRT_HALF


def qpsk_demap(symbols) -> np.ndarray:
    """Hard sign decisions, inverse of :func:`qpsk_map`."""
    symbols = np.asarray(symbols)
    out = np.empty(symbols.shape + (2,), dtype=np.uint8)
    out[..., 0] = symbols.real < 0
    out[..., 1] = symbols.imag < 0
    return out.reshape(*symbols.shape[:-1], -1)


@dataclass(frozen=True)
class FrameGrid:
    """Frequency-domain content of one frame.

    ``symbols`` holds ``n_block_pilot`` fully known block pilot symbols
    followed by ``n_data`` data symbols, shape ``(n_symbols, k_used)``.
    ``data_bits`` has shape ``(n_data, 2 * n_data_bins)``.
    """

    symbols: np.ndarray
    data_bits: np.ndarray
    n_block_pilot: int = field(default=1)

    @property
    def block(self) -> np.ndarray:
        return self.symbols[: self.n_block_pilot]

    @property
    def data_symbols(self) -> np.ndarray:
        return self.symbols[self.n_block_pilot :]


def build_frame(cfg: OfdmConfig, rng: np.random.Generator) -> FrameGrid:
    """Random frame: QPSK block pilots, then data symbols with comb pilots."""
    block_bits = rng.integers(0, 2, (cfg.n_block_pilot, 2 * cfg.k_used), dtype=np.uint8)
    data_bits = rng.integers(0, 2, (cfg.n_data, 2 * cfg.n_data_bins), dtype=np.uint8)
    symbols = np.empty((cfg.n_symbols, cfg.k_used), dtype=np.complex128)
    symbols[: cfg.n_block_pilot] = qpsk_map(block_bits)
    data = symbols[cfg.n_block_pilot :]
    data[:, pilot_indices(cfg)] = cfg.pilot_values()
    data[:, cfg.data_positions()] = qpsk_map(data_bits)
    return FrameGrid(symbols=symbols, data_bits=data_bits, n_block_pilot=cfg.n_block_pilot)


def modulate(frame, cfg: OfdmConfig) -> np.ndarray:
    """IDFT each symbol onto the centred active block and prepend the CP.

    ``frame`` may be a :class:`FrameGrid` or an array of shape
    ``(n_sym, k_used)``. Returns the concatenated time-domain samples.
    """
    symbols = frame.symbols if isinstance(frame, FrameGrid) else np.atleast_2d(np.asarray(frame))
    if symbols.shape[-1] != cfg.k_used:
        raise ValueError(f"expected {cfg.k_used} active subcarriers, got {symbols.shape[-1]}")
    grid = np.zeros((symbols.shape[0], cfg.n_dft), dtype=np.complex128)
    grid[:, cfg.used_bins()] = symbols
    body = idft(grid)
    with_cp = np.concatenate([body[:, cfg.n_dft - cfg.cp_len :], body], axis=1)
    return with_cp.reshape(-1)


def demodulate(rx_time, cfg: OfdmConfig) -> np.ndarray:
    """Strip the CP, DFT, and return active bins with shape ``(n_sym, k_used)``."""
    rx_time = np.asarray(rx_time, dtype=np.complex128)
    if rx_time.size % cfg.symbol_len:
        raise ValueError(f"received length {rx_time.size} is not a multiple of {cfg.symbol_len}")
    blocks = rx_time.reshape(-1, cfg.symbol_len)[:, cfg.cp_len :]
    return dft(blocks)[:, cfg.used_bins()]


def zf_equalize_detect(rx_bins, h_hat):
    """Zero-forcing equalisation and hard QPSK decision.

    Bins where ``|h_hat| < 1e-12`` are not divided; their symbol estimate is
    set to ``(1 + 1j)/sqrt(2)`` (bits 00) and counted in the returned flag
    total.

    Returns
    -------
    bits : numpy.ndarray of uint8
    symbols : numpy.ndarray of complex
        Equalised (soft) symbols.
    n_flagged : int
    """
    rx_bins = np.asarray(rx_bins, dtype=np.complex128)
    h_hat = np.asarray(h_hat, dtype=np.complex128)
    tiny = np.abs(h_hat) < ZF_FLOOR
    safe = np.where(tiny, 1.0, h_hat)
    symbols = np.where(tiny, (1 + 1j) * SQRT_HALF, rx_bins / safe)
    return qpsk_demap(symbols), symbols, int(np.count_nonzero(tiny))
