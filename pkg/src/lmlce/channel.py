"""WSSUS tapped-delay-line channel and transmitter/receiver impairments."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .numerics import sample_cgauss
from .ofdm import OfdmConfig

BUILTIN_PROFILES = ("pedestrian_a", "pedestrian_b", "office_a", "vehicular_a")
_ALIASES = {"pb": "pedestrian_b", "pa": "pedestrian_a", "oa": "office_a", "va": "vehicular_a"}


@dataclass(frozen=True)
class PowerDelayProfile:
    """Tap delays (seconds) and linear powers normalised to unit sum."""

    delays: np.ndarray
    powers: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        delays = np.asarray(self.delays, dtype=float)
        powers = np.asarray(self.powers, dtype=float)
        if delays.ndim != 1 or delays.shape != powers.shape or delays.size == 0:
            raise ValueError("delays and powers must be equal-length non-empty vectors")
        if np.any(delays < 0) or np.any(np.diff(delays) <= 0):
            raise ValueError("tap delays must be non-negative and strictly increasing")
        if np.any(powers < 0) or powers.sum() <= 0:
            raise ValueError("tap powers must be non-negative with a positive sum")
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "powers", powers / powers.sum())

    @classmethod
    def from_db(cls, delays_ns, powers_db, name: str = "custom") -> "PowerDelayProfile":
        return cls(np.asarray(delays_ns, dtype=float) * 1e-9, 10.0 ** (np.asarray(powers_db, dtype=float) / 10), name)

    def quantized(self, sample_rate: float):
        """Sample-spaced taps: delays rounded half-up, colliding powers summed.

        Returns
        -------
        delays : numpy.ndarray of int
            Distinct sample delays, increasing.
        powers : numpy.ndarray
        """
        samples = np.floor(self.delays * sample_rate + 0.5).astype(int)
        uniq, inverse = np.unique(samples, return_inverse=True)
        powers = np.zeros(uniq.size)
        np.add.at(powers, inverse, self.powers)
        return uniq, powers

    def max_delay_samples(self, sample_rate: float) -> int:
        return int(self.quantized(sample_rate)[0][-1])


def flat_profile() -> PowerDelayProfile:
    return PowerDelayProfile(np.array([0.0]), np.array([1.0]), "flat")


def parse_profile(text: str, name: str = "custom") -> PowerDelayProfile:
    """Parse ``delay_ns power_db`` lines; ``#`` starts a comment."""
    delays, powers = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{name}:{lineno}: expected 'delay_ns power_db', got {raw!r}")
        delays.append(float(parts[0]))
        powers.append(float(parts[1]))
    return PowerDelayProfile.from_db(delays, powers, name)


def load_profile(name_or_path: str) -> PowerDelayProfile:
    """Load a built-in profile by name (or short alias) or a profile file by path."""
    key = _ALIASES.get(name_or_path.lower(), name_or_path.lower())
    if key in BUILTIN_PROFILES:
        text = resources.files("lmlce").joinpath(f"data/{key}.txt").read_text()
        return parse_profile(text, key)
    path = Path(name_or_path)
    if not path.is_file():
        raise ValueError(f"unknown channel profile {name_or_path!r}; built-ins: {', '.join(BUILTIN_PROFILES)}")
    return parse_profile(path.read_text(), path.stem)


@dataclass(frozen=True)
class ChannelRealization:
    """Sample-spaced impulse response, constant over one frame."""

    cir: np.ndarray


def sample_realization(profile: PowerDelayProfile, cfg: OfdmConfig, rng: np.random.Generator) -> ChannelRealization:
    """Draw independent Rayleigh taps with the profile powers."""
    delays, powers = profile.quantized(cfg.sample_rate)
    if delays[-1] >= cfg.cp_len:
        raise ValueError(
            f"profile {profile.name!r} spans {delays[-1]} samples, not shorter than the CP ({cfg.cp_len})"
        )
    cir = np.zeros(delays[-1] + 1, dtype=np.complex128)
    cir[delays] = sample_cgauss(rng, 1.0, delays.size) * np.sqrt(powers)
    return ChannelRealization(cir)


def cfr(real: ChannelRealization, cfg: OfdmConfig) -> np.ndarray:
    """Frequency response at the active subcarriers (non-unitary DFT of the CIR)."""
    return np.fft.fft(real.cir, cfg.n_dft)[cfg.used_bins()]


def freq_correlation(profile: PowerDelayProfile, dk, cfg: OfdmConfig):
    """``E[h_{k+dk} h_k^*]`` for the profile with quantised delays."""
    delays, powers = profile.quantized(cfg.sample_rate)
    dk_arr = np.asarray(dk, dtype=float)
    phase = np.exp(-2j * np.pi * np.multiply.outer(dk_arr, delays) / cfg.n_dft)
    out = phase @ powers
    return complex(out) if np.ndim(dk) == 0 else out


def propagate(tx_time, real: ChannelRealization, noise_var: float, rng: np.random.Generator) -> np.ndarray:
    """Linear convolution with the CIR (truncated to the input length) plus AWGN."""
    tx_time = np.asarray(tx_time, dtype=np.complex128)
    out = np.convolve(tx_time, real.cir)[: tx_time.size]
    if noise_var > 0:
        out = out + sample_cgauss(rng, noise_var, tx_time.size)
    return out


@dataclass(frozen=True)
class ImpairmentConfig:
    """Per-frame impairments.

    ``theta`` <= 0 is the timing offset in samples: the receiver's DFT window
    opens ``|theta|`` samples early, inside the cyclic prefix. ``epsilon`` is
    the CFO normalised to the subcarrier spacing.
    """

    theta: int = 0
    epsilon: float = 0.0
    clipping: bool = False
    clip_ratio: float = 1.0

    def __post_init__(self):
        if self.theta > 0:
            raise ValueError(f"theta must be <= 0, got {self.theta}")
        if abs(self.epsilon) >= 0.5:
            raise ValueError(f"|epsilon| must be < 0.5, got {self.epsilon}")
        if self.clip_ratio <= 0:
            raise ValueError("clip_ratio must be positive")


@dataclass(frozen=True)
class ScenarioImpairmentStats:
    """Ranges the per-frame STO and CFO are drawn from."""

    theta_min: int = 0
    epsilon_max: float = 0.0

    def __post_init__(self):
        if self.theta_min > 0:
            raise ValueError("theta_min must be <= 0")
        if not 0 <= self.epsilon_max < 0.5:
            raise ValueError("epsilon_max must lie in [0, 0.5)")

    def draw(self, rng: np.random.Generator, clipping: bool = False, clip_ratio: float = 1.0) -> ImpairmentConfig:
        """STO uniform over ``{theta_min, ..., 0}``, CFO uniform over ``[-eps_max, eps_max]``."""
        theta = int(rng.integers(self.theta_min, 1)) if self.theta_min < 0 else 0
        eps = float(rng.uniform(-self.epsilon_max, self.epsilon_max)) if self.epsilon_max > 0 else 0.0
        return ImpairmentConfig(theta=theta, epsilon=eps, clipping=clipping, clip_ratio=clip_ratio)


def apply_sto_cfo(rx_time, imp: ImpairmentConfig, cfg: OfdmConfig) -> np.ndarray:
    """Delay the stream by ``|theta|`` samples, then rotate by the CFO.

    Output sample ``n`` is ``y[n + theta] * exp(-2j*pi*n*eps/n_dft)`` with ``n``
    the frame-global sample index, so the CFO phase runs on across symbols.
    ``y`` is taken as zero before the frame start.
    """
    rx_time = np.asarray(rx_time, dtype=np.complex128)
    shift = -imp.theta
    if shift > cfg.cp_len:
        raise ValueError(f"|theta|={shift} exceeds the cyclic prefix ({cfg.cp_len})")
    if shift == 0 and imp.epsilon == 0.0:
        return rx_time.copy()
    out = np.zeros_like(rx_time)
    out[shift:] = rx_time[: rx_time.size - shift]
    if imp.epsilon != 0.0:
        n = np.arange(rx_time.size)
        out *= np.exp(-2j * np.pi * n * imp.epsilon / cfg.n_dft)
    return out


def effective_cfr(h_f, imp: ImpairmentConfig, cfg: OfdmConfig, n_symbols: int) -> np.ndarray:
    """Per-symbol linear channel seen after STO/CFO, shape ``(n_symbols, k_used)``.

    Combines the STO phase ramp with the CFO common phase and attenuation of
    each symbol; the CFO inter-carrier interference is excluded. Clipping is
    not part of the channel.
    """
    h = np.broadcast_to(np.asarray(h_f, dtype=np.complex128), (n_symbols, cfg.k_used)).copy()
    if imp.theta:
        h *= np.exp(2j * np.pi * cfg.freqs() * imp.theta / cfg.n_dft)
    if imp.epsilon:
        m = np.arange(cfg.n_dft)
        c0 = np.mean(np.exp(-2j * np.pi * m * imp.epsilon / cfg.n_dft))
        starts = np.arange(n_symbols) * cfg.symbol_len + cfg.cp_len
        h *= (c0 * np.exp(-2j * np.pi * starts * imp.epsilon / cfg.n_dft))[:, None]
    return h


def clip(tx_time, clip_ratio: float) -> np.ndarray:
    """Amplitude clipping at ``clip_ratio * RMS``, preserving phase."""
    if clip_ratio <= 0:
        raise ValueError("clip_ratio must be positive")
    tx_time = np.asarray(tx_time, dtype=np.complex128)
    rms = np.sqrt(np.mean(np.abs(tx_time) ** 2))
    level = clip_ratio * rms
    mag = np.abs(tx_time)
    over = mag > level
    out = tx_time.copy()
    out[over] = tx_time[over] * (level / mag[over])
    return out


def papr(x) -> float:
    """Peak-to-average power ratio (linear)."""
    p = np.abs(np.asarray(x)) ** 2
    return float(p.max() / p.mean())
