"""Complex linear algebra, unitary DFT and random sampling helpers.

Every other module works on ``numpy.complex128`` arrays; this module owns the
conventions they share:

* DFT pair is unitary (``1/sqrt(n)`` on both directions), so a unit-power
  time-domain sample keeps unit power in every bin.
* Pseudoinverses zero singular values below ``PINV_RTOL * sigma_max``.
* Random streams use the counter-based Philox generator seeded through a
  ``numpy.random.SeedSequence``; see :func:`derive_seed`.
"""

from __future__ import annotations

import zlib

import numpy as np
import scipy.linalg

PINV_RTOL = 1e-12


class SingularSystemError(np.linalg.LinAlgError):
    """Raised when a linear system cannot be solved stably."""


def _as_vector(x) -> np.ndarray:
    return np.asarray(x, dtype=np.complex128)


def dft(x, n: int | None = None) -> np.ndarray:
    """Unitary forward DFT along the last axis.

    ``n`` is checked against the transform length rather than used for
    padding; a mismatch is a caller bug.
    """
    x = _as_vector(x)
    if n is not None and x.shape[-1] != n:
        raise ValueError(f"dft: input length {x.shape[-1]} != n={n}")
    return np.fft.fft(x, axis=-1, norm="ortho")


def idft(x, n: int | None = None) -> np.ndarray:
    """Unitary inverse DFT along the last axis."""
    x = _as_vector(x)
    if n is not None and x.shape[-1] != n:
        raise ValueError(f"idft: input length {x.shape[-1]} != n={n}")
    return np.fft.ifft(x, axis=-1, norm="ortho")


def pinv(a, rtol: float = PINV_RTOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse computed from the SVD.

    Parameters
    ----------
    a : array_like, shape (m, t)
        Matrix to invert. Must be non-empty.
    rtol : float
        Singular values below ``rtol * sigma_max`` are treated as zero.

    Returns
    -------
    numpy.ndarray, shape (t, m)

    Raises
    ------
    numpy.linalg.LinAlgError
        If the SVD fails to converge.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"pinv: expected a non-empty matrix, got shape {a.shape}")
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[1], a.shape[0]), dtype=np.complex128)
    keep = s > rtol * s[0]
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (vh.conj().T * s_inv) @ u.conj().T


def matrix_rank(a, rtol: float = PINV_RTOL) -> int:
    """Numerical rank using the same cutoff as :func:`pinv`."""
    s = np.linalg.svd(np.asarray(a, dtype=np.complex128), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


def herm_solve(a, b) -> np.ndarray:
    """Solve ``a @ x = b`` for Hermitian positive definite ``a``.

    Uses a Cholesky factorisation. A matrix that is not numerically positive
    definite (for instance PSD correlation without diagonal loading) raises
    :class:`SingularSystemError` instead of returning garbage.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"herm_solve: a must be square, got {a.shape}")
    if b.shape[0] != a.shape[0]:
        raise ValueError(f"herm_solve: b has {b.shape[0]} rows, a is {a.shape[0]}x{a.shape[0]}")
    try:
        factor = scipy.linalg.cho_factor(a, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"herm_solve: matrix is not positive definite ({exc})") from exc
    return scipy.linalg.cho_solve(factor, b)


def sample_cgauss(rng: np.random.Generator, variance: float, size=None) -> np.ndarray | complex:
    """Draw circularly symmetric complex Gaussian samples of total power ``variance``."""
    if variance < 0:
        raise ValueError(f"variance must be non-negative, got {variance}")
    scale = np.sqrt(variance / 2.0)
    if size is None:
        if variance == 0:
            return 0j
        return complex(scale * rng.standard_normal(), scale * rng.standard_normal())
    out = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    out *= scale
    return out


def key_to_int(key) -> int:
    """Stable non-negative integer for a seed-derivation key component."""
    if isinstance(key, (int, np.integer)):
        if key < 0:
            return zlib.crc32(str(int(key)).encode())
        return int(key)
    if isinstance(key, float):
        return zlib.crc32(repr(key).encode())
    return zlib.crc32(str(key).encode())


def derive_seed(master_seed: int, *keys) -> np.random.SeedSequence:
    """Seed sequence for a named sub-stream of ``master_seed``.

    Keys may be ints, floats or strings; strings and floats are mapped to
    integers with CRC-32 so the derivation is identical on every platform.
    """
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(key_to_int(k) for k in keys))


def make_rng(seed) -> np.random.Generator:
    """Philox-backed generator from an int or a ``SeedSequence``."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(seed))
