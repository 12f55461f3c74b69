"""Minimal orthogonal wavelet transform (Daubechies-6, periodized).

Implements just what the toolkit needs: multilevel decomposition,
soft thresholding, and exact reconstruction. The filter bank is
orthonormal, so synthesis is the transpose of analysis and
``waverec(wavedec(x)) == x`` to machine precision for any length
(odd lengths are handled by repeating the final sample one level down
and trimming on the way back).
"""

from __future__ import annotations

import numpy as np

from .errors import E_BAD_PARAM, EcgByteError

# Daubechies-6 scaling filter (minimal-phase spectral factorization),
# normalized so sum == sqrt(2) and sum of squares == 1.
DB6_SCALING = np.array([
    0.11154074335010933,
    0.49462389039845256,
    0.7511339080210947,
    0.3152503517091979,
    -0.2262646939654391,
    -0.1297668675672615,
    0.0975016055873229,
    0.027522865530305782,
    -0.03158203931748593,
    0.0005538422011614948,
    0.0047772575109454995,
    -0.0010773010853084785,
])

# Analysis pair: lowpass is the time-reversed scaling filter, highpass is
# the alternating-sign scaling filter (conjugate quadrature mirror).
_DEC_LO = DB6_SCALING[::-1].copy()
_DEC_HI = (DB6_SCALING * ((-1.0) ** np.arange(len(DB6_SCALING)))).copy()


def _analysis_step(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One periodized decomposition level; ``len(x)`` must be even."""
    length = len(_DEC_LO)
    ext = np.resize(x, x.size + length - 1)  # cyclic extension
    windows = np.lib.stride_tricks.sliding_window_view(ext, length)[::2]
    return windows @ _DEC_LO, windows @ _DEC_HI


def _synthesis_step(approx: np.ndarray, detail: np.ndarray) -> np.ndarray:
    """Transpose of :func:`_analysis_step` (exact inverse, orthonormal bank)."""
    n = 2 * approx.size
    out = np.zeros(n)
    for filt, coeffs in ((_DEC_LO, approx), (_DEC_HI, detail)):
        up = np.zeros(n)
        up[::2] = coeffs
        full = np.convolve(up, filt)
        for start in range(0, full.size, n):  # fold circular wrap-around
            seg = full[start:start + n]
            out[: seg.size] += seg
    return out


def wavedec(x: np.ndarray, level: int) -> tuple[np.ndarray, list[np.ndarray], list[int]]:
    """Multilevel decomposition.

    Returns ``(approx, details, lengths)`` where ``details`` is ordered
    coarsest to finest and ``lengths[i]`` is the pre-padding input length
    at level ``i`` (needed to undo odd-length padding).
    """
    x = np.asarray(x, dtype=np.float64)
    if level < 1:
        raise EcgByteError(E_BAD_PARAM, f"decomposition level must be >= 1, got {level}")
    if x.size < 2 ** level:
        raise EcgByteError(
            E_BAD_PARAM,
            f"signal of length {x.size} too short for level-{level} decomposition")
    details: list[np.ndarray] = []
    lengths: list[int] = []
    approx = x
    for _ in range(level):
        lengths.append(approx.size)
        if approx.size % 2:
            approx = np.concatenate([approx, approx[-1:]])
        approx, detail = _analysis_step(approx)
        details.append(detail)
    details.reverse()  # coarsest first
    return approx, details, lengths


def waverec(approx: np.ndarray, details: list[np.ndarray], lengths: list[int]) -> np.ndarray:
    """Inverse of :func:`wavedec`."""
    x = np.asarray(approx, dtype=np.float64)
    for detail, orig_len in zip(details, reversed(lengths)):
        x = _synthesis_step(x, detail)[:orig_len]
    return x


def soft_threshold(coeffs: np.ndarray, lam: float) -> np.ndarray:
    """Shrink toward zero by ``lam``; a per-coefficient contraction."""
    return np.sign(coeffs) * np.maximum(np.abs(coeffs) - lam, 0.0)


def detail_energies(x: np.ndarray, level: int) -> np.ndarray:
    """Sum of squared detail coefficients per level, finest level first."""
    _, details, _ = wavedec(x, level)
    return np.array([float(np.sum(d * d)) for d in reversed(details)])
