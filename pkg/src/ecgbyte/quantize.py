"""Amplitude quantization: signals to letter symbols and back.

Normalization maps voltages into [0, 1] using global percentiles padded
by ``eps1`` (with ``eps2`` guarding the divisor), values are clipped,
scaled by the alphabet size and floored into bins, and each bin index
is written as a lowercase ASCII letter starting at ``a`` (97). The
inverse reconstructs each symbol as its bin midpoint.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import (
    E_BAD_FORMAT,
    E_BAD_PARAM,
    E_DIMENSION,
    E_RANGE,
    EcgByteError,
)
from .records import EcgRecord, default_lead_names

ALPHABET_BASE = 97  # ord('a')


@dataclass(frozen=True)
class NormalizationParams:
    """Global constants shared by quantization and reconstruction."""

    p1: float
    p99: float
    eps1: float = 0.5
    eps2: float = 1e-6
    alphabet_size: int = 26

    def __post_init__(self):
        if self.p99 < self.p1:
            raise EcgByteError(E_BAD_PARAM, "p99 must be >= p1")
        if self.eps2 <= 0:
            raise EcgByteError(E_BAD_PARAM, "eps2 must be positive")
        if not 2 <= self.alphabet_size <= 26:
            raise EcgByteError(E_BAD_PARAM,
                               f"alphabet size must be in [2, 26], got {self.alphabet_size}")

    @property
    def low(self) -> float:
        return self.p1 - self.eps1

    @property
    def span(self) -> float:
        return (self.p99 + self.eps1) - (self.p1 - self.eps1) + self.eps2

    @property
    def bin_width(self) -> float:
        """Width of one quantization bin in original (millivolt) units."""
        return self.span / self.alphabet_size


def save_params(params: NormalizationParams, path: str | Path) -> None:
    lines = [f"{f.name}={getattr(params, f.name)!r}" for f in fields(NormalizationParams)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_params(path: str | Path) -> NormalizationParams:
    path = Path(path)
    if not path.is_file():
        raise EcgByteError(E_BAD_FORMAT, f"no such parameter file: {path}")
    values: dict = {}
    known = {f.name for f in fields(NormalizationParams)}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in known:
            raise EcgByteError(E_BAD_FORMAT, f"{path.name}:{lineno}: bad parameter line")
        try:
            values[key] = int(value) if key == "alphabet_size" else float(value)
        except ValueError as exc:
            raise EcgByteError(E_BAD_FORMAT, f"{path.name}:{lineno}: {exc}") from exc
    if "p1" not in values or "p99" not in values:
        raise EcgByteError(E_BAD_FORMAT, f"{path.name}: p1 and p99 are required")
    return NormalizationParams(**values)


def _as_matrix(rec: EcgRecord | np.ndarray) -> np.ndarray:
    if isinstance(rec, EcgRecord):
        return rec.data
    return np.asarray(rec, dtype=np.float64)


def normalize(rec: EcgRecord | np.ndarray, params: NormalizationParams) -> np.ndarray:
    """Shift/scale into [0, 1] and clip; shape is preserved."""
    x = _as_matrix(rec)
    return np.clip((x - params.low) / params.span, 0.0, 1.0)


def quantize_to_symbols(norm: np.ndarray, params: NormalizationParams) -> np.ndarray:
    """Map normalized values to a byte matrix over ``a``..``a+alphabet-1``."""
    norm = np.asarray(norm, dtype=np.float64)
    if norm.size and (norm.min() < 0.0 or norm.max() > 1.0):
        raise EcgByteError(E_RANGE, "normalized values must lie in [0, 1]")
    bins = np.minimum(np.floor(norm * params.alphabet_size),
                      params.alphabet_size - 1).astype(np.uint8)
    return bins + ALPHABET_BASE


def quantize_record(rec: EcgRecord | np.ndarray, params: NormalizationParams) -> np.ndarray:
    """normalize + quantize in one step."""
    return quantize_to_symbols(normalize(rec, params), params)


def flatten(symbols: np.ndarray) -> bytes:
    """Lead-major flattening of a C x T byte matrix (row 0 first)."""
    return np.ascontiguousarray(symbols, dtype=np.uint8).tobytes()


def concat_corpus(sequences: list[bytes]) -> bytes:
    """Concatenate flattened instances into one training corpus."""
    return b"".join(sequences)


def symbols_to_matrix(symbols: bytes, shape: tuple[int, int],
                      params: NormalizationParams) -> np.ndarray:
    """Validated view of a flat symbol sequence as a C x T byte matrix."""
    n_leads, n_samples = shape
    if len(symbols) != n_leads * n_samples:
        raise EcgByteError(E_DIMENSION,
                           f"{len(symbols)} symbols cannot fill shape {shape}")
    arr = np.frombuffer(symbols, dtype=np.uint8)
    lo, hi = ALPHABET_BASE, ALPHABET_BASE + params.alphabet_size - 1
    if arr.size and (arr.min() < lo or arr.max() > hi):
        raise EcgByteError(E_RANGE, "symbol outside the quantization alphabet")
    return arr.reshape(n_leads, n_samples)


def desymbolize(symbols: bytes, params: NormalizationParams,
                shape: tuple[int, int], sample_rate_hz: float = 250.0) -> EcgRecord:
    """Reconstruct a record from symbols using bin midpoints."""
    matrix = symbols_to_matrix(symbols, shape, params)
    bins = matrix.astype(np.float64) - ALPHABET_BASE
    values = (bins + 0.5) / params.alphabet_size * params.span + params.low
    return EcgRecord(data=values, sample_rate_hz=sample_rate_hz,
                     lead_names=default_lead_names(shape[0]))
