"""Signal conditioning chain for raw ECG records.

Stages, applied in order by :func:`preprocess_record`: lead reordering
(12-lead records only), 50/60 Hz notch removal, 0.5-100 Hz bandpass,
0.05 Hz baseline highpass, db6 wavelet denoising, 2x decimation, and
segmentation into fixed windows. All IIR filtering is zero-phase
(forward-backward with reflective edge padding of three filter orders).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
from scipy import signal

from . import _wavelet
from .errors import E_BAD_FORMAT, E_BAD_PARAM, E_EMPTY_INPUT, EcgByteError
from .records import CANONICAL_12_LEAD, EcgRecord, reorder_leads


@dataclass
class PercentileStats:
    """Global amplitude percentiles estimated from a record stream."""

    p1: float
    p99: float
    sample_count: int

    def __post_init__(self):
        if self.p1 > self.p99:
            raise EcgByteError(E_BAD_PARAM, "p1 exceeds p99")
        if self.sample_count <= 0:
            raise EcgByteError(E_BAD_PARAM, "sample_count must be positive")


@dataclass
class PreprocessConfig:
    """Parameters of the conditioning chain (key=value file on disk)."""

    notch_freqs: tuple[float, ...] = (50.0, 60.0)
    notch_q: float = 30.0
    bp_lo: float = 0.5
    bp_hi: float = 100.0
    bp_order: int = 4
    hp_cutoff: float = 0.05
    hp_order: int = 4
    wavelet: str = "db6"
    level: int = 4
    downsample_factor: int = 2
    window_s: float = 2.0
    keep_full: bool = False
    seed: int = 0
    sample_budget: int = 300_000


def load_config(path: str | Path) -> PreprocessConfig:
    """Parse a key=value config file; unknown keys are rejected."""
    known = {f.name: f for f in fields(PreprocessConfig)}
    values: dict = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise EcgByteError(E_BAD_FORMAT, f"config line {lineno}: expected key=value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in known:
            raise EcgByteError(E_BAD_FORMAT, f"config line {lineno}: unknown key {key!r}")
        try:
            if key == "notch_freqs":
                values[key] = tuple(float(v) for v in value.split(",") if v.strip())
            elif key == "wavelet":
                values[key] = value
            elif key == "keep_full":
                values[key] = value.lower() in ("1", "true", "yes")
            elif key in ("bp_order", "hp_order", "level", "downsample_factor",
                         "seed", "sample_budget"):
                values[key] = int(value)
            else:
                values[key] = float(value)
        except ValueError as exc:
            raise EcgByteError(E_BAD_FORMAT, f"config line {lineno}: {exc}") from exc
    return PreprocessConfig(**values)


def save_config(cfg: PreprocessConfig, path: str | Path) -> None:
    lines = []
    for f in fields(PreprocessConfig):
        value = getattr(cfg, f.name)
        if f.name == "notch_freqs":
            value = ",".join(f"{v:g}" for v in value)
        elif f.name == "keep_full":
            value = "true" if value else "false"
        lines.append(f"{f.name}={value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _zero_phase(sos: np.ndarray, data: np.ndarray, fs: float,
                settle_hz: float | None = None) -> np.ndarray:
    """Bidirectional filtering with no direction bias.

    Reflective padding is 3x the cascade order, or, when the passband
    reaches down to ``settle_hz``, long enough to outlast that edge's
    settling time (capped at the signal length); a near-DC cutoff needs
    far more padding than its order suggests. A single forward-backward
    pass also leaves a small antisymmetric edge transient, so the pass
    is run in both orientations and averaged; a symmetric input then
    stays symmetric to the last bit.
    """
    min_pad = 3 * (2 * sos.shape[0])
    if data.shape[-1] <= min_pad:
        raise EcgByteError(
            E_BAD_PARAM,
            f"signal of length {data.shape[-1]} too short for zero-phase "
            f"filtering (needs > {min_pad} samples)")
    padlen = min_pad
    if settle_hz is not None:
        padlen = min(data.shape[-1] - 1,
                     max(min_pad, math.ceil(3.0 * fs / settle_hz)))
    forward = signal.sosfiltfilt(sos, data, axis=-1, padtype="even", padlen=padlen)
    backward = signal.sosfiltfilt(sos, data[..., ::-1], axis=-1,
                                  padtype="even", padlen=padlen)[..., ::-1]
    return 0.5 * (forward + backward)


def _check_band(freq_hz: float, nyquist: float, what: str) -> None:
    if not 0 < freq_hz < nyquist:
        raise EcgByteError(E_BAD_PARAM,
                           f"{what} {freq_hz} Hz outside (0, {nyquist}) Hz")


def notch_filter(rec: EcgRecord, freq_hz: float, q: float = 30.0) -> EcgRecord:
    """Zero-phase second-order IIR notch at ``freq_hz``."""
    _check_band(freq_hz, rec.sample_rate_hz / 2, "notch frequency")
    if q <= 0:
        raise EcgByteError(E_BAD_PARAM, "notch quality factor must be positive")
    b, a = signal.iirnotch(freq_hz, q, fs=rec.sample_rate_hz)
    # narrow stopband: transients are local, the order-based pad suffices
    return rec.with_data(_zero_phase(signal.tf2sos(b, a), rec.data,
                                     rec.sample_rate_hz))


def bandpass_filter(rec: EcgRecord, lo_hz: float, hi_hz: float,
                    order: int = 4) -> EcgRecord:
    """Zero-phase Butterworth bandpass."""
    nyq = rec.sample_rate_hz / 2
    if not (0 < lo_hz < hi_hz < nyq):
        raise EcgByteError(E_BAD_PARAM,
                           f"invalid band edges ({lo_hz}, {hi_hz}) at fs={rec.sample_rate_hz}")
    if order < 1:
        raise EcgByteError(E_BAD_PARAM, "filter order must be >= 1")
    sos = signal.butter(order, [lo_hz, hi_hz], btype="bandpass",
                        fs=rec.sample_rate_hz, output="sos")
    return rec.with_data(_zero_phase(sos, rec.data, rec.sample_rate_hz, lo_hz))


def highpass_filter(rec: EcgRecord, cutoff_hz: float, order: int = 4) -> EcgRecord:
    """Zero-phase Butterworth highpass (baseline-wander removal)."""
    _check_band(cutoff_hz, rec.sample_rate_hz / 2, "highpass cutoff")
    if order < 1:
        raise EcgByteError(E_BAD_PARAM, "filter order must be >= 1")
    sos = signal.butter(order, cutoff_hz, btype="highpass",
                        fs=rec.sample_rate_hz, output="sos")
    return rec.with_data(_zero_phase(sos, rec.data, rec.sample_rate_hz, cutoff_hz))


def wavelet_denoise(rec: EcgRecord, wavelet: str = "db6", level: int = 4) -> EcgRecord:
    """Soft-threshold wavelet denoising.

    Per lead: decompose to ``level`` levels, estimate the noise scale as
    MAD of the finest detail band divided by 0.6745, shrink every detail
    coefficient by the universal threshold sigma*sqrt(2*ln(n)), rebuild.
    """
    if wavelet != "db6":
        raise EcgByteError(E_BAD_PARAM, f"unsupported wavelet {wavelet!r}")
    n = rec.n_samples
    if n < 2 ** level:
        raise EcgByteError(E_BAD_PARAM,
                           f"record of length {n} too short for level-{level} denoising")
    out = np.empty_like(rec.data)
    for i in range(rec.n_leads):
        approx, details, lengths = _wavelet.wavedec(rec.data[i], level)
        finest = details[-1]
        sigma = float(np.median(np.abs(finest))) / 0.6745
        lam = sigma * math.sqrt(2.0 * math.log(n))
        details = [_wavelet.soft_threshold(d, lam) for d in details]
        out[i] = _wavelet.waverec(approx, details, lengths)
    return rec.with_data(out)


def downsample(rec: EcgRecord, factor: int) -> EcgRecord:
    """Keep every ``factor``-th sample starting at index 0."""
    if factor < 1:
        raise EcgByteError(E_BAD_PARAM, f"downsample factor must be >= 1, got {factor}")
    if factor == 1:
        return rec
    return rec.with_data(rec.data[:, ::factor],
                         sample_rate_hz=rec.sample_rate_hz / factor)


def segment_windows(rec: EcgRecord, window_s: float) -> list[EcgRecord]:
    """Split into non-overlapping windows; the trailing remainder is dropped."""
    width = window_s * rec.sample_rate_hz
    w = int(round(width))
    if w <= 0 or abs(width - w) > 1e-9:
        raise EcgByteError(E_BAD_PARAM,
                           f"window of {window_s} s is not a whole number of samples "
                           f"at {rec.sample_rate_hz} Hz")
    count = rec.n_samples // w
    return [rec.with_data(rec.data[:, i * w:(i + 1) * w].copy()) for i in range(count)]


def estimate_percentiles(records: Iterable[EcgRecord], sample_budget: int = 300_000,
                         seed: int = 0) -> PercentileStats:
    """Reservoir-sample scalar values from a record stream, then take the
    empirical 1st/99th percentiles (linear interpolation).

    Single pass, seeded, so the estimate is reproducible.
    """
    if sample_budget < 100:
        raise EcgByteError(E_BAD_PARAM, "sample budget must be >= 100")
    rng = np.random.default_rng(seed)
    reservoir = np.empty(sample_budget, dtype=np.float64)
    seen = 0
    for rec in records:
        values = rec.data.ravel()
        m = values.size
        if seen < sample_budget:
            take = min(sample_budget - seen, m)
            reservoir[seen:seen + take] = values[:take]
            seen += take
            values = values[take:]
            m = values.size
            if m == 0:
                continue
        # vectorized reservoir step: element with global index i replaces a
        # uniform slot with probability budget/i (fancy assignment applies
        # in order, so later elements win ties like the sequential algorithm)
        slots = rng.integers(0, seen + 1 + np.arange(m), dtype=np.int64)
        hits = slots < sample_budget
        reservoir[slots[hits]] = values[hits]
        seen += m
    if seen == 0:
        raise EcgByteError(E_EMPTY_INPUT, "cannot estimate percentiles of an empty stream")
    used = min(seen, sample_budget)
    p1, p99 = np.percentile(reservoir[:used], [1.0, 99.0])
    return PercentileStats(p1=float(p1), p99=float(p99), sample_count=used)


def preprocess_record(rec: EcgRecord, cfg: PreprocessConfig | None = None) -> list[EcgRecord]:
    """Run the full conditioning chain on one raw record.

    Returns the list of segmented windows, or a single unsegmented record
    when ``cfg.keep_full`` is set (used for tokenizer training).
    """
    cfg = cfg or PreprocessConfig()
    if set(rec.lead_names) == set(CANONICAL_12_LEAD.names) \
            and rec.lead_names != CANONICAL_12_LEAD.names:
        rec = reorder_leads(rec, CANONICAL_12_LEAD)
    for freq in cfg.notch_freqs:
        rec = notch_filter(rec, freq, cfg.notch_q)
    rec = bandpass_filter(rec, cfg.bp_lo, cfg.bp_hi, cfg.bp_order)
    rec = highpass_filter(rec, cfg.hp_cutoff, cfg.hp_order)
    rec = wavelet_denoise(rec, cfg.wavelet, cfg.level)
    rec = downsample(rec, cfg.downsample_factor)
    if cfg.keep_full:
        return [rec]
    return segment_windows(rec, cfg.window_s)


def preprocess_stream(records: Iterable[EcgRecord],
                      cfg: PreprocessConfig | None = None) -> Iterator[EcgRecord]:
    """Preprocess a stream of raw records, yielding outputs in input order."""
    for rec in records:
        yield from preprocess_record(rec, cfg)
