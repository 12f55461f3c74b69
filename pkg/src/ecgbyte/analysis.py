"""Diagnostics over encoded corpora: token usage, length distribution,
compression ratio, and token-to-signal mapping exports."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .codec import TokenSpan
from .errors import E_BAD_PARAM, E_DIMENSION, EcgByteError
from .quantize import NormalizationParams, desymbolize, flatten, normalize, quantize_to_symbols
from .records import EcgRecord


def token_usage(encoded: Iterable[Sequence[int]]) -> tuple[dict[int, int], list[int]]:
    """Exact id counts plus ids ranked by descending count (ties by id)."""
    counts: Counter[int] = Counter()
    for ids in encoded:
        counts.update(int(i) for i in ids)
    ranks = sorted(counts, key=lambda i: (-counts[i], i))
    return dict(counts), ranks


def merge_usage(*histograms: dict[int, int]) -> dict[int, int]:
    """Combine shard histograms; equals counting the concatenation."""
    total: Counter[int] = Counter()
    for hist in histograms:
        total.update(hist)
    return dict(total)


@dataclass
class LengthSummary:
    count: int
    min: int
    max: int
    mean: float
    bin_width: int
    bins: list[tuple[int, int, int]]  # (lo, hi, count), hi exclusive


def length_distribution(encoded: Iterable[Sequence[int]],
                        bin_width: int = 50) -> LengthSummary:
    """Record-length statistics with a fixed-width histogram."""
    if bin_width < 1:
        raise EcgByteError(E_BAD_PARAM, "bin width must be >= 1")
    lengths = [len(ids) for ids in encoded]
    if not lengths:
        return LengthSummary(count=0, min=0, max=0, mean=0.0,
                             bin_width=bin_width, bins=[])
    lo = (min(lengths) // bin_width) * bin_width
    hi = max(lengths)
    bins = []
    edge = lo
    while edge <= hi:
        upper = edge + bin_width
        bins.append((edge, upper, sum(1 for n in lengths if edge <= n < upper)))
        edge = upper
    return LengthSummary(count=len(lengths), min=min(lengths), max=max(lengths),
                         mean=float(np.mean(lengths)), bin_width=bin_width, bins=bins)


def compression_ratio(symbol_len: int, token_len: int) -> float:
    """Original symbol count over encoded token count."""
    if token_len < 1:
        raise EcgByteError(E_BAD_PARAM, "token length must be >= 1")
    return symbol_len / token_len


def export_mapping(rec: EcgRecord, spans: Sequence[TokenSpan],
                   params: NormalizationParams,
                   lead: int) -> list[tuple[int, float, int]]:
    """Per-sample (time index, reconstructed value, token id) for one lead.

    The spans must tile the record's flattened symbol sequence; the
    reconstructed value is the quantization-bin midpoint of each sample.
    """
    n_leads, n_samples = rec.data.shape
    if not 0 <= lead < n_leads:
        raise EcgByteError(E_BAD_PARAM, f"lead {lead} out of range for {n_leads} leads")
    total = n_leads * n_samples
    offset = 0
    token_at = np.empty(total, dtype=np.int64)
    for span in spans:
        if span.start != offset or span.length < 1:
            raise EcgByteError(E_DIMENSION, "spans do not tile the record")
        token_at[offset:offset + span.length] = span.token_id
        offset += span.length
    if offset != total:
        raise EcgByteError(E_DIMENSION,
                           f"spans cover {offset} symbols, record has {total}")
    symbols = flatten(quantize_to_symbols(normalize(rec, params), params))
    recon = desymbolize(symbols, params, rec.data.shape,
                        sample_rate_hz=rec.sample_rate_hz)
    start = lead * n_samples
    return [(t, float(recon.data[lead, t]), int(token_at[start + t]))
            for t in range(n_samples)]


def write_usage_csv(path: str | Path, counts: dict[int, int], ranks: list[int]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "count", "rank"])
        for rank, token_id in enumerate(ranks, 1):
            writer.writerow([token_id, counts[token_id], rank])


def write_lengths_csv(path: str | Path, summary: LengthSummary) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_lo", "bin_hi", "count"])
        for lo, hi, count in summary.bins:
            writer.writerow([lo, hi, count])


def write_mapping_csv(path: str | Path, rows: list[tuple[int, float, int]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_index", "value", "token_id"])
        for t, value, token_id in rows:
            writer.writerow([t, f"{value:.6g}", token_id])
