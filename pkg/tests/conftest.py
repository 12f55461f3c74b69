"""Shared synthetic-signal helpers."""

from __future__ import annotations

import numpy as np
import pytest

from ecgbyte import EcgRecord, NormalizationParams, concat_corpus, flatten, quantize_record
from ecgbyte.records import default_lead_names


def synthetic_record(rng: np.random.Generator, n_leads: int = 12,
                     n_samples: int = 500, fs: float = 250.0) -> EcgRecord:
    """ECG-shaped test signal: slow sinusoids plus periodic sharp spikes."""
    t = np.arange(n_samples) / fs
    period = 60.0 / rng.uniform(50, 90)  # beat-to-beat interval
    beats = np.arange(rng.uniform(0, period), t[-1] + period, period)
    data = np.zeros((n_leads, n_samples))
    for lead in range(n_leads):
        amp = rng.uniform(0.6, 1.6)
        phase = rng.uniform(0, 2 * np.pi)
        sig = (0.12 * np.sin(2 * np.pi * 0.8 * t + phase)
               + 0.06 * np.sin(2 * np.pi * 1.9 * t + 2 * phase))
        for bt in beats:
            sig = sig + amp * np.exp(-0.5 * ((t - bt) / 0.012) ** 2)
            sig = sig + 0.15 * amp * np.exp(-0.5 * ((t - bt - 0.16) / 0.05) ** 2)
        data[lead] = sig + rng.normal(0, 0.01, n_samples)
    return EcgRecord(data=data, sample_rate_hz=fs,
                     lead_names=default_lead_names(n_leads))


def synthetic_corpus(n_records: int, n_leads: int = 12, n_samples: int = 500,
                     seed: int = 7) -> tuple[bytes, NormalizationParams, list[EcgRecord]]:
    """Quantized corpus over synthetic records, with fitted percentiles."""
    rng = np.random.default_rng(seed)
    records = [synthetic_record(rng, n_leads, n_samples) for _ in range(n_records)]
    values = np.concatenate([rec.data.ravel() for rec in records])
    p1, p99 = np.percentile(values, [1, 99])
    params = NormalizationParams(p1=float(p1), p99=float(p99))
    corpus = concat_corpus([flatten(quantize_record(rec, params)) for rec in records])
    return corpus, params, records


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
