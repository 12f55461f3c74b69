"""Usage/length/compression diagnostics and the mapping export."""

import numpy as np
import pytest

from ecgbyte import (
    EcgByteError,
    EcgRecord,
    NormalizationParams,
    TokenSpan,
    compression_ratio,
    export_mapping,
    length_distribution,
    token_usage,
)
from ecgbyte.analysis import merge_usage
from ecgbyte.records import default_lead_names

PARAMS = NormalizationParams(p1=-1.0, p99=1.0)


class TestTokenUsage:
    def test_counts_and_ranks(self):
        counts, ranks = token_usage([[256, 256, 97]])
        assert counts == {256: 2, 97: 1}
        assert ranks == [256, 97]

    def test_empty(self):
        counts, ranks = token_usage([])
        assert counts == {} and ranks == []

    def test_rank_tie_breaks_by_id(self):
        _, ranks = token_usage([[300, 5, 300, 5, 7]])
        assert ranks == [5, 300, 7]

    def test_shard_merge_additivity(self, rng):
        shard_a = [rng.integers(0, 50, 30).tolist() for _ in range(5)]
        shard_b = [rng.integers(0, 50, 30).tolist() for _ in range(5)]
        counts_a, _ = token_usage(shard_a)
        counts_b, _ = token_usage(shard_b)
        combined, _ = token_usage(shard_a + shard_b)
        assert merge_usage(counts_a, counts_b) == combined

    def test_total_matches_lengths(self, rng):
        records = [rng.integers(0, 9, int(rng.integers(0, 40))).tolist()
                   for _ in range(10)]
        counts, _ = token_usage(records)
        assert sum(counts.values()) == sum(len(r) for r in records)


class TestLengthDistribution:
    def test_basic_stats(self):
        summary = length_distribution([[0] * 500, [0] * 500, [0] * 1000])
        assert summary.min == 500 and summary.max == 1000
        assert summary.mean == pytest.approx(666.6667, abs=1e-3)
        assert sum(count for _, _, count in summary.bins) == 3

    def test_singleton(self):
        summary = length_distribution([[1, 2, 3]])
        assert summary.min == summary.max == 3
        assert summary.mean == 3.0

    def test_bins_cover_range(self, rng):
        records = [[0] * int(rng.integers(0, 400)) for _ in range(50)]
        summary = length_distribution(records, bin_width=50)
        lows = [lo for lo, _, _ in summary.bins]
        highs = [hi for _, hi, _ in summary.bins]
        assert lows[0] <= summary.min
        assert highs[-1] > summary.max
        assert highs[:-1] == lows[1:]  # contiguous

    def test_empty_stream(self):
        summary = length_distribution([])
        assert summary.count == 0 and summary.bins == []


class TestCompressionRatio:
    def test_reported_average(self):
        assert compression_ratio(6000, 474) == pytest.approx(12.66, abs=0.005)

    def test_identity(self):
        assert compression_ratio(6000, 6000) == 1.0

    def test_zero_tokens_rejected(self):
        with pytest.raises(EcgByteError):
            compression_ratio(6000, 0)


class TestExportMapping:
    def record(self, values):
        data = np.atleast_2d(np.asarray(values, dtype=np.float64))
        return EcgRecord(data=data, sample_rate_hz=250.0,
                         lead_names=default_lead_names(data.shape[0]))

    def test_small_example(self):
        rec = self.record([0.0, 0.1, -0.2, 0.3])
        spans = [TokenSpan(256, 0, 2), TokenSpan(97, 2, 1), TokenSpan(99, 3, 1)]
        rows = export_mapping(rec, spans, PARAMS, lead=0)
        assert [token for _, _, token in rows] == [256, 256, 97, 99]
        assert [t for t, _, _ in rows] == [0, 1, 2, 3]

    def test_values_are_bin_midpoints(self):
        rec = self.record([0.0, 0.5])
        spans = [TokenSpan(97, 0, 2)]
        rows = export_mapping(rec, spans, PARAMS, lead=0)
        half_bin = PARAMS.span / (2 * PARAMS.alphabet_size)
        for t, value, _ in rows:
            assert abs(value - rec.data[0, t]) <= half_bin

    def test_lead_out_of_range(self):
        rec = self.record(np.zeros((12, 4)))
        spans = [TokenSpan(97, 0, 48)]
        with pytest.raises(EcgByteError) as err:
            export_mapping(rec, spans, PARAMS, lead=12)
        assert err.value.code == "E_BAD_PARAM"

    def test_gap_rejected(self):
        rec = self.record([0.0, 0.1, 0.2])
        spans = [TokenSpan(97, 0, 1), TokenSpan(97, 2, 1)]
        with pytest.raises(EcgByteError) as err:
            export_mapping(rec, spans, PARAMS, lead=0)
        assert err.value.code == "E_DIMENSION"

    def test_row_count_matches_lead_samples(self, rng):
        rec = self.record(rng.normal(0, 0.5, (3, 17)))
        spans = [TokenSpan(97, i, 1) for i in range(3 * 17)]
        for lead in range(3):
            assert len(export_mapping(rec, spans, PARAMS, lead)) == 17
