"""End-to-end pipeline through the command-line interface."""

import json
import subprocess
import sys

import numpy as np
import pytest

from ecgbyte import (
    NormalizationParams,
    flatten,
    load_params,
    load_record,
    load_tokenizer,
    quantize_record,
    read_encoded,
    save_record,
)
from ecgbyte.cli import main

from conftest import synthetic_record


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Raw records -> preprocess -> sample -> train, shared by the tests."""
    root = tmp_path_factory.mktemp("pipeline")
    raw = root / "raw"
    raw.mkdir()
    rng = np.random.default_rng(99)
    for i in range(12):
        rec = synthetic_record(rng, n_leads=4, n_samples=5000, fs=500.0)
        save_record(rec, raw / f"rec{i:02d}.bin")

    pre = root / "pre"
    assert main(["preprocess", "--in", str(raw), "--out", str(pre),
                 "--keep-full", "--seed", "1"]) == 0
    assert main(["sample", "--in", str(pre), "--count", "6", "--seed", "2",
                 "--k-max", "3", "--out", str(root / "manifest.txt")]) == 0
    assert main(["train", "--manifest", str(root / "manifest.txt"),
                 "--percentiles", str(pre / "percentiles.txt"),
                 "--num-merges", "64", "--out", str(root / "tok.ecgbyte")]) == 0
    return root


class TestPreprocess(object):
    def test_outputs(self, pipeline):
        pre = pipeline / "pre"
        outputs = sorted(pre.glob("*.full.bin"))
        assert len(outputs) == 12
        rec = load_record(outputs[0])
        assert rec.data.shape == (4, 2500)
        assert rec.sample_rate_hz == 250.0
        params = load_params(pre / "percentiles.txt")
        assert params.p1 < params.p99


class TestSample:
    def test_manifest_and_summary(self, pipeline):
        lines = (pipeline / "manifest.txt").read_text().splitlines()
        assert len(lines) == 6
        for line in lines:
            assert ((pipeline / "manifest.txt").parent / line).is_file()
        summary = json.loads((pipeline / "manifest.txt.summary.json").read_text())
        assert set(summary) == {"k", "method", "cluster_sizes", "retained_variance"}
        assert sum(summary["cluster_sizes"].values()) == 12
        assert summary["retained_variance"] >= 0.95

    def test_deterministic_manifest(self, pipeline, tmp_path):
        out = tmp_path / "manifest2.txt"
        assert main(["sample", "--in", str(pipeline / "pre"), "--count", "6",
                     "--seed", "2", "--k-max", "3", "--out", str(out)]) == 0
        ours = out.read_text().splitlines()
        theirs = (pipeline / "manifest.txt").read_text().splitlines()
        # identifiers are relative to each manifest, so compare the names
        assert [line.split("/")[-1] for line in ours] == \
            [line.split("/")[-1] for line in theirs]


class TestTrain:
    def test_tokenizer_loads(self, pipeline):
        tok = load_tokenizer(pipeline / "tok.ecgbyte")
        assert tok.num_merges == 64

    def test_deterministic(self, pipeline, tmp_path):
        out = tmp_path / "tok2.ecgbyte"
        assert main(["train", "--manifest", str(pipeline / "manifest.txt"),
                     "--percentiles", str(pipeline / "pre" / "percentiles.txt"),
                     "--num-merges", "64", "--out", str(out)]) == 0
        assert out.read_bytes() == (pipeline / "tok.ecgbyte").read_bytes()

    def test_raw_corpus_training(self, tmp_path):
        corpus = tmp_path / "corpus.sym"
        corpus.write_bytes(b"abcabcabc" * 50)
        out = tmp_path / "tok.ecgbyte"
        assert main(["train", "--corpus", str(corpus), "--num-merges", "3",
                     "--out", str(out)]) == 0
        assert load_tokenizer(out).num_merges == 3


class TestEncodeDecode:
    def test_round_trip_exact(self, pipeline, tmp_path):
        pre = pipeline / "pre"
        ids_path = tmp_path / "ids.txt"
        assert main(["encode", "--tokenizer", str(pipeline / "tok.ecgbyte"),
                     "--in", str(pre), "--percentiles", str(pre / "percentiles.txt"),
                     "--out", str(ids_path), "--spans"]) == 0
        decoded = tmp_path / "decoded"
        assert main(["decode", "--tokenizer", str(pipeline / "tok.ecgbyte"),
                     "--in", str(ids_path), "--raw", "--out", str(decoded)]) == 0

        params = load_params(pre / "percentiles.txt")
        files = sorted(pre.glob("*.full.bin"))
        outs = sorted(decoded.glob("*.sym"))
        assert len(outs) == len(files)
        for rec_path, sym_path in zip(files, outs):
            expected = flatten(quantize_record(load_record(rec_path), params))
            assert sym_path.read_bytes() == expected

    def test_binary_format_and_determinism(self, pipeline, tmp_path):
        pre = pipeline / "pre"
        a, b = tmp_path / "a.ecgt", tmp_path / "b.ecgt"
        for out in (a, b):
            assert main(["encode", "--tokenizer", str(pipeline / "tok.ecgbyte"),
                         "--in", str(pre), "--percentiles",
                         str(pre / "percentiles.txt"),
                         "--out", str(out), "--format", "bin"]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert a.read_bytes()[:4] == b"ECGT"

    def test_decode_to_records(self, pipeline, tmp_path):
        pre = pipeline / "pre"
        ids_path = tmp_path / "ids.txt"
        main(["encode", "--tokenizer", str(pipeline / "tok.ecgbyte"),
              "--in", str(pre), "--percentiles", str(pre / "percentiles.txt"),
              "--out", str(ids_path)])
        decoded = tmp_path / "decoded"
        assert main(["decode", "--tokenizer", str(pipeline / "tok.ecgbyte"),
                     "--in", str(ids_path),
                     "--percentiles", str(pre / "percentiles.txt"),
                     "--shape", "4x2500", "--out", str(decoded)]) == 0
        params = load_params(pre / "percentiles.txt")
        rec = load_record(sorted(decoded.glob("*.bin"))[0])
        assert rec.data.shape == (4, 2500)
        source = load_record(sorted(pre.glob("*.full.bin"))[0])
        half_bin = params.span / (2 * params.alphabet_size)
        clipped = np.clip(source.data, params.low, params.low + params.span)
        assert np.abs(rec.data - clipped).max() <= half_bin + 1e-6


class TestStats:
    def test_reports(self, pipeline, tmp_path):
        pre = pipeline / "pre"
        ids_path = tmp_path / "ids.txt"
        main(["encode", "--tokenizer", str(pipeline / "tok.ecgbyte"),
              "--in", str(pre), "--percentiles", str(pre / "percentiles.txt"),
              "--out", str(ids_path), "--spans"])
        stats_dir = tmp_path / "stats"
        record = sorted(pre.glob("*.full.bin"))[0]
        assert main(["stats", "--in", str(ids_path), "--out", str(stats_dir),
                     "--tokenizer", str(pipeline / "tok.ecgbyte"),
                     "--record", str(record),
                     "--spans", str(ids_path) + ".spans.jsonl",
                     "--percentiles", str(pre / "percentiles.txt"),
                     "--record-index", "0", "--lead", "1"]) == 0
        summary = json.loads((stats_dir / "summary.json").read_text())
        assert summary["records"] == 12
        assert summary["compression_ratio"] > 1.0
        usage = (stats_dir / "usage.csv").read_text().splitlines()
        assert usage[0] == "id,count,rank"
        assert len(usage) == summary["distinct_tokens"] + 1
        mapping = (stats_dir / "mapping_lead1.csv").read_text().splitlines()
        assert len(mapping) == 2500 + 1  # header + one row per sample


class TestAssemble:
    def test_jsonl_output(self, pipeline, tmp_path):
        pre = pipeline / "pre"
        ids_path = tmp_path / "ids.txt"
        main(["encode", "--tokenizer", str(pipeline / "tok.ecgbyte"),
              "--in", str(pre), "--percentiles", str(pre / "percentiles.txt"),
              "--out", str(ids_path)])
        encoded = read_encoded(ids_path)
        qa = tmp_path / "qa.jsonl"
        with open(qa, "w") as fh:
            for _ in encoded:
                fh.write(json.dumps({"question_ids": [1, 2, 3],
                                     "answer_ids": [4, 5]}) + "\n")
        out = tmp_path / "train.jsonl"
        assert main(["assemble", "--encoded", str(ids_path), "--qa", str(qa),
                     "--text-vocab-size", "100",
                     "--specials", "90000,90001,90002,90003",
                     "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == len(encoded)
        first = json.loads(lines[0])
        assert first["L"] == 4 + len(encoded[0]) + 3 + 2
        assert first["loss_start"] == first["L"] - 2


class TestErrorContract:
    def test_missing_tokenizer(self, pipeline, capsys):
        code = main(["encode", "--tokenizer", str(pipeline / "missing.ecgbyte"),
                     "--in", str(pipeline / "pre"), "--out", "/dev/null"])
        assert code == 1
        err = capsys.readouterr().err
        assert err.startswith("E_NO_TOKENIZER:")
        assert err.count("\n") == 1

    def test_missing_percentiles_for_records(self, pipeline, capsys, tmp_path):
        code = main(["encode", "--tokenizer", str(pipeline / "tok.ecgbyte"),
                     "--in", str(pipeline / "pre"), "--out", str(tmp_path / "x.txt")])
        assert code == 1
        assert capsys.readouterr().err.startswith("E_BAD_PARAM:")


class TestConsoleScript:
    def test_version_output(self):
        result = subprocess.run(["ecg-byte", "--version"],
                                capture_output=True, text=True)
        assert result.returncode == 0
        assert "ecg-byte 0.1.0" in result.stdout
        assert "ecg-byte v1" in result.stdout

    def test_error_exit_code(self, tmp_path):
        result = subprocess.run(
            ["ecg-byte", "encode", "--tokenizer", str(tmp_path / "none.ecgbyte"),
             "--in", str(tmp_path), "--out", str(tmp_path / "o.txt")],
            capture_output=True, text=True)
        assert result.returncode == 1
        assert result.stderr.startswith("E_NO_TOKENIZER:")

    def test_python_dash_m_entry(self):
        result = subprocess.run([sys.executable, "-m", "ecgbyte.cli", "--version"],
                                capture_output=True, text=True)
        assert result.returncode == 0
