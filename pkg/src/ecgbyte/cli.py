"""Command-line pipeline.

Subcommands cover the full flow: ``preprocess`` raw records and record
global percentiles, ``sample`` a representative training subset,
``train`` the tokenizer, ``encode``/``decode`` symbol streams, ``stats``
for usage/length/compression reports, and ``assemble`` LLM-ready
sequences. Heavy imports happen inside each handler so the fast paths
stay fast. Every failure exits 1 with a one-line ``E_CODE: message`` on
stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import TOKENIZER_FORMAT, __version__
from .errors import E_BAD_FORMAT, E_BAD_PARAM, E_DIMENSION, E_IO, EcgByteError

log = logging.getLogger("ecgbyte")

RECORD_SUFFIXES = (".csv", ".bin", ".ecgb")
SYMBOL_SUFFIX = ".sym"


def _setup_logging() -> None:
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("ECG_BYTE_LOG", "error").lower(), logging.ERROR)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _map_ordered(func, items, jobs: int):
    """Apply in parallel, preserving input order."""
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_preprocess(args) -> int:
    from .preprocess import PreprocessConfig, estimate_percentiles, load_config, preprocess_record
    from .quantize import NormalizationParams, save_params
    from .records import iter_record_files, load_record, save_record

    cfg = load_config(args.config) if args.config else PreprocessConfig()
    if args.keep_full is not None:
        cfg.keep_full = args.keep_full
    if args.seed is not None:
        cfg.seed = args.seed
    files = iter_record_files(args.in_dir)
    if not files:
        raise EcgByteError(E_IO, f"no record files in {args.in_dir}")
    out = _out_dir(args.out_dir)

    def process(path: Path):
        return preprocess_record(load_record(path), cfg)

    results = _map_ordered(process, files, args.jobs)

    def saved_windows():
        for path, windows in zip(files, results):
            for i, win in enumerate(windows):
                name = f"{path.stem}.full.bin" if cfg.keep_full else f"{path.stem}.w{i:03d}.bin"
                save_record(win, out / name)
                yield win

    stats = estimate_percentiles(saved_windows(), cfg.sample_budget, cfg.seed)
    params = NormalizationParams(p1=stats.p1, p99=stats.p99)
    save_params(params, out / "percentiles.txt")
    log.info("preprocessed %d records; p1=%.6g p99=%.6g from %d samples",
             len(files), stats.p1, stats.p99, stats.sample_count)
    return 0


def cmd_sample(args) -> int:
    from .records import iter_record_files, load_record
    from .sampling import cluster, extract_features, fit_pca, select_k, stratified_sample

    files = iter_record_files(args.in_dir)
    if not files:
        raise EcgByteError(E_IO, f"no record files in {args.in_dir}")
    if args.count > len(files):
        raise EcgByteError(E_BAD_PARAM,
                           f"requested {args.count} records, only {len(files)} available")

    def features(indexed):
        index, path = indexed
        return extract_features(load_record(path), record_index=index)

    vectors = _map_ordered(features, list(enumerate(files)), args.jobs)
    scores, model = fit_pca(vectors, variance_target=args.variance)
    k_max = min(args.k_max, len(files) - 1)
    k = select_k(scores, k_max=k_max, seed=args.seed) if k_max >= 2 else 1
    model_full = cluster(scores, k, seed=args.seed)
    chosen = stratified_sample(model_full, args.count, seed=args.seed)

    manifest = Path(args.out)
    manifest.parent.mkdir(parents=True, exist_ok=True)
    base = manifest.parent.resolve()
    with open(manifest, "w", encoding="utf-8", newline="\n") as fh:
        for index in chosen:
            fh.write(os.path.relpath(files[index].resolve(), base) + "\n")
    labels = model_full.assignments.tolist()
    sizes: dict[str, int] = {}
    for lab in sorted(set(labels)):
        sizes[str(lab)] = labels.count(lab)
    summary = {"k": model_full.k, "method": model_full.method,
               "cluster_sizes": sizes,
               "retained_variance": model.retained_variance}
    Path(str(manifest) + ".summary.json").write_text(
        json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    log.info("sampled %d of %d records into %s", len(chosen), len(files), manifest)
    return 0


def _manifest_records(manifest: str | Path) -> list[Path]:
    manifest = Path(manifest)
    if not manifest.is_file():
        raise EcgByteError(E_IO, f"no such manifest: {manifest}")
    base = manifest.parent
    paths = []
    for line in manifest.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        path = Path(line)
        paths.append(path if path.is_absolute() else base / path)
    if not paths:
        raise EcgByteError(E_IO, f"manifest {manifest} lists no records")
    return paths


def cmd_train(args) -> int:
    from .bpe import save_tokenizer, train
    from .quantize import concat_corpus, flatten, load_params, quantize_record
    from .records import load_record

    if args.corpus:
        corpus_path = Path(args.corpus)
        if not corpus_path.is_file():
            raise EcgByteError(E_IO, f"no such corpus file: {corpus_path}")
        corpus = corpus_path.read_bytes()
        alphabet_size = args.alphabet_size
    else:
        if not args.manifest or not args.percentiles:
            raise EcgByteError(E_BAD_PARAM,
                               "train needs --manifest and --percentiles (or --corpus)")
        params = load_params(args.percentiles)
        alphabet_size = params.alphabet_size
        sequences = [flatten(quantize_record(load_record(p), params))
                     for p in _manifest_records(args.manifest)]
        corpus = concat_corpus(sequences)
    if not corpus:
        raise EcgByteError(E_BAD_PARAM, "training corpus is empty")

    ids, tok = train(corpus, args.num_merges, alphabet_size=alphabet_size, jobs=args.jobs)
    save_tokenizer(tok, args.out)
    log.info("trained %d merges on %d symbols -> %d tokens (%.2fx)",
             tok.num_merges, len(corpus), len(ids), len(corpus) / max(1, len(ids)))
    return 0


def _encode_inputs(in_dir: str) -> list[Path]:
    directory = Path(in_dir)
    if not directory.is_dir():
        raise EcgByteError(E_IO, f"not a directory: {directory}")
    wanted = set(RECORD_SUFFIXES) | {SYMBOL_SUFFIX}
    files = sorted(p for p in directory.iterdir()
                   if p.is_file() and p.suffix.lower() in wanted)
    if not files:
        raise EcgByteError(E_IO, f"no record or symbol files in {directory}")
    return files


def cmd_encode(args) -> int:
    from .bpe import load_tokenizer
    from .codec import (build_trie, encode, encode_with_spans,
                        write_encoded_binary, write_encoded_text, write_spans_jsonl)
    from .quantize import flatten, load_params, quantize_record
    from .records import load_record

    tok = load_tokenizer(args.tokenizer)
    trie = build_trie(tok)
    files = _encode_inputs(args.in_dir)
    params = None
    if any(p.suffix.lower() != SYMBOL_SUFFIX for p in files):
        if not args.percentiles:
            raise EcgByteError(E_BAD_PARAM,
                               "--percentiles is required to encode record files")
        params = load_params(args.percentiles)

    def symbols_for(path: Path) -> bytes:
        if path.suffix.lower() == SYMBOL_SUFFIX:
            return path.read_bytes()
        return flatten(quantize_record(load_record(path), params))

    def one(path: Path):
        symbols = symbols_for(path)
        if args.spans:
            spans = encode_with_spans(symbols, trie)
            return [s.token_id for s in spans], spans
        return encode(symbols, trie), None

    results = _map_ordered(one, files, args.jobs)
    id_lists = [ids for ids, _ in results]
    if args.format == "bin":
        write_encoded_binary(args.out, id_lists)
    else:
        write_encoded_text(args.out, id_lists)
    if args.spans:
        write_spans_jsonl(str(args.out) + ".spans.jsonl", [s for _, s in results])
    log.info("encoded %d inputs -> %s", len(files), args.out)
    return 0


def _parse_shape(text: str) -> tuple[int, int]:
    try:
        c, _, t = text.lower().partition("x")
        shape = (int(c), int(t))
    except ValueError as exc:
        raise EcgByteError(E_BAD_PARAM, f"bad shape {text!r}, expected CxT") from exc
    if shape[0] < 1 or shape[1] < 1:
        raise EcgByteError(E_BAD_PARAM, f"bad shape {text!r}")
    return shape


def cmd_decode(args) -> int:
    from .bpe import load_tokenizer
    from .codec import decode, read_encoded
    from .quantize import desymbolize, load_params
    from .records import save_record

    tok = load_tokenizer(args.tokenizer)
    records = read_encoded(args.in_file)
    out = _out_dir(args.out_dir)
    if args.raw:
        for i, ids in enumerate(records):
            (out / f"record_{i:05d}.sym").write_bytes(decode(ids, tok))
    else:
        if not args.percentiles or not args.shape:
            raise EcgByteError(E_BAD_PARAM,
                               "decode needs --percentiles and --shape (or --raw)")
        params = load_params(args.percentiles)
        shape = _parse_shape(args.shape)
        for i, ids in enumerate(records):
            rec = desymbolize(decode(ids, tok), params, shape, sample_rate_hz=args.fs)
            save_record(rec, out / f"record_{i:05d}.bin")
    log.info("decoded %d records into %s", len(records), out)
    return 0


def cmd_stats(args) -> int:
    from .analysis import (compression_ratio, length_distribution, token_usage,
                           write_lengths_csv, write_mapping_csv, write_usage_csv)
    from .codec import read_encoded

    encoded = read_encoded(args.in_file)
    out = _out_dir(args.out_dir)
    counts, ranks = token_usage(encoded)
    write_usage_csv(out / "usage.csv", counts, ranks)
    summary_lengths = length_distribution(encoded, bin_width=args.bin_width)
    write_lengths_csv(out / "lengths.csv", summary_lengths)
    summary = {
        "records": summary_lengths.count,
        "total_tokens": sum(len(ids) for ids in encoded),
        "distinct_tokens": len(counts),
        "length_min": summary_lengths.min,
        "length_max": summary_lengths.max,
        "length_mean": summary_lengths.mean,
    }
    if args.tokenizer:
        from .bpe import expand, load_tokenizer
        tok = load_tokenizer(args.tokenizer)
        symbol_total = sum(len(expand(ids, tok)) for ids in encoded)
        if summary["total_tokens"]:
            summary["symbol_total"] = symbol_total
            summary["compression_ratio"] = compression_ratio(
                symbol_total, summary["total_tokens"])
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n",
                                      encoding="utf-8")
    if args.record:
        if not (args.spans and args.percentiles):
            raise EcgByteError(E_BAD_PARAM,
                               "mapping export needs --record, --spans and --percentiles")
        from .analysis import export_mapping
        from .codec import read_spans_jsonl
        from .quantize import load_params
        from .records import load_record
        rec = load_record(args.record)
        spans_all = read_spans_jsonl(args.spans)
        if args.record_index >= len(spans_all):
            raise EcgByteError(E_DIMENSION,
                               f"spans file holds {len(spans_all)} records, "
                               f"index {args.record_index} requested")
        rows = export_mapping(rec, spans_all[args.record_index],
                              load_params(args.percentiles), args.lead)
        write_mapping_csv(out / f"mapping_lead{args.lead}.csv", rows)
    return 0


def cmd_assemble(args) -> int:
    from .codec import read_encoded
    from .sequence import SpecialTokens, assemble, write_layouts_jsonl

    encoded = read_encoded(args.encoded)
    qa_path = Path(args.qa)
    if not qa_path.is_file():
        raise EcgByteError(E_IO, f"no such QA file: {qa_path}")
    pairs = []
    for lineno, line in enumerate(qa_path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            pairs.append((list(obj["question_ids"]), list(obj["answer_ids"])))
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            raise EcgByteError(E_BAD_FORMAT, f"{qa_path.name}:{lineno}: {exc}") from exc
    if len(pairs) != len(encoded):
        raise EcgByteError(E_DIMENSION,
                           f"{len(encoded)} encoded records but {len(pairs)} QA pairs")
    try:
        ids = [int(v) for v in args.specials.split(",")]
        specials = SpecialTokens(*ids)
    except (ValueError, TypeError) as exc:
        raise EcgByteError(E_BAD_PARAM,
                           "--specials expects BOS,SIG_START,SIG_END,EOS ids") from exc
    layouts = [assemble(ecg_ids, q, a, args.text_vocab_size, specials)
               for ecg_ids, (q, a) in zip(encoded, pairs)]
    write_layouts_jsonl(args.out, layouts)
    log.info("assembled %d sequences into %s", len(layouts), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecg-byte",
        description="ECG tokenization pipeline: preprocess, sample, train, "
                    "encode, decode, stats, assemble.")
    parser.add_argument(
        "--version", action="version",
        version=f"ecg-byte {__version__} (tokenizer format: {TOKENIZER_FORMAT})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="condition raw records and record percentiles")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", dest="out_dir", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--keep-full", dest="keep_full", action=argparse.BooleanOptionalAction,
                   default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("sample", help="stratified cluster-based record sampling")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--k-max", dest="k_max", type=int, default=10)
    p.add_argument("--variance", type=float, default=0.95)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("train", help="train the tokenizer")
    p.add_argument("--manifest", default=None)
    p.add_argument("--percentiles", default=None)
    p.add_argument("--corpus", default=None,
                   help="raw symbol corpus file (alternative to --manifest)")
    p.add_argument("--num-merges", dest="num_merges", type=int, default=3500)
    p.add_argument("--alphabet-size", dest="alphabet_size", type=int, default=26)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("encode", help="encode records or raw symbol files")
    p.add_argument("--tokenizer", required=True)
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--percentiles", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--spans", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--format", choices=("text", "bin"), default="text")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode token ids back to symbols/records")
    p.add_argument("--tokenizer", required=True)
    p.add_argument("--in", dest="in_file", required=True)
    p.add_argument("--percentiles", default=None)
    p.add_argument("--shape", default=None, help="CxT, e.g. 12x500")
    p.add_argument("--fs", type=float, default=250.0)
    p.add_argument("--raw", action="store_true",
                   help="write decoded symbol bytes instead of records")
    p.add_argument("--out", dest="out_dir", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("stats", help="usage/length/compression reports")
    p.add_argument("--in", dest="in_file", required=True)
    p.add_argument("--out", dest="out_dir", required=True)
    p.add_argument("--tokenizer", default=None,
                   help="enables compression-ratio reporting")
    p.add_argument("--bin-width", dest="bin_width", type=int, default=50)
    p.add_argument("--record", default=None, help="record file for mapping export")
    p.add_argument("--spans", default=None, help="spans JSONL for mapping export")
    p.add_argument("--percentiles", default=None)
    p.add_argument("--record-index", dest="record_index", type=int, default=0)
    p.add_argument("--lead", type=int, default=0)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("assemble", help="build LLM-ready training sequences")
    p.add_argument("--encoded", required=True)
    p.add_argument("--qa", required=True,
                   help='JSONL with {"question_ids": [...], "answer_ids": [...]}')
    p.add_argument("--text-vocab-size", dest="text_vocab_size", type=int, required=True)
    p.add_argument("--specials", required=True,
                   help="BOS,SIG_START,SIG_END,EOS ids (comma-separated)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_assemble)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args) or 0
    except EcgByteError as exc:
        message = exc.message.replace("\n", " ")
        print(f"{exc.code}: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
