"""Byte-pair-encoding trainer over symbol corpora.

Training repeatedly counts adjacent id pairs across the whole corpus,
merges the most frequent pair into a fresh id (256, 257, ...), and
records the merge. Counts are recomputed from scratch every iteration;
pair counting is vectorized and, for large arrays, parallelized over
contiguous chunks that overlap by one element. Ties between
equal-frequency pairs break toward the smallest (left, right) pair so
training is deterministic.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import E_BAD_FORMAT, E_BAD_PARAM, E_NO_TOKENIZER, EcgByteError

FORMAT_HEADER = "ecg-byte v1"
FIRST_MERGE_ID = 256
PARALLEL_THRESHOLD = 1000  # below this, pair counting stays serial

Pair = tuple[int, int]


@dataclass
class Tokenizer:
    """Ordered merge history plus the derived vocabulary maps.

    ``vocab`` maps every id to its byte-string expansion and
    ``vocab_tokens`` to the same expansion as a list of base byte values;
    ids 0-255 are their own single byte.
    """

    merges: list[tuple[Pair, int]] = field(default_factory=list)
    vocab: dict[int, bytes] = field(default_factory=dict)
    vocab_tokens: dict[int, list[int]] = field(default_factory=dict)
    alphabet_size: int = 26

    @classmethod
    def base(cls, alphabet_size: int = 26) -> "Tokenizer":
        """Merge-free tokenizer covering the raw byte range."""
        return cls(
            merges=[],
            vocab={i: bytes([i]) for i in range(256)},
            vocab_tokens={i: [i] for i in range(256)},
            alphabet_size=alphabet_size,
        )

    @property
    def num_merges(self) -> int:
        return len(self.merges)

    @property
    def vocab_size(self) -> int:
        return 256 + len(self.merges)

    def add_merge(self, pair: Pair, new_id: int) -> None:
        left, right = pair
        self.vocab[new_id] = self.vocab[left] + self.vocab[right]
        self.vocab_tokens[new_id] = self.vocab_tokens[left] + self.vocab_tokens[right]
        self.merges.append(((left, right), new_id))


def _as_ids(ids: Sequence[int] | np.ndarray | bytes) -> np.ndarray:
    if isinstance(ids, (bytes, bytearray)):
        return np.frombuffer(bytes(ids), dtype=np.uint8).astype(np.uint32)
    return np.asarray(ids, dtype=np.uint32)


def _packed_counts_serial(ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if ids.size < 2:
        return np.empty(0, dtype=np.uint64), np.empty(0, dtype=np.int64)
    packed = (ids[:-1].astype(np.uint64) << np.uint64(32)) | ids[1:].astype(np.uint64)
    keys, counts = np.unique(packed, return_counts=True)
    return keys, counts.astype(np.int64)


def _packed_counts_parallel(ids: np.ndarray, jobs: int) -> tuple[np.ndarray, np.ndarray]:
    n = ids.size
    chunk = max(2, -(-n // jobs))
    spans = [(s, min(n, s + chunk + 1)) for s in range(0, n, chunk)]

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(lambda se: _packed_counts_serial(ids[se[0]:se[1]]), spans))
    keys = np.concatenate([p[0] for p in parts])
    counts = np.concatenate([p[1] for p in parts])
    if keys.size == 0:
        return keys, counts
    merged, inverse = np.unique(keys, return_inverse=True)
    totals = np.bincount(inverse, weights=counts.astype(np.float64))
    return merged, totals.astype(np.int64)


def _pair_counts(ids: np.ndarray, jobs: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Pair counts as (sorted packed keys, counts); parallel for large inputs."""
    if ids.size < PARALLEL_THRESHOLD:
        return _packed_counts_serial(ids)
    jobs = jobs or os.cpu_count() or 1
    if jobs <= 1:
        return _packed_counts_serial(ids)
    return _packed_counts_parallel(ids, jobs)


def get_stats(ids: Sequence[int] | np.ndarray, jobs: int | None = None) -> dict[Pair, int]:
    """Frequencies of all adjacent ordered pairs in ``ids``.

    Short inputs are counted with a plain serial loop; longer ones go
    through the chunked parallel path. Both produce identical maps.
    """
    arr = _as_ids(ids)
    if arr.size < PARALLEL_THRESHOLD:
        counts: dict[Pair, int] = {}
        seq = arr.tolist()
        for left, right in zip(seq, seq[1:]):
            pair = (left, right)
            counts[pair] = counts.get(pair, 0) + 1
        return counts
    keys, values = _pair_counts(arr, jobs)
    lefts = (keys >> np.uint64(32)).astype(np.int64).tolist()
    rights = (keys & np.uint64(0xFFFFFFFF)).astype(np.int64).tolist()
    return {(l, r): int(c) for l, r, c in zip(lefts, rights, values)}


def merge(ids: Sequence[int] | np.ndarray, pair: Pair, new_id: int) -> np.ndarray:
    """Replace non-overlapping, leftmost-first occurrences of ``pair``.

    Equivalent to a single left-to-right pass that emits ``new_id`` and
    skips two positions on a match.
    """
    arr = _as_ids(ids).copy()
    if arr.size < 2:
        return arr
    left, right = pair
    cand = np.nonzero((arr[:-1] == left) & (arr[1:] == right))[0]
    if cand.size == 0:
        return arr
    if left == right:
        # consecutive candidates overlap; keep alternate ones per run
        new_run = np.empty(cand.size, dtype=bool)
        new_run[0] = True
        np.not_equal(np.diff(cand), 1, out=new_run[1:])
        run_index = np.cumsum(new_run) - 1
        run_starts = np.nonzero(new_run)[0]
        offset_in_run = np.arange(cand.size) - run_starts[run_index]
        cand = cand[offset_in_run % 2 == 0]
    arr[cand] = new_id
    keep = np.ones(arr.size, dtype=bool)
    keep[cand + 1] = False
    return arr[keep]


def train(
    corpus: bytes | Sequence[int] | np.ndarray,
    num_merges: int,
    alphabet_size: int = 26,
    jobs: int | None = None,
    on_step: Callable[[int, np.ndarray], None] | None = None,
) -> tuple[np.ndarray, Tokenizer]:
    """Train a tokenizer by iterative most-frequent-pair merging.

    Returns the fully merged corpus ids and the tokenizer. Stops early
    when no pairs remain. ``on_step(step, ids)`` is invoked after each
    merge with the current id array (do not mutate it).
    """
    if num_merges < 0:
        raise EcgByteError(E_BAD_PARAM, "num_merges must be >= 0")
    ids = _as_ids(corpus).copy()
    tok = Tokenizer.base(alphabet_size)
    for i in range(num_merges):
        keys, counts = _pair_counts(ids, jobs)
        if keys.size == 0:
            break
        # keys are sorted, so the first maximum is the smallest (left, right)
        best = int(keys[np.argmax(counts)])
        pair = (best >> 32, best & 0xFFFFFFFF)
        new_id = FIRST_MERGE_ID + i
        ids = merge(ids, pair, new_id)
        tok.add_merge(pair, new_id)
        if on_step is not None:
            on_step(i + 1, ids)
    return ids, tok


def expand(ids: Sequence[int] | np.ndarray, tok: Tokenizer) -> bytes:
    """Base-byte expansion of an id sequence (the lossless inverse)."""
    vocab = tok.vocab
    try:
        return b"".join(vocab[int(i)] for i in ids)
    except KeyError as exc:
        raise EcgByteError(E_BAD_FORMAT, f"id {exc.args[0]} not in vocabulary") from exc


def save_tokenizer(tok: Tokenizer, path: str | Path) -> None:
    """Canonical text serialization (LF endings, no trailing whitespace)."""
    lines = [FORMAT_HEADER,
             f"alphabet_size {tok.alphabet_size}",
             f"num_merges {tok.num_merges}"]
    lines.extend(f"{left} {right} {new_id}" for (left, right), new_id in tok.merges)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_tokenizer(path: str | Path) -> Tokenizer:
    """Parse and validate a tokenizer file."""
    path = Path(path)
    if not path.is_file():
        raise EcgByteError(E_NO_TOKENIZER, f"tokenizer file not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != FORMAT_HEADER:
        raise EcgByteError(E_BAD_FORMAT,
                           f"{path.name}: expected header {FORMAT_HEADER!r}")
    if len(lines) < 3:
        raise EcgByteError(E_BAD_FORMAT, f"{path.name}: truncated tokenizer file")

    def parse_kv(line: str, key: str, lineno: int) -> int:
        parts = line.split()
        if len(parts) != 2 or parts[0] != key or not parts[1].isdigit():
            raise EcgByteError(E_BAD_FORMAT,
                               f"{path.name}:{lineno}: expected '{key} <int>'")
        return int(parts[1])

    alphabet_size = parse_kv(lines[1], "alphabet_size", 2)
    num_merges = parse_kv(lines[2], "num_merges", 3)
    if not 2 <= alphabet_size <= 26:
        raise EcgByteError(E_BAD_FORMAT, f"{path.name}: alphabet_size {alphabet_size}")
    merge_lines = lines[3:]
    if len(merge_lines) != num_merges:
        raise EcgByteError(E_BAD_FORMAT,
                           f"{path.name}: header claims {num_merges} merges, "
                           f"file has {len(merge_lines)}")
    tok = Tokenizer.base(alphabet_size)
    for i, line in enumerate(merge_lines):
        lineno = 4 + i
        parts = line.split()
        if len(parts) != 3:
            raise EcgByteError(E_BAD_FORMAT,
                               f"{path.name}:{lineno}: expected '<left> <right> <new_id>'")
        try:
            left, right, new_id = (int(p) for p in parts)
        except ValueError as exc:
            raise EcgByteError(E_BAD_FORMAT, f"{path.name}:{lineno}: {exc}") from exc
        if new_id != FIRST_MERGE_ID + i:
            raise EcgByteError(E_BAD_FORMAT,
                               f"{path.name}:{lineno}: merge ids must be consecutive "
                               f"from 256 (got {new_id}, expected {FIRST_MERGE_ID + i})")
        if left >= new_id or right >= new_id or left < 0 or right < 0:
            raise EcgByteError(E_BAD_FORMAT,
                               f"{path.name}:{lineno}: pair ({left}, {right}) references "
                               f"an id not defined before {new_id}")
        tok.add_merge((left, right), new_id)
    return tok
