"""Trie-based encoding of symbol sequences into token ids, and back.

The trie holds every base byte (ids 0-255) and the base-byte expansion
of every merge. Encoding is a greedy leftmost-longest-match scan: walk
the trie from the current position, remember the deepest node that
carries a token id, emit it, and continue after the matched span. Any
byte is at worst its own single-byte token, so encoding never fails and
decoding is the exact inverse.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .bpe import Tokenizer
from .errors import E_BAD_FORMAT, E_IO, E_UNKNOWN_ID, EcgByteError

ENCODED_MAGIC = b"ECGT"


class TrieNode:
    """One trie node: child map keyed by byte value, optional token id."""

    __slots__ = ("children", "token_id", "_flat")

    def __init__(self):
        self.children: dict[int, "TrieNode"] = {}
        self.token_id: int | None = None
        self._flat = None

    def insert(self, seq: Sequence[int], token_id: int) -> None:
        node = self
        for byte in seq:
            nxt = node.children.get(byte)
            if nxt is None:
                nxt = TrieNode()
                node.children[byte] = nxt
            node = nxt
        node.token_id = token_id


@dataclass(frozen=True)
class TokenSpan:
    """A token and the contiguous symbol range it covers."""

    token_id: int
    start: int
    length: int


def build_trie(tok: Tokenizer) -> TrieNode:
    """Trie over all base bytes plus every merge's base-byte expansion."""
    root = TrieNode()
    for byte in range(256):
        root.insert([byte], byte)
    for _, new_id in tok.merges:
        expansion = tok.vocab_tokens.get(new_id)
        if not expansion:
            raise EcgByteError(E_BAD_FORMAT, f"merge id {new_id} has no expansion")
        root.insert(expansion, new_id)
    return root


def _flatten_trie(root: TrieNode) -> tuple[dict[int, int], list[int]]:
    """Number the nodes and pack transitions into one dict.

    Node ids 0-255 are reserved for the root's single-byte children so the
    encoder can start a walk directly from the first byte's value. The
    transition key is ``node_id * 256 + byte``.
    """
    if root._flat is not None:
        return root._flat
    node_ids: dict[int, int] = {}  # id(TrieNode) -> node number
    accepts: list[int] = []
    for byte in range(256):
        child = root.children.get(byte)
        if child is None or child.token_id != byte:
            raise EcgByteError(E_BAD_FORMAT, "trie is missing a base byte token")
        node_ids[id(child)] = byte
        accepts.append(byte)
    transitions: dict[int, int] = {}
    stack = [root.children[b] for b in range(256)]
    while stack:
        node = stack.pop()
        src = node_ids[id(node)]
        for byte, child in node.children.items():
            number = len(accepts)
            node_ids[id(child)] = number
            accepts.append(-1 if child.token_id is None else child.token_id)
            transitions[src * 256 + byte] = number
            stack.append(child)
    root._flat = (transitions, accepts)
    return root._flat


def encode(symbols: bytes, trie: TrieNode) -> list[int]:
    """Greedy longest-match encoding of a byte sequence."""
    return _scan(symbols, trie, with_spans=False)


def encode_with_spans(symbols: bytes, trie: TrieNode) -> list[TokenSpan]:
    """Like :func:`encode` but each id carries its (start, length) span."""
    return _scan(symbols, trie, with_spans=True)


def _scan(symbols: bytes, trie: TrieNode, with_spans: bool):
    transitions, accepts = _flatten_trie(trie)
    out: list = []
    append = out.append
    trans_get = transitions.get
    n = len(symbols)
    i = 0
    while i < n:
        node = symbols[i]
        best_id = node  # a single byte always matches itself
        best_len = 1
        j = i + 1
        while j < n:
            node = trans_get(node * 256 + symbols[j])
            if node is None:
                break
            token = accepts[node]
            if token >= 0:
                best_id = token
                best_len = j - i + 1
            j += 1
        if with_spans:
            append(TokenSpan(best_id, i, best_len))
        else:
            append(best_id)
        i += best_len
    return out


def decode(ids: Iterable[int], tok: Tokenizer) -> bytes:
    """Expand token ids back into the symbol sequence they encode."""
    vocab = tok.vocab
    parts = []
    for token_id in ids:
        token_id = int(token_id)
        expansion = vocab.get(token_id)
        if expansion is None:
            raise EcgByteError(E_UNKNOWN_ID, f"id {token_id} is not in the vocabulary")
        parts.append(expansion)
    return b"".join(parts)


# --- encoded-stream file formats -------------------------------------------

def write_encoded_text(path: str | Path, records: Iterable[Sequence[int]]) -> None:
    """One record per line, ids as space-separated ASCII decimals."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ids in records:
            fh.write(" ".join(str(int(i)) for i in ids) + "\n")


def write_encoded_binary(path: str | Path, records: Iterable[Sequence[int]]) -> None:
    """Self-delimiting blocks: magic, u32-LE count, count u32-LE ids."""
    with open(path, "wb") as fh:
        for ids in records:
            arr = np.asarray(ids, dtype="<u4")
            fh.write(ENCODED_MAGIC + struct.pack("<I", arr.size) + arr.tobytes())


def read_encoded(path: str | Path) -> list[list[int]]:
    """Read an encoded file, auto-detecting text vs binary by magic."""
    path = Path(path)
    if not path.is_file():
        raise EcgByteError(E_IO, f"no such encoded file: {path}")
    blob = path.read_bytes()
    if blob[:4] == ENCODED_MAGIC:
        return _read_encoded_binary(path.name, blob)
    records = []
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise EcgByteError(E_BAD_FORMAT, f"{path.name}: neither text ids nor ECGT") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            records.append([])
            continue
        try:
            records.append([int(tok) for tok in line.split()])
        except ValueError as exc:
            raise EcgByteError(E_BAD_FORMAT, f"{path.name}:{lineno}: {exc}") from exc
    return records


def _read_encoded_binary(name: str, blob: bytes) -> list[list[int]]:
    records = []
    offset = 0
    while offset < len(blob):
        if blob[offset:offset + 4] != ENCODED_MAGIC or offset + 8 > len(blob):
            raise EcgByteError(E_BAD_FORMAT, f"{name}: corrupt block at byte {offset}")
        (count,) = struct.unpack_from("<I", blob, offset + 4)
        end = offset + 8 + 4 * count
        if end > len(blob):
            raise EcgByteError(E_BAD_FORMAT, f"{name}: truncated block at byte {offset}")
        records.append(np.frombuffer(blob, dtype="<u4", count=count,
                                     offset=offset + 8).tolist())
        offset = end
    return records


def write_spans_jsonl(path: str | Path,
                      spans_per_record: Iterable[Sequence[TokenSpan]]) -> None:
    """One JSON object per token: {"record", "id", "start", "len"}."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record_index, spans in enumerate(spans_per_record):
            for span in spans:
                fh.write(json.dumps({"record": record_index, "id": span.token_id,
                                     "start": span.start, "len": span.length}) + "\n")


def read_spans_jsonl(path: str | Path) -> list[list[TokenSpan]]:
    path = Path(path)
    if not path.is_file():
        raise EcgByteError(E_IO, f"no such spans file: {path}")
    per_record: dict[int, list[TokenSpan]] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            span = TokenSpan(int(obj["id"]), int(obj["start"]), int(obj["len"]))
            per_record.setdefault(int(obj.get("record", 0)), []).append(span)
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            raise EcgByteError(E_BAD_FORMAT, f"{path.name}:{lineno}: {exc}") from exc
    return [per_record[k] for k in sorted(per_record)]
