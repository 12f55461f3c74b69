"""Naive reference tokenizer used as an independent oracle.

Plain-Python, quadratic, written straight off the merge-loop definition:
count all adjacent pairs, merge the most frequent one (ties to the
smallest pair) in a single left-to-right pass, repeat. Deliberately
shares no code with the optimized implementation.
"""

from __future__ import annotations


def ref_get_stats(ids: list[int]) -> dict[tuple[int, int], int]:
    counts: dict[tuple[int, int], int] = {}
    for i in range(len(ids) - 1):
        pair = (ids[i], ids[i + 1])
        counts[pair] = counts.get(pair, 0) + 1
    return counts


def ref_merge(ids: list[int], pair: tuple[int, int], new_id: int) -> list[int]:
    out: list[int] = []
    i = 0
    while i < len(ids):
        if i + 1 < len(ids) and (ids[i], ids[i + 1]) == pair:
            out.append(new_id)
            i += 2
        else:
            out.append(ids[i])
            i += 1
    return out


def ref_train(corpus: bytes, num_merges: int):
    """Returns (ids, vocab, vocab_tokens, merges)."""
    ids = list(corpus)
    vocab = {i: bytes([i]) for i in range(256)}
    vocab_tokens = {i: [i] for i in range(256)}
    merges: list[tuple[tuple[int, int], int]] = []
    for step in range(num_merges):
        counts = ref_get_stats(ids)
        if not counts:
            break
        top = max(counts.values())
        best = min(pair for pair, count in counts.items() if count == top)
        new_id = 256 + step
        ids = ref_merge(ids, best, new_id)
        vocab[new_id] = vocab[best[0]] + vocab[best[1]]
        vocab_tokens[new_id] = vocab_tokens[best[0]] + vocab_tokens[best[1]]
        merges.append((best, new_id))
    return ids, vocab, vocab_tokens, merges


def ref_longest_match_ok(symbols: bytes, spans, token_bytes: set[bytes]) -> bool:
    """No span could be stretched one symbol and still be a known token."""
    for span in spans:
        end = span.start + span.length
        if end < len(symbols) and symbols[span.start:end + 1] in token_bytes:
            return False
    return True
