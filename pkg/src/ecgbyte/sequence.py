"""Training-ready sequence layout around encoded signal tokens.

A sequence is [BOS] [SIG_START] X [SIG_END] Q S [EOS], where X are the
signal token ids offset into an extended vocabulary (text vocab first,
signal ids after), Q the pre-tokenized question, and S the pre-tokenized
answer. Positions are 1-indexed; the supervised region is the answer
plus the closing [EOS].
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import E_BAD_PARAM, E_RANGE, EcgByteError


@dataclass(frozen=True)
class SpecialTokens:
    bos: int
    sig_start: int
    sig_end: int
    eos: int

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.bos, self.sig_start, self.sig_end, self.eos)


@dataclass
class SequenceLayout:
    ids: list[int]
    l_x: int          # encoded-signal token count
    l_q: int          # question token count
    l_s: int          # answer token count
    length: int       # total sequence length
    loss_start: int   # first supervised position, 1-indexed


def assemble(ecg_ids: Sequence[int], question_ids: Sequence[int],
             answer_ids: Sequence[int], text_vocab_size: int,
             specials: SpecialTokens) -> SequenceLayout:
    """Offset signal ids past the text vocabulary and lay out the sequence."""
    if text_vocab_size < 1:
        raise EcgByteError(E_BAD_PARAM, "text vocab size must be positive")
    special_set = set(specials.as_tuple())
    if len(special_set) != 4:
        raise EcgByteError(E_BAD_PARAM, "special token ids must be distinct")
    offset_ecg = [text_vocab_size + int(i) for i in ecg_ids]
    if any(s < text_vocab_size for s in special_set):
        raise EcgByteError(E_RANGE, "special token id collides with the text vocabulary")
    collisions = special_set.intersection(offset_ecg)
    if collisions:
        raise EcgByteError(E_RANGE,
                           f"special token id collides with signal ids: {sorted(collisions)}")
    for name, toks in (("question", question_ids), ("answer", answer_ids)):
        bad = [t for t in toks if not 0 <= int(t) < text_vocab_size]
        if bad:
            raise EcgByteError(E_RANGE, f"{name} id {bad[0]} outside the text vocabulary")
    ids = ([specials.bos, specials.sig_start] + offset_ecg + [specials.sig_end]
           + [int(t) for t in question_ids] + [int(t) for t in answer_ids]
           + [specials.eos])
    l_x, l_q, l_s = len(ecg_ids), len(question_ids), len(answer_ids)
    return SequenceLayout(ids=ids, l_x=l_x, l_q=l_q, l_s=l_s,
                          length=4 + l_x + l_q + l_s,
                          loss_start=l_x + l_q + 4)


def loss_mask(layout: SequenceLayout) -> list[bool]:
    """True exactly over the supervised suffix (answer plus [EOS])."""
    return [pos >= layout.loss_start for pos in range(1, layout.length + 1)]


def write_layouts_jsonl(path: str | Path, layouts: Iterable[SequenceLayout]) -> None:
    """Training records: {"ids": [...], "loss_start": int, "L": int}."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for layout in layouts:
            fh.write(json.dumps({"ids": layout.ids, "loss_start": layout.loss_start,
                                 "L": layout.length}) + "\n")
