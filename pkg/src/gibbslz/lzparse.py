"""Incremental (LZ78-style) parsing of integer sequences.

Each new word is the shortest block, starting where the previous word ended,
that is not among the words parsed so far. The trailing block that runs out
of input before becoming new is the remainder; it is not counted in ``c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ParseResult:
    starts: tuple          # 1-based start of each word
    lengths: tuple
    headers: tuple         # index of the word equal to this word minus its last symbol (0 = empty)
    last_symbols: tuple
    remainder_length: int
    remainder_word: int    # index of the parsed word equal to the remainder (0 if none)

    @property
    def word_count(self):
        return len(self.lengths)

    def to_csv(self):
        rows = ["word,start,length,header,last_symbol"]
        for i, row in enumerate(zip(self.starts, self.lengths, self.headers,
                                    self.last_symbols), start=1):
            rows.append(f"{i}," + ",".join(str(int(x)) for x in row))
        return "\n".join(rows) + "\n"


def lz_parse(sequence):
    """Parse ``sequence`` into distinct words using a trie of earlier words.

    Trie nodes are word indices (0 is the root/empty word); an edge
    ``(node, symbol) -> child`` exists once that extension has been parsed.
    """
    seq = np.asarray(sequence, dtype=np.int64).tolist()
    children = {}
    starts, lengths, headers, lasts = [], [], [], []
    node = 0
    start = 0
    for pos, sym in enumerate(seq):
        nxt = children.get((node, sym))
        if nxt is not None:
            node = nxt
            continue
        word = len(starts) + 1
        children[(node, sym)] = word
        starts.append(start + 1)
        lengths.append(pos - start + 1)
        headers.append(node)
        lasts.append(sym)
        node = 0
        start = pos + 1
    return ParseResult(tuple(starts), tuple(lengths), tuple(headers), tuple(lasts),
                       len(seq) - start, node)


def encode(parse):
    """Pointer code: ``(header, last symbol)`` per word, plus the remainder's word index."""
    return list(zip(parse.headers, parse.last_symbols)), parse.remainder_word


def decode(pairs, remainder_word=0):
    """Invert :func:`encode`."""
    words = [()]
    out = []
    for header, sym in pairs:
        w = words[header] + (sym,)
        words.append(w)
        out.extend(w)
    out.extend(words[remainder_word])
    return out


def code_length(parse, L):
    """Theoretical compressed length ``c (log L + 1)``, natural log."""
    c = parse.word_count
    return c * (math.log(L) + 1.0) if c else 0.0


def lz_entropy_estimate(parse, L, zeta=1.0):
    """Word-count entropy estimate ``c log L / L`` for a parse of ``ceil(zeta L)`` symbols."""
    return parse.word_count * math.log(L) / L


def check_structure(parse, sequence):
    """Assert the parse invariants; returns True or raises AssertionError."""
    seq = tuple(np.asarray(sequence, dtype=np.int64).tolist())
    words = []
    seen = set()
    pos = 0
    for t, length in zip(parse.starts, parse.lengths):
        assert t == pos + 1
        w = seq[pos:pos + length]
        assert w not in seen, "repeated word"
        assert length == 1 or w[:-1] in seen, "header was never parsed"
        seen.add(w)
        words.append(w)
        pos += length
    assert pos + parse.remainder_length == len(seq)
    rem = seq[pos:]
    assert not rem or rem in seen, "remainder should be an earlier word"
    return True
