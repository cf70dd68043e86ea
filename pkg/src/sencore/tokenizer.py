"""Sub-word vocabulary construction and tokenization.

The vocabulary is built by frequency-based pair merging over a corpus:
words start as character symbols (non-initial characters carry the ``##``
continuation prefix) and the most frequent adjacent symbol pair is merged
repeatedly until the vocabulary reaches its target size.  Tokenization is
greedy longest-match per word; a word with any unmatchable remainder
collapses to a single unknown token.

Word boundaries matter downstream: the augmenter distinguishes duplicating
one sub-word from duplicating a whole word, so every token carries a
``word_start`` flag.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass

from .errors import DataError

PAD, UNK, CLS, SEP, MASK = "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"
SPECIALS = (PAD, UNK, CLS, SEP, MASK)
PAD_ID, UNK_ID, CLS_ID, SEP_ID, MASK_ID = range(5)

CONTINUATION = "##"


class Vocab:
    """Immutable token-string <-> id map with the specials at ids 0..4."""

    def __init__(self, tokens: list[str]):
        if tuple(tokens[: len(SPECIALS)]) != SPECIALS:
            raise ValueError(f"vocab must start with the specials {SPECIALS}")
        if len(set(tokens)) != len(tokens):
            raise ValueError("vocab contains duplicate tokens")
        self._tokens = tuple(tokens)
        self._index = {tok: i for i, tok in enumerate(tokens)}

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def id(self, token: str) -> int:
        return self._index[token]

    def token(self, token_id: int) -> str:
        return self._tokens[token_id]

    @property
    def tokens(self) -> tuple[str, ...]:
        return self._tokens

    def serialize(self) -> bytes:
        """One token per line, line index = id; the saved byte form."""
        return ("\n".join(self._tokens) + "\n").encode("utf-8")

    def sha256(self) -> str:
        return hashlib.sha256(self.serialize()).hexdigest()

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.serialize())

    @classmethod
    def load(cls, path) -> "Vocab":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                lines = fh.read().split("\n")
        except OSError as exc:
            raise DataError(f"cannot read vocab file {path}: {exc}") from exc
        if lines and lines[-1] == "":
            lines.pop()
        try:
            return cls(lines)
        except ValueError as exc:
            raise DataError(f"invalid vocab file {path}: {exc}") from exc


@dataclass
class TokenSequence:
    """Content token ids with word-boundary flags; no specials included."""

    ids: list[int]
    word_start: list[bool]
    raw: str = ""

    def __post_init__(self):
        if len(self.ids) != len(self.word_start):
            raise ValueError(
                f"ids and word_start lengths differ: {len(self.ids)} vs {len(self.word_start)}"
            )

    def __len__(self) -> int:
        return len(self.ids)


def tokenize_words(sentence: str) -> list[str]:
    """Lowercased whitespace-delimited words."""
    words = sentence.lower().split()
    if not words:
        raise ValueError("sentence is empty after whitespace normalization")
    return words


def _word_symbols(word: str) -> list[str]:
    return [word[0]] + [CONTINUATION + ch for ch in word[1:]]


def build_vocab(corpus, target_size: int) -> Vocab:
    """Build a merged sub-word vocabulary of roughly ``target_size`` entries.

    ``corpus`` is an iterable of sentences.  The full symbol alphabet is
    always included so every corpus character stays representable; merges
    then grow the vocabulary until the target is reached or no adjacent
    pair remains.  Ties break on higher count first, then on the
    lexicographically smaller pair, so construction is deterministic.
    """
    word_freq: Counter[str] = Counter()
    for sentence in corpus:
        if sentence.strip():
            word_freq.update(tokenize_words(sentence))
    if not word_freq:
        raise ValueError("cannot build a vocabulary from an empty corpus")

    distinct_chars = set()
    for word in word_freq:
        distinct_chars.update(word)
    floor = len(SPECIALS) + len(distinct_chars)
    if target_size < floor:
        raise ValueError(
            f"target size {target_size} is below specials + distinct characters ({floor})"
        )

    pieces = {word: _word_symbols(word) for word in word_freq}
    alphabet = sorted({sym for syms in pieces.values() for sym in syms})
    tokens = list(SPECIALS) + alphabet
    index = set(tokens)

    while len(tokens) < target_size:
        pair_freq: Counter[tuple[str, str]] = Counter()
        for word, syms in pieces.items():
            freq = word_freq[word]
            for left, right in zip(syms, syms[1:]):
                pair_freq[(left, right)] += freq
        if not pair_freq:
            break
        best = min(pair_freq.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        merged = best[0] + best[1][len(CONTINUATION):]
        for word, syms in pieces.items():
            out = []
            i = 0
            while i < len(syms):
                if i + 1 < len(syms) and (syms[i], syms[i + 1]) == best:
                    out.append(merged)
                    i += 2
                else:
                    out.append(syms[i])
                    i += 1
            pieces[word] = out
        if merged not in index:
            tokens.append(merged)
            index.add(merged)
    return Vocab(tokens)


def _segment_word(word: str, vocab: Vocab) -> list[str] | None:
    """Greedy longest-match split of one word; None when any span fails."""
    out = []
    i = 0
    while i < len(word):
        prefix = CONTINUATION if i > 0 else ""
        end = len(word)
        while end > i:
            piece = prefix + word[i:end]
            if piece in vocab:
                out.append(piece)
                break
            end -= 1
        else:
            return None
        i = end
    return out


def tokenize_subwords(sentence: str, vocab: Vocab) -> TokenSequence:
    """Segment a sentence into content token ids with word-start flags.

    A word that greedy matching cannot fully cover becomes one unknown
    token rather than a partial segmentation.
    """
    ids: list[int] = []
    word_start: list[bool] = []
    for word in tokenize_words(sentence):
        pieces = _segment_word(word, vocab)
        if pieces is None:
            ids.append(UNK_ID)
            word_start.append(True)
            continue
        for j, piece in enumerate(pieces):
            ids.append(vocab.id(piece))
            word_start.append(j == 0)
    return TokenSequence(ids, word_start, raw=sentence)


def detokenize(seq: TokenSequence, vocab: Vocab) -> str:
    """Reassemble words from a token sequence using its word-start flags."""
    words: list[str] = []
    for token_id, start in zip(seq.ids, seq.word_start):
        text = vocab.token(token_id)
        if text.startswith(CONTINUATION) and text not in SPECIALS:
            text = text[len(CONTINUATION):]
        if start or not words:
            words.append(text)
        else:
            words[-1] += text
    return " ".join(words)
