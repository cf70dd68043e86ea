"""Positive-pair augmentation by token repetition, insertion, and deletion.

The headline transform duplicates a few randomly chosen sub-words, which
lengthens a sentence without changing its meaning; word-level repetition and
the insertion/deletion baselines exist for comparison.  How many positions
to touch (``dup_len``) and which ones (``dup_set``) are sampled per sentence:

    dup_len  ~ uniform over [0, max(2, floor(dup_rate * N))], clamped to N
    dup_set  ~ dup_len distinct positions uniform over {1, .., N}

Draw order per call is fixed: dup_len first, then dup_set, then one draw per
selected position in ascending position order for strategies that need extra
randomness (stop-word choice, random token choice).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

from .errors import DataError
from .rng import Rng
from .tokenizer import MASK_ID, SPECIALS, UNK_ID, TokenSequence, Vocab, _segment_word

STRATEGIES = (
    "none",
    "subword-repetition",
    "word-repetition",
    "insert-stopword",
    "insert-mask",
    "random-insert",
    "random-delete",
)


@dataclass(frozen=True)
class AugmentationConfig:
    strategy: str = "subword-repetition"
    dup_rate: float = 0.32
    stopwords: tuple[str, ...] = ()

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(
                f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}"
            )
        if not 0.0 <= self.dup_rate <= 1.0:
            raise ValueError(f"dup_rate must lie in [0, 1], got {self.dup_rate}")
        if self.strategy == "insert-stopword" and not self.stopwords:
            raise ValueError("insert-stopword needs a non-empty stop-word list")


def load_stopwords(path: str | None = None) -> tuple[str, ...]:
    """Stop words, one lowercase word per line; None loads the bundled list."""
    if path is None:
        text = (
            resources.files("sencore").joinpath("data/stopwords.txt").read_text("utf-8")
        )
    else:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise DataError(f"cannot read stop-word list {path}: {exc}") from exc
    words = tuple(w.strip() for w in text.splitlines() if w.strip())
    if not words:
        raise DataError(f"stop-word list {path or '(bundled)'} is empty")
    return words


def sample_dup_len(n: int, dup_rate: float, rng: Rng) -> int:
    """How many positions to duplicate in a sequence of ``n`` units.

    Uniform over the inclusive range [0, max(2, floor(dup_rate * n))], then
    clamped to ``n`` so that distinct positions can still be drawn.
    """
    if n < 0:
        raise ValueError(f"unit count must be non-negative, got {n}")
    if n == 0:
        return 0
    upper = min(n, max(2, math.floor(dup_rate * n)))
    return rng.randint(upper + 1)


def sample_dup_set(n: int, dup_len: int, rng: Rng) -> list[int]:
    """``dup_len`` distinct 1-based positions from {1, .., n}, ascending."""
    if dup_len > n:
        raise ValueError(f"cannot draw {dup_len} distinct positions from {n}")
    return sorted(pos + 1 for pos in rng.sample_without_replacement(n, dup_len))


def _word_spans(seq: TokenSequence) -> list[tuple[int, int]]:
    """Half-open [start, end) token spans of each word, in order."""
    starts = [i for i, ws in enumerate(seq.word_start) if ws]
    if not starts or starts[0] != 0:
        raise ValueError("first content token must begin a word")
    return list(zip(starts, starts[1:] + [len(seq)]))


def _sample_word_positions(seq: TokenSequence, dup_rate: float, rng: Rng):
    spans = _word_spans(seq)
    dup_len = sample_dup_len(len(spans), dup_rate, rng)
    chosen = set(sample_dup_set(len(spans), dup_len, rng))
    return spans, chosen


def apply(
    seq: TokenSequence,
    config: AugmentationConfig,
    rng: Rng,
    vocab: Vocab | None = None,
) -> TokenSequence:
    """Produce the augmented counterpart of ``seq``.

    ``vocab`` is required by insert-stopword (stop words are tokenized) and
    random-insert (tokens drawn from the non-special vocabulary).  Strategy
    ``none`` returns the input unchanged and consumes no draws.
    """
    if len(seq) == 0:
        raise ValueError("cannot augment a sequence with no content tokens")
    strategy = config.strategy
    if strategy == "none":
        return seq
    if strategy == "subword-repetition":
        return _subword_repetition(seq, config.dup_rate, rng)
    if strategy == "word-repetition":
        return _word_repetition(seq, config.dup_rate, rng)
    if strategy == "insert-stopword":
        if vocab is None:
            raise ValueError("insert-stopword requires a vocab to tokenize stop words")
        return _insert_after_words(seq, config, rng, _stopword_pieces(config, rng, vocab))
    if strategy == "insert-mask":
        return _insert_after_words(seq, config, rng, lambda: ([MASK_ID], [True]))
    if strategy == "random-insert":
        if vocab is None:
            raise ValueError("random-insert requires a vocab to draw tokens from")
        n_content = len(vocab) - len(SPECIALS)
        if n_content <= 0:
            raise ValueError("vocab has no non-special tokens to insert")
        def draw():
            token_id = len(SPECIALS) + rng.randint(n_content)
            return [token_id], [True]
        return _insert_after_words(seq, config, rng, draw)
    # random-delete
    return _random_delete(seq, config.dup_rate, rng)


def _subword_repetition(seq: TokenSequence, dup_rate: float, rng: Rng) -> TokenSequence:
    n = len(seq)
    dup_len = sample_dup_len(n, dup_rate, rng)
    chosen = set(sample_dup_set(n, dup_len, rng))
    ids: list[int] = []
    word_start: list[bool] = []
    for pos in range(1, n + 1):
        ids.append(seq.ids[pos - 1])
        word_start.append(seq.word_start[pos - 1])
        if pos in chosen:
            # the copy continues the word, whatever the original's flag was
            ids.append(seq.ids[pos - 1])
            word_start.append(False)
    return TokenSequence(ids, word_start, raw=seq.raw)


def _word_repetition(seq: TokenSequence, dup_rate: float, rng: Rng) -> TokenSequence:
    spans, chosen = _sample_word_positions(seq, dup_rate, rng)
    ids: list[int] = []
    word_start: list[bool] = []
    for pos, (lo, hi) in enumerate(spans, start=1):
        ids.extend(seq.ids[lo:hi])
        word_start.extend(seq.word_start[lo:hi])
        if pos in chosen:
            # a full new word: its first sub-word starts a word again
            ids.extend(seq.ids[lo:hi])
            word_start.extend(seq.word_start[lo:hi])
    return TokenSequence(ids, word_start, raw=seq.raw)


def _stopword_pieces(config: AugmentationConfig, rng: Rng, vocab: Vocab):
    def draw():
        word = rng.choice(config.stopwords)
        pieces = _segment_word(word, vocab)
        if pieces is None:
            return [UNK_ID], [True]
        return [vocab.id(p) for p in pieces], [True] + [False] * (len(pieces) - 1)

    return draw


def _insert_after_words(
    seq: TokenSequence, config: AugmentationConfig, rng: Rng, draw
) -> TokenSequence:
    spans, chosen = _sample_word_positions(seq, config.dup_rate, rng)
    ids: list[int] = []
    word_start: list[bool] = []
    for pos, (lo, hi) in enumerate(spans, start=1):
        ids.extend(seq.ids[lo:hi])
        word_start.extend(seq.word_start[lo:hi])
        if pos in chosen:
            new_ids, new_ws = draw()
            ids.extend(new_ids)
            word_start.extend(new_ws)
    return TokenSequence(ids, word_start, raw=seq.raw)


def _random_delete(seq: TokenSequence, dup_rate: float, rng: Rng) -> TokenSequence:
    n = len(seq)
    # never delete everything: at least one content token must survive
    dup_len = min(sample_dup_len(n, dup_rate, rng), n - 1)
    chosen = set(sample_dup_set(n, dup_len, rng))
    spans = _word_spans(seq)
    ids: list[int] = []
    word_start: list[bool] = []
    for lo, hi in spans:
        first_in_word = True
        for i in range(lo, hi):
            if (i + 1) in chosen:
                continue
            ids.append(seq.ids[i])
            word_start.append(first_in_word)
            first_in_word = False
    return TokenSequence(ids, word_start, raw=seq.raw)
