"""Semantic-similarity evaluation: dataset I/O, scoring, rank statistics.

Model quality is the tie-aware Spearman correlation between predicted
cosine similarities and gold scores.  The length-difference audit splits a
dataset by how different the two sentences' word counts are and reports the
correlation per group; a model that leans on length as a similarity cue
scores visibly worse on the large-difference group.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contrastive import cosine_sim
from .encoder import EncoderConfig, encode_batch
from .errors import DataError
from .tokenizer import Vocab, tokenize_subwords

GOLD_RANGE = (0.0, 5.0)
_SCORE_BATCH = 64


@dataclass(frozen=True)
class StsPair:
    sentence_a: str
    sentence_b: str
    gold: float


def load_sts(path) -> list[StsPair]:
    """Parse a 3-column TSV: ``gold<TAB>sentence_a<TAB>sentence_b``.

    Blank lines are skipped; any malformed line fails loudly with its line
    number.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    pairs: list[StsPair] = []
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise DataError(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(fields)}")
        raw_gold, sentence_a, sentence_b = fields
        try:
            gold = float(raw_gold)
        except ValueError:
            raise DataError(f"{path}:{lineno}: unparseable gold score {raw_gold!r}") from None
        if not GOLD_RANGE[0] <= gold <= GOLD_RANGE[1]:
            raise DataError(f"{path}:{lineno}: gold score {gold} outside {GOLD_RANGE}")
        if not sentence_a.strip() or not sentence_b.strip():
            raise DataError(f"{path}:{lineno}: empty sentence")
        pairs.append(StsPair(sentence_a, sentence_b, gold))
    return pairs


def score_pairs(
    pairs: list[StsPair],
    params: dict[str, np.ndarray],
    config: EncoderConfig,
    vocab: Vocab,
) -> np.ndarray:
    """Cosine similarity of each pair's two embeddings, dropout off."""
    if not pairs:
        raise ValueError("cannot score an empty pair list")
    sides = []
    for attr in ("sentence_a", "sentence_b"):
        seqs = [tokenize_subwords(getattr(p, attr), vocab) for p in pairs]
        chunks = [
            encode_batch(seqs[i : i + _SCORE_BATCH], params, config)
            for i in range(0, len(seqs), _SCORE_BATCH)
        ]
        sides.append(np.concatenate(chunks, axis=0))
    emb_a, emb_b = sides
    return np.array(
        [cosine_sim(emb_a[i], emb_b[i]) for i in range(len(pairs))], dtype=np.float64
    )


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with tied values sharing the mean of their rank span."""
    order = np.argsort(values, kind="stable")
    ordered = values[order]
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(ordered):
        j = i
        while j + 1 < len(ordered) and ordered[j + 1] == ordered[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Tie-aware Spearman correlation: Pearson on average ranks."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"need two equal-length 1D lists, got {x.shape} and {y.shape}")
    if len(x) < 2:
        raise ValueError(f"need at least 2 observations, got {len(x)}")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    cx = rx - rx.mean()
    cy = ry - ry.mean()
    vx = float(cx @ cx)
    vy = float(cy @ cy)
    if vx == 0.0 or vy == 0.0:
        raise ValueError("rank variance is zero (a list is constant)")
    return float(cx @ cy) / np.sqrt(vx * vy)


@dataclass(frozen=True)
class AuditReport:
    """Per-length-group correlation split at a word-count-difference threshold."""

    threshold: int
    r_small: float | None
    r_large: float | None
    n_small: int
    n_large: int


def length_bias_audit(
    pairs: list[StsPair], predictions: np.ndarray, threshold: int = 3
) -> AuditReport:
    """Split pairs by |word count difference| vs ``threshold`` and correlate.

    Sentence length is the whitespace word count of the raw text.  A group
    too small or too degenerate for a defined correlation reports None.
    """
    predictions = np.asarray(predictions, dtype=np.float64)
    if len(pairs) != len(predictions):
        raise ValueError(
            f"got {len(pairs)} pairs but {len(predictions)} predictions"
        )
    small_idx, large_idx = [], []
    for i, pair in enumerate(pairs):
        diff = abs(len(pair.sentence_a.split()) - len(pair.sentence_b.split()))
        (small_idx if diff <= threshold else large_idx).append(i)

    def group_r(idx: list[int]) -> float | None:
        if len(idx) < 2:
            return None
        gold = np.array([pairs[i].gold for i in idx])
        try:
            return spearman(gold, predictions[idx])
        except ValueError:
            return None

    return AuditReport(
        threshold=threshold,
        r_small=group_r(small_idx),
        r_large=group_r(large_idx),
        n_small=len(small_idx),
        n_large=len(large_idx),
    )
