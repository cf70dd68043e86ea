"""The end-to-end training loop and its artifacts.

Each step runs a fixed sequence: encode the originals and the augmented
views with independent dropout masks, take the queue-extended contrastive
loss, back-propagate and update with Adam, move the EMA shadow, and finally
enqueue the momentum encodings of the originals.  Enqueueing happens after
the loss on purpose: a batch never serves as its own negative set.

Every random draw of a run (init, corpus shuffling, augmentation, dropout)
comes from one seeded stream consumed in a fixed order, so a (config, seed)
pair fully determines the training log and the checkpoint bytes.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .augment import AugmentationConfig, apply
from .autodiff import Tensor, backward
from .contrastive import esimcse_loss
from .encoder import (
    EncoderConfig,
    encode_batch_tensors,
    init_params,
    save_checkpoint,
)
from .errors import DataError, NumericError
from .evaluation import StsPair, load_sts, score_pairs, spearman
from .momentum import (
    EmbeddingQueue,
    MomentumState,
    ema_update,
    init_momentum,
    momentum_encode,
)
from .optim import Adam
from .rng import Rng
from .tokenizer import TokenSequence, Vocab, build_vocab, tokenize_subwords

CHECKPOINT_FILE = "checkpoint.bin"
MOMENTUM_FILE = "checkpoint.momentum.bin"
VOCAB_FILE = "vocab.txt"
TRAINLOG_FILE = "trainlog.tsv"


@dataclass(frozen=True)
class TrainConfig:
    corpus_path: str = ""
    dev_path: str = ""
    checkpoint_dir: str = ""
    batch_size: int = 64
    temperature: float = 0.05
    epochs: int = 1
    eval_every: int = 125
    queue_multiple: float = 2.5
    momentum_lam: float = 0.995
    learning_rate: float = 2e-3
    seed: int = 0
    vocab_path: str = ""
    vocab_size: int = 1000
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    augmentation: AugmentationConfig = field(default_factory=AugmentationConfig)

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.eval_every < 1:
            raise ValueError(f"eval_every must be >= 1, got {self.eval_every}")
        if self.queue_multiple < 0:
            raise ValueError(f"queue multiple must be >= 0, got {self.queue_multiple}")
        if not 0.0 <= self.momentum_lam < 1.0:
            raise ValueError(f"momentum must lie in [0, 1), got {self.momentum_lam}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning rate must be positive, got {self.learning_rate}")

    @property
    def queue_capacity(self) -> int:
        return round(self.queue_multiple * self.batch_size)


@dataclass
class TrainLogRecord:
    step: int
    loss: float
    queue_fill: int
    dev_spearman: float | None = None
    timestamp: float = 0.0


class TrainLog:
    """Per-step records; saved as a TSV without the (wall-clock) timestamps."""

    def __init__(self):
        self.records: list[TrainLogRecord] = []

    def append(self, record: TrainLogRecord) -> None:
        if self.records and record.step <= self.records[-1].step:
            raise ValueError("step indices must strictly increase")
        self.records.append(record)

    def serialize(self) -> str:
        lines = []
        for r in self.records:
            line = f"{r.step}\t{float(r.loss)!r}\t{r.queue_fill}"
            if r.dev_spearman is not None:
                line += f"\t{float(r.dev_spearman)!r}"
            lines.append(line)
        return "\n".join(lines) + "\n" if lines else ""

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.serialize())


@dataclass
class TrainerState:
    config: TrainConfig
    vocab: Vocab
    params: dict[str, np.ndarray]
    adam: Adam
    momentum: MomentumState
    queue: EmbeddingQueue | None
    rng: Rng
    step: int = 0


@dataclass
class TrainStepResult:
    step: int
    loss: float
    queue_fill: int
    h: np.ndarray
    h_plus: np.ndarray


@dataclass
class TrainResult:
    best_step: int
    best_spearman: float
    baseline_spearman: float
    log: TrainLog
    params: dict[str, np.ndarray]
    momentum_params: dict[str, np.ndarray]
    vocab: Vocab
    checkpoint_path: str = ""


def init_train_state(config: TrainConfig, vocab: Vocab) -> TrainerState:
    rng = Rng(config.seed)
    params = init_params(config.encoder, len(vocab), rng, dtype=np.float32)
    queue = None
    if config.queue_multiple > 0 and config.queue_capacity >= 1:
        queue = EmbeddingQueue(config.queue_capacity, config.encoder.dim)
    return TrainerState(
        config=config,
        vocab=vocab,
        params=params,
        adam=Adam(params, lr=config.learning_rate),
        momentum=init_momentum(params, config.momentum_lam),
        queue=queue,
        rng=rng,
    )


def compose_batch(
    sentences: list[str],
    vocab: Vocab,
    aug_config: AugmentationConfig,
    rng: Rng,
) -> tuple[list[TokenSequence], list[TokenSequence]]:
    """Tokenize a batch and produce the aligned augmented views."""
    if not sentences:
        raise ValueError("cannot compose an empty batch")
    originals = [tokenize_subwords(s, vocab) for s in sentences]
    augmented = [apply(seq, aug_config, rng, vocab) for seq in originals]
    return originals, augmented


def train_step(
    state: TrainerState,
    batch: tuple[list[TokenSequence], list[TokenSequence]],
) -> TrainStepResult:
    """One optimization step in the fixed order documented above."""
    originals, augmented = batch
    config = state.config
    state.step += 1

    leaves = {name: Tensor(value) for name, value in state.params.items()}
    h = encode_batch_tensors(leaves, originals, config.encoder, True, state.rng)
    h_plus = encode_batch_tensors(leaves, augmented, config.encoder, True, state.rng)
    if state.queue is not None:
        queue_view = state.queue.view()
    else:
        queue_view = np.zeros((0, config.encoder.dim), dtype=np.float32)
    loss_t = esimcse_loss(h, h_plus, queue_view, config.temperature)
    loss = float(loss_t.value)
    if not math.isfinite(loss):
        raise NumericError(f"non-finite loss {loss} at step {state.step}")

    backward(loss_t)
    grads = {
        name: (leaf.grad if leaf.grad is not None else np.zeros_like(leaf.value))
        for name, leaf in leaves.items()
    }
    state.adam.step(grads)
    ema_update(state.momentum, state.params)
    if state.queue is not None:
        state.queue.enqueue(momentum_encode(originals, state.momentum, config.encoder))

    return TrainStepResult(
        step=state.step,
        loss=loss,
        queue_fill=state.queue.fill if state.queue is not None else 0,
        h=h.value,
        h_plus=h_plus.value,
    )


def _read_corpus(path: str) -> list[str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            sentences = [line.strip() for line in fh if line.strip()]
    except OSError as exc:
        raise DataError(f"cannot read corpus {path}: {exc}") from exc
    if not sentences:
        raise DataError(f"corpus {path} contains no sentences")
    return sentences


def _load_dev(path: str) -> tuple[list[StsPair], np.ndarray]:
    pairs = load_sts(path)
    if len(pairs) < 2:
        raise DataError(f"dev set {path} needs at least 2 pairs, got {len(pairs)}")
    gold = np.array([p.gold for p in pairs], dtype=np.float64)
    if np.all(gold == gold[0]):
        raise DataError(f"dev set {path} has constant gold scores; correlation undefined")
    return pairs, gold


def train(config: TrainConfig) -> TrainResult:
    """Run the full loop and retain the best-dev checkpoint.

    The dev set is scored with the main encoder, dropout off, every
    ``eval_every`` steps and once more at the end if the last step missed
    the cadence; the highest dev Spearman wins (earliest step on ties).
    """
    corpus = _read_corpus(config.corpus_path)
    if config.vocab_path:
        vocab = Vocab.load(config.vocab_path)
    else:
        try:
            vocab = build_vocab(corpus, config.vocab_size)
        except ValueError as exc:
            raise DataError(str(exc)) from exc
    dev_pairs, dev_gold = _load_dev(config.dev_path)

    state = init_train_state(config, vocab)

    def dev_score() -> float:
        predictions = score_pairs(dev_pairs, state.params, config.encoder, vocab)
        return float(spearman(dev_gold, predictions))

    baseline = dev_score()
    log = TrainLog()
    best_step, best_r = 0, -np.inf
    best_params: dict[str, np.ndarray] = {}
    best_momentum: dict[str, np.ndarray] = {}

    def consider_best(step: int, r: float) -> None:
        nonlocal best_step, best_r, best_params, best_momentum
        if r > best_r:
            best_step, best_r = step, r
            best_params = {k: v.copy() for k, v in state.params.items()}
            best_momentum = {k: v.copy() for k, v in state.momentum.params.items()}

    for _ in range(config.epochs):
        order = list(range(len(corpus)))
        state.rng.shuffle(order)
        for lo in range(0, len(order), config.batch_size):
            sentences = [corpus[i] for i in order[lo : lo + config.batch_size]]
            batch = compose_batch(sentences, vocab, config.augmentation, state.rng)
            result = train_step(state, batch)
            record = TrainLogRecord(
                step=result.step,
                loss=result.loss,
                queue_fill=result.queue_fill,
                timestamp=time.time(),
            )
            if result.step % config.eval_every == 0:
                record.dev_spearman = dev_score()
                consider_best(result.step, record.dev_spearman)
            log.append(record)

    last = log.records[-1]
    if last.dev_spearman is None:
        last.dev_spearman = dev_score()
        consider_best(last.step, last.dev_spearman)

    checkpoint_path = ""
    if config.checkpoint_dir:
        os.makedirs(config.checkpoint_dir, exist_ok=True)
        vocab.save(os.path.join(config.checkpoint_dir, VOCAB_FILE))
        checkpoint_path = os.path.join(config.checkpoint_dir, CHECKPOINT_FILE)
        save_checkpoint(
            checkpoint_path, best_params, config.encoder, len(vocab), vocab.sha256()
        )
        save_checkpoint(
            os.path.join(config.checkpoint_dir, MOMENTUM_FILE),
            best_momentum,
            config.encoder,
            len(vocab),
            vocab.sha256(),
        )
        log.save(os.path.join(config.checkpoint_dir, TRAINLOG_FILE))

    return TrainResult(
        best_step=best_step,
        best_spearman=float(best_r),
        baseline_spearman=baseline,
        log=log,
        params=best_params,
        momentum_params=best_momentum,
        vocab=vocab,
        checkpoint_path=checkpoint_path,
    )
