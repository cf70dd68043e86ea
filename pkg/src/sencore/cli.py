"""Command-line surface.

Subcommands:
    train            fit an encoder on a one-sentence-per-line corpus
    eval             score TSV datasets with a checkpoint (Spearman + Avg.)
    audit            length-difference bias report on one dataset
    embed            write sentence embeddings for a text file
    augment-preview  show what an augmentation strategy does to a sentence

Exit codes: 0 success, 1 usage or invalid option values, 2 unreadable or
malformed data, 3 numeric failure (non-finite loss).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .augment import STRATEGIES, AugmentationConfig, apply, load_stopwords
from .encoder import EncoderConfig, encode_batch, load_checkpoint
from .errors import DataError, NumericError
from .evaluation import length_bias_audit, load_sts, score_pairs, spearman
from .rng import Rng
from .tokenizer import Vocab, build_vocab, tokenize_subwords, tokenize_words
from .trainer import TrainConfig, train

_INT_FIELDS = {
    "batch_size", "epochs", "eval_every", "seed", "vocab_size",
    "layers", "dim", "heads", "ff_dim", "max_len",
}
_FLOAT_FIELDS = {
    "temperature", "queue_multiple", "momentum_lam", "learning_rate",
    "dup_rate", "dropout_p",
}
_STR_FIELDS = {
    "corpus_path", "dev_path", "checkpoint_dir", "vocab_path",
    "strategy", "stopword_path",
}


def _parse_config_file(path: str) -> dict[str, str]:
    """Flat ``key = value`` lines; '#' starts a comment; blank lines ignored."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot read config file {path}: {exc}") from exc
    values: dict[str, str] = {}
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise DataError(f"{path}:{lineno}: expected 'key = value', got {text!r}")
        key, value = text.split("=", 1)
        key = key.strip()
        if key not in _INT_FIELDS | _FLOAT_FIELDS | _STR_FIELDS:
            raise DataError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = value.strip()
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sencore",
        description="Contrastive sentence-embedding trainer and evaluation harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train an encoder on a sentence corpus")
    p.add_argument("--corpus", help="one sentence per line, UTF-8")
    p.add_argument("--dev", help="dev TSV: gold<TAB>sentence_a<TAB>sentence_b")
    p.add_argument("--out-dir", help="directory for checkpoint, vocab, train log")
    p.add_argument("--config", help="flat key=value config file; flags override it")
    p.add_argument("--batch-size", type=int)
    p.add_argument("--temperature", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--eval-every", type=int)
    p.add_argument("--queue-multiple", type=float, help="queue capacity as a multiple of batch size; 0 disables the queue")
    p.add_argument("--momentum", type=float, help="EMA retention coefficient in [0, 1)")
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--vocab", help="existing vocab file; omit to build one from the corpus")
    p.add_argument("--vocab-size", type=int, help="target size when building the vocab")
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--dup-rate", type=float)
    p.add_argument("--stopword-file", help="stop-word list for insert-stopword")
    p.add_argument("--layers", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--heads", type=int)
    p.add_argument("--ff-dim", type=int)
    p.add_argument("--max-len", type=int)
    p.add_argument("--dropout", type=float)

    p = sub.add_parser("eval", help="Spearman per dataset plus their average")
    p.add_argument("checkpoint")
    p.add_argument("datasets", nargs="+", help="one or more 3-column TSV files")
    p.add_argument("--vocab", help="vocab file (default: vocab.txt beside the checkpoint)")

    p = sub.add_parser("audit", help="length-difference bias report")
    p.add_argument("checkpoint")
    p.add_argument("dataset")
    p.add_argument("--threshold", type=int, default=3)
    p.add_argument("--vocab")
    p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("embed", help="write sentence embeddings to a file")
    p.add_argument("checkpoint")
    p.add_argument("sentences", help="one sentence per line; blank lines skipped")
    p.add_argument("--out", required=True)
    p.add_argument("--vocab")

    p = sub.add_parser("augment-preview", help="show an augmented token sequence")
    p.add_argument("--sentence", required=True)
    p.add_argument("--strategy", choices=STRATEGIES, default="subword-repetition")
    p.add_argument("--dup-rate", type=float, default=0.32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--vocab", help="vocab file; omit to build one from the sentence")
    p.add_argument("--stopword-file")
    return parser


def _merge_train_config(args) -> TrainConfig:
    file_vals = _parse_config_file(args.config) if args.config else {}

    def pick(key: str, flag_value, cast):
        if flag_value is not None:
            return flag_value
        if key in file_vals:
            raw = file_vals[key]
            try:
                return cast(raw)
            except ValueError:
                raise ValueError(f"config key {key!r}: cannot parse {raw!r}") from None
        return None

    def train_kwargs():
        mapping = [
            ("corpus_path", args.corpus, str),
            ("dev_path", args.dev, str),
            ("checkpoint_dir", args.out_dir, str),
            ("batch_size", args.batch_size, int),
            ("temperature", args.temperature, float),
            ("epochs", args.epochs, int),
            ("eval_every", args.eval_every, int),
            ("queue_multiple", args.queue_multiple, float),
            ("momentum_lam", args.momentum, float),
            ("learning_rate", args.lr, float),
            ("seed", args.seed, int),
            ("vocab_path", args.vocab, str),
            ("vocab_size", args.vocab_size, int),
        ]
        out = {}
        for key, flag_value, cast in mapping:
            value = pick(key, flag_value, cast)
            if value is not None:
                out[key] = value
        return out

    encoder_kwargs = {}
    for key, flag_value in [
        ("layers", args.layers),
        ("dim", args.dim),
        ("heads", args.heads),
        ("ff_dim", args.ff_dim),
        ("max_len", args.max_len),
    ]:
        value = pick(key, flag_value, int)
        if value is not None:
            encoder_kwargs[key] = value
    dropout = pick("dropout_p", args.dropout, float)
    if dropout is not None:
        encoder_kwargs["dropout_p"] = dropout

    strategy = pick("strategy", args.strategy, str) or "subword-repetition"
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    dup_rate = pick("dup_rate", args.dup_rate, float)
    stopword_path = pick("stopword_path", args.stopword_file, str)
    aug_kwargs = {"strategy": strategy}
    if dup_rate is not None:
        aug_kwargs["dup_rate"] = dup_rate
    if strategy == "insert-stopword":
        aug_kwargs["stopwords"] = load_stopwords(stopword_path)

    kwargs = train_kwargs()
    if "corpus_path" not in kwargs:
        raise ValueError("a corpus is required (--corpus or config corpus_path)")
    if "dev_path" not in kwargs:
        raise ValueError("a dev set is required (--dev or config dev_path)")
    kwargs["encoder"] = EncoderConfig(**encoder_kwargs)
    kwargs["augmentation"] = AugmentationConfig(**aug_kwargs)
    return TrainConfig(**kwargs)


def _cmd_train(args) -> int:
    config = _merge_train_config(args)
    result = train(config)
    print(f"baseline dev spearman\t{result.baseline_spearman:.6f}")
    print(f"best step\t{result.best_step}")
    print(f"best dev spearman\t{result.best_spearman:.6f}")
    if result.checkpoint_path:
        print(f"checkpoint\t{result.checkpoint_path}")
    return 0


def _load_model(checkpoint_path: str, vocab_path: str | None):
    params, config, header = load_checkpoint(checkpoint_path)
    if vocab_path is None:
        vocab_path = os.path.join(os.path.dirname(checkpoint_path) or ".", "vocab.txt")
    vocab = Vocab.load(vocab_path)
    if vocab.sha256() != header["vocab_sha256"]:
        raise DataError(
            f"vocab {vocab_path} does not match the checkpoint's vocabulary hash"
        )
    return params, config, vocab


def _cmd_eval(args) -> int:
    params, config, vocab = _load_model(args.checkpoint, args.vocab)
    scores = []
    for path in args.datasets:
        pairs = load_sts(path)
        if len(pairs) < 2:
            raise DataError(f"dataset {path} needs at least 2 pairs")
        predictions = score_pairs(pairs, params, config, vocab)
        gold = [p.gold for p in pairs]
        r = spearman(gold, predictions)
        scores.append(r)
        print(f"{path}\t{r:.6f}")
    print(f"Avg.\t{float(np.mean(scores)):.6f}")
    return 0


def _cmd_audit(args) -> int:
    params, config, vocab = _load_model(args.checkpoint, args.vocab)
    pairs = load_sts(args.dataset)
    if not pairs:
        raise DataError(f"dataset {args.dataset} is empty")
    predictions = score_pairs(pairs, params, config, vocab)
    report = length_bias_audit(pairs, predictions, args.threshold)
    if args.json:
        payload = {
            "threshold": report.threshold,
            "small": {"pairs": report.n_small, "spearman": report.r_small},
            "large": {"pairs": report.n_large, "spearman": report.r_large},
        }
        print(json.dumps(payload, sort_keys=True))
        return 0

    def fmt(r: float | None) -> str:
        return "undefined" if r is None else f"{r:.6f}"

    print("group\tpairs\tspearman")
    print(f"len_diff<={report.threshold}\t{report.n_small}\t{fmt(report.r_small)}")
    print(f"len_diff>{report.threshold}\t{report.n_large}\t{fmt(report.r_large)}")
    return 0


def _cmd_embed(args) -> int:
    params, config, vocab = _load_model(args.checkpoint, args.vocab)
    try:
        with open(args.sentences, "r", encoding="utf-8") as fh:
            sentences = [line.strip() for line in fh if line.strip()]
    except OSError as exc:
        raise DataError(f"cannot read sentences {args.sentences}: {exc}") from exc
    if not sentences:
        raise DataError(f"{args.sentences} contains no sentences")
    seqs = [tokenize_subwords(s, vocab) for s in sentences]
    rows = []
    for lo in range(0, len(seqs), 64):
        rows.append(encode_batch(seqs[lo : lo + 64], params, config))
    matrix = np.concatenate(rows, axis=0)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for row in matrix:
            fh.write("\t".join(f"{val:.8e}" for val in row) + "\n")
    print(f"wrote {matrix.shape[0]} x {matrix.shape[1]} embeddings to {args.out}")
    return 0


def _cmd_augment_preview(args) -> int:
    if args.vocab:
        vocab = Vocab.load(args.vocab)
    else:
        words = tokenize_words(args.sentence)
        chars = {ch for word in words for ch in word}
        # saturate: enough room to merge every word into a single token
        target = 5 + 2 * len(chars) + sum(len(w) for w in words)
        vocab = build_vocab([args.sentence], target)
    stopwords = ()
    if args.strategy == "insert-stopword":
        stopwords = load_stopwords(args.stopword_file)
    config = AugmentationConfig(
        strategy=args.strategy, dup_rate=args.dup_rate, stopwords=stopwords
    )
    seq = tokenize_subwords(args.sentence, vocab)
    out = apply(seq, config, Rng(args.seed), vocab)
    print(" ".join(vocab.token(i) for i in out.ids))
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "audit": _cmd_audit,
    "embed": _cmd_embed,
    "augment-preview": _cmd_augment_preview,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems and 0 on --help
        return 0 if exc.code == 0 else 1
    try:
        return _COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
