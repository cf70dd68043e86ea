"""A small transformer encoder producing one embedding per sentence.

Architecture: token + learned position embeddings, post-layer-norm residual
blocks (self-attention then feed-forward), and classification-token pooling
through a tanh MLP head that stays active at train and eval time.  Dropout,
when on, is applied at the three places BERT applies it inside a block:
attention probabilities, the attention output projection, and the
feed-forward output projection.  Embeddings are not dropped.

Two entry points share one graph builder: ``encode_batch`` returns plain
arrays for evaluation-style use, while the trainer wraps parameters in leaf
tensors and differentiates through ``encode_batch_tensors``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import DataError
from .rng import Rng
from .tokenizer import CLS_ID, PAD_ID, SEP_ID, TokenSequence

LAYER_NORM_EPS = 1e-5
MASK_NEG = -1e9
INIT_STD = 0.02


@dataclass(frozen=True)
class EncoderConfig:
    layers: int = 2
    dim: int = 64
    heads: int = 4
    ff_dim: int = 0  # 0 means the conventional 4 * dim
    max_len: int = 64
    dropout_p: float = 0.1

    def __post_init__(self):
        if self.layers < 1 or self.dim < 1 or self.heads < 1:
            raise ValueError("layers, dim, and heads must be positive")
        if self.dim % self.heads != 0:
            raise ValueError(f"dim {self.dim} not divisible by heads {self.heads}")
        if self.max_len < 3:
            raise ValueError(f"max_len must be at least 3, got {self.max_len}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError(f"dropout rate must lie in [0, 1), got {self.dropout_p}")
        if self.ff_dim == 0:
            object.__setattr__(self, "ff_dim", 4 * self.dim)
        elif self.ff_dim < 1:
            raise ValueError(f"ff_dim must be positive, got {self.ff_dim}")

    @property
    def head_dim(self) -> int:
        return self.dim // self.heads


def param_shapes(config: EncoderConfig, vocab_size: int) -> dict[str, tuple[int, ...]]:
    """Parameter names and shapes in declaration order (the checkpoint order)."""
    d, f = config.dim, config.ff_dim
    shapes: dict[str, tuple[int, ...]] = {
        "tok_emb": (vocab_size, d),
        "pos_emb": (config.max_len, d),
    }
    for i in range(config.layers):
        a = f"l{i}.attn"
        for name in ("wq", "wk", "wv", "wo"):
            shapes[f"{a}.{name}"] = (d, d)
        for name in ("bq", "bk", "bv", "bo"):
            shapes[f"{a}.{name}"] = (d,)
        shapes[f"{a}.ln_g"] = (d,)
        shapes[f"{a}.ln_b"] = (d,)
        ff = f"l{i}.ff"
        shapes[f"{ff}.w1"] = (d, f)
        shapes[f"{ff}.b1"] = (f,)
        shapes[f"{ff}.w2"] = (f, d)
        shapes[f"{ff}.b2"] = (d,)
        shapes[f"{ff}.ln_g"] = (d,)
        shapes[f"{ff}.ln_b"] = (d,)
    shapes["pool.w"] = (d, d)
    shapes["pool.b"] = (d,)
    return shapes


def init_params(
    config: EncoderConfig, vocab_size: int, rng: Rng, dtype=np.float32
) -> dict[str, np.ndarray]:
    """Scaled-normal weights (std 0.02), zero biases, unit norm gains.

    Draws happen in declaration order in float64, then cast, so the same
    seed initializes identically in either precision mode.
    """
    params: dict[str, np.ndarray] = {}
    for name, shape in param_shapes(config, vocab_size).items():
        base = name.rsplit(".", 1)[-1]
        if base.startswith("b") or base == "ln_b":
            values = np.zeros(shape)
        elif base == "ln_g":
            values = np.ones(shape)
        else:
            size = int(np.prod(shape))
            values = (INIT_STD * rng.normals(size)).reshape(shape)
        params[name] = values.astype(dtype)
    return params


def prepare_batch(
    sequences: list[TokenSequence], config: EncoderConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Pack sequences into padded (ids, lengths) arrays with specials added.

    Content tokens beyond ``max_len - 2`` are truncated; the classification
    and separator specials are always kept.
    """
    if not sequences:
        raise ValueError("cannot encode an empty batch")
    rows = []
    for seq in sequences:
        if len(seq) == 0:
            raise ValueError("cannot encode a sequence with no content tokens")
        content = seq.ids[: config.max_len - 2]
        rows.append([CLS_ID] + list(content) + [SEP_ID])
    lengths = np.array([len(row) for row in rows], dtype=np.int64)
    width = int(lengths.max())
    ids = np.full((len(rows), width), PAD_ID, dtype=np.int64)
    for r, row in enumerate(rows):
        ids[r, : len(row)] = row
    return ids, lengths


def encode_batch_tensors(
    leaves: dict[str, Tensor],
    sequences: list[TokenSequence],
    config: EncoderConfig,
    dropout_on: bool,
    rng: Rng | None = None,
) -> Tensor:
    """Differentiable forward pass; returns the (batch, dim) embeddings."""
    p = config.dropout_p if dropout_on else 0.0
    if p > 0.0 and rng is None:
        raise ValueError("dropout needs an rng stream")
    ids, lengths = prepare_batch(sequences, config)
    batch, width = ids.shape
    dtype = leaves["tok_emb"].value.dtype

    # large negative additive bias on padded key positions
    key_mask = np.where(
        np.arange(width)[None, :] < lengths[:, None], 0.0, MASK_NEG
    ).astype(dtype)
    key_mask = key_mask[:, None, None, :]

    x = ad.add(
        ad.embedding(leaves["tok_emb"], ids),
        ad.embedding(leaves["pos_emb"], np.arange(width, dtype=np.int64)),
    )
    for i in range(config.layers):
        x = _attention_block(x, leaves, f"l{i}.attn", config, key_mask, p, rng)
        x = _feedforward_block(x, leaves, f"l{i}.ff", p, rng)
    cls = ad.token_at(x, 0)
    pooled = ad.add(ad.matmul(cls, leaves["pool.w"]), leaves["pool.b"])
    return ad.tanh(pooled)


def _project(x: Tensor, leaves: dict[str, Tensor], w: str, b: str) -> Tensor:
    return ad.add(ad.matmul(x, leaves[w]), leaves[b])


def _split_heads(x: Tensor, batch: int, width: int, config: EncoderConfig) -> Tensor:
    x = ad.reshape(x, (batch, width, config.heads, config.head_dim))
    return ad.transpose(x, (0, 2, 1, 3))


def _attention_block(x, leaves, prefix, config, key_mask, p, rng):
    batch, width, _ = x.shape
    q = _split_heads(_project(x, leaves, f"{prefix}.wq", f"{prefix}.bq"), batch, width, config)
    k = _split_heads(_project(x, leaves, f"{prefix}.wk", f"{prefix}.bk"), batch, width, config)
    v = _split_heads(_project(x, leaves, f"{prefix}.wv", f"{prefix}.bv"), batch, width, config)
    scores = ad.scale(ad.matmul(q, ad.transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(config.head_dim))
    probs = ad.softmax_last(ad.add_const(scores, key_mask))
    probs = ad.dropout(probs, p, rng)
    context = ad.transpose(ad.matmul(probs, v), (0, 2, 1, 3))
    context = ad.reshape(context, (batch, width, config.dim))
    out = _project(context, leaves, f"{prefix}.wo", f"{prefix}.bo")
    out = ad.dropout(out, p, rng)
    residual = ad.add(x, out)
    return ad.layer_norm(
        residual, leaves[f"{prefix}.ln_g"], leaves[f"{prefix}.ln_b"], LAYER_NORM_EPS
    )


def _feedforward_block(x, leaves, prefix, p, rng):
    hidden = ad.gelu(_project(x, leaves, f"{prefix}.w1", f"{prefix}.b1"))
    out = _project(hidden, leaves, f"{prefix}.w2", f"{prefix}.b2")
    out = ad.dropout(out, p, rng)
    residual = ad.add(x, out)
    return ad.layer_norm(
        residual, leaves[f"{prefix}.ln_g"], leaves[f"{prefix}.ln_b"], LAYER_NORM_EPS
    )


def encode_batch(
    sequences: list[TokenSequence],
    params: dict[str, np.ndarray],
    config: EncoderConfig,
    dropout_on: bool = False,
    rng: Rng | None = None,
) -> np.ndarray:
    """Forward pass without gradient recording; returns a (batch, dim) array."""
    leaves = {name: Tensor(value) for name, value in params.items()}
    return encode_batch_tensors(leaves, sequences, config, dropout_on, rng).value


# ---------------------------------------------------------------------------
# checkpoint format: magic, format version, JSON header, raw float32 arrays
# ---------------------------------------------------------------------------

CHECKPOINT_MAGIC = b"SENC"
CHECKPOINT_VERSION = 1


def save_checkpoint(
    path,
    params: dict[str, np.ndarray],
    config: EncoderConfig,
    vocab_size: int,
    vocab_sha256: str,
) -> None:
    """Write a versioned binary checkpoint.

    Header (canonical JSON) carries the config fields, vocab size and hash,
    and the parameter order; arrays follow as little-endian float32 in that
    order.  The byte stream is a pure function of its inputs.
    """
    header = {
        "format_version": CHECKPOINT_VERSION,
        "layers": config.layers,
        "dim": config.dim,
        "heads": config.heads,
        "ff_dim": config.ff_dim,
        "max_len": config.max_len,
        "dropout_p": config.dropout_p,
        "vocab_size": vocab_size,
        "vocab_sha256": vocab_sha256,
        "params": list(params.keys()),
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(len(blob).to_bytes(4, "little"))
        fh.write(blob)
        for value in params.values():
            fh.write(np.ascontiguousarray(value, dtype="<f4").tobytes())


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], EncoderConfig, dict]:
    """Read a checkpoint back into (params, config, header)."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from exc
    if raw[:4] != CHECKPOINT_MAGIC:
        raise DataError(f"{path} is not a checkpoint file (bad magic)")
    header_len = int.from_bytes(raw[4:8], "little")
    try:
        header = json.loads(raw[8 : 8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"corrupt checkpoint header in {path}: {exc}") from exc
    if header.get("format_version") != CHECKPOINT_VERSION:
        raise DataError(
            f"unsupported checkpoint version {header.get('format_version')} in {path}"
        )
    config = EncoderConfig(
        layers=header["layers"],
        dim=header["dim"],
        heads=header["heads"],
        ff_dim=header["ff_dim"],
        max_len=header["max_len"],
        dropout_p=header["dropout_p"],
    )
    shapes = param_shapes(config, header["vocab_size"])
    if list(shapes.keys()) != header["params"]:
        raise DataError(f"checkpoint {path} parameter list does not match its config")
    params: dict[str, np.ndarray] = {}
    offset = 8 + header_len
    for name, shape in shapes.items():
        count = int(np.prod(shape))
        end = offset + 4 * count
        if end > len(raw):
            raise DataError(f"checkpoint {path} is truncated at parameter {name!r}")
        params[name] = (
            np.frombuffer(raw[offset:end], dtype="<f4").reshape(shape).copy()
        )
        offset = end
    if offset != len(raw):
        raise DataError(f"checkpoint {path} has {len(raw) - offset} trailing bytes")
    return params, config, header
