"""Desk-scale contrastive sentence-embedding training engine.

Trains a small from-scratch transformer to embed sentences by pulling each
sentence toward an augmented view of itself (sub-word repetition plus
independent dropout masks) and pushing it away from other sentences, both
in-batch and from a FIFO queue of momentum-encoded embeddings.  Ships with
a tie-aware Spearman evaluation harness and a length-difference bias audit.

Hot numeric kernels run through numba when available; set
``SENCORE_KERNELS=numpy`` to force the pure-numpy fallback.
"""

from .augment import AugmentationConfig, apply, sample_dup_len, sample_dup_set
from .autodiff import Tensor, backward
from .contrastive import cosine_sim, esimcse_loss, simcse_loss
from .encoder import (
    EncoderConfig,
    encode_batch,
    init_params,
    load_checkpoint,
    save_checkpoint,
)
from .errors import DataError, NumericError
from .evaluation import (
    AuditReport,
    StsPair,
    length_bias_audit,
    load_sts,
    score_pairs,
    spearman,
)
from .gradcheck import GradCheckReport, grad_check
from .momentum import (
    EmbeddingQueue,
    MomentumState,
    ema_update,
    init_momentum,
    momentum_encode,
)
from .optim import Adam
from .rng import Rng
from .tokenizer import (
    TokenSequence,
    Vocab,
    build_vocab,
    detokenize,
    tokenize_subwords,
    tokenize_words,
)
from .trainer import (
    TrainConfig,
    TrainLog,
    TrainResult,
    compose_batch,
    init_train_state,
    train,
    train_step,
)

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "AugmentationConfig",
    "AuditReport",
    "DataError",
    "EmbeddingQueue",
    "EncoderConfig",
    "GradCheckReport",
    "MomentumState",
    "NumericError",
    "Rng",
    "StsPair",
    "Tensor",
    "TokenSequence",
    "TrainConfig",
    "TrainLog",
    "TrainResult",
    "Vocab",
    "apply",
    "backward",
    "build_vocab",
    "compose_batch",
    "cosine_sim",
    "detokenize",
    "ema_update",
    "encode_batch",
    "esimcse_loss",
    "grad_check",
    "init_momentum",
    "init_params",
    "init_train_state",
    "length_bias_audit",
    "load_checkpoint",
    "load_sts",
    "momentum_encode",
    "sample_dup_len",
    "sample_dup_set",
    "save_checkpoint",
    "score_pairs",
    "simcse_loss",
    "spearman",
    "tokenize_subwords",
    "tokenize_words",
    "train",
    "train_step",
    "__version__",
]
