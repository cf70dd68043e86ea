"""Benchmark the numpy and numba kernel backends at training shapes.

Shapes mirror one default training step: batch 64, sequence 16, model dim
64, 4 heads, feed-forward dim 256, vocabulary 1000.  In-place kernels run
on persistent buffers, so every call costs the same; ``embedding_grad``
includes the zero-fill its caller performs.

Run as ``python3 benchmarks/bench_kernels.py``.
"""

import argparse
import statistics
import time

import numpy as np

from sencore.kernels import _numpy as numpy_backend

try:
    from sencore.kernels import _numba as numba_backend
except ImportError:
    numba_backend = None

ROWS = 64 * 16
DIM = 64
FF = 256
HEADS = 4
SEQ = 16
VOCAB = 1000


def make_cases(dtype):
    gen = np.random.default_rng(0)

    def arr(*shape):
        return gen.normal(size=shape).astype(dtype)

    attn = arr(64 * HEADS * SEQ, SEQ)
    attn_y = numpy_backend.softmax_rows(attn)
    ln_x = arr(ROWS, DIM)
    gain = np.ones(DIM, dtype=dtype)
    bias = np.zeros(DIM, dtype=dtype)
    _, mean, rstd = numpy_backend.layernorm_rows(ln_x, gain, bias, 1e-5)
    ff = arr(ROWS, FF)
    p, g = arr(VOCAB, DIM), arr(VOCAB, DIM)
    m = np.zeros_like(p)
    v = np.zeros_like(p)
    shadow = arr(VOCAB, DIM)
    ids = gen.integers(0, VOCAB, size=ROWS).astype(np.int64)
    emb_g = arr(ROWS, DIM)
    emb_out = np.zeros((VOCAB, DIM), dtype=dtype)

    def emb(be):
        emb_out[:] = 0
        be.embedding_grad(ids, emb_g, emb_out)

    return [
        ("softmax_rows", lambda be: be.softmax_rows(attn)),
        ("softmax_backward", lambda be: be.softmax_backward(attn_y, attn)),
        ("layernorm_rows", lambda be: be.layernorm_rows(ln_x, gain, bias, 1e-5)),
        ("layernorm_backward",
         lambda be: be.layernorm_backward(ln_x, mean, rstd, gain, ln_x)),
        ("gelu", lambda be: be.gelu(ff)),
        ("gelu_backward", lambda be: be.gelu_backward(ff, ff)),
        ("dropout_apply", lambda be: be.dropout_apply(ff, 0.1, 1.0 / 0.9, 1, 0)),
        ("adam_update",
         lambda be: be.adam_update(p, g, m, v, 1e-3, 0.9, 0.999, 1.0, 1.0, 1e-8)),
        ("ema_update", lambda be: be.ema_update(shadow, p, 0.995)),
        ("embedding_grad", emb),
    ]


def time_call(fn, repeats):
    fn()  # warm up (and compile, for the numba backend)
    samples = []
    for _ in range(repeats):
        loops = 1
        while True:
            started = time.perf_counter()
            for _ in range(loops):
                fn()
            elapsed = time.perf_counter() - started
            if elapsed > 0.02:
                break
            loops *= 4
        samples.append(elapsed / loops)
    return statistics.median(samples)


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="compare kernel backends at training shapes"
    )
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing samples per kernel (default 5)")
    parser.add_argument("--dtype", choices=["float32", "float64"],
                        default="float32")
    args = parser.parse_args(argv)

    dtype = np.dtype(args.dtype)
    print(f"dtype {dtype.name}, median of {args.repeats} samples")
    header = f"{'kernel':20s} {'numpy':>12s} {'numba':>12s} {'speedup':>9s}"
    print(header)
    print("-" * len(header))
    for name, call in make_cases(dtype):
        t_np = time_call(lambda: call(numpy_backend), args.repeats)
        if numba_backend is None:
            print(f"{name:20s} {t_np * 1e6:10.1f}us {'n/a':>12s} {'n/a':>9s}")
            continue
        t_nb = time_call(lambda: call(numba_backend), args.repeats)
        print(f"{name:20s} {t_np * 1e6:10.1f}us {t_nb * 1e6:10.1f}us "
              f"{t_np / t_nb:8.2f}x")
    if numba_backend is None:
        print("numba is not importable; only the numpy backend was timed")


if __name__ == "__main__":
    main()
