"""Skip-gram negative-sampling training kernels.

Two implementations of the same pair-sequential update schedule: an njit
loop and a per-pair numpy fallback. Both consume the same explicit 64-bit
LCG stream for negative sampling, so they draw identical sample sequences;
floating-point accumulation order differs slightly between them.
"""

from __future__ import annotations

import numpy as np

from ..accel import NUMBA_ENABLED

_LCG_MULT = 6364136223846793005
_LCG_INC = 1442695040888963407
_U64_MASK = (1 << 64) - 1


def lcg_next(state: int) -> int:
    return (state * _LCG_MULT + _LCG_INC) & _U64_MASK


def _sgns_train_python(
    inp,
    out,
    tokens,
    bounds,
    window,
    negatives,
    cum_table,
    total_pairs,
    lr0,
    lr_min,
    epochs,
    rng_state,
):
    shift = 33  # keep the top 31 bits, matching the cum_table domain
    pair_t = 0
    denom = max(1, total_pairs - 1)
    state = int(rng_state)
    n_docs = len(bounds) - 1
    for _epoch in range(epochs):
        for d in range(n_docs):
            start, end = int(bounds[d]), int(bounds[d + 1])
            for i in range(start, end):
                c = int(tokens[i])
                lo = max(start, i - window)
                hi = min(end - 1, i + window)
                for j in range(lo, hi + 1):
                    if j == i:
                        continue
                    o = int(tokens[j])
                    lr = lr0 - (lr0 - lr_min) * (pair_t / denom)
                    pair_t += 1
                    v_c = inp[c]
                    acc = np.zeros_like(v_c)
                    u_o = out[o]
                    x = float(np.dot(u_o, v_c))
                    g = (1.0 - _sigmoid(x)) * lr
                    acc += g * u_o
                    u_o += g * v_c
                    for _s in range(negatives):
                        state = lcg_next(state)
                        r = state >> shift
                        n = int(np.searchsorted(cum_table, r, side="right"))
                        if n == o:
                            continue
                        u_n = out[n]
                        x = float(np.dot(u_n, v_c))
                        g = -_sigmoid(x) * lr
                        acc += g * u_n
                        u_n += g * v_c
                    v_c += acc
    return state


def _sigmoid(x: float) -> float:
    if x > 30.0:
        return 1.0
    if x < -30.0:
        return 0.0
    return 1.0 / (1.0 + np.exp(-x))


if NUMBA_ENABLED:
    from numba import njit

    @njit(cache=True)
    def _sgns_train_numba(
        inp,
        out,
        tokens,
        bounds,
        window,
        negatives,
        cum_table,
        total_pairs,
        lr0,
        lr_min,
        epochs,
        rng_state,
    ):  # pragma: no cover - exercised via sgns_train
        dim = inp.shape[1]
        acc = np.zeros(dim, dtype=np.float32)
        state = np.uint64(rng_state)
        mult = np.uint64(_LCG_MULT)
        inc = np.uint64(_LCG_INC)
        shift = np.uint64(33)
        pair_t = 0
        denom = max(1, total_pairs - 1)
        n_docs = bounds.shape[0] - 1
        for _epoch in range(epochs):
            for d in range(n_docs):
                start = bounds[d]
                end = bounds[d + 1]
                for i in range(start, end):
                    c = tokens[i]
                    lo = i - window
                    if lo < start:
                        lo = start
                    hi = i + window
                    if hi > end - 1:
                        hi = end - 1
                    for j in range(lo, hi + 1):
                        if j == i:
                            continue
                        o = tokens[j]
                        lr = lr0 - (lr0 - lr_min) * (pair_t / denom)
                        pair_t += 1
                        for k in range(dim):
                            acc[k] = 0.0
                        x = 0.0
                        for k in range(dim):
                            x += out[o, k] * inp[c, k]
                        if x > 30.0:
                            f = 1.0
                        elif x < -30.0:
                            f = 0.0
                        else:
                            f = 1.0 / (1.0 + np.exp(-x))
                        g = (1.0 - f) * lr
                        for k in range(dim):
                            acc[k] += g * out[o, k]
                            out[o, k] += g * inp[c, k]
                        for _s in range(negatives):
                            state = state * mult + inc
                            r = state >> shift
                            n = np.searchsorted(cum_table, r, side="right")
                            if n == o:
                                continue
                            x = 0.0
                            for k in range(dim):
                                x += out[n, k] * inp[c, k]
                            if x > 30.0:
                                f = 1.0
                            elif x < -30.0:
                                f = 0.0
                            else:
                                f = 1.0 / (1.0 + np.exp(-x))
                            g = -f * lr
                            for k in range(dim):
                                acc[k] += g * out[n, k]
                                out[n, k] += g * inp[c, k]
                        for k in range(dim):
                            inp[c, k] += acc[k]
        return np.uint64(state)

    sgns_train = _sgns_train_numba
else:
    sgns_train = _sgns_train_python
