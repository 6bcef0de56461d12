"""Hot numeric kernels: numba-compiled loops with a pure-numpy fallback.

The numba path is used when available; set SSKGQA_DISABLE_NUMBA=1 to force the
vectorized numpy path. Both paths compute the same quantities (up to float
summation order); benchmarks/bench_kernels.py compares their speed.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_wanted() -> bool:
    return os.environ.get("SSKGQA_DISABLE_NUMBA", "").strip().lower() not in (
        "1",
        "true",
        "yes",
    )


USE_NUMBA = False
if _numba_wanted():
    try:
        from numba import njit

        USE_NUMBA = True
    except ImportError:  # pragma: no cover
        USE_NUMBA = False


# ---------------------------------------------------------------- numpy path


def _softmax_rows_np(x):
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _softmax_rows_backward_np(y, grad):
    dot = (grad * y).sum(axis=1, keepdims=True)
    return y * (grad - dot)


def _complex_mul_packed_np(a, b):
    h = a.shape[1] // 2
    ar, ai = a[:, :h], a[:, h:]
    br, bi = b[:, :h], b[:, h:]
    return np.concatenate([ar * br - ai * bi, ai * br + ar * bi], axis=1)


def _adamw_update_np(param, grad, m, v, t, lr, beta1, beta2, eps, weight_decay):
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    mhat = m / (1.0 - beta1**t)
    vhat = v / (1.0 - beta2**t)
    param -= lr * (mhat / (np.sqrt(vhat) + eps)) + lr * weight_decay * param


def _scale_inplace_np(arr, factor):
    arr *= factor


# ---------------------------------------------------------------- numba path

if USE_NUMBA:

    @njit(cache=True)
    def softmax_rows(x):
        n, d = x.shape
        out = np.empty_like(x)
        for i in range(n):
            m = x[i, 0]
            for j in range(1, d):
                if x[i, j] > m:
                    m = x[i, j]
            s = 0.0
            for j in range(d):
                e = np.exp(x[i, j] - m)
                out[i, j] = e
                s += e
            for j in range(d):
                out[i, j] /= s
        return out

    @njit(cache=True)
    def softmax_rows_backward(y, grad):
        n, d = y.shape
        out = np.empty_like(y)
        for i in range(n):
            dot = 0.0
            for j in range(d):
                dot += grad[i, j] * y[i, j]
            for j in range(d):
                out[i, j] = y[i, j] * (grad[i, j] - dot)
        return out

    @njit(cache=True)
    def complex_mul_packed(a, b):
        n, d = a.shape
        h = d // 2
        out = np.empty_like(a)
        for i in range(n):
            for j in range(h):
                ar, ai = a[i, j], a[i, j + h]
                br, bi = b[i, j], b[i, j + h]
                out[i, j] = ar * br - ai * bi
                out[i, j + h] = ai * br + ar * bi
        return out

    @njit(cache=True)
    def adamw_update(param, grad, m, v, t, lr, beta1, beta2, eps, weight_decay):
        bc1 = 1.0 - beta1**t
        bc2 = 1.0 - beta2**t
        n = param.size
        p = param.reshape(n)
        g = grad.reshape(n)
        mm = m.reshape(n)
        vv = v.reshape(n)
        for i in range(n):
            mm[i] = beta1 * mm[i] + (1.0 - beta1) * g[i]
            vv[i] = beta2 * vv[i] + (1.0 - beta2) * g[i] * g[i]
            mhat = mm[i] / bc1
            vhat = vv[i] / bc2
            p[i] -= lr * (mhat / (np.sqrt(vhat) + eps)) + lr * weight_decay * p[i]

    @njit(cache=True)
    def scale_inplace(arr, factor):
        flat = arr.reshape(arr.size)
        for i in range(flat.size):
            flat[i] *= factor

else:
    softmax_rows = _softmax_rows_np
    softmax_rows_backward = _softmax_rows_backward_np
    complex_mul_packed = _complex_mul_packed_np
    adamw_update = _adamw_update_np
    scale_inplace = _scale_inplace_np
