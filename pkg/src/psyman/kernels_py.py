"""NumPy fallback for the hot kernels.

Mirrors the signatures of the compiled ``psyman._kernels`` extension; the
active implementation is chosen in :mod:`psyman.backend`. Everything here
avoids BLAS-backed reductions (einsum without ``optimize``, ufunc adds) so
results do not depend on library thread counts; the only parallelism is the
explicit row-block pool in :func:`pairwise_sq_dists`, whose blocks write to
disjoint output rows.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .parallel import worker_count

NAME = "numpy"

_ROW_BLOCK = 64
_Q_FLOOR = 1e-12


def pairwise_sq_dists(x: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between rows; symmetric, zero diagonal."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    out = np.empty((n, n), dtype=np.float64)

    def fill(lo: int, hi: int) -> None:
        for r0 in range(lo, hi, _ROW_BLOCK):
            r1 = min(r0 + _ROW_BLOCK, hi)
            diff = x[r0:r1, None, :] - x[None, :, :]
            np.sum(diff * diff, axis=2, out=out[r0:r1])

    workers = worker_count()
    if workers > 1 and n >= 4 * _ROW_BLOCK:
        step = -(-n // workers)
        bounds = [(i, min(i + step, n)) for i in range(0, n, step)]
        with ThreadPoolExecutor(max_workers=len(bounds)) as pool:
            list(pool.map(lambda b: fill(*b), bounds))
    else:
        fill(0, n)
    np.fill_diagonal(out, 0.0)
    return out


def tsne_forces(p: np.ndarray, coords: np.ndarray, want_kl: bool) -> tuple[np.ndarray, float]:
    """Gradient of KL(P||Q) at `coords`, and optionally the KL value.

    Q is the Student-t affinity matrix of `coords`; the gradient is
    4 * sum_j (p_ij - q_ij) * w_ij * (y_i - y_j) with w_ij = 1/(1+||y_i-y_j||^2).
    """
    sqd = pairwise_sq_dists(coords)
    w = 1.0 / (1.0 + sqd)
    np.fill_diagonal(w, 0.0)
    total = float(w.sum())
    q = w / total
    m = (p - q) * w
    rowsum = m.sum(axis=1)
    grad = 4.0 * (rowsum[:, None] * coords - np.einsum("ij,jk->ik", m, coords))
    kl = 0.0
    if want_kl:
        mask = p > 0.0
        ratio = p[mask] / np.maximum(q[mask], _Q_FLOOR)
        kl = float(np.sum(p[mask] * np.log(ratio)))
    return grad, kl


def stress_forces(
    ii: np.ndarray, jj: np.ndarray, d_high: np.ndarray, coords: np.ndarray
) -> tuple[np.ndarray, float]:
    """Gradient and value of sum over pairs of (d_high - d_low)^2.

    Pairs at d_low == 0 contribute to the value but their gradient term is
    skipped (the derivative is undefined there).
    """
    diff = coords[ii] - coords[jj]
    d_low = np.sqrt(np.sum(diff * diff, axis=1))
    resid = d_high - d_low
    stress = float(np.sum(resid * resid))
    nz = d_low > 0.0
    factor = np.zeros_like(d_low)
    factor[nz] = 2.0 * (d_low[nz] - d_high[nz]) / d_low[nz]
    contrib = factor[:, None] * diff
    grad = np.zeros_like(coords)
    np.add.at(grad, ii, contrib)
    np.add.at(grad, jj, -contrib)
    return grad, stress


def _windows3(x: np.ndarray, pad: int) -> np.ndarray:
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    return np.lib.stride_tricks.sliding_window_view(xp, (3, 3), axis=(2, 3))


def conv2d_fwd(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """3x3 convolution, stride 1, zero padding 1; x is (B, Cin, H, W)."""
    win = _windows3(x, 1)
    y = np.einsum("bihwpq,oipq->bohw", win, w)
    y += b[None, :, None, None]
    return y


def conv2d_bwd(
    x: np.ndarray, w: np.ndarray, dy: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of the 3x3 pad-1 convolution w.r.t. input, weights, biases."""
    h, wd = x.shape[2], x.shape[3]
    db = dy.sum(axis=(0, 2, 3))
    dw = np.einsum("bihwpq,bohw->oipq", _windows3(x, 1), dy)
    w_rot = w[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
    win = _windows3(dy, 2)
    dx_pad = np.einsum("bouvpq,copq->bcuv", win, w_rot)
    dx = dx_pad[:, :, 1 : h + 1, 1 : wd + 1]
    return np.ascontiguousarray(dx), dw, db


def maxpool2_fwd(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """2x2 max pooling, stride 2; also returns the in-window argmax.

    Ties resolve to the first maximum in row-major window order, which is
    what np.argmax does on the flattened (2, 2) window.
    """
    b, c, h, w = x.shape
    win = x.reshape(b, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
    flat = win.reshape(b, c, h // 2, w // 2, 4)
    arg = np.argmax(flat, axis=-1)
    y = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
    return y, arg


def maxpool2_bwd(arg: np.ndarray, dy: np.ndarray, h: int, w: int) -> np.ndarray:
    """Routes gradient only to the recorded argmax positions."""
    b, c, ho, wo = dy.shape
    flat = np.zeros((b, c, ho, wo, 4), dtype=dy.dtype)
    np.put_along_axis(flat, arg[..., None], dy[..., None], axis=-1)
    win = flat.reshape(b, c, ho, wo, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    return np.ascontiguousarray(win.reshape(b, c, h, w))
