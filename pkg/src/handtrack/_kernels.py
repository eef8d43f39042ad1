"""Hot numeric kernels with two interchangeable backends.

Every kernel exists twice: a plain-Python loop version that numba jit-compiles,
and a vectorized pure-numpy version. The active backend is picked once at
import time: numba when importable, unless the environment variable
``HANDTRACK_NUMBA`` is set to ``0``/``false``/``off`` (then the numpy path is
used). Both backends stay importable regardless of the flag so tests and
``benchmarks/bench_kernels.py`` can compare them directly.

All kernels take and return contiguous float64 arrays; callers are expected
to normalize dtypes (the public wrappers in heatmaps.py / condpose.py do).
"""
from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def _flag_enabled() -> bool:
    val = os.environ.get("HANDTRACK_NUMBA", "1").strip().lower()
    return val not in ("0", "false", "no", "off")


NUMBA_AVAILABLE = numba is not None
NUMBA_ENABLED = NUMBA_AVAILABLE and _flag_enabled()


# --------------------------------------------------------------------------
# pure-numpy backend
# --------------------------------------------------------------------------

def conv2d_numpy(x: np.ndarray, w: np.ndarray, bias: np.ndarray,
                 stride: int, pad: int) -> np.ndarray:
    """Cross-correlate x (C,H,W) with w (O,C,kh,kw) via im2col + tensordot."""
    _, _, kh, kw = w.shape
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(1, 2))
    win = win[:, ::stride, ::stride]
    out = np.tensordot(w, win, axes=((1, 2, 3), (0, 3, 4)))
    return out + bias[:, None, None]


def conv_transpose2d_numpy(x: np.ndarray, w: np.ndarray, bias: np.ndarray,
                           stride: int, pad: int) -> np.ndarray:
    """Transposed convolution of x (C,H,W) with w (O,C,kh,kw).

    Implemented as zero-stuffing by `stride` followed by a stride-1
    cross-correlation with the spatially flipped kernel and padding k-1-pad.
    Requires pad <= k-1 (true for every layer this package defines).
    """
    c_in, h, wd = x.shape
    _, _, kh, kw = w.shape
    if pad > kh - 1 or pad > kw - 1:
        raise ValueError("conv_transpose2d requires pad <= kernel-1")
    xs = np.zeros((c_in, (h - 1) * stride + 1, (wd - 1) * stride + 1), dtype=x.dtype)
    xs[:, ::stride, ::stride] = x
    wflip = np.ascontiguousarray(w[:, :, ::-1, ::-1])
    xp = np.pad(xs, ((0, 0), (kh - 1 - pad, kh - 1 - pad), (kw - 1 - pad, kw - 1 - pad)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(1, 2))
    out = np.tensordot(wflip, win, axes=((1, 2, 3), (0, 3, 4)))
    return out + bias[:, None, None]


def resample_bilinear_numpy(src: np.ndarray, row_scale: float, row_off: float,
                            col_scale: float, col_off: float,
                            out_h: int, out_w: int) -> np.ndarray:
    """Sample src (J,H,W) on the affine grid v=row_scale*r+row_off, zero outside."""
    _, h, wd = src.shape
    v = row_scale * np.arange(out_h) + row_off
    u = col_scale * np.arange(out_w) + col_off
    i0 = np.floor(v).astype(np.int64)
    j0 = np.floor(u).astype(np.int64)
    fv = (v - i0)[:, None]
    fu = (u - j0)[None, :]

    out = np.zeros((src.shape[0], out_h, out_w), dtype=src.dtype)
    for di, dj, wgt in (
        (0, 0, (1 - fv) * (1 - fu)),
        (0, 1, (1 - fv) * fu),
        (1, 0, fv * (1 - fu)),
        (1, 1, fv * fu),
    ):
        ii = i0 + di
        jj = j0 + dj
        ok = ((ii >= 0) & (ii < h))[:, None] & ((jj >= 0) & (jj < wd))[None, :]
        ic = np.clip(ii, 0, h - 1)
        jc = np.clip(jj, 0, wd - 1)
        vals = src[:, ic[:, None], jc[None, :]]
        out += np.where(ok[None, :, :], wgt[None, :, :] * vals, 0.0)
    return out


def render_gaussians_numpy(centers: np.ndarray, annotated: np.ndarray,
                           res: int, sigma: float) -> np.ndarray:
    """Unit-peak Gaussians at continuous grid coords centers (J,2) as (u,v)."""
    rows = np.arange(res, dtype=np.float64)
    grid = np.zeros((centers.shape[0], res, res), dtype=np.float64)
    inv = 1.0 / (2.0 * sigma * sigma)
    for j in range(centers.shape[0]):
        if not annotated[j]:
            continue
        du2 = (rows - centers[j, 0]) ** 2
        dv2 = (rows - centers[j, 1]) ** 2
        grid[j] = np.exp(-(dv2[:, None] + du2[None, :]) * inv)
    return grid


# --------------------------------------------------------------------------
# loop backend (numba-jitted when active)
# --------------------------------------------------------------------------

def _conv2d_loops(x, w, bias, stride, pad):
    c_in, h, wd = x.shape
    o_ch, _, kh, kw = w.shape
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (wd + 2 * pad - kw) // stride + 1
    out = np.empty((o_ch, ho, wo))
    for o in range(o_ch):
        for r in range(ho):
            for c in range(wo):
                out[o, r, c] = bias[o]
    for o in range(o_ch):
        for i in range(c_in):
            for a in range(kh):
                for b in range(kw):
                    wv = w[o, i, a, b]
                    if wv == 0.0:
                        continue
                    for r in range(ho):
                        yy = r * stride - pad + a
                        if yy < 0 or yy >= h:
                            continue
                        c0 = -((pad - b) // -stride)  # ceil division
                        if c0 < 0:
                            c0 = 0
                        c1 = (wd - 1 - b + pad) // stride + 1
                        if c1 > wo:
                            c1 = wo
                        for c in range(c0, c1):
                            out[o, r, c] += x[i, yy, c * stride - pad + b] * wv
    return out


def _convt2d_loops(x, w, bias, stride, pad):
    c_in, h, wd = x.shape
    o_ch, _, kh, kw = w.shape
    ho = (h - 1) * stride - 2 * pad + kh
    wo = (wd - 1) * stride - 2 * pad + kw
    out = np.empty((o_ch, ho, wo))
    for o in range(o_ch):
        for r in range(ho):
            for c in range(wo):
                out[o, r, c] = bias[o]
    for o in range(o_ch):
        for i in range(c_in):
            for a in range(kh):
                for b in range(kw):
                    wv = w[o, i, a, b]
                    if wv == 0.0:
                        continue
                    for r in range(h):
                        rr = r * stride - pad + a
                        if rr < 0 or rr >= ho:
                            continue
                        for c in range(wd):
                            cc = c * stride - pad + b
                            if 0 <= cc < wo:
                                out[o, rr, cc] += x[i, r, c] * wv
    return out


def _resample_bilinear_loops(src, row_scale, row_off, col_scale, col_off, out_h, out_w):
    j_ch, h, wd = src.shape
    out = np.zeros((j_ch, out_h, out_w))
    for r in range(out_h):
        v = row_scale * r + row_off
        i0 = int(math.floor(v))
        fv = v - i0
        for c in range(out_w):
            u = col_scale * c + col_off
            j0 = int(math.floor(u))
            fu = u - j0
            w00 = (1.0 - fv) * (1.0 - fu)
            w01 = (1.0 - fv) * fu
            w10 = fv * (1.0 - fu)
            w11 = fv * fu
            r0 = 0 <= i0 < h
            r1 = 0 <= i0 + 1 < h
            c0 = 0 <= j0 < wd
            c1 = 0 <= j0 + 1 < wd
            for j in range(j_ch):
                acc = 0.0
                if r0:
                    if c0:
                        acc += w00 * src[j, i0, j0]
                    if c1:
                        acc += w01 * src[j, i0, j0 + 1]
                if r1:
                    if c0:
                        acc += w10 * src[j, i0 + 1, j0]
                    if c1:
                        acc += w11 * src[j, i0 + 1, j0 + 1]
                out[j, r, c] = acc
    return out


def _render_gaussians_loops(centers, annotated, res, sigma):
    j_ch = centers.shape[0]
    out = np.zeros((j_ch, res, res))
    inv = 1.0 / (2.0 * sigma * sigma)
    for j in range(j_ch):
        if annotated[j] == 0:
            continue
        uj = centers[j, 0]
        vj = centers[j, 1]
        for r in range(res):
            dv2 = (r - vj) * (r - vj)
            for c in range(res):
                du2 = (c - uj) * (c - uj)
                out[j, r, c] = math.exp(-(du2 + dv2) * inv)
    return out


_NUMBA_KERNELS = None


def get_numba_kernels() -> dict:
    """Jit-compile (once) and return the numba variants, keyed by kernel name."""
    global _NUMBA_KERNELS
    if numba is None:
        raise RuntimeError("numba is not installed")
    if _NUMBA_KERNELS is None:
        jit = numba.njit(cache=True)
        _NUMBA_KERNELS = {
            "conv2d": jit(_conv2d_loops),
            "conv_transpose2d": jit(_convt2d_loops),
            "resample_bilinear": jit(_resample_bilinear_loops),
            "render_gaussians": jit(_render_gaussians_loops),
        }
    return _NUMBA_KERNELS


NUMPY_KERNELS = {
    "conv2d": conv2d_numpy,
    "conv_transpose2d": conv_transpose2d_numpy,
    "resample_bilinear": resample_bilinear_numpy,
    "render_gaussians": render_gaussians_numpy,
}

if NUMBA_ENABLED:
    _active = get_numba_kernels()
    BACKEND = "numba"
else:
    _active = NUMPY_KERNELS
    BACKEND = "numpy"

conv2d = _active["conv2d"]
conv_transpose2d = _active["conv_transpose2d"]
resample_bilinear = _active["resample_bilinear"]
render_gaussians = _active["render_gaussians"]
