"""Numba-compiled convolution kernels.

Same signatures and semantics as ``numpy_backend``; plain nested loops that
numba specializes per dtype on first call (cached on disk afterwards).
Importing this module raises ImportError when numba is unavailable.
"""

import numpy as np
from numba import njit

_OPTS = {"cache": True, "fastmath": False}


@njit(**_OPTS)
def conv1d_fwd(x, w, stride, pad):
    cin, t_in = x.shape
    cout, _, kw = w.shape
    t_out = (t_in + 2 * pad - kw) // stride + 1
    y = np.zeros((cout, t_out), dtype=x.dtype)
    for co in range(cout):
        for j in range(t_out):
            acc = x.dtype.type(0.0)
            base = j * stride - pad
            for ci in range(cin):
                for k in range(kw):
                    t = base + k
                    if 0 <= t < t_in:
                        acc += w[co, ci, k] * x[ci, t]
            y[co, j] = acc
    return y


@njit(**_OPTS)
def conv1d_bwd_x(gy, w, stride, pad, t_in):
    cout, t_out = gy.shape
    _, cin, kw = w.shape
    gx = np.zeros((cin, t_in), dtype=gy.dtype)
    for co in range(cout):
        for j in range(t_out):
            g = gy[co, j]
            base = j * stride - pad
            for ci in range(cin):
                for k in range(kw):
                    t = base + k
                    if 0 <= t < t_in:
                        gx[ci, t] += w[co, ci, k] * g
    return gx


@njit(**_OPTS)
def conv1d_bwd_w(gy, x, stride, pad, kw):
    cout, t_out = gy.shape
    cin, t_in = x.shape
    gw = np.zeros((cout, cin, kw), dtype=gy.dtype)
    for co in range(cout):
        for j in range(t_out):
            g = gy[co, j]
            base = j * stride - pad
            for ci in range(cin):
                for k in range(kw):
                    t = base + k
                    if 0 <= t < t_in:
                        gw[co, ci, k] += g * x[ci, t]
    return gw


@njit(**_OPTS)
def convt1d_fwd(x, w, stride):
    cin, s = x.shape
    _, cout, kw = w.shape
    t = (s - 1) * stride + kw
    y = np.zeros((cout, t), dtype=x.dtype)
    for ci in range(cin):
        for j in range(s):
            v = x[ci, j]
            base = j * stride
            for co in range(cout):
                for k in range(kw):
                    y[co, base + k] += w[ci, co, k] * v
    return y


@njit(**_OPTS)
def convt1d_bwd_x(gy, w, stride, s):
    cin, cout, kw = w.shape
    gx = np.zeros((cin, s), dtype=gy.dtype)
    for ci in range(cin):
        for j in range(s):
            acc = gy.dtype.type(0.0)
            base = j * stride
            for co in range(cout):
                for k in range(kw):
                    acc += w[ci, co, k] * gy[co, base + k]
            gx[ci, j] = acc
    return gx


@njit(**_OPTS)
def convt1d_bwd_w(gy, x, stride, kw):
    cin, s = x.shape
    cout = gy.shape[0]
    gw = np.zeros((cin, cout, kw), dtype=gy.dtype)
    for ci in range(cin):
        for j in range(s):
            v = x[ci, j]
            base = j * stride
            for co in range(cout):
                for k in range(kw):
                    gw[ci, co, k] += v * gy[co, base + k]
    return gw


@njit(**_OPTS)
def gconv2d_fwd(x, w, groups, dil_h, dil_w, pad_h, pad_w):
    cin, h, wid = x.shape
    cout, cpg_in, kh, kw = w.shape
    cpg_out = cout // groups
    h_out = h + 2 * pad_h - dil_h * (kh - 1)
    w_out = wid + 2 * pad_w - dil_w * (kw - 1)
    y = np.zeros((cout, h_out, w_out), dtype=x.dtype)
    for co in range(cout):
        g = co // cpg_out
        ci0 = g * cpg_in
        for oh in range(h_out):
            for ow in range(w_out):
                acc = x.dtype.type(0.0)
                for c in range(cpg_in):
                    for ih in range(kh):
                        th = oh - pad_h + ih * dil_h
                        if th < 0 or th >= h:
                            continue
                        for iw in range(kw):
                            tw = ow - pad_w + iw * dil_w
                            if 0 <= tw < wid:
                                acc += w[co, c, ih, iw] * x[ci0 + c, th, tw]
                y[co, oh, ow] = acc
    return y


@njit(**_OPTS)
def gconv2d_bwd_x(gy, w, groups, dil_h, dil_w, pad_h, pad_w, h_in, w_in):
    cout, h_out, w_out = gy.shape
    _, cpg_in, kh, kw = w.shape
    cpg_out = cout // groups
    cin = groups * cpg_in
    gx = np.zeros((cin, h_in, w_in), dtype=gy.dtype)
    for co in range(cout):
        g = co // cpg_out
        ci0 = g * cpg_in
        for oh in range(h_out):
            for ow in range(w_out):
                gval = gy[co, oh, ow]
                for c in range(cpg_in):
                    for ih in range(kh):
                        th = oh - pad_h + ih * dil_h
                        if th < 0 or th >= h_in:
                            continue
                        for iw in range(kw):
                            tw = ow - pad_w + iw * dil_w
                            if 0 <= tw < w_in:
                                gx[ci0 + c, th, tw] += w[co, c, ih, iw] * gval
    return gx


@njit(**_OPTS)
def gconv2d_bwd_w(gy, x, groups, dil_h, dil_w, pad_h, pad_w, kh, kw):
    cin, h_in, w_in = x.shape
    cout, h_out, w_out = gy.shape
    cpg_in = cin // groups
    cpg_out = cout // groups
    gw = np.zeros((cout, cpg_in, kh, kw), dtype=gy.dtype)
    for co in range(cout):
        g = co // cpg_out
        ci0 = g * cpg_in
        for oh in range(h_out):
            for ow in range(w_out):
                gval = gy[co, oh, ow]
                for c in range(cpg_in):
                    for ih in range(kh):
                        th = oh - pad_h + ih * dil_h
                        if th < 0 or th >= h_in:
                            continue
                        for iw in range(kw):
                            tw = ow - pad_w + iw * dil_w
                            if 0 <= tw < w_in:
                                gw[co, c, ih, iw] += gval * x[ci0 + c, th, tw]
    return gw
