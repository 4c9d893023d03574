"""Pure-numpy convolution kernels (fallback backend).

Each function is vectorized over channels via BLAS matmuls, looping only over
the (small) kernel taps. Signatures are shared with the numba backend; shape
validation happens in the calling layer, not here.

Conventions: cross-correlation (no kernel flip), zero padding, stride-1 for
the 2-D grouped kernels. Forward/backward pairs are exact adjoints.
"""

import numpy as np


# ---------------------------------------------------------------------------
# 1-D convolution: x (Cin, T), w (Cout, Cin, Kw) -> y (Cout, Tout)
# ---------------------------------------------------------------------------

def conv1d_fwd(x, w, stride, pad):
    cin, t_in = x.shape
    cout, _, kw = w.shape
    t_out = (t_in + 2 * pad - kw) // stride + 1
    xp = np.pad(x, ((0, 0), (pad, pad))) if pad else x
    y = np.zeros((cout, t_out), dtype=x.dtype)
    for k in range(kw):
        stop = k + (t_out - 1) * stride + 1
        y += w[:, :, k] @ xp[:, k:stop:stride]
    return y


def conv1d_bwd_x(gy, w, stride, pad, t_in):
    cout, t_out = gy.shape
    _, cin, kw = w.shape
    gxp = np.zeros((cin, t_in + 2 * pad), dtype=gy.dtype)
    for k in range(kw):
        stop = k + (t_out - 1) * stride + 1
        gxp[:, k:stop:stride] += w[:, :, k].T @ gy
    return gxp[:, pad:pad + t_in] if pad else gxp


def conv1d_bwd_w(gy, x, stride, pad, kw):
    cout, t_out = gy.shape
    cin, t_in = x.shape
    xp = np.pad(x, ((0, 0), (pad, pad))) if pad else x
    gw = np.zeros((cout, cin, kw), dtype=gy.dtype)
    for k in range(kw):
        stop = k + (t_out - 1) * stride + 1
        gw[:, :, k] = gy @ xp[:, k:stop:stride].T
    return gw


# ---------------------------------------------------------------------------
# Transposed 1-D convolution: x (Cin, S), w (Cin, Cout, Kw) -> y (Cout, T)
# with T = (S - 1) * stride + Kw. Exact adjoint of conv1d at pad=0.
# ---------------------------------------------------------------------------

def convt1d_fwd(x, w, stride):
    cin, s = x.shape
    _, cout, kw = w.shape
    t = (s - 1) * stride + kw
    y = np.zeros((cout, t), dtype=x.dtype)
    for k in range(kw):
        stop = k + (s - 1) * stride + 1
        y[:, k:stop:stride] += w[:, :, k].T @ x
    return y


def convt1d_bwd_x(gy, w, stride, s):
    cin, cout, kw = w.shape
    gx = np.zeros((cin, s), dtype=gy.dtype)
    for k in range(kw):
        stop = k + (s - 1) * stride + 1
        gx += w[:, :, k] @ gy[:, k:stop:stride]
    return gx


def convt1d_bwd_w(gy, x, stride, kw):
    cin, s = x.shape
    cout = gy.shape[0]
    gw = np.zeros((cin, cout, kw), dtype=gy.dtype)
    for k in range(kw):
        stop = k + (s - 1) * stride + 1
        gw[:, :, k] = x @ gy[:, k:stop:stride].T
    return gw


# ---------------------------------------------------------------------------
# Grouped, dilated 2-D convolution (stride 1, zero padding):
# x (Cin, H, W), w (Cout, Cin/groups, Kh, Kw) -> y (Cout, Hout, Wout)
# Group g convolves input channels [g*Cin/G, (g+1)*Cin/G) only.
# ---------------------------------------------------------------------------

def gconv2d_fwd(x, w, groups, dil_h, dil_w, pad_h, pad_w):
    cin, h, wid = x.shape
    cout, cpg_in, kh, kw = w.shape
    cpg_out = cout // groups
    h_out = h + 2 * pad_h - dil_h * (kh - 1)
    w_out = wid + 2 * pad_w - dil_w * (kw - 1)
    xp = np.pad(x, ((0, 0), (pad_h, pad_h), (pad_w, pad_w)))
    xg = xp.reshape(groups, cpg_in, h + 2 * pad_h, wid + 2 * pad_w)
    wg = w.reshape(groups, cpg_out, cpg_in, kh, kw)
    y = np.zeros((groups, cpg_out, h_out * w_out), dtype=x.dtype)
    for ih in range(kh):
        for iw in range(kw):
            win = xg[:, :, ih * dil_h:ih * dil_h + h_out,
                     iw * dil_w:iw * dil_w + w_out]
            y += wg[:, :, :, ih, iw] @ win.reshape(groups, cpg_in, -1)
    return y.reshape(cout, h_out, w_out)


def gconv2d_bwd_x(gy, w, groups, dil_h, dil_w, pad_h, pad_w, h_in, w_in):
    cout, h_out, w_out = gy.shape
    _, cpg_in, kh, kw = w.shape
    cpg_out = cout // groups
    hp, wp = h_in + 2 * pad_h, w_in + 2 * pad_w
    gyg = gy.reshape(groups, cpg_out, h_out * w_out)
    wg = w.reshape(groups, cpg_out, cpg_in, kh, kw)
    gxp = np.zeros((groups, cpg_in, hp, wp), dtype=gy.dtype)
    for ih in range(kh):
        for iw in range(kw):
            contrib = np.swapaxes(wg[:, :, :, ih, iw], 1, 2) @ gyg
            gxp[:, :, ih * dil_h:ih * dil_h + h_out,
                iw * dil_w:iw * dil_w + w_out] += contrib.reshape(
                    groups, cpg_in, h_out, w_out)
    gxp = gxp.reshape(groups * cpg_in, hp, wp)
    return gxp[:, pad_h:pad_h + h_in, pad_w:pad_w + w_in]


def gconv2d_bwd_w(gy, x, groups, dil_h, dil_w, pad_h, pad_w, kh, kw):
    cin, h_in, w_in = x.shape
    cout, h_out, w_out = gy.shape
    cpg_in = cin // groups
    cpg_out = cout // groups
    xp = np.pad(x, ((0, 0), (pad_h, pad_h), (pad_w, pad_w)))
    xg = xp.reshape(groups, cpg_in, h_in + 2 * pad_h, w_in + 2 * pad_w)
    gyg = gy.reshape(groups, cpg_out, h_out * w_out)
    gw = np.zeros((groups, cpg_out, cpg_in, kh, kw), dtype=gy.dtype)
    for ih in range(kh):
        for iw in range(kw):
            win = xg[:, :, ih * dil_h:ih * dil_h + h_out,
                     iw * dil_w:iw * dil_w + w_out]
            gw[:, :, :, ih, iw] = gyg @ np.swapaxes(
                win.reshape(groups, cpg_in, -1), 1, 2)
    return gw.reshape(cout, cpg_in, kh, kw)
