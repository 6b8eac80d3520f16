"""Compiled closed-loop kernel: pendulum + estimator + adaptive parameters.

The coupled state vector is laid out as

    [ x (n) | xhat (n+1) | q (n+1) | theta (m) ]

where q is the input filter that reproduces, for the control signal, the lag
the integral-chain differentiator imposes on x_n'.  One call advances a
contiguous block of raw steps; the caller owns chunking and noise generation.
"""
import math

import numpy as np

from ._jit import kernel
from .approximators import fuzzy_basis_kernel, rbf_basis_kernel
from .control import control_law
from .estimators import highgain_rhs, integral_chain_rhs
from .plant import pendulum_terms, reference_derivative

CTRL_NONE, CTRL_FULL, CTRL_FUZZY, CTRL_RBF, CTRL_DIFF, CTRL_OBS = 0, 1, 2, 3, 4, 5
EST_NONE, EST_IC, EST_HG, EST_EXT = 0, 1, 2, 3
UPREV_FILTERED, UPREV_DELAYED = 0, 1

# fp[] slots
FP_GRAV, FP_MC, FP_M, FP_L = 0, 1, 2, 3
FP_REF_A, FP_REF_W = 4, 5
FP_EPS, FP_GAMMA, FP_LU, FP_GFLOOR = 6, 7, 8, 9
FP_CLAMP, FP_CLAMP_UNTIL, FP_H, FP_PHI_C = 10, 11, 12, 13
N_FP = 14

# ip[] slots
IP_N, IP_CTRL, IP_EST, IP_M, IP_UPREV, IP_DECIM, IP_NSTEPS = 0, 1, 2, 3, 4, 5, 6
N_IP = 7

STATUS_OK, STATUS_DIVERGED, STATUS_DEGENERATE = 0, 1, 2


def column_names(n, m):
    cols = ["t"] + [f"x{i + 1}" for i in range(n)] + ["xext", "y"]
    cols += [f"xhat{i + 1}" for i in range(n + 1)]
    cols += [f"yd{i}" for i in range(n + 1)]
    cols += ["u", "saturated", "f", "fhat"]
    cols += [f"e{i + 1}" for i in range(n)]
    cols += [f"z{i + 1}" for i in range(n + 1)]
    cols += ["phi"]
    cols += [f"theta{j + 1}" for j in range(m)]
    return cols


def n_columns(n, m):
    return 1 + n + 2 + (n + 1) + (n + 1) + 4 + n + (n + 1) + 1 + m


@kernel
def _reference(t, fp, r):
    for k in range(r.shape[0]):
        r[k] = reference_derivative(t, k, fp[FP_REF_A], fp[FP_REF_W])


@kernel
def _basis(x, e, ip, mf_c, mf_w, mf_off, mu, rbf_c, rbf_w, basis):
    """Approximator basis for the current state; returns the normalizer (1 for RBF)."""
    ctrl = ip[IP_CTRL]
    if ctrl == CTRL_FUZZY:
        return fuzzy_basis_kernel(x, mf_c, mf_w, mf_off, mu, basis)
    if ctrl == CTRL_RBF:
        rbf_basis_kernel(e, rbf_c, rbf_w, basis)
    return 1.0


@kernel
def coupled_rhs(t, z, u, noise, fp, ip, a, pb, mf_c, mf_w, mf_off, rbf_c, rbf_w,
                r, e, mu, basis, tmp_in, tmp_out, dz):
    n = ip[IP_N]
    m = ip[IP_M]
    ctrl = ip[IP_CTRL]
    est = ip[IP_EST]
    i_xh = n
    i_q = 2 * n + 1
    i_th = 3 * n + 2
    eps = fp[FP_EPS]

    f, g = pendulum_terms(z[0], z[1], fp[FP_GRAV], fp[FP_MC], fp[FP_M], fp[FP_L])
    for i in range(n - 1):
        dz[i] = z[i + 1]
    dz[n - 1] = f + g * u

    y = z[0] + noise
    for i in range(n + 1):
        tmp_in[i] = z[i_xh + i]
    if est == EST_IC:
        integral_chain_rhs(tmp_in, y, eps, a, tmp_out)
    elif est == EST_HG:
        highgain_rhs(tmp_in, y, 0.0, eps, a, tmp_out)
    elif est == EST_EXT:
        _, gh = pendulum_terms(tmp_in[0], tmp_in[1], fp[FP_GRAV], fp[FP_MC], fp[FP_M], fp[FP_L])
        highgain_rhs(tmp_in, y, gh * u, eps, a, tmp_out)
    else:
        for i in range(n + 1):
            tmp_out[i] = 0.0
    for i in range(n + 1):
        dz[i_xh + i] = tmp_out[i]

    if est != EST_NONE and ctrl == CTRL_DIFF and ip[IP_UPREV] == UPREV_FILTERED:
        for i in range(n + 1):
            tmp_in[i] = z[i_q + i]
        integral_chain_rhs(tmp_in, u, eps, a, tmp_out)
        for i in range(n + 1):
            dz[i_q + i] = tmp_out[i]
    else:
        for i in range(n + 1):
            dz[i_q + i] = 0.0

    if ctrl == CTRL_FUZZY or ctrl == CTRL_RBF:
        _reference(t, fp, r)
        s = 0.0
        for i in range(n):
            e[i] = z[i] - r[i]
            # adaptation runs in reference-minus-state coordinates
            s -= e[i] * pb[i]
        total = _basis(z, e, ip, mf_c, mf_w, mf_off, mu, rbf_c, rbf_w, basis)
        if not math.isfinite(total):
            return STATUS_DEGENERATE
        gamma = fp[FP_GAMMA]
        for j in range(m):
            dz[i_th + j] = -gamma * s * basis[j]
    else:
        for j in range(m):
            dz[i_th + j] = 0.0
    return STATUS_OK


@kernel
def compute_control(t, z, u_last, fp, ip, kv, mf_c, mf_w, mf_off, rbf_c, rbf_w,
                    r, e, mu, basis, xc):
    """Zero-order-hold control at the start of a step.

    Returns (u, saturated, f, g, fhat, status).
    """
    n = ip[IP_N]
    m = ip[IP_M]
    ctrl = ip[IP_CTRL]
    i_xh = n
    i_q = 2 * n + 1
    i_th = 3 * n + 2
    f, g = pendulum_terms(z[0], z[1], fp[FP_GRAV], fp[FP_MC], fp[FP_M], fp[FP_L])
    _reference(t, fp, r)
    clamp = t < fp[FP_CLAMP_UNTIL]
    lim = fp[FP_CLAMP]
    for i in range(n + 1):
        v = z[i_xh + i]
        if clamp:
            v = min(lim, max(-lim, v))
        xc[i] = v
    fhat = f
    u = 0.0
    sat = False
    if ctrl == CTRL_NONE:
        return 0.0, False, f, g, f, STATUS_OK
    if ctrl == CTRL_FULL or ctrl == CTRL_FUZZY or ctrl == CTRL_RBF:
        for i in range(n):
            e[i] = z[i] - r[i]
        if ctrl != CTRL_FULL:
            total = _basis(z, e, ip, mf_c, mf_w, mf_off, mu, rbf_c, rbf_w, basis)
            if not math.isfinite(total):
                return 0.0, False, f, g, f, STATUS_DEGENERATE
            fhat = 0.0
            for j in range(m):
                fhat += z[i_th + j] * basis[j]
        u, sat, _, _ = control_law(fhat, r[n], kv, e, g, fp[FP_GFLOOR], fp[FP_LU])
        return u, sat, f, g, fhat, STATUS_OK
    _, gh = pendulum_terms(xc[0], xc[1], fp[FP_GRAV], fp[FP_MC], fp[FP_M], fp[FP_L])
    for i in range(n):
        e[i] = xc[i] - r[i]
    if ctrl == CTRL_DIFF:
        if ip[IP_UPREV] == UPREV_FILTERED:
            uprev = z[i_q]
        else:
            uprev = u_last
        fhat = xc[n] - gh * uprev
    else:
        fhat = xc[n]
    u, sat, _, _ = control_law(fhat, r[n], kv, e, gh, fp[FP_GFLOOR], fp[FP_LU])
    return u, sat, f, g, fhat, STATUS_OK


@kernel
def _record(row, t, z, u, sat, f, g, fhat, noise, fp, ip, kv, r):
    n = ip[IP_N]
    m = ip[IP_M]
    est = ip[IP_EST]
    i_xh = n
    i_th = 3 * n + 2
    c = 0
    row[c] = t
    c += 1
    for i in range(n):
        row[c] = z[i]
        c += 1
    if est == EST_EXT:
        xext = f
    elif est == EST_NONE:
        xext = math.nan
    else:
        xext = f + g * u
    row[c] = xext
    row[c + 1] = z[0] + noise
    c += 2
    for i in range(n + 1):
        row[c] = z[i_xh + i] if est != EST_NONE else math.nan
        c += 1
    for i in range(n + 1):
        row[c] = r[i]
        c += 1
    row[c] = u
    row[c + 1] = 1.0 if sat else 0.0
    row[c + 2] = f
    row[c + 3] = fhat
    c += 4
    for i in range(n):
        row[c] = z[i] - r[i]
        c += 1
    for i in range(n):
        row[c] = z[i_xh + i] - z[i] if est != EST_NONE else math.nan
        c += 1
    row[c] = z[i_xh + n] - xext if est != EST_NONE else math.nan
    c += 1
    if est == EST_NONE:
        phi = abs(f - fhat)
    else:
        dn2 = 0.0
        wsum = 0.0
        for i in range(n):
            d = z[i] - z[i_xh + i]
            dn2 += d * d
            wsum += kv[i] * abs(d)
        phi = abs(xext - z[i_xh + n]) + fp[FP_PHI_C] * math.sqrt(dn2) + wsum
    row[c] = phi
    c += 1
    for j in range(m):
        row[c] = z[i_th + j]
        c += 1


@kernel
def advance(z, mem, k_start, k_stop, noise, fp, ip, a, kv, pb,
            mf_c, mf_w, mf_off, rbf_c, rbf_w, out):
    """Run raw steps k_start..k_stop-1 of the grid t_k = k h, k = 0..N.

    ``mem`` carries state between calls: mem[0] last applied control,
    mem[1] next free output row, mem[2] time of failure.  Returns a status code.
    """
    n = ip[IP_N]
    nz = z.shape[0]
    h = fp[FP_H]
    nsteps = ip[IP_NSTEPS]
    decim = ip[IP_DECIM]
    r = np.empty(n + 1)
    e = np.empty(n)
    mu = np.empty(max(mf_c.shape[0], 1))
    basis = np.empty(max(ip[IP_M], 1))
    tmp_in = np.empty(n + 1)
    tmp_out = np.empty(n + 1)
    xc = np.empty(n + 1)
    k1 = np.empty(nz)
    k2 = np.empty(nz)
    k3 = np.empty(nz)
    k4 = np.empty(nz)
    zs = np.empty(nz)
    for k in range(k_start, k_stop):
        t = k * h
        nv = noise[k - k_start]
        u, sat, f, g, fhat, st = compute_control(t, z, mem[0], fp, ip, kv, mf_c, mf_w, mf_off,
                                                 rbf_c, rbf_w, r, e, mu, basis, xc)
        if st != STATUS_OK:
            mem[2] = t
            return st
        if k % decim == 0 or k == nsteps:
            _reference(t, fp, r)
            row = int(mem[1])
            _record(out[row], t, z, u, sat, f, g, fhat, nv, fp, ip, kv, r)
            mem[1] = row + 1
        if k == nsteps:
            break
        st = coupled_rhs(t, z, u, nv, fp, ip, a, pb, mf_c, mf_w, mf_off, rbf_c, rbf_w,
                         r, e, mu, basis, tmp_in, tmp_out, k1)
        for i in range(nz):
            zs[i] = z[i] + 0.5 * h * k1[i]
        st += coupled_rhs(t + 0.5 * h, zs, u, nv, fp, ip, a, pb, mf_c, mf_w, mf_off, rbf_c, rbf_w,
                          r, e, mu, basis, tmp_in, tmp_out, k2)
        for i in range(nz):
            zs[i] = z[i] + 0.5 * h * k2[i]
        st += coupled_rhs(t + 0.5 * h, zs, u, nv, fp, ip, a, pb, mf_c, mf_w, mf_off, rbf_c, rbf_w,
                          r, e, mu, basis, tmp_in, tmp_out, k3)
        for i in range(nz):
            zs[i] = z[i] + h * k3[i]
        st += coupled_rhs(t + h, zs, u, nv, fp, ip, a, pb, mf_c, mf_w, mf_off, rbf_c, rbf_w,
                          r, e, mu, basis, tmp_in, tmp_out, k4)
        if st != STATUS_OK:
            mem[2] = t
            return STATUS_DEGENERATE
        ok = True
        for i in range(nz):
            z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not math.isfinite(z[i]):
                ok = False
        mem[0] = u
        if not ok:
            mem[2] = t + h
            return STATUS_DIVERGED
    return STATUS_OK
