"""One Gibbs sweep over all tokens, compiled and plain-numpy versions.

Both versions consume the same pre-drawn uniforms ``u[i] = (u_z, u_y, u_v)``
and perform the same floating point operations in the same order, so a
chain is reproduced exactly whichever backend runs it.

Token class ``c`` is 0 for an aspect-term, 1 + v for an opinion word.
``frozen`` leaves the topic-word counts untouched (fold-in of new text).
"""

import numpy as np

from .. import _accel

AS_WRITTEN = 0
DERIVED = 1


@_accel.njit
def _draw(p, u):
    total = 0.0
    for k in range(p.shape[0]):
        total += p[k]
    if not total > 0.0:
        raise FloatingPointError("conditional has no probability mass")
    target = u * total
    acc = 0.0
    for k in range(p.shape[0]):
        acc += p[k]
        if acc > target:
            return k
    return p.shape[0] - 1


@_accel.njit
def _ratio(nw, nsum, beta, bsum, c, t, w):
    return (nw[c, t, w] + beta[c, t, w]) / (nsum[c, t] + bsum[c, t])


@_accel.njit
def sweep_numba(words, doc, z, y, v, nw, nsum, ndt, ndq, alpha, delta, beta, bsum,
                pi, u, mode, frozen):
    T = ndt.shape[1]
    pz = np.empty(T)
    pv = np.empty(2)
    for i in range(words.shape[0]):
        w = words[i]
        d = doc[i]
        t = z[i]
        c = 0 if y[i] == 0 else 1 + v[i]
        ndt[d, t] -= 1
        if y[i] == 1:
            ndq[d, v[i]] -= 1
        if not frozen:
            nw[c, t, w] -= 1
            nsum[c, t] -= 1

        for k in range(T):
            if mode == AS_WRITTEN:
                pz[k] = (_ratio(nw, nsum, beta, bsum, 0, k, w)
                         * _ratio(nw, nsum, beta, bsum, 1, k, w)
                         * _ratio(nw, nsum, beta, bsum, 2, k, w)
                         * (ndt[d, k] + alpha[d, k]))
            else:
                pz[k] = _ratio(nw, nsum, beta, bsum, c, k, w) * (ndt[d, k] + alpha[d, k])
        t = _draw(pz, u[i, 0])

        ra = _ratio(nw, nsum, beta, bsum, 0, t, w)
        rp = _ratio(nw, nsum, beta, bsum, 1, t, w)
        rn = _ratio(nw, nsum, beta, bsum, 2, t, w)
        pv[0] = rp * (ndq[d, 0] + delta[d, 0])
        pv[1] = rn * (ndq[d, 1] + delta[d, 1])
        p_a = pi[i, 0] * ra
        if mode == AS_WRITTEN:
            p_o = pi[i, 1] * (rp if v[i] == 0 else rn)
        else:
            den = ndq[d, 0] + ndq[d, 1] + delta[d, 0] + delta[d, 1]
            p_o = pi[i, 1] * (pv[0] / den + pv[1] / den)
        yy = 1 if u[i, 1] * (p_a + p_o) >= p_a else 0
        vv = v[i]
        if yy == 1:
            vv = _draw(pv, u[i, 2])

        z[i] = t
        y[i] = yy
        v[i] = vv
        c = 0 if yy == 0 else 1 + vv
        ndt[d, t] += 1
        if yy == 1:
            ndq[d, vv] += 1
        if not frozen:
            nw[c, t, w] += 1
            nsum[c, t] += 1


def _draw_np(p, u):
    acc = np.cumsum(p)
    if not acc[-1] > 0.0:
        raise FloatingPointError("conditional has no probability mass")
    k = int(np.searchsorted(acc, u * acc[-1], side="right"))
    return min(k, len(p) - 1)


def sweep_numpy(words, doc, z, y, v, nw, nsum, ndt, ndq, alpha, delta, beta, bsum,
                pi, u, mode, frozen):
    for i in range(words.shape[0]):
        w = words[i]
        d = doc[i]
        t = z[i]
        c = 0 if y[i] == 0 else 1 + v[i]
        ndt[d, t] -= 1
        if y[i] == 1:
            ndq[d, v[i]] -= 1
        if not frozen:
            nw[c, t, w] -= 1
            nsum[c, t] -= 1

        r = (nw[:, :, w] + beta[:, :, w]) / (nsum + bsum)      # (3, T)
        if mode == AS_WRITTEN:
            pz = r[0] * r[1] * r[2] * (ndt[d] + alpha[d])
        else:
            pz = r[c] * (ndt[d] + alpha[d])
        t = _draw_np(pz, u[i, 0])

        ra, rp, rn = r[0, t], r[1, t], r[2, t]
        pv = np.array([rp * (ndq[d, 0] + delta[d, 0]), rn * (ndq[d, 1] + delta[d, 1])])
        p_a = pi[i, 0] * ra
        if mode == AS_WRITTEN:
            p_o = pi[i, 1] * (rp if v[i] == 0 else rn)
        else:
            den = ndq[d, 0] + ndq[d, 1] + delta[d, 0] + delta[d, 1]
            p_o = pi[i, 1] * (pv[0] / den + pv[1] / den)
        yy = 1 if u[i, 1] * (p_a + p_o) >= p_a else 0
        vv = v[i]
        if yy == 1:
            vv = _draw_np(pv, u[i, 2])

        z[i] = t
        y[i] = yy
        v[i] = vv
        c = 0 if yy == 0 else 1 + vv
        ndt[d, t] += 1
        if yy == 1:
            ndq[d, vv] += 1
        if not frozen:
            nw[c, t, w] += 1
            nsum[c, t] += 1


def sweep(use_numba, *args):
    return (sweep_numba if use_numba else sweep_numpy)(*args)
