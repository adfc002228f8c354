"""Numba-compiled kernels; numerically mirror ``_numpy`` loop for loop."""

import math

import numpy as np
from numba import njit

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S5 = np.uint64(5)
_S6 = np.uint64(6)


@njit(cache=True)
def _block(c0, c1, c2, c3, k0, k1):
    for r in range(10):
        if r:
            k0 = (k0 + _W0) & _MASK
            k1 = (k1 + _W1) & _MASK
        p0 = _M0 * c0
        p1 = _M1 * c2
        n0 = (p1 >> _S32) ^ c1 ^ k0
        n2 = (p0 >> _S32) ^ c3 ^ k1
        c0, c1, c2, c3 = n0, p1 & _MASK, n2, p0 & _MASK
    return c0, c1, c2, c3


@njit(cache=True)
def _philox_rows(ctr, k0, k1):
    n = ctr.shape[0]
    out = np.empty((n, 4), dtype=np.uint64)
    for i in range(n):
        a, b, c, d = _block(ctr[i, 0], ctr[i, 1], ctr[i, 2], ctr[i, 3], k0, k1)
        out[i, 0] = a
        out[i, 1] = b
        out[i, 2] = c
        out[i, 3] = d
    return out


def philox4x32(ctr, key):
    c = np.ascontiguousarray(np.asarray(ctr, dtype=np.uint64).reshape(-1, 4))
    k0 = np.uint64(key[0]) & _MASK
    k1 = np.uint64(key[1]) & _MASK
    return _philox_rows(c, k0, k1).astype(np.uint32)


@njit(cache=True)
def _unit(hi, lo):
    return (float(hi >> _S5) * 67108864.0 + float(lo >> _S6) + 0.5) / 9007199254740992.0


@njit(cache=True)
def _normals(k0, k1, stream, path_ids, step0, n_steps):
    P = path_ids.size
    out = np.empty((P, n_steps))
    for p in range(P):
        pid = path_ids[p]
        c1 = pid & _MASK
        c2 = pid >> _S32
        for t in range(n_steps):
            w0, w1, w2, w3 = _block(step0 + np.uint64(t), c1, c2, stream, k0, k1)
            u1 = _unit(w0, w1)
            u2 = _unit(w2, w3)
            out[p, t] = math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
    return out


def standard_normals(seed, stream, path_ids, step0, n_steps):
    seed = np.uint64(seed)
    path_ids = np.ascontiguousarray(path_ids, dtype=np.uint64)
    return _normals(seed & _MASK, seed >> _S32, np.uint64(stream), path_ids,
                    np.uint64(step0), int(n_steps))


@njit(cache=True)
def _em(u0, dt, dW, mu0, mu1, sig0, sig1):
    P, S = dW.shape
    out = np.empty((P, S + 1))
    for p in range(P):
        u = u0
        out[p, 0] = u
        for t in range(S):
            u = u + (mu0[t] + mu1[t] * u) * dt[t] + (sig0[t] + sig1[t] * u) * dW[p, t]
            out[p, t + 1] = u
    return out


def em_affine(u0, dt, dW, mu0, mu1, sig0, sig1):
    f = lambda a: np.ascontiguousarray(a, dtype=np.float64)  # noqa: E731
    return _em(float(u0), f(dt), f(dW), f(mu0), f(mu1), f(sig0), f(sig1))


@njit(cache=True)
def _transition(x, psi, fx, eps, radius):
    M = x.size
    w = np.empty(M)
    for n in range(1, M - 1):
        w[n] = 0.5 * (x[n + 1] - x[n - 1])
    w[0] = 0.5 * (x[1] - x[0])
    w[M - 1] = 0.5 * (x[M - 1] - x[M - 2])
    damp = np.exp(-eps * fx)
    out = np.empty(M)
    for n in range(M):
        lo = np.searchsorted(x, x[n] - radius, side="left")
        hi = np.searchsorted(x, x[n] + radius, side="right") - 1
        h = min(n - lo, hi - n, n, M - 1 - n)
        num = 0.0
        den = 0.0
        for m in range(n - h, n + h + 1):
            d = x[m] - x[n]
            base = math.exp(-d * d / (2.0 * eps)) * w[m] * psi[m]
            num += base * damp[m]
            den += base
        out[n] = psi[n] * (num / den)
    return out


def local_transition(x, psi, fx, eps, radius):
    f = lambda a: np.ascontiguousarray(a, dtype=np.float64)  # noqa: E731
    return _transition(f(x), f(psi), f(fx), float(eps), float(radius))
