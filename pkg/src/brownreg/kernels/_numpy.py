"""Pure-numpy implementations of the hot kernels (reference path)."""

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)


def philox4x32(ctr, key):
    """Philox-4x32-10 block function.

    ``ctr`` is ``(n, 4)`` and ``key`` is ``(2,)``, both holding 32-bit words.
    """
    c = np.asarray(ctr, dtype=np.uint64).reshape(-1, 4)
    c0, c1, c2, c3 = (c[:, i].copy() for i in range(4))
    k0 = np.uint64(key[0]) & _MASK
    k1 = np.uint64(key[1]) & _MASK
    for r in range(10):
        if r:
            k0 = (k0 + _W0) & _MASK
            k1 = (k1 + _W1) & _MASK
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = ((p1 >> _S32) ^ c1 ^ k0, p1 & _MASK,
                          (p0 >> _S32) ^ c3 ^ k1, p0 & _MASK)
    return np.stack([c0, c1, c2, c3], axis=1).astype(np.uint32)


def _to_unit(hi, lo):
    # 53-bit uniform in (0, 1)
    return ((hi >> np.uint64(5)).astype(np.float64) * 67108864.0
            + (lo >> np.uint64(6)).astype(np.float64) + 0.5) / 9007199254740992.0


def standard_normals(seed, stream, path_ids, step0, n_steps):
    """Normals ``Z[p, t]`` keyed by ``(seed, stream, path_ids[p], step0 + t)``.

    Each draw comes from its own Philox counter ``(step, path_lo, path_hi,
    stream)`` under key ``(seed_lo, seed_hi)``, so any entry can be regenerated
    independently of the others.
    """
    path_ids = np.asarray(path_ids, dtype=np.uint64)
    P = path_ids.size
    steps = np.uint64(step0) + np.arange(n_steps, dtype=np.uint64)
    ctr = np.empty((P, n_steps, 4), dtype=np.uint64)
    ctr[..., 0] = steps[None, :]
    ctr[..., 1] = (path_ids & _MASK)[:, None]
    ctr[..., 2] = (path_ids >> _S32)[:, None]
    ctr[..., 3] = np.uint64(stream)
    seed = np.uint64(seed)
    w = philox4x32(ctr.reshape(-1, 4), (seed & _MASK, seed >> _S32)).astype(np.uint64)
    u1 = _to_unit(w[:, 0], w[:, 1])
    u2 = _to_unit(w[:, 2], w[:, 3])
    z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
    return z.reshape(P, n_steps)


def em_affine(u0, dt, dW, mu0, mu1, sig0, sig1):
    """Euler-Maruyama for ``dU = (mu0 + mu1 U) ds + (sig0 + sig1 U) dB``.

    Coefficients are per step (length ``S``); ``dW`` is ``(P, S)``.
    Returns ``(P, S + 1)`` paths starting at ``u0``.
    """
    P, S = dW.shape
    out = np.empty((P, S + 1))
    out[:, 0] = u0
    u = out[:, 0].copy()
    for t in range(S):
        u = u + (mu0[t] + mu1[t] * u) * dt[t] + (sig0[t] + sig1[t] * u) * dW[:, t]
        out[:, t + 1] = u
    return out


def local_transition(x, psi, fx, eps, radius):
    """One step of the localized path-integral transition on a 1-D node grid.

    ``psi_new[n] = psi[n] * sum_m K w_m exp(-eps f_m) psi_m / sum_m K w_m psi_m``
    over a window symmetric in node index, ``K`` the Gaussian kernel of
    variance ``eps`` and ``w`` the trapezoid weights.
    """
    M = x.size
    w = np.empty(M)
    w[1:-1] = 0.5 * (x[2:] - x[:-2])
    w[0] = 0.5 * (x[1] - x[0])
    w[-1] = 0.5 * (x[-1] - x[-2])
    damp = np.exp(-eps * fx)
    out = np.empty(M)
    for n in range(M):
        lo = np.searchsorted(x, x[n] - radius, side="left")
        hi = np.searchsorted(x, x[n] + radius, side="right") - 1
        h = min(n - lo, hi - n, n, M - 1 - n)
        sl = slice(n - h, n + h + 1)
        d = x[sl] - x[n]
        base = np.exp(-d * d / (2.0 * eps)) * w[sl] * psi[sl]
        out[n] = psi[n] * (np.sum(base * damp[sl]) / np.sum(base))
    return out
