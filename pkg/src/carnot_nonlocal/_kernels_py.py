"""Pure numpy versions of the compiled kernels (same arithmetic, vectorised)."""
from __future__ import annotations

import numpy as np

from .groups import GroupSpec, multiply

_BLOCK = 1 << 21  # elements per temporary (n-vectors count once per coordinate)


def _xy_blocks(nx, ny, n):
    per = max(1, _BLOCK // max(1, ny * n))
    for s in range(0, nx, per):
        yield slice(s, min(nx, s + per))


def pair_sums(G: GroupSpec, f, X, H, wv, wa, wp, p, V=None):
    X = np.asarray(X, dtype=float)
    H = np.asarray(H, dtype=float)
    nx, nh, m1 = len(X), len(H), G.m1
    fx = np.asarray(f(X), dtype=float) if nx else np.zeros(0)
    rv = np.zeros((nx, wv.shape[1]))
    ra = np.zeros((nx, wa.shape[1]))
    rp = np.zeros((nx, wp.shape[1]))
    for sl in _xy_blocks(nx, nh, G.n):
        Z = multiply(G, X[sl, None, :], H[None, :, :])
        D = f(Z.reshape(-1, G.n)).reshape(Z.shape[:2]) - fx[sl, None]
        if V is not None:
            D = D - V[sl] @ H[:, :m1].T
        rv[sl] = D @ wv
        aD = np.abs(D)
        ra[sl] = aD @ wa
        if wp.shape[1]:
            rp[sl] = (aD if p == 1 else aD ** p) @ wp
    return fx, rv, ra, rp


def grad_sums(G: GroupSpec, hgrad, X, H, wk):
    X = np.asarray(X, dtype=float)
    H = np.asarray(H, dtype=float)
    out = np.zeros((len(X), G.m1))
    for sl in _xy_blocks(len(X), len(H), G.n):
        Z = multiply(G, X[sl, None, :], -H[None, :, :])
        g = hgrad(Z.reshape(-1, G.n)).reshape(Z.shape[:2] + (G.m1,))
        out[sl] = np.einsum("xjc,j->xc", g, wk)
    return out


def _prim(t, k):
    if k == -1.0:
        return np.log(t)
    return t ** (k + 1.0) / (k + 1.0)


def step_crossings(G: GroupSpec, norm, Xc, Y, r, tmin, tmax, k, M, niter, W, wa):
    """numpy twin of the compiled routine; ``norm`` maps (..., n) -> (...)."""
    if M < 1 or not tmax > tmin:
        raise ValueError("need M >= 1 and tmax > tmin")
    Xc = np.asarray(Xc, dtype=float)
    Y = np.asarray(Y, dtype=float)
    nx, ny, n = len(Xc), len(Y), G.n
    ov = np.zeros((nx, G.m1))
    oa = np.zeros((nx, wa.shape[1]))
    ins = np.zeros(nx, dtype=np.int8)
    ts = tmin + (tmax - tmin) * np.arange(M + 1) / M

    def level(x, y, t):
        return norm(multiply(G, x, y * t[..., None] ** G.weights)) - r

    for sl in _xy_blocks(nx, ny * (M + 1), n):
        xc = Xc[sl]
        s0 = norm(xc) < r
        ins[sl] = s0
        st = level(xc[:, None, None, :], Y[None, :, None, :], ts[None, None, :]) < 0
        a, b = st[..., :-1], st[..., 1:]
        t0 = np.broadcast_to(ts[:-1], a.shape)
        t1 = np.broadcast_to(ts[1:], a.shape)
        off = (a != s0[:, None, None])
        seg = np.where((a == b) & off, _prim(t1, k) - _prim(np.where(off, t0, t1), k), 0.0)
        L = seg.sum(axis=-1)
        ix, iy, ii = np.nonzero(a != b)
        if len(ix):
            lo, hi = ts[ii].copy(), ts[ii + 1].copy()
            sp = a[ix, iy, ii]
            for _ in range(niter):
                mid = 0.5 * (lo + hi)
                sm = level(xc[ix], Y[iy], mid) < 0
                same = sm == sp
                lo = np.where(same, mid, lo)
                hi = np.where(same, hi, mid)
            tc = 0.5 * (lo + hi)
            left = sp != s0[ix]
            with np.errstate(divide="ignore"):
                contrib = np.where(left, _prim(tc, k) - _prim(ts[ii], k),
                                   _prim(ts[ii + 1], k) - _prim(tc, k))
            np.add.at(L, (ix, iy), contrib)
        sgn = np.where(s0, -1.0, 1.0)
        ov[sl] = sgn[:, None] * (L @ W)
        oa[sl] = L @ wa
    return ov, oa, ins
