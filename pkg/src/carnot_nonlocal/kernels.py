"""Backend selection for the hot loops.

The compiled extension is used when it imported and the field or norm has
a native descriptor; otherwise the numpy twin runs.  Set
``CARNOT_NONLOCAL_BACKEND=python`` to force the fallback and
``CARNOT_NUM_THREADS`` to choose the OpenMP thread count.
"""
from __future__ import annotations

import os

import numpy as np

from . import _kernels_py as _py
from .groups import GroupSpec, inverse, multiply

try:  # pragma: no cover - depends on the build
    from . import _kernels as _native
except ImportError:  # pragma: no cover
    _native = None

__all__ = ["available_backends", "active_backend", "num_threads", "pair_sums", "grad_sums",
           "step_crossings"]


def available_backends() -> list[str]:
    return (["cython"] if _native is not None else []) + ["python"]


def active_backend(requested: str | None = None) -> str:
    """Resolve ``requested`` (or the environment) to the backend that will run."""
    want = (requested or os.environ.get("CARNOT_NONLOCAL_BACKEND", "auto")).lower()
    if want not in ("auto", "cython", "python"):
        raise ValueError(f"unknown backend {want!r}")
    if want == "python":
        return "python"
    if want == "cython" and _native is None:
        raise RuntimeError("the compiled extension is not available")
    return "cython" if _native is not None else "python"


def num_threads() -> int:
    try:
        return max(1, int(os.environ.get("CARNOT_NUM_THREADS", "1")))
    except ValueError:
        return 1


def _c(a, ndim=2):
    a = np.ascontiguousarray(a, dtype=float)
    if ndim == 2 and a.ndim == 1:
        a = a[:, None]
    return a


def _flatB(G: GroupSpec):
    return np.ascontiguousarray(G.correction, dtype=float).reshape(-1)


def pair_sums(G: GroupSpec, field, X, H, wv=None, wa=None, wp=None, p=1.0, V=None,
              backend=None):
    """Weighted sums over h of D = f(x h) - f(x) [- <V(x), pi(h)>].

    ``wv`` (nh, cv) is paired with D, ``wa`` (nh, ca) with |D| and ``wp``
    (nh, cp) with |D|^p.  Returns ``(f(X), Dwv, |D|wa, |D|^p wp)``.
    """
    X, H = _c(X), _c(H)
    nh = len(H)
    wv = np.zeros((nh, 0)) if wv is None else _c(wv)
    wa = np.zeros((nh, 0)) if wa is None else _c(wa)
    wp = np.zeros((nh, 0)) if wp is None else _c(wp)
    V = None if V is None else _c(V)
    if active_backend(backend) == "cython" and field.native is not None:
        code, params = field.native
        return _native.pair_sums(X, H, _flatB(G), G.m1, int(code), _c(params, 1), wv, wa, wp,
                                 float(p), V, num_threads())
    return _py.pair_sums(G, field.evaluate, X, H, wv, wa, wp, float(p), V)


def grad_sums(G: GroupSpec, field, X, H, wk, backend=None):
    """sum_j wk_j grad_G f(x h_j^-1)."""
    X, H = _c(X), _c(H)
    wk = _c(wk, 1)
    if active_backend(backend) == "cython" and field.native is not None:
        code, params = field.native
        return _native.grad_sums(X, H, _flatB(G), G.m1, int(code), _c(params, 1), wk,
                                 num_threads())
    return _py.grad_sums(G, field.horizontal_gradient, X, H, wk)


def step_crossings(G: GroupSpec, N, center, r, X, Y, tmin, tmax, k, W, wa,
                   M: int = 64, niter: int = 40, backend=None):
    """Indicator differences of the ball B_N(center, r) along t -> x delta_t(y).

    See the compiled routine for the returned sums.
    """
    Xc = _c(multiply(G, inverse(G, np.asarray(center, dtype=float)), _c(X)))
    Y, W, wa = _c(Y), _c(W), _c(wa)
    if active_backend(backend) == "cython" and N.native is not None:
        code, params = N.native
        return _native.step_crossings(Xc, Y, _flatB(G), G.m1, _c(G.weights, 1), int(code),
                                      np.asarray(params, dtype=float).reshape(-1), float(r),
                                      float(tmin), float(tmax), float(k), int(M), int(niter),
                                      W, wa, num_threads())
    return _py.step_crossings(G, N.evaluate, Xc, Y, float(r), float(tmin), float(tmax),
                              float(k), int(M), int(niter), W, wa)
