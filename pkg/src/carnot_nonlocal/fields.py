"""Test functions with exact Euclidean partials and horizontal gradients."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .groups import (
    GroupSpec,
    box_product,
    horizontal_frame,
    inverse,
    left_translation_jacobian,
    multiply,
)
from .norms import NormSpec

__all__ = [
    "ScalarField",
    "frame_pullback",
    "bump",
    "poly_cutoff",
    "ball_indicator",
    "smooth_ball",
    "smooth_step",
    "NATIVE_BUMP",
    "NATIVE_POLY_CUTOFF",
]

NATIVE_BUMP = 0
NATIVE_POLY_CUTOFF = 1


@dataclass(frozen=True)
class ScalarField:
    """A compactly supported test function on ``group``.

    ``native`` is an optional ``(code, params)`` pair that lets the compiled
    kernels evaluate the field without calling back into Python.
    """

    name: str
    group: GroupSpec
    evaluate: Callable[[np.ndarray], np.ndarray]
    support_box: np.ndarray
    eucl_grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    smooth: bool = True
    native: Optional[tuple[int, np.ndarray]] = None
    params: Optional[dict] = None

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(self.group.check_point(x))

    def horizontal_gradient(self, x) -> np.ndarray:
        return frame_pullback(self.group, self, x)


def frame_pullback(G: GroupSpec, field: ScalarField, x) -> np.ndarray:
    """X_i f(x) = <X_i(x), grad f(x)>, exact up to rounding."""
    if not field.smooth or field.eucl_grad is None:
        raise ValueError(f"field {field.name!r} has no gradient (indicator)")
    x = G.check_point(x)
    return np.einsum("...ji,...j->...i", horizontal_frame(G, x), field.eucl_grad(x))


def _radii(G, radius):
    return float(radius) ** G.weights


def _bump_parts(x, c, rad):
    u = (x - c) / rad
    s2 = np.sum(u * u, axis=-1)
    inside = s2 < 1.0
    g = np.zeros_like(s2)
    dg = np.zeros_like(x)
    d = 1.0 - s2[inside]
    g[inside] = np.exp(-1.0 / d)
    # d/dx_j exp(-1/(1 - s2)) = exp(...) * (-2 u_j / rad_j) / (1 - s2)^2
    dg[inside] = (g[inside] / d ** 2)[:, None] * (-2.0 * u[inside] / rad)
    return g, dg


def bump(G: GroupSpec, center=None, radius: float = 1.0, amplitude: float = 1.0) -> ScalarField:
    """exp(-1/(1 - s^2)) with s^2 = sum_i ((x_i - c_i) / radius^alpha_i)^2."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    c = np.zeros(G.n) if center is None else G.check_point(center).astype(float)
    rad = _radii(G, radius)

    def ev(x):
        return amplitude * _bump_parts(x, c, rad)[0]

    def grad(x):
        return amplitude * _bump_parts(x, c, rad)[1]

    box = np.stack([c - rad, c + rad], axis=1)
    params = np.concatenate([c, rad, [amplitude]])
    return ScalarField("bump", G, ev, box, grad, True, (NATIVE_BUMP, params),
                       {"center": c.tolist(), "radius": radius, "amplitude": amplitude})


def poly_cutoff(G: GroupSpec, a, radius: float = 1.0, center=None) -> ScalarField:
    """(sum_i a_i x_i) * chi(x) with a cutoff chi equal to 1 at the centre.

    chi = e * bump, so chi(c) = 1 and grad chi(c) = 0; hence the horizontal
    gradient at the centre is exactly ``a``.
    """
    a = np.asarray(a, dtype=float)
    if a.shape != (G.m1,):
        raise ValueError(f"need {G.m1} horizontal coefficients")
    if radius <= 0:
        raise ValueError("radius must be positive")
    c = np.zeros(G.n) if center is None else G.check_point(center).astype(float)
    rad = _radii(G, radius)
    apad = np.concatenate([a, np.zeros(G.n - G.m1)])

    def ev(x):
        g, _ = _bump_parts(x, c, rad)
        return (x @ apad) * math.e * g

    def grad(x):
        g, dg = _bump_parts(x, c, rad)
        L = x @ apad
        return math.e * (apad * g[..., None] + L[..., None] * dg)

    box = np.stack([c - rad, c + rad], axis=1)
    params = np.concatenate([c, rad, a])
    return ScalarField("poly_cutoff", G, ev, box, grad, True, (NATIVE_POLY_CUTOFF, params),
                       {"a": a.tolist(), "radius": radius, "center": c.tolist()})


def _translated_box(G, center, box):
    cbox = np.stack([center, center], axis=1)
    return box_product(G, cbox, box)


def ball_indicator(G: GroupSpec, N: NormSpec, center=None, r: float = 1.0) -> ScalarField:
    """chi of B_N(center, r) = {x : N(center^-1 x) < r}; no gradient."""
    if r <= 0:
        raise ValueError("radius must be positive")
    c = np.zeros(G.n) if center is None else G.check_point(center).astype(float)
    cinv = inverse(G, c)

    def ev(x):
        return (N.evaluate(multiply(G, cinv, x)) < r).astype(float)

    return ScalarField("ball_indicator", G, ev, _translated_box(G, c, N.bounding_box(r)),
                       None, False, None, {"center": c.tolist(), "r": r, "norm": N})


def smooth_step(t):
    """C-infinity step: 1 for t <= -1, 0 for t >= 1; phi(t) + phi(-t) = 1."""
    t = np.asarray(t, dtype=float)
    u = np.clip((1.0 - t) / 2.0, 0.0, 1.0)

    def psi(s):
        out = np.zeros_like(s)
        m = s > 0
        out[m] = np.exp(-1.0 / s[m])
        return out

    a, b = psi(u), psi(1.0 - u)
    return a / (a + b)


def smooth_step_derivative(t):
    t = np.asarray(t, dtype=float)
    u = (1.0 - t) / 2.0
    out = np.zeros_like(t)
    m = (u > 0) & (u < 1)
    um = u[m]
    a = np.exp(-1.0 / um)
    b = np.exp(-1.0 / (1.0 - um))
    da = a / um ** 2
    db = -b / (1.0 - um) ** 2
    # d/du [a / (a + b)] then du/dt = -1/2
    out[m] = -0.5 * (da * b - a * db) / (a + b) ** 2
    return out


def smooth_ball(G: GroupSpec, N: NormSpec, center=None, r: float = 1.0,
                width: float = 0.125) -> ScalarField:
    """phi((N(center^-1 x) - r) / width): a smoothed ball indicator.

    Its horizontal gradient is phi'(.)/width * grad_G N(center^-1 x), so the
    L1 norm of the gradient tends to the horizontal perimeter of the ball
    as ``width`` goes to 0.
    """
    if not 0 < width < r:
        raise ValueError("need 0 < width < r")
    if N.eucl_grad is None:
        raise ValueError("smooth_ball needs a norm with a Euclidean gradient")
    c = np.zeros(G.n) if center is None else G.check_point(center).astype(float)
    cinv = inverse(G, c)
    J = left_translation_jacobian(G, cinv)

    def ev(x):
        return smooth_step((N.evaluate(multiply(G, cinv, x)) - r) / width)

    def grad(x):
        z = multiply(G, cinv, x)
        nz = N.evaluate(z)
        out = np.zeros_like(x)
        m = np.abs(nz - r) < width
        dphi = smooth_step_derivative((nz[m] - r) / width) / width
        out[m] = dphi[:, None] * (N.eucl_grad(z[m]) @ J)
        return out

    return ScalarField("smooth_ball", G, ev, _translated_box(G, c, N.bounding_box(r + width)),
                       grad, True, None, {"center": c.tolist(), "r": r, "width": width})
