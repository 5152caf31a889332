"""Homogeneous norms, their horizontal gradients and sampling diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .groups import GroupSpec, dilate, horizontal_frame, multiply, X_derivative

__all__ = [
    "NormSpec",
    "NormDiagnostics",
    "euclidean_norm",
    "lq_norm",
    "koranyi",
    "gauge_norm",
    "koranyi_norm",
    "koranyi_grad",
    "grad_norm_fd",
    "norm_diagnostics",
    "sample_unit_sphere",
]

# codes understood by the compiled kernels
NATIVE_EUCLIDEAN = 0
NATIVE_LQ = 1
NATIVE_KORANYI = 2


@dataclass(frozen=True)
class NormSpec:
    """A homogeneous norm on ``group``.

    ``eucl_grad`` is the ordinary gradient in exponential coordinates;
    ``hgrad`` an optional closed form of the horizontal gradient.  When
    ``hgrad`` is missing the horizontal gradient is the frame pullback of
    ``eucl_grad`` or, failing that, a finite difference.
    """

    name: str
    group: GroupSpec
    evaluate: Callable[[np.ndarray], np.ndarray]
    unit_half_widths: np.ndarray
    eucl_grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hgrad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    rotation_invariant: bool = False
    unit_ball_volume: Optional[float] = None
    grad_sup: Optional[float] = None
    native: Optional[tuple[int, tuple[float, ...]]] = None
    params: dict = field(default_factory=dict)

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(self.group.check_point(x))

    def bounding_box(self, r: float = 1.0) -> np.ndarray:
        """Axis box ``(n, 2)`` containing the closed ball of radius ``r`` at 0."""
        half = self.unit_half_widths * r ** self.group.weights
        return np.stack([-half, half], axis=1)

    def horizontal_gradient(self, x, step: float = 1e-5) -> np.ndarray:
        x = self.group.check_point(x)
        if self.hgrad is not None:
            return self.hgrad(x)
        if self.eucl_grad is not None:
            F = horizontal_frame(self.group, x)
            return np.einsum("...ji,...j->...i", F, self.eucl_grad(x))
        return grad_norm_fd(self.group, self, x, step)


def _half(G, values):
    arr = np.asarray(values, dtype=float)
    if arr.shape != (G.n,):
        raise ValueError("need one half-width per coordinate")
    return arr


def euclidean_norm(G: GroupSpec) -> NormSpec:
    if not G.is_abelian:
        raise ValueError("the Euclidean norm is only homogeneous on Euclidean groups")
    n = G.n

    def ev(x):
        return np.sqrt(np.sum(x * x, axis=-1))

    def grad(x):
        return x / ev(x)[..., None]

    vol = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
    return NormSpec(
        "euclidean", G, ev, np.ones(n), eucl_grad=grad, hgrad=grad,
        rotation_invariant=True, unit_ball_volume=vol, grad_sup=1.0,
        native=(NATIVE_EUCLIDEAN, ()),
    )


def lq_norm(G: GroupSpec, q: float, scales=None) -> NormSpec:
    """Anisotropic norm (sum |x_i / a_i|^q)^(1/q) on a Euclidean group."""
    if not G.is_abelian:
        raise ValueError("l^q norms are only homogeneous on Euclidean groups")
    if q < 1:
        raise ValueError("q must be >= 1 for a norm")
    n = G.n
    a = np.ones(n) if scales is None else np.asarray(scales, dtype=float)

    def ev(x):
        return np.sum(np.abs(x / a) ** q, axis=-1) ** (1.0 / q)

    def grad(x):
        N = ev(x)[..., None]
        u = x / a
        return np.sign(u) * np.abs(u) ** (q - 1) / (a * N ** (q - 1))

    vol = float(np.prod(2 * a)) * math.gamma(1 + 1 / q) ** n / math.gamma(1 + n / q)
    # |grad N| is maximal on the coordinate axes where it equals 1 / min(a)
    sup = 1.0 / float(a.min()) if q >= 2 else None
    return NormSpec(
        f"l{q:g}", G, ev, a.copy(), eucl_grad=grad, hgrad=grad,
        rotation_invariant=(q == 2 and np.all(a == a[0])),
        unit_ball_volume=vol, grad_sup=sup,
        native=(NATIVE_LQ, (float(q),) + tuple(float(v) for v in a)),
        params={"q": q, "scales": a.tolist()},
    )


def koranyi_norm(x) -> np.ndarray:
    """((x1^2 + x2^2)^2 + 16 x3^2)^(1/4) on the first Heisenberg group."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise ValueError("the Koranyi norm is defined on H1 (3 coordinates)")
    r2 = x[..., 0] ** 2 + x[..., 1] ** 2
    return (r2 * r2 + 16.0 * x[..., 2] ** 2) ** 0.25


def koranyi_grad(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise ValueError("the Koranyi norm is defined on H1 (3 coordinates)")
    N = koranyi_norm(x)
    if np.any(N == 0):
        raise ValueError("the horizontal gradient of N is undefined at the origin")
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    r2 = x1 * x1 + x2 * x2
    N3 = N ** 3
    return np.stack([(r2 * x1 - 4 * x2 * x3) / N3, (r2 * x2 + 4 * x1 * x3) / N3], axis=-1)


def _koranyi_eucl_grad(x):
    N = koranyi_norm(x)
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    r2 = x1 * x1 + x2 * x2
    N3 = N ** 3
    return np.stack([r2 * x1 / N3, r2 * x2 / N3, 8 * x3 / N3], axis=-1)


def koranyi(G: GroupSpec) -> NormSpec:
    if G.layer_dims != (2, 1) or not np.array_equal(
        G.correction, np.array([[[0.0, 1.0], [-1.0, 0.0]]])
    ):
        raise ValueError("the Koranyi norm is only provided for H1")
    # sigma(S) = pi^2 / 2 from the parametrisation of S by (phi, psi), dsigma = dphi dpsi / 4
    return NormSpec(
        "koranyi", G, koranyi_norm, np.array([1.0, 1.0, 0.25]),
        eucl_grad=_koranyi_eucl_grad, hgrad=koranyi_grad, rotation_invariant=True,
        unit_ball_volume=math.pi ** 2 / 8, grad_sup=1.0,
        native=(NATIVE_KORANYI, ()),
    )


def gauge_norm(G: GroupSpec, coeffs=None) -> NormSpec:
    """Smooth gauge (sum_i c_i |x_i|^(2k!/alpha_i))^(1/(2k!)).

    Homogeneous and symmetric on every supported group.  The triangle
    inequality is not guaranteed; :func:`norm_diagnostics` samples it.
    """
    k = G.step
    P = 2 * math.factorial(k)
    expo = P / G.weights
    c = np.ones(G.n) if coeffs is None else np.asarray(coeffs, dtype=float)
    if c.shape != (G.n,) or np.any(c <= 0):
        raise ValueError("need one positive coefficient per coordinate")

    def ev(x):
        return np.sum(c * np.abs(x) ** expo, axis=-1) ** (1.0 / P)

    def grad(x):
        N = ev(x)[..., None]
        return c * expo * np.sign(x) * np.abs(x) ** (expo - 1) / (P * N ** (P - 1))

    return NormSpec(
        "gauge", G, ev, c ** (-1.0 / expo), eucl_grad=grad,
        rotation_invariant=False, params={"coeffs": c.tolist()},
    )


def grad_norm_fd(G: GroupSpec, N: NormSpec, x, step: float = 1e-5) -> np.ndarray:
    """Horizontal gradient of ``N`` by central differences along X_1..X_m1."""
    x = G.check_point(x)
    Nx = N.evaluate(x)
    if np.any(Nx <= 10 * step):
        raise ValueError("point too close to the origin for the finite-difference step")
    return np.stack(
        [X_derivative(G, N.evaluate, i, x, step) for i in range(1, G.m1 + 1)], axis=-1
    )


def sample_unit_sphere(N: NormSpec, size: int, rng: np.random.Generator) -> np.ndarray:
    """Points on {N = 1}, obtained by dilating Gaussian samples (not sigma-distributed)."""
    G = N.group
    x = rng.standard_normal((size, G.n))
    return dilate(G, 1.0 / N.evaluate(x), x)


@dataclass
class NormDiagnostics:
    norm: str
    samples: int
    seed: int
    grad_min: float
    grad_max: float
    triangle_violations: int
    symmetry_violations: int
    homogeneity_error: float

    def as_rows(self) -> list[dict]:
        return [{"metric": k, "value": v} for k, v in self.__dict__.items()
                if k not in ("norm",)]


def norm_diagnostics(G: GroupSpec, N: NormSpec, samples: int = 10_000, seed: int = 0) -> NormDiagnostics:
    rng = np.random.Generator(np.random.Philox(seed))
    y = sample_unit_sphere(N, samples, rng)
    g = np.linalg.norm(N.horizontal_gradient(y), axis=-1)

    scale = np.exp(rng.uniform(-2.0, 2.0, size=(2, samples)))
    a = dilate(G, scale[0], rng.standard_normal((samples, G.n)))
    b = dilate(G, scale[1], rng.standard_normal((samples, G.n)))
    Na, Nb, Nab = N.evaluate(a), N.evaluate(b), N.evaluate(multiply(G, a, b))
    tri = int(np.count_nonzero(Nab > (Na + Nb) * (1 + 1e-12)))
    sym = int(np.count_nonzero(np.abs(N.evaluate(-a) - Na) > 1e-12 * Na))
    lam = np.exp(rng.uniform(-2.0, 2.0, size=samples))
    hom = float(np.max(np.abs(N.evaluate(dilate(G, lam, a)) - lam * Na) / (lam * Na)))
    return NormDiagnostics(
        N.name, samples, seed, float(g.min()), float(g.max()), tri, sym, hom
    )
