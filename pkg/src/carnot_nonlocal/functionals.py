"""Nonlocal horizontal gradients, energies, Taylor remainders and limit constants.

All inner h-integrals use a polar product rule: radial nodes r_j from the
profile (Gauss-Jacobi for power laws, exact for the mass) times a sigma-rule
on the unit sphere, h = delta_{r_j}(y_i) with weight w_j s_i.  Outer
x-integrals use a midpoint grid on supp(f) thickened by the profile support.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy import special

from . import kernels
from .fields import ScalarField, frame_pullback
from .groups import GroupSpec, box_product, dilate, multiply, pi_x
from .mollifiers import Profile, fractional_profile
from .norms import NormSpec
from .quad import (
    BoxGrid,
    Estimate,
    MCSampler,
    NonFiniteIntegrand,
    SphereRule,
    integrate_box,
    sphere_average,
    sphere_measure_total,
    sphere_rule,
    sphere_samples,
)

__all__ = [
    "NonlocalContext",
    "HRule",
    "EnergySummary",
    "LudwigResult",
    "BVSummary",
    "V_eps",
    "V_tilde_eps",
    "I_eps_p",
    "I_star_eps_p",
    "energy_summary",
    "convolve_gradient",
    "taylor_remainder",
    "taylor_limit",
    "reconstruction_matrix",
    "bbm_limit_constant",
    "barbieri_constant",
    "ludwig_lhs",
    "ludwig_limit",
    "bv_ball_functionals",
    "smoothed_perimeter",
    "perimeter_polar",
    "fit_slope",
    "x_grid",
    "box_grid",
    "ball_samples",
]


@dataclass(frozen=True)
class HRule:
    """Quadrature nodes for int F(h) w(h) dh with a radial weight w."""

    points: np.ndarray   # (nh, n)
    radii: np.ndarray    # (nh,)
    weights: np.ndarray  # (nh,)
    gradN: np.ndarray    # (nh, m1), grad_G N at the node (degree 0)

    def __len__(self):
        return len(self.weights)


def _polar_rule(G: GroupSpec, N: NormSpec, sph: SphereRule, r, w) -> HRule:
    gy = N.horizontal_gradient(sph.points)
    H = dilate(G, np.repeat(r, len(sph)), np.tile(sph.points, (len(r), 1)))
    W = (w[:, None] * sph.weights[None, :]).ravel()
    return HRule(H, np.repeat(r, len(sph)), W, np.tile(gy, (len(r), 1)))


@dataclass(frozen=True)
class NonlocalContext:
    """Group, norm, mollifier profile, exponent and quadrature budgets."""

    group: GroupSpec
    norm: NormSpec
    profile: Profile
    p: float = 2.0
    n_radial: int = 12
    sphere_resolution: int = 32
    x_resolution: int = 40
    backend: Optional[str] = None
    mass_tol: float = 1e-6

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.profile.Q != self.group.Q:
            raise ValueError("profile and group disagree on Q")
        if not math.isfinite(self.profile.support[1]):
            raise ValueError("the profile support must be bounded")
        if abs(self.profile.mass - 1.0) > self.mass_tol:
            raise ValueError(f"profile is not normalised (mass {self.profile.mass})")

    @property
    def Q(self) -> int:
        return self.group.Q

    @cached_property
    def sphere(self) -> SphereRule:
        return sphere_rule(self.group, self.norm, self.sphere_resolution)

    @cached_property
    def rho_rule(self) -> HRule:
        r, w = self.profile.radial_rule(self.n_radial)
        return _polar_rule(self.group, self.norm, self.sphere, r, w)

    @cached_property
    def kernel_rule(self) -> HRule:
        """Nodes for int F(h) K_eps(h) dh (Fubini over the profile)."""
        r, w = self.profile.kernel_rule(self.n_radial)
        return _polar_rule(self.group, self.norm, self.sphere, r, w)

    @cached_property
    def grad_sup(self) -> float:
        if self.norm.grad_sup is not None:
            return float(self.norm.grad_sup)
        return float(np.max(np.linalg.norm(self.rho_rule.gradN, axis=1)))


def box_grid(box, resolution: int) -> BoxGrid:
    """Midpoint grid with ``resolution`` cells on the longest side, equal spacing elsewhere."""
    box = np.asarray(box, dtype=float)
    side = box[:, 1] - box[:, 0]
    cells = np.maximum(4, np.round(resolution * side / side.max())).astype(int)
    return BoxGrid(box, tuple(cells))


def x_grid(ctx: NonlocalContext, f: ScalarField, resolution: Optional[int] = None,
           reach: Optional[float] = None) -> BoxGrid:
    """Midpoint grid on supp(f) thickened by B(0, reach) (default: profile support).

    ``resolution`` cells go along the longest side; other sides keep the
    same spacing (at least 4 cells).
    """
    reach = ctx.profile.support[1] if reach is None else reach
    box = box_product(ctx.group, f.support_box, ctx.norm.bounding_box(reach))
    return box_grid(box, resolution or ctx.x_resolution)


def _checked(vals, X):
    bad = ~np.isfinite(vals)
    if np.any(bad):
        row = np.argwhere(bad.reshape(len(X), -1).any(axis=1))[0, 0]
        raise NonFiniteIntegrand(X[row])
    return vals


def _V_weights(ctx, rule: HRule):
    return ctx.Q * rule.weights[:, None] * rule.gradN / rule.radii[:, None]


def V_eps(ctx: NonlocalContext, f: ScalarField, x) -> np.ndarray:
    """V_eps(f)(x) = Q int (f(xh) - f(x))/N(h) grad_G N(h) rho_eps(h) dh."""
    X = np.atleast_2d(ctx.group.check_point(x))
    rule = ctx.rho_rule
    _, rv, _, _ = kernels.pair_sums(ctx.group, f, X, rule.points, wv=_V_weights(ctx, rule),
                                    backend=ctx.backend)
    out = _checked(rv, X)
    return out.reshape(np.shape(x)[:-1] + (ctx.group.m1,))


def _vtilde(ctx, f, X, rule):
    wa = (rule.weights * np.linalg.norm(rule.gradN, axis=1) / rule.radii)[:, None]
    _, _, ra, _ = kernels.pair_sums(ctx.group, f, X, rule.points, wa=wa, backend=ctx.backend)
    return _checked(ra[:, 0], X)


def V_tilde_eps(ctx: NonlocalContext, f: ScalarField, x, refine: bool = False,
                growth: float = 0.5) -> np.ndarray:
    """int |f(xh) - f(x)|/N(h) |grad_G N(h)| rho_eps(h) dh.

    With ``refine`` the value is recomputed with twice the radial nodes and
    reported as +inf where it grows by more than ``growth`` (relative, above
    a floor of 1e-6 times the largest value), the signature of a divergent
    integral.
    """
    X = np.atleast_2d(ctx.group.check_point(x))
    val = _vtilde(ctx, f, X, ctx.rho_rule)
    if refine:
        r, w = ctx.profile.radial_rule(2 * ctx.n_radial)
        fine = _vtilde(ctx, f, X, _polar_rule(ctx.group, ctx.norm, ctx.sphere, r, w))
        # values far below the largest one are noise, not divergence
        floor = 1e-6 * float(np.max(np.abs(fine), initial=0.0)) + 1e-300
        val = np.where(fine > val * (1 + growth) + floor, np.inf, fine)
    return val.reshape(np.shape(x)[:-1])


@dataclass
class EnergySummary:
    """One pass over the x-grid at a fixed eps.

    ``vtilde_p`` is ||V~_eps f||_p^p, ``I``/``I_star`` the energies,
    ``v_l1`` the L1 norm of V_eps f; the gradient entries are only filled
    for smooth fields.
    """

    p: float
    I: float
    I_star: float
    vtilde_p: float
    v_l1: float
    error_p: float = 2.0
    v_err: Optional[float] = None   # ||V_eps f - grad_G f||_q
    grad_q: Optional[float] = None  # ||grad_G f||_q
    grad_p: Optional[float] = None  # ||grad_G f||_p^p
    grad_sup: float = 1.0
    nodes: int = 0
    h_nodes: int = 0

    @property
    def v_rel_error(self) -> Optional[float]:
        if self.v_err is None or not self.grad_q:
            return None
        return self.v_err / self.grad_q


def energy_summary(ctx: NonlocalContext, f: ScalarField, p: Optional[float] = None,
                   grid: Optional[BoxGrid] = None, error_p: Optional[float] = None) -> EnergySummary:
    """V_eps, V~_eps, I_eps,p and I*_eps,p of ``f`` in a single grid pass.

    ``error_p`` (default ``p``) is the exponent of ||V_eps f - grad_G f||.
    """
    G = ctx.group
    p = ctx.p if p is None else float(p)
    q = p if error_p is None else float(error_p)
    grid = grid or x_grid(ctx, f)
    rule = ctx.rho_rule
    gn = np.linalg.norm(rule.gradN, axis=1)
    inv_r = 1.0 / rule.radii
    wv = _V_weights(ctx, rule)
    wa = (rule.weights * gn * inv_r)[:, None]
    wp = np.stack([rule.weights * (gn * inv_r) ** p, rule.weights * inv_r ** p], axis=1)
    sums = np.zeros(7)
    for X in grid.chunks(1 << 14):
        _, rv, ra, rp = kernels.pair_sums(G, f, X, rule.points, wv, wa, wp, p,
                                          backend=ctx.backend)
        _checked(rp, X)
        _checked(rv, X)
        part = [rp[:, 0].sum(), rp[:, 1].sum(), (ra[:, 0] ** p).sum(),
                np.linalg.norm(rv, axis=1).sum(), 0.0, 0.0, 0.0]
        if f.smooth:
            g = frame_pullback(G, f, X)
            gl = np.linalg.norm(g, axis=1)
            part[4] = (np.linalg.norm(rv - g, axis=1) ** q).sum()
            part[5] = (gl ** q).sum()
            part[6] = (gl ** p).sum()
        sums += np.array(part)
    sums *= grid.cell_volume
    smooth = f.smooth
    return EnergySummary(
        p, float(sums[0]), float(sums[1]), float(sums[2]), float(sums[3]), q,
        float(sums[4]) ** (1 / q) if smooth else None,
        float(sums[5]) ** (1 / q) if smooth else None,
        float(sums[6]) if smooth else None,
        ctx.grad_sup, grid.size, len(rule),
    )


def I_eps_p(ctx: NonlocalContext, f: ScalarField, p: Optional[float] = None,
            grid: Optional[BoxGrid] = None) -> float:
    """int int |f(xh)-f(x)|^p / N(h)^p |grad_G N(h)|^p rho_eps(h) dh dx."""
    return energy_summary(ctx, f, p, grid).I


def I_star_eps_p(ctx: NonlocalContext, f: ScalarField, p: Optional[float] = None,
                 grid: Optional[BoxGrid] = None) -> float:
    """int int |f(xh)-f(x)|^p / N(h)^p rho_eps(h) dh dx."""
    return energy_summary(ctx, f, p, grid).I_star


def _geometric_rule(profile: Profile, n: int, panels: int = 40):
    """Gauss-Legendre on dyadic panels toward 0: sum w F(r) ~ int F u~(r) r^(Q-1) dr.

    Used for kernels without a Fubini representation; integrable power or
    log singularities at 0 are resolved by the grading.
    """
    lo, hi = profile.support
    x, w = special.roots_legendre(n)
    edges = hi * 0.5 ** np.arange(panels + 1)
    edges = edges[edges > lo]
    if lo > 0:
        edges = np.append(edges, lo)
    r, wr = [], []
    for b, a in zip(edges[:-1], edges[1:]):
        t = a + 0.5 * (b - a) * (1 + x)
        r.append(t)
        wr.append(0.5 * (b - a) * w * profile(t) * t ** (profile.Q - 1))
    return np.concatenate(r), np.concatenate(wr)


def convolve_gradient(ctx: NonlocalContext, f: ScalarField, x, K: Optional[Profile] = None,
                      n_radial: Optional[int] = None) -> np.ndarray:
    """(grad_G f * K_eps)(x) = int grad_G f(x y^-1) K_eps(y) dy.

    Without ``K`` the kernel of ``ctx.profile`` is integrated through its
    Fubini rule; a tabulated ``K`` profile uses a dyadic Gauss rule.
    """
    G = ctx.group
    X = np.atleast_2d(G.check_point(x))
    if K is None:
        rule = ctx.kernel_rule if n_radial is None else _polar_rule(
            G, ctx.norm, ctx.sphere, *ctx.profile.kernel_rule(n_radial))
    else:
        r, w = _geometric_rule(K, n_radial or ctx.n_radial)
        rule = _polar_rule(G, ctx.norm, ctx.sphere, r, w)
    out = kernels.grad_sums(G, f, X, rule.points, rule.weights, backend=ctx.backend)
    return out.reshape(np.shape(x)[:-1] + (G.m1,))


def taylor_remainder(ctx: NonlocalContext, f: ScalarField,
                     v: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                     p: Optional[float] = None, grid: Optional[BoxGrid] = None) -> float:
    """int int |f(xh) - f(x) - <v(x), pi(h)>|^p / N(h)^p rho_eps(h) dh dx.

    ``v`` maps ``(k, n)`` points to ``(k, m1)`` frame coefficients; ``None``
    means v = 0.  The x-domain is supp(f) thickened by the profile support,
    which also has to contain supp(v) for the value to be complete.
    """
    G = ctx.group
    p = ctx.p if p is None else float(p)
    grid = grid or x_grid(ctx, f)
    rule = ctx.rho_rule
    wp = (rule.weights / rule.radii ** p)[:, None]
    total = 0.0
    for X in grid.chunks(1 << 14):
        V = None if v is None else np.asarray(v(X), dtype=float)
        _, _, _, rp = kernels.pair_sums(G, f, X, rule.points, wp=wp, p=p, V=V,
                                        backend=ctx.backend)
        total += _checked(rp[:, 0], X).sum()
    return float(total * grid.cell_volume)


# ---------------------------------------------------------------------------
# limit constants


def reconstruction_matrix(G: GroupSpec, N: NormSpec, n_samples: int = 1_000_000,
                          seed: int = 0, stream: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """M = Q fint_S grad_G N(y) pi(y)^T dsigma(y), so that M v = Q fint <v, pi y> grad N.

    Returns the estimate and its elementwise Monte Carlo standard error.
    """
    m1 = G.m1

    def g(y):
        gy = N.horizontal_gradient(y)
        return G.Q * np.einsum("ka,kb->kab", gy, pi_x(G, y)).reshape(len(y), m1 * m1)

    est = sphere_average(G, N, g, n_samples, seed, stream)
    return (np.asarray(est.value).reshape(m1, m1), np.asarray(est.stderr).reshape(m1, m1))


def ball_samples(G: GroupSpec, N: NormSpec, n_samples: int, seed: int = 0,
                 stream: int = 0) -> np.ndarray:
    """Uniform points of B(0,1); ``n_samples`` counts bounding-box draws."""
    out = []
    for x in MCSampler(seed, n_samples).uniform_box(N.bounding_box(1.0), stream):
        out.append(x[N.evaluate(x) < 1.0])
    return np.concatenate(out, axis=0)


def _moment_over_samples(grads: np.ndarray, weight: float, P: np.ndarray, p: float,
                         seed: Optional[int] = None) -> Estimate:
    """mean_y of A(y) = weight * sum_x |<grads_x, P_y>|^p with its standard error.

    For p = 2 the x-sum collapses to a quadratic form, so every sample
    counts; other exponents evaluate the double sum in blocks.  The A(y)
    are independent draws, so the error is the sample deviation / sqrt(n).
    """
    if p == 2.0:
        M = weight * grads.T @ grads
        A = np.einsum("ya,ab,yb->y", P, M, P)
    else:
        A = np.empty(len(P))
        step = max(1, (1 << 22) // max(1, len(grads)))
        for s in range(0, len(P), step):
            A[s:s + step] = weight * (np.abs(grads @ P[s:s + step].T) ** p).sum(axis=0)
    mean = float(A.mean())
    se = float(A.std(ddof=1) / math.sqrt(len(A))) if len(A) > 1 else 0.0
    return Estimate(mean, se, len(A), seed)


def _grad_table(G, grads_or_field, grid):
    if isinstance(grads_or_field, ScalarField):
        rows = [frame_pullback(G, grads_or_field, X) for X in grid.chunks()]
        return np.concatenate(rows), grid.cell_volume
    g, w = grads_or_field
    return np.asarray(g, dtype=float), float(w)


def bbm_limit_constant(G: GroupSpec, N: NormSpec, f, p: float = 2.0, grid: Optional[BoxGrid] = None,
                       route: str = "sphere", n_samples: int = 1_000_000, seed: int = 0,
                       stream: int = 0) -> Estimate:
    """lim I*_eps,p(f) = int fint_S |<grad_G f(x), pi(y)>|^p dsigma dx.

    ``route="ball"`` evaluates the equivalent (p+Q)/sigma(S) int int_B(1) form
    from uniform ball samples.  ``f`` is a smooth field (integrated on
    ``grid``) or a pair ``(gradient table, cell volume)``.
    """
    if isinstance(f, ScalarField) and grid is None:
        grid = box_grid(f.support_box, 40)
    grads, w = _grad_table(G, f, grid)
    if route == "sphere":
        P = pi_x(G, sphere_samples(G, N, n_samples, seed, stream))
        return _moment_over_samples(grads, w, P, p, seed=seed)
    if route == "ball":
        P = pi_x(G, ball_samples(G, N, n_samples, seed, stream))
        est = _moment_over_samples(grads, w, P, p, seed=seed)
        c = (p + G.Q) / G.Q  # (p+Q)/sigma * |B| with sigma = Q |B|
        return Estimate(c * est.value, c * est.stderr, est.n, seed)
    raise ValueError(f"unknown route {route!r}")


def taylor_limit(G: GroupSpec, N: NormSpec, f: ScalarField, v: Callable[[np.ndarray], np.ndarray],
                 p: float, grid: BoxGrid, n_samples: int = 1_000_000, seed: int = 0,
                 stream: int = 0) -> Estimate:
    """int fint_S |<grad_G f(x) - v(x), pi(y)>|^p dsigma dx (the eps -> 0 limit of the remainder)."""
    rows = [frame_pullback(G, f, X) - np.asarray(v(X), dtype=float) for X in grid.chunks()]
    return bbm_limit_constant(G, N, (np.concatenate(rows), grid.cell_volume), p, grid,
                              "sphere", n_samples, seed, stream)


def barbieri_constant(G: GroupSpec, N: NormSpec, p: float, v, n_samples: int = 1_000_000,
                      seed: int = 0, stream: int = 0, route: str = "sphere") -> Estimate:
    """C = fint_S |<v, pi(y)>|^p dsigma(y) for a unit horizontal vector v."""
    v = np.asarray(v, dtype=float)
    if v.shape != (G.m1,):
        raise ValueError(f"v must have {G.m1} components")
    if not abs(np.linalg.norm(v) - 1.0) < 1e-9:
        raise ValueError("v must be a unit vector")
    return bbm_limit_constant(G, N, (v[None, :], 1.0), p, None, route, n_samples, seed, stream)


@dataclass
class LudwigResult:
    eps: float
    R: float
    value: float
    tail_bound: float
    h_nodes: int = 0
    nodes: int = 0


def ludwig_lhs(G: GroupSpec, N: NormSpec, f: ScalarField, p: float, eps: float, R: float = 1.0,
               n_radial: int = 24, sphere_resolution: int = 16, x_resolution: int = 40,
               backend: Optional[str] = None) -> LudwigResult:
    """eps int int_{N(h)<R} |f(xh)-f(x)|^p / N(h)^(Q+p-eps p) dh dx plus the tail bound.

    On B(R), eps N^(eps p - Q) = (sigma R^(eps p) / p) rho_eps for the
    fractional profile, so the truncated integral is that multiple of
    I*_eps,p.  The discarded part over N(h) >= R is at most
    eps 2^p ||f||_p^p sigma R^(eps p - p) / (p - eps p).
    """
    if not 0 < eps * p < p:
        raise ValueError("need 0 < eps p < p")
    sigma = sphere_measure_total(G, N)
    prof = fractional_profile(G, N, eps, p, R, sigma)
    ctx = NonlocalContext(G, N, prof, p, n_radial, sphere_resolution, x_resolution, backend)
    grid = x_grid(ctx, f)
    istar = taylor_remainder(ctx, f, None, p, grid)
    value = sigma * R ** (eps * p) / p * istar
    fp = integrate_box(lambda X: np.abs(f.evaluate(X)) ** p,
                       BoxGrid(f.support_box, grid.resolution))
    tail = eps * 2 ** p * float(fp) * sigma * R ** (eps * p - p) / (p - eps * p)
    return LudwigResult(eps, R, float(value), float(tail), len(ctx.rho_rule), grid.size)


def ludwig_limit(G: GroupSpec, N: NormSpec, f: ScalarField, p: float, grid: Optional[BoxGrid] = None,
                 n_samples: int = 1_000_000, seed: int = 0, stream: int = 0) -> Estimate:
    """(p+Q)/p int int_B(1) |<grad_G f, pi y>|^p dy dx (ball route)."""
    est = bbm_limit_constant(G, N, f, p, grid, "ball", n_samples, seed, stream)
    c = sphere_measure_total(G, N) / p
    return Estimate(c * est.value, c * est.stderr, est.n, seed)


# ---------------------------------------------------------------------------
# indicator of a ball


@dataclass
class BVSummary:
    eps: float
    v_l1: float       # ||V_eps chi||_L1
    vtilde_l1: float  # ||V~_eps chi||_L1
    I_star: float     # I*_eps,1(chi)
    x_nodes: int
    directions: int


def bv_ball_functionals(G: GroupSpec, N: NormSpec, profile: Profile, r: float = 1.0,
                        center=None, sphere_resolution: int = 32, window_nodes: int = 12,
                        base_resolution: int = 32, samples: int = 64, bisections: int = 40,
                        backend: Optional[str] = None) -> BVSummary:
    """V_eps, V~_eps and I*_eps,1 of chi_{B(center, r)} integrated over x.

    The h-integral along every direction y is exact up to locating the
    boundary crossings of t -> x delta_t(y); the x-integral runs over the
    shell r - eps < N(center^-1 x) < r + eps (outside it the differences
    vanish by the triangle inequality), split at N = r with Gauss nodes in
    the radius and a sphere rule in the angle.
    """
    if profile.power_law is None:
        raise ValueError("indicator functionals need a power-law profile")
    coef, a = profile.power_law
    lo, hi = profile.support
    Q = G.Q
    c = np.zeros(G.n) if center is None else G.check_point(center).astype(float)
    dirs = sphere_rule(G, N, sphere_resolution)
    gy = N.horizontal_gradient(dirs.points)
    W = Q * coef * dirs.weights[:, None] * gy
    wa = coef * np.stack([dirs.weights * np.linalg.norm(gy, axis=1), dirs.weights], axis=1)

    # base points x = c * delta_s(z) on both sides of the sphere of radius r
    base = sphere_rule(G, N, base_resolution)
    t, wt = special.roots_legendre(window_nodes)
    s_nodes, s_w = [], []
    for a_, b_ in ((max(r - hi, 0.0), r), (r, r + hi)):
        s = a_ + 0.5 * (b_ - a_) * (1 + t)
        s_nodes.append(s)
        s_w.append(0.5 * (b_ - a_) * wt * s ** (Q - 1))
    s_nodes, s_w = np.concatenate(s_nodes), np.concatenate(s_w)
    Z = dilate(G, np.repeat(s_nodes, len(base)), np.tile(base.points, (len(s_nodes), 1)))
    # x = c * delta_s(z); Lebesgue measure is left invariant
    X = multiply(G, np.broadcast_to(c, Z.shape), Z)
    wx = (s_w[:, None] * base.weights[None, :]).ravel()
    ov, oa, _ = kernels.step_crossings(G, N, c, r, X, dirs.points, lo, hi, a + Q - 2,
                                       W, wa, samples, bisections, backend)
    return BVSummary(
        float((profile.params or {}).get("eps", hi)),
        float(wx @ np.linalg.norm(ov, axis=1)),
        float(wx @ oa[:, 0]),
        float(wx @ oa[:, 1]),
        len(wx),
        len(dirs),
    )


def perimeter_polar(G: GroupSpec, N: NormSpec, r: float = 1.0, resolution: int = 64) -> float:
    """Horizontal perimeter of B(0, r): r^(Q-1) int_S |grad_G N| dsigma."""
    rule = sphere_rule(G, N, resolution)
    return float(r ** (G.Q - 1) * rule.weights @ np.linalg.norm(N.horizontal_gradient(rule.points),
                                                                axis=1))


def smoothed_perimeter(G: GroupSpec, N: NormSpec, r: float, width: float,
                       budget: int = 4_000_000) -> float:
    """||grad_G f_w||_L1 for the smoothed indicator f_w on a midpoint grid.

    The grid has about ``budget`` equally spaced nodes on the bounding box
    of B(r + w).
    """
    from .fields import smooth_ball

    f = smooth_ball(G, N, None, r, width)
    box = f.support_box
    h = (np.prod(box[:, 1] - box[:, 0]) / budget) ** (1.0 / G.n)
    grid = BoxGrid(box, tuple(np.maximum(8, np.ceil((box[:, 1] - box[:, 0]) / h)).astype(int)))
    return float(integrate_box(lambda X: np.linalg.norm(frame_pullback(G, f, X), axis=1), grid))


def fit_slope(eps, errors) -> float:
    """Least-squares slope of log(error) against log(eps)."""
    e = np.asarray(eps, dtype=float)
    y = np.asarray(errors, dtype=float)
    m = (e > 0) & (y > 0)
    if m.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(e[m]), np.log(y[m]), 1)[0])
