"""Integration engine: midpoint box grids, seeded Monte Carlo, polar rules.

Monte Carlo uses numpy's Philox bit generator (counter based), so a
``(seed, n)`` pair fully determines a result.  Every stochastic routine
returns an :class:`Estimate` carrying its seed, sample count and standard
error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

import numpy as np
from scipy import integrate, special

from .groups import GroupSpec, dilate
from .norms import NormSpec, NATIVE_KORANYI

__all__ = [
    "Estimate",
    "NonFiniteIntegrand",
    "BoxGrid",
    "MCSampler",
    "integrate_box",
    "ball_volume",
    "unit_ball_volume",
    "sphere_measure_total",
    "sphere_integral",
    "sphere_average",
    "sphere_samples",
    "radial_integral",
    "radial_mass",
    "lp_norm",
    "SphereRule",
    "sphere_rule",
    "adaptive_simpson",
]


class NonFiniteIntegrand(ValueError):
    """Raised when an integrand returns inf/nan at a quadrature node."""

    def __init__(self, where):
        self.where = np.asarray(where)
        super().__init__(f"non-finite integrand value at node {self.where.tolist()}")


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    n: int
    seed: Optional[int] = None

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class BoxGrid:
    """Midpoint rule on an axis box; nodes sit at cell centres."""

    bounds: np.ndarray
    resolution: tuple[int, ...]

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float)
        res = tuple(int(r) for r in np.broadcast_to(self.resolution, (b.shape[0],)))
        if b.ndim != 2 or b.shape[1] != 2 or np.any(b[:, 1] <= b[:, 0]):
            raise ValueError("bounds must be an (n, 2) array with lo < hi")
        if any(r <= 0 for r in res):
            raise ValueError("resolutions must be positive")
        object.__setattr__(self, "bounds", b)
        object.__setattr__(self, "resolution", res)

    @property
    def dim(self) -> int:
        return self.bounds.shape[0]

    @property
    def spacing(self) -> np.ndarray:
        return (self.bounds[:, 1] - self.bounds[:, 0]) / np.array(self.resolution)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def size(self) -> int:
        return int(np.prod(self.resolution))

    def axes(self) -> list[np.ndarray]:
        h = self.spacing
        return [lo + h[i] * (np.arange(r) + 0.5)
                for i, ((lo, _), r) in enumerate(zip(self.bounds, self.resolution))]

    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def chunks(self, chunk: int = 1 << 16) -> Iterator[np.ndarray]:
        """Node blocks in C order; the first axis is split so blocks stay small."""
        axes = self.axes()
        rest = int(np.prod(self.resolution[1:])) if self.dim > 1 else 1
        step = max(1, chunk // max(rest, 1))
        for start in range(0, self.resolution[0], step):
            mesh = np.meshgrid(axes[0][start:start + step], *axes[1:], indexing="ij")
            yield np.stack([m.ravel() for m in mesh], axis=-1)


def _check_finite(values, nodes):
    bad = ~np.isfinite(values)
    if np.any(bad):
        idx = np.argwhere(bad.reshape(len(nodes), -1).any(axis=1))[0, 0]
        raise NonFiniteIntegrand(nodes[idx])


def integrate_box(f: Callable[[np.ndarray], np.ndarray], grid: BoxGrid, chunk: int = 1 << 16):
    """Midpoint-rule integral; ``f`` maps ``(k, n)`` nodes to ``(k,)`` or ``(k, ...)``."""
    partials = []
    for nodes in grid.chunks(chunk):
        vals = np.asarray(f(nodes), dtype=float)
        _check_finite(vals, nodes)
        partials.append(vals.sum(axis=0))
    return np.sum(np.stack(partials), axis=0) * grid.cell_volume


@dataclass(frozen=True)
class MCSampler:
    seed: int
    n_samples: int
    batch: int = 1 << 17

    def generator(self, stream: int = 0) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.seed, counter=[0, 0, 0, stream]))

    def uniform_box(self, box, stream: int = 0) -> Iterator[np.ndarray]:
        box = np.asarray(box, dtype=float)
        rng = self.generator(stream)
        left = self.n_samples
        while left > 0:
            k = min(self.batch, left)
            u = rng.random((k, box.shape[0]))
            yield box[:, 0] + u * (box[:, 1] - box[:, 0])
            left -= k


def _mean_se(sum1, sum2, n):
    mean = sum1 / n
    var = np.maximum(sum2 / n - mean * mean, 0.0)
    return mean, np.sqrt(var / max(n - 1, 1))


def ball_volume(G: GroupSpec, N: NormSpec, method: str = "mc", budget: int = 1_000_000,
                seed: int = 0) -> Estimate:
    """|B_N(0,1)| by Monte Carlo on the bounding box or by a midpoint grid.

    For ``method="grid"`` the budget is the total node count and the
    reported error is the cell diameter (a resolution, not a standard error).
    """
    box = N.bounding_box(1.0)
    box_vol = float(np.prod(box[:, 1] - box[:, 0]))
    if method == "mc":
        s1 = s2 = 0.0
        for x in MCSampler(seed, budget).uniform_box(box):
            hit = (N.evaluate(x) < 1.0).astype(float)
            s1 += hit.sum()
            s2 += hit.sum()
        mean, se = _mean_se(s1, s2, budget)
        return Estimate(box_vol * float(mean), box_vol * float(se), budget, seed)
    if method == "grid":
        per_axis = max(2, int(round(budget ** (1.0 / G.n))))
        grid = BoxGrid(box, (per_axis,) * G.n)
        val = integrate_box(lambda x: (N.evaluate(x) < 1.0).astype(float), grid)
        return Estimate(float(val), float(np.linalg.norm(grid.spacing)), grid.size, None)
    raise ValueError(f"unknown method {method!r}")


def unit_ball_volume(G: GroupSpec, N: NormSpec) -> float:
    """C_N = |B_N(0,1)|: the closed form when the norm ships one, else a fine grid."""
    if N.unit_ball_volume is not None:
        return float(N.unit_ball_volume)
    return ball_volume(G, N, method="grid", budget=4_000_000).value


def sphere_measure_total(G: GroupSpec, N: NormSpec, volume: Optional[float] = None) -> float:
    """sigma(S_G) = Q |B_N(0,1)| (polar coordinates applied to the unit ball)."""
    C = unit_ball_volume(G, N) if volume is None else float(volume)
    return G.Q * C


def _shell_batches(G, N, n_samples, seed, stream=0):
    """Uniform samples of the bounding box of B(2), tagged with the shell indicator."""
    box = N.bounding_box(2.0)
    for x in MCSampler(seed, n_samples).uniform_box(box, stream):
        r = N.evaluate(x)
        inside = (r >= 1.0) & (r <= 2.0)
        yield x, r, inside, box


def sphere_integral(G: GroupSpec, N: NormSpec, g: Callable[[np.ndarray], np.ndarray],
                    n_samples: int = 1_000_000, seed: int = 0) -> Estimate:
    """Shell trick: int_S g dsigma = Q/(2^Q - 1) int_{1<=N<=2} g(delta_{1/N(x)} x) dx.

    ``g`` may be vector valued; value and stderr then carry its shape.
    """
    Q = G.Q
    s1 = s2 = 0.0
    box_vol = None
    for x, r, inside, box in _shell_batches(G, N, n_samples, seed):
        box_vol = float(np.prod(box[:, 1] - box[:, 0]))
        # samples outside the shell contribute zeros to both sums
        vals = np.asarray(g(dilate(G, 1.0 / r[inside], x[inside])), dtype=float)
        s1 = s1 + vals.sum(axis=0)
        s2 = s2 + (vals * vals).sum(axis=0)
    mean, se = _mean_se(s1, s2, n_samples)
    c = Q / (2.0 ** Q - 1.0) * box_vol
    return Estimate(c * mean, c * se, n_samples, seed)


def sphere_samples(G: GroupSpec, N: NormSpec, n_samples: int, seed: int = 0,
                   stream: int = 0) -> np.ndarray:
    """Points of S_G distributed as sigma / sigma(S_G).

    Uniform points of the shell {1 <= N <= 2} projected radially: in polar
    coordinates dx = r^(Q-1) dr dsigma, so the angular marginal is sigma.
    ``n_samples`` counts box draws; roughly the shell fraction survives.
    """
    out = []
    for x, r, inside, _ in _shell_batches(G, N, n_samples, seed, stream):
        out.append(dilate(G, 1.0 / r[inside], x[inside]))
    return np.concatenate(out, axis=0)


def sphere_average(G: GroupSpec, N: NormSpec, g: Callable[[np.ndarray], np.ndarray],
                   n_samples: int = 1_000_000, seed: int = 0, stream: int = 0) -> Estimate:
    """Mean of ``g`` over S_G with respect to sigma, with its standard error."""
    y = sphere_samples(G, N, n_samples, seed, stream)
    vals = np.asarray(g(y), dtype=float)
    m = len(vals)
    mean, se = _mean_se(vals.sum(axis=0), (vals * vals).sum(axis=0), m)
    return Estimate(mean, se, m, seed)


def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10,
                     panels: int = 8, max_depth: int = 50) -> float:
    """Adaptive Simpson on log-spaced panels (geometric when 0 < a < b).

    ``tol`` is relative to a coarse first estimate of the integral, so
    large kernels (small eps) do not force every panel to ``max_depth``.
    """
    if b <= a:
        return 0.0
    if a > 0 and b / a > 4:
        edges = np.geomspace(a, b, panels + 1)
    else:
        edges = np.linspace(a, b, panels + 1)
    coarse = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        flo, fhi, fm = f(lo), f(hi), f(0.5 * (lo + hi))
        coarse.append((lo, hi, flo, fm, fhi, (hi - lo) * (flo + 4 * fm + fhi) / 6))
    scale = abs(sum(c[-1] for c in coarse))
    if not math.isfinite(scale):
        return scale
    total = 0.0
    tol_panel = tol * max(scale, np.finfo(float).tiny) / panels
    for lo, hi, flo, fm, fhi, whole in coarse:
        stack = [(lo, hi, flo, fm, fhi, whole, tol_panel, 0)]
        while stack:
            l, r, fl, fmid, fr, S, eps, depth = stack.pop()
            m = 0.5 * (l + r)
            flm, frm = f(0.5 * (l + m)), f(0.5 * (m + r))
            left = (m - l) * (fl + 4 * flm + fmid) / 6
            right = (r - m) * (fmid + 4 * frm + fr) / 6
            if depth >= max_depth or abs(left + right - S) <= 15 * eps:
                total += left + right + (left + right - S) / 15
            else:
                stack.append((l, m, fl, flm, fmid, left, eps / 2, depth + 1))
                stack.append((m, r, fmid, frm, fr, right, eps / 2, depth + 1))
    return total


def radial_integral(G: GroupSpec, profile, sigma: float) -> float:
    """int_G u = sigma(S) int_0^inf u~(r) r^(Q-1) dr for a radial profile.

    ``profile`` needs ``support`` and ``rho_tilde``; a power-law profile is
    integrated in closed form.
    """
    return radial_mass(G.Q, profile, sigma)


def radial_mass(Q: int, profile, sigma: float) -> float:
    lo, hi = profile.support
    pl = getattr(profile, "power_law", None)
    if pl is not None:
        coef, power = pl
        e = power + Q
        if e <= 0:
            raise ValueError("radial integral diverges at the origin")
        if not math.isfinite(hi):
            raise ValueError("radial integral diverges at infinity")
        return sigma * coef * (hi ** e - lo ** e) / e
    val, err = integrate.quad(lambda r: profile.rho_tilde(r) * r ** (Q - 1), lo, hi,
                              limit=200, epsabs=1e-13, epsrel=1e-11)
    if not math.isfinite(val):
        raise ValueError("radial integral diverges")
    return sigma * val


def lp_norm(field: Callable[[np.ndarray], np.ndarray], grid: BoxGrid, p: float = 2.0) -> float:
    """(int |field|^p)^(1/p) over the grid box; vector fields use the Euclidean length."""
    if p < 1:
        raise ValueError("p must be >= 1")

    def integrand(x):
        v = np.asarray(field(x), dtype=float)
        if v.ndim > 1:
            v = np.sqrt(np.sum(v * v, axis=tuple(range(1, v.ndim))))
        return np.abs(v) ** p

    return float(integrate_box(integrand, grid)) ** (1.0 / p)


# ---------------------------------------------------------------------------
# deterministic polar rules on S_G


@dataclass(frozen=True)
class SphereRule:
    """Nodes on S_G with weights approximating sigma."""

    points: np.ndarray
    weights: np.ndarray

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def __len__(self):
        return len(self.weights)


def _koranyi_rule(n_theta: int, n_psi: int) -> SphereRule:
    # phi = (pi/2) sin(theta) smooths the sqrt(cos phi) endpoint behaviour
    t, wt = special.roots_legendre(n_theta)
    theta = 0.5 * math.pi * t
    wt = wt * 0.5 * math.pi
    phi = 0.5 * math.pi * np.sin(theta)
    dphi = 0.5 * math.pi * np.cos(theta) * wt
    psi = 2 * math.pi * (np.arange(n_psi) + 0.5) / n_psi
    P, S = np.meshgrid(phi, psi, indexing="ij")
    W = np.broadcast_to((0.25 * dphi)[:, None] * (2 * math.pi / n_psi), P.shape)
    c = np.sqrt(np.cos(P))
    pts = np.stack([c * np.cos(S), c * np.sin(S), 0.25 * np.sin(P)], axis=-1)
    return SphereRule(pts.reshape(-1, 3), W.reshape(-1).copy())


def _euclidean_direction_rule(n: int, resolution: int):
    """Directions on the round sphere S^(n-1) with surface weights."""
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if n == 2:
        th = 2 * math.pi * (np.arange(resolution) + 0.5) / resolution
        return np.stack([np.cos(th), np.sin(th)], -1), np.full(resolution, 2 * math.pi / resolution)
    if n == 3:
        nz = max(2, resolution // 2)
        z, wz = special.roots_legendre(nz)
        ph = 2 * math.pi * (np.arange(resolution) + 0.5) / resolution
        Z, PH = np.meshgrid(z, ph, indexing="ij")
        s = np.sqrt(1 - Z * Z)
        pts = np.stack([s * np.cos(PH), s * np.sin(PH), Z], -1).reshape(-1, 3)
        w = (wz[:, None] * np.full(resolution, 2 * math.pi / resolution)[None, :]).reshape(-1)
        return pts, w
    raise ValueError("round-sphere rules are provided for n <= 3")


def _shell_grid_rule(G: GroupSpec, N: NormSpec, per_axis: int) -> SphereRule:
    """Smooth-weight shell rule: int_S g dsigma = int g(proj x) w(N x) dx / int w(r) r^(Q-1) dr."""
    Q = G.Q

    def w(r):
        u = (np.asarray(r) - 1.25) / 0.75
        out = np.zeros_like(u, dtype=float)
        m = np.abs(u) < 1
        out[m] = np.exp(-1.0 / (1.0 - u[m] ** 2))
        return out

    denom, _ = integrate.quad(lambda r: float(w(np.array(r))) * r ** (Q - 1), 0.5, 2.0,
                              epsabs=1e-14, epsrel=1e-12)
    grid = BoxGrid(N.bounding_box(2.0), (per_axis,) * G.n)
    pts, wts = [], []
    for x in grid.chunks():
        r = N.evaluate(x)
        wr = w(r)
        keep = wr > 0
        pts.append(dilate(G, 1.0 / r[keep], x[keep]))
        wts.append(wr[keep] * grid.cell_volume / denom)
    return SphereRule(np.concatenate(pts), np.concatenate(wts))


def sphere_rule(G: GroupSpec, N: NormSpec, resolution: int = 32) -> SphereRule:
    """A deterministic sigma-rule on S_G.

    Korányi: product Gauss x trapezoid rule in the exact (phi, psi)
    parametrisation where dsigma = dphi dpsi / 4.  Euclidean groups with
    n <= 3: round directions omega pushed to S via omega / N(omega) with
    weight |S^(n-1)|-element / N(omega)^n.  Anything else: a smooth-weight
    shell grid with ``resolution`` cells per axis.
    """
    if N.native is not None and N.native[0] == NATIVE_KORANYI:
        return _koranyi_rule(max(4, resolution // 2), max(4, resolution))
    if G.is_abelian and G.n <= 3:
        omega, w = _euclidean_direction_rule(G.n, resolution)
        r = N.evaluate(omega)
        return SphereRule(omega / r[:, None], w / r ** G.n)
    return _shell_grid_rule(G, N, resolution)
