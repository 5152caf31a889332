"""Radial mollifier profiles and the kernel K_eps built from them.

A :class:`Profile` stores the radial representative rho~ of a radial
function rho(x) = rho~(N(x)).  Both shipped families are power laws
``coef * t**power`` on an interval, which gives closed forms for masses,
kernels and radial quadrature weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from .groups import GroupSpec
from .norms import NormSpec
from .quad import adaptive_simpson, radial_mass, sphere_measure_total, unit_ball_volume

__all__ = [
    "Profile",
    "MollifierFamily",
    "ball_profile",
    "fractional_profile",
    "annular_truncate",
    "kernel_K",
    "ball_family",
    "fractional_family",
    "default_eps_grid",
]


def _power_primitive(a: float, u, v):
    """int_u^v t^(a-1) dt, vectorised in u."""
    u = np.asarray(u, dtype=float)
    if a == 0:
        return np.log(v / u)
    return (v ** a - u ** a) / a


@dataclass(frozen=True)
class Profile:
    """Radial profile on ``support = (lo, hi)``; zero outside."""

    name: str
    Q: int
    sigma: float
    support: tuple[float, float]
    rho_tilde: Callable[[np.ndarray], np.ndarray]
    power_law: Optional[tuple[float, float]] = None
    closed_form_K: Optional[Callable[[np.ndarray], np.ndarray]] = None
    params: Optional[dict] = None

    def __call__(self, t) -> np.ndarray:
        return self.rho_tilde(np.asarray(t, dtype=float))

    def evaluate(self, N: NormSpec, x) -> np.ndarray:
        return self(N(x))

    @property
    def mass(self) -> float:
        return radial_mass(self.Q, self, self.sigma)

    def tail_mass(self, delta: float) -> float:
        """Mass of rho over {N > delta}."""
        lo, hi = self.support
        if delta >= hi:
            return 0.0
        return radial_mass(self.Q, replace(self, support=(max(lo, delta), hi)), self.sigma)

    def moment(self, k: float, a: float, b: float) -> float:
        """int_a^b rho~(t) t^k dt, restricted to the support."""
        lo, hi = self.support
        a, b = max(a, lo), min(b, hi)
        if b <= a:
            return 0.0
        if self.power_law is not None:
            coef, power = self.power_law
            return coef * float(_power_primitive(power + k + 1, a, b))
        val, _ = integrate.quad(lambda t: float(self(t)) * t ** k, a, b, limit=200)
        return val

    def radial_rule(self, n: int):
        """Nodes r_j and weights w_j with sum_j w_j F(r_j) ~ int F(r) rho~(r) r^(Q-1) dr."""
        lo, hi = self.support
        if not math.isfinite(hi):
            raise ValueError("radial rules need a bounded support")
        Q = self.Q
        if self.power_law is not None:
            coef, power = self.power_law
            beta = power + Q - 1
            if lo == 0.0:
                if beta <= -1:
                    raise ValueError("profile is not integrable at the origin")
                x, w = special.roots_jacobi(n, 0.0, beta)
                r = 0.5 * hi * (1 + x)
                return r, coef * (0.5 * hi) ** (beta + 1) * w
            x, w = special.roots_legendre(n)
            r = lo + 0.5 * (hi - lo) * (1 + x)
            return r, coef * r ** beta * w * 0.5 * (hi - lo)
        x, w = special.roots_legendre(n)
        r = lo + 0.5 * (hi - lo) * (1 + x)
        return r, self(r) * r ** (Q - 1) * w * 0.5 * (hi - lo)

    def kernel_rule(self, n_t: int, n_u: Optional[int] = None):
        """Radial rule for K-weighted integrals through Fubini.

        int F(r) K~(r) r^(Q-1) dr = int rho~(t) t^(Q-1) [Q int_0^1 F(t u) u^(Q-1) du] dt,
        so nodes are products t_j u_k with weights w_j * Q v_k.
        """
        t, wt = self.radial_rule(n_t)
        n_u = n_u or n_t
        x, v = special.roots_jacobi(n_u, 0.0, self.Q - 1.0)
        u = 0.5 * (1 + x)
        v = v * 0.5 ** self.Q * self.Q
        return (t[:, None] * u[None, :]).ravel(), (wt[:, None] * v[None, :]).ravel()


def _power_law_profile(name, Q, sigma, coef, power, lo, hi, params) -> Profile:
    def rho(t):
        t = np.asarray(t, dtype=float)
        inside = (t >= lo) & (t < hi) & (t > 0)
        out = np.zeros_like(t)
        out[inside] = coef * t[inside] ** power
        return out

    def K(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        m = t < hi
        with np.errstate(divide="ignore"):
            out[m] = Q * coef * _power_primitive(power, np.maximum(t[m], lo), hi)
        return out

    return Profile(name, Q, sigma, (float(lo), float(hi)), rho, (coef, power), K, params)


def ball_profile(G: GroupSpec, N: NormSpec, eps: float, ball_volume: Optional[float] = None) -> Profile:
    """rho_eps = chi_{B(0,eps)} / |B(0,eps)|, i.e. rho~ = 1/(C_N eps^Q) on [0, eps)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    C = unit_ball_volume(G, N) if ball_volume is None else float(ball_volume)
    Q = G.Q
    return _power_law_profile("ball", Q, Q * C, 1.0 / (C * eps ** Q), 0.0, 0.0, eps,
                              {"eps": eps, "C_N": C})


def fractional_profile(G: GroupSpec, N: NormSpec, eps: float, p: float, R: float = 1.0,
                       sigma: Optional[float] = None) -> Profile:
    """rho_eps = c_eps chi_{B(0,R)} / N^(Q - eps p), c_eps = eps p / (R^(eps p) sigma(S))."""
    Q = G.Q
    ep = eps * p
    if not 0 < ep < Q:
        raise ValueError(f"need 0 < eps*p < Q = {Q}, got {ep}")
    if R <= 0:
        raise ValueError("R must be positive")
    s = sphere_measure_total(G, N) if sigma is None else float(sigma)
    c = ep / (R ** ep * s)
    return _power_law_profile("fractional", Q, s, c, ep - Q, 0.0, R,
                              {"eps": eps, "p": p, "R": R, "c_eps": c})


def annular_truncate(profile: Profile, m_eps: float, hi: float) -> Profile:
    """Restrict to the annulus m_eps <= N < hi and renormalise to mass 1."""
    lo0, hi0 = profile.support
    lo, top = max(lo0, m_eps), min(hi0, hi)
    kept = profile.sigma * profile.moment(profile.Q - 1, lo, top) if top > lo else 0.0
    if kept <= 0:
        raise ValueError("the annulus carries no mass of this profile")
    params = dict(profile.params or {}, m_eps=m_eps, restricted_mass=kept)
    if profile.power_law is not None:
        coef, power = profile.power_law
        return _power_law_profile(profile.name + "-annular", profile.Q, profile.sigma,
                                  coef / kept, power, lo, top, params)
    base = profile.rho_tilde

    def rho(t):
        t = np.asarray(t, dtype=float)
        return np.where((t >= lo) & (t < top), base(t) / kept, 0.0)

    return Profile(profile.name + "-annular", profile.Q, profile.sigma, (lo, top), rho,
                   None, None, params)


def kernel_K(G: GroupSpec, profile: Profile, tol: float = 1e-10) -> Profile:
    """Radial profile of K_eps(h) = Q int_{N(h)}^inf rho~(t)/t dt.

    Uses the profile's closed form when it has one, otherwise adaptive
    Simpson on log-spaced panels for each requested radius.
    """
    Q = G.Q
    lo, hi = profile.support
    if profile.closed_form_K is not None:
        K = profile.closed_form_K
    else:
        if not math.isfinite(hi):
            raise ValueError("kernel quadrature needs a bounded support")

        def K(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            out = np.zeros_like(t)
            for i, ti in enumerate(t):
                if ti < hi:
                    a = max(ti, lo)
                    val = Q * adaptive_simpson(lambda s: float(profile(s)) / s, a, hi, tol)
                    if not math.isfinite(val):
                        raise ValueError(f"divergent kernel integral at radius {ti}")
                    out[i] = val
            return out

    return Profile("K[" + profile.name + "]", Q, profile.sigma, (0.0, hi), K, None, None,
                   dict(profile.params or {}))


@dataclass(frozen=True)
class MollifierFamily:
    name: str
    make: Callable[[float], Profile]
    params: dict

    def __call__(self, eps: float) -> Profile:
        return self.make(eps)


def ball_family(G: GroupSpec, N: NormSpec) -> MollifierFamily:
    C = unit_ball_volume(G, N)
    return MollifierFamily("ball", lambda e: ball_profile(G, N, e, C), {"C_N": C})


def fractional_family(G: GroupSpec, N: NormSpec, p: float, R: float = 1.0) -> MollifierFamily:
    s = sphere_measure_total(G, N)
    return MollifierFamily("fractional", lambda e: fractional_profile(G, N, e, p, R, s),
                           {"p": p, "R": R})


def default_eps_grid(eps0: float, levels: int = 6) -> np.ndarray:
    """eps0 * 2^-j for j = 0..levels-1 (strictly decreasing)."""
    return eps0 * 0.5 ** np.arange(levels)
