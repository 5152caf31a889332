"""Carnot groups of step at most two in exponential coordinates.

A point is a float array whose last axis has length ``n``; every operation
broadcasts over leading axes so that whole node sets can be pushed through
the group law at once.

The product of a step-2 group is

    (x * y)_h = x_h + y_h
    (x * y)_k = x_k + y_k + 1/2 <x_h, B_k y_h>

with one skew-symmetric ``m1 x m1`` matrix ``B_k`` per second-layer
coordinate.  Euclidean groups have no second layer.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "GroupSpec",
    "euclidean",
    "heisenberg",
    "step2",
    "load_group",
    "multiply",
    "inverse",
    "dilate",
    "horizontal_frame",
    "pi_x",
    "X_derivative",
    "left_translation_jacobian",
    "box_product",
    "box_dilate",
]


@dataclass(frozen=True)
class GroupSpec:
    """Immutable description of a step <= 2 Carnot group."""

    name: str
    layer_dims: tuple[int, ...]
    correction: np.ndarray = field(repr=False)  # shape (m2, m1, m1)

    def __post_init__(self):
        dims = tuple(int(m) for m in self.layer_dims)
        if not dims or any(m <= 0 for m in dims):
            raise ValueError(f"layer dimensions must be positive, got {dims}")
        if len(dims) > 2:
            raise ValueError("only groups of step <= 2 are supported")
        m1 = dims[0]
        m2 = dims[1] if len(dims) == 2 else 0
        B = np.asarray(self.correction, dtype=float).reshape(m2, m1, m1)
        if not np.allclose(B, -np.transpose(B, (0, 2, 1)), atol=0.0):
            raise ValueError("correction matrices must be skew-symmetric")
        B = B.copy()
        B.setflags(write=False)
        object.__setattr__(self, "layer_dims", dims)
        object.__setattr__(self, "correction", B)

    @property
    def n(self) -> int:
        return sum(self.layer_dims)

    @property
    def m1(self) -> int:
        return self.layer_dims[0]

    @property
    def step(self) -> int:
        return len(self.layer_dims)

    @property
    def weights(self) -> np.ndarray:
        return np.concatenate(
            [np.full(m, j + 1, dtype=float) for j, m in enumerate(self.layer_dims)]
        )

    @property
    def Q(self) -> int:
        return sum((j + 1) * m for j, m in enumerate(self.layer_dims))

    @property
    def is_abelian(self) -> bool:
        return self.step == 1 or not np.any(self.correction)

    def check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.n,):
            raise ValueError(
                f"{self.name}: expected points with last axis {self.n}, got shape {x.shape}"
            )
        return x

    def __eq__(self, other):
        if not isinstance(other, GroupSpec):
            return NotImplemented
        return (
            self.layer_dims == other.layer_dims
            and np.array_equal(self.correction, other.correction)
        )

    def __hash__(self):
        return hash((self.layer_dims, self.correction.tobytes()))


def euclidean(n: int) -> GroupSpec:
    return GroupSpec(f"R{n}", (int(n),), np.zeros((0, n, n)))


def heisenberg() -> GroupSpec:
    B = np.array([[[0.0, 1.0], [-1.0, 0.0]]])
    return GroupSpec("H1", (2, 1), B)


def step2(layer_dims: Sequence[int], matrices, name: str = "step2") -> GroupSpec:
    """Generic step-2 group from a list of skew ``m1 x m1`` matrices."""
    dims = tuple(int(m) for m in layer_dims)
    if len(dims) != 2:
        raise ValueError("step2 groups need exactly two layer dimensions")
    m1, m2 = dims
    B = np.asarray(matrices, dtype=float)
    if B.size != m2 * m1 * m1:
        raise ValueError(f"expected {m2} matrices of size {m1}x{m1}, got {B.size} entries")
    return GroupSpec(name, dims, B.reshape(m2, m1, m1))


def load_group(path) -> GroupSpec:
    """Read a step-2 group from a JSON file.

    Schema::

        {"name": "H1", "layer_dims": [2, 1], "skew": [[0, 1, -1, 0]]}

    ``skew`` holds one flattened (row-major) ``m1 x m1`` matrix per
    second-layer coordinate.  ``layer_dims`` of length one gives a Euclidean
    group and ``skew`` may be omitted.
    """
    spec = json.loads(Path(path).read_text())
    dims = spec["layer_dims"]
    name = spec.get("name", Path(path).stem)
    if len(dims) == 1:
        return GroupSpec(name, (int(dims[0]),), np.zeros((0, dims[0], dims[0])))
    return step2(dims, spec["skew"], name=name)


def multiply(G: GroupSpec, x, y) -> np.ndarray:
    x = G.check_point(x)
    y = G.check_point(y)
    z = x + y
    if G.step == 2:
        m1 = G.m1
        corr = 0.5 * np.einsum("kij,...i,...j->...k", G.correction, x[..., :m1], y[..., :m1])
        z[..., m1:] += corr
    return z


def inverse(G: GroupSpec, x) -> np.ndarray:
    return -G.check_point(x)


def dilate(G: GroupSpec, lam, x) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("dilation factor must be positive")
    x = G.check_point(x)
    return x * lam[..., None] ** G.weights


def horizontal_frame(G: GroupSpec, x) -> np.ndarray:
    """Coordinates of X_1..X_m1 at ``x`` as the columns of an ``n x m1`` matrix."""
    x = G.check_point(x)
    m1 = G.m1
    F = np.zeros(x.shape[:-1] + (G.n, m1))
    F[..., np.arange(m1), np.arange(m1)] = 1.0
    if G.step == 2:
        # X_i picks up 1/2 sum_a B_k[a, i] x_a along the k-th vertical axis
        F[..., m1:, :] = 0.5 * np.einsum("kai,...a->...ki", G.correction, x[..., :m1])
    return F


def pi_x(G: GroupSpec, h) -> np.ndarray:
    """Frame coefficients of the horizontal projection; independent of the base point."""
    h = G.check_point(h)
    return h[..., : G.m1].copy()


def X_derivative(
    G: GroupSpec,
    f: Callable[[np.ndarray], np.ndarray],
    i: int,
    x,
    step: float = 1e-4,
) -> np.ndarray:
    """Central difference of t -> f(x * (t e_i)) at t = 0 (``i`` is 1-based)."""
    if not 1 <= i <= G.m1:
        raise ValueError(f"horizontal index must lie in 1..{G.m1}, got {i}")
    if step <= 0:
        raise ValueError("step must be positive")
    x = G.check_point(x)
    e = np.zeros(G.n)
    e[i - 1] = step
    return (f(multiply(G, x, e)) - f(multiply(G, x, -e))) / (2.0 * step)


def left_translation_jacobian(G: GroupSpec, x) -> np.ndarray:
    """Jacobian matrix of y -> x * y (independent of y for step <= 2)."""
    x = G.check_point(x)
    J = np.broadcast_to(np.eye(G.n), x.shape[:-1] + (G.n, G.n)).copy()
    if G.step == 2:
        m1 = G.m1
        J[..., m1:, :m1] += 0.5 * np.einsum("kij,...i->...kj", G.correction, x[..., :m1])
    return J


def box_product(G: GroupSpec, box_a, box_b) -> np.ndarray:
    """Axis box containing {a * b : a in box_a, b in box_b}.

    Boxes are ``(n, 2)`` arrays of ``[lo, hi]`` rows.
    """
    A = np.asarray(box_a, dtype=float)
    B_ = np.asarray(box_b, dtype=float)
    out = A + B_
    if G.step == 2:
        m1 = G.m1
        for k in range(G.layer_dims[1]):
            lo = hi = 0.0
            for i in range(m1):
                for j in range(m1):
                    c = 0.5 * G.correction[k, i, j]
                    if c == 0.0:
                        continue
                    corners = c * np.outer(A[i], B_[j]).ravel()
                    lo += corners.min()
                    hi += corners.max()
            out[m1 + k] += (lo, hi)
    return out


def box_dilate(G: GroupSpec, lam: float, box) -> np.ndarray:
    box = np.asarray(box, dtype=float)
    return box * (lam ** G.weights)[:, None]
