import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from carnot_nonlocal.groups import (
    GroupSpec,
    X_derivative,
    box_dilate,
    dilate,
    euclidean,
    heisenberg,
    horizontal_frame,
    inverse,
    left_translation_jacobian,
    load_group,
    multiply,
    pi_x,
    step2,
)

H = heisenberg()
coords = st.floats(-10, 10, allow_nan=False)
pt3 = arrays(float, 3, elements=coords)


def test_heisenberg_product_example():
    assert np.allclose(multiply(H, [1, 0, 0], [0, 1, 0]), [1, 1, 0.5])


@pytest.mark.parametrize("G", [H, euclidean(1), euclidean(3)])
def test_identity_element(G):
    x = np.arange(1, G.n + 1, dtype=float)
    assert np.array_equal(multiply(G, x, np.zeros(G.n)), x)
    assert np.array_equal(multiply(G, np.zeros(G.n), x), x)


def test_inverse_examples():
    assert np.array_equal(multiply(H, [1, 2, 3], [-1, -2, -3]), np.zeros(3))
    assert np.array_equal(inverse(H, [1, 2, 3]), [-1, -2, -3])
    assert np.array_equal(inverse(H, np.zeros(3)), np.zeros(3))
    x = np.random.default_rng(0).normal(size=(100, 3))
    assert np.abs(multiply(H, inverse(H, x), x)).max() == 0.0


def test_dilation_examples():
    assert np.allclose(dilate(H, 2.0, [1, 1, 1]), [2, 2, 4])
    x = np.array([0.3, -1.2, 2.5])
    assert np.array_equal(dilate(H, 1.0, x), x)
    with pytest.raises(ValueError):
        dilate(H, 0.0, x)
    with pytest.raises(ValueError):
        dilate(H, -1.0, x)


def test_frame_examples():
    F0 = horizontal_frame(H, np.zeros(3))
    assert np.array_equal(F0, np.eye(3)[:, :2])
    F = horizontal_frame(H, [1, 2, 0])
    assert np.allclose(F[:, 0], [1, 0, -1])
    assert np.allclose(F[:, 1], [0, 1, 0.5])
    R2 = euclidean(2)
    assert np.array_equal(horizontal_frame(R2, [3.0, -4.0]), np.eye(2))


def test_pi_x_examples():
    assert np.array_equal(pi_x(H, [3, 4, 7]), [3, 4])
    assert np.array_equal(pi_x(H, np.zeros(3)), np.zeros(2))


def test_X_derivative_examples():
    assert X_derivative(H, lambda x: np.ones(x.shape[:-1]), 1, [1, 2, 0]) == 0.0
    assert X_derivative(H, lambda x: x[..., 2], 1, [1, 2, 0]) == pytest.approx(-1.0, abs=1e-12)
    assert X_derivative(H, lambda x: x[..., 2], 2, [1, 2, 0]) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        X_derivative(H, lambda x: x[..., 2], 3, [1, 2, 0])
    with pytest.raises(ValueError):
        X_derivative(H, lambda x: x[..., 2], 1, [1, 2, 0], step=0.0)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        multiply(H, [1, 2], [1, 2, 3])


def test_group_validation():
    with pytest.raises(ValueError):
        GroupSpec("bad", (2, 1), np.array([[[1.0, 0.0], [0.0, 1.0]]]))
    with pytest.raises(ValueError):
        GroupSpec("bad", (1, 1, 1), np.zeros((0, 1, 1)))
    assert H.Q == 4 and H.n == 3 and H.m1 == 2
    assert euclidean(5).Q == 5


def test_load_group_roundtrip(tmp_path):
    p = tmp_path / "h1.json"
    p.write_text(json.dumps({"name": "H", "layer_dims": [2, 1], "skew": [[0, 1, -1, 0]]}))
    assert load_group(p) == H
    p.write_text(json.dumps({"layer_dims": [3]}))
    assert load_group(p) == euclidean(3)


def test_generic_step2_jacobian_det_is_one():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(2, 3, 3))
    G = step2((3, 2), A - A.transpose(0, 2, 1))
    x = rng.normal(size=(50, G.n))
    J = left_translation_jacobian(G, x)
    assert np.allclose(np.linalg.det(J), 1.0, atol=1e-13)
    # the Jacobian really is the derivative of y -> x y
    y = rng.normal(size=G.n)
    d = 1e-6
    fd = np.stack([(multiply(G, x[0], y + d * e) - multiply(G, x[0], y - d * e)) / (2 * d)
                   for e in np.eye(G.n)], axis=1)
    assert np.allclose(fd, J[0], atol=1e-8)


def test_box_dilation_volume():
    box = np.array([[-1.0, 2.0], [0.0, 1.0], [-0.5, 0.5]])
    lam = 1.7
    vol = lambda b: np.prod(b[:, 1] - b[:, 0])  # noqa: E731
    assert vol(box_dilate(H, lam, box)) == pytest.approx(lam ** H.Q * vol(box), rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(pt3, pt3, pt3)
def test_associativity(x, y, z):
    lhs = multiply(H, multiply(H, x, y), z)
    rhs = multiply(H, x, multiply(H, y, z))
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * (1 + np.abs(lhs).max()))


@settings(max_examples=200, deadline=None)
@given(pt3, pt3, st.floats(0.05, 20))
def test_dilation_is_automorphism(x, y, lam):
    lhs = dilate(H, lam, multiply(H, x, y))
    rhs = multiply(H, dilate(H, lam, x), dilate(H, lam, y))
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * (1 + np.abs(lhs).max()))


@settings(max_examples=100, deadline=None)
@given(pt3)
def test_frame_matches_right_derivative(x):
    # X_i f(x) = d/dt f(x * t e_i); for f = coordinate k this is the frame entry
    F = horizontal_frame(H, x)
    for i in (1, 2):
        for k in range(3):
            d = X_derivative(H, lambda z: z[..., k], i, x, step=1e-3)
            assert d == pytest.approx(F[k, i - 1], abs=1e-9 * (1 + abs(x).max()))
