import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from carnot_nonlocal.groups import dilate, euclidean, heisenberg, multiply, step2
from carnot_nonlocal.norms import (
    euclidean_norm,
    gauge_norm,
    grad_norm_fd,
    koranyi,
    koranyi_grad,
    koranyi_norm,
    lq_norm,
    norm_diagnostics,
    sample_unit_sphere,
)

H = heisenberg()
K = koranyi(H)
nonzero3 = arrays(float, 3, elements=st.floats(-5, 5, allow_nan=False)).filter(
    lambda x: koranyi_norm(x) > 1e-2)


def test_koranyi_values():
    assert koranyi_norm([1, 0, 0]) == 1.0
    assert koranyi_norm([0, 0, 1]) == pytest.approx(2.0, abs=1e-15)
    assert koranyi_norm([0, 0, 0]) == 0.0
    with pytest.raises(ValueError):
        koranyi(euclidean(3))


def test_koranyi_grad_examples():
    assert np.allclose(koranyi_grad([1, 0, 0]), [1, 0])
    g = koranyi_grad([0, 0, 1])
    assert np.array_equal(np.abs(g), [0.0, 0.0])
    with pytest.raises(ValueError):
        koranyi_grad([0, 0, 0])


def test_koranyi_grad_against_fd_and_modulus():
    x = np.random.default_rng(3).normal(size=(100, 3))
    fd = grad_norm_fd(H, K, x)
    an = koranyi_grad(x)
    assert np.max(np.abs(fd - an) / np.linalg.norm(an, axis=1)[:, None]) < 1e-6
    mod = np.hypot(x[:, 0], x[:, 1]) / koranyi_norm(x)
    assert np.allclose(np.linalg.norm(an, axis=1), mod, rtol=1e-10, atol=0)


def test_fd_gradient_eikonal_case():
    R2 = euclidean(2)
    g = grad_norm_fd(R2, euclidean_norm(R2), np.array([3.0, 4.0]) / 5)
    assert np.allclose(g, [0.6, 0.8], atol=1e-9)
    with pytest.raises(ValueError):
        grad_norm_fd(R2, euclidean_norm(R2), np.array([1e-6, 0.0]))


def test_fd_matches_closed_form_at_111():
    x = np.array([1.0, 1.0, 1.0])
    assert np.allclose(grad_norm_fd(H, K, x), koranyi_grad(x), rtol=1e-6)


def test_diagnostics_euclidean_and_koranyi():
    for n in (1, 2, 3):
        G = euclidean(n)
        d = norm_diagnostics(G, euclidean_norm(G), 2000, 0)
        assert abs(d.grad_min - 1) < 1e-9 and abs(d.grad_max - 1) < 1e-9
    d = norm_diagnostics(H, K, 10_000, 1)
    assert d.triangle_violations == 0
    assert d.symmetry_violations == 0
    assert d.grad_max <= 1 + 1e-6
    assert d.grad_min < 0.05


def test_lipschitz_bound_many_samples():
    rng = np.random.Generator(np.random.Philox(11))
    for G, N in ((H, K), (euclidean(3), euclidean_norm(euclidean(3)))):
        y = sample_unit_sphere(N, 100_000, rng)
        assert np.linalg.norm(N.horizontal_gradient(y), axis=1).max() <= 1 + 1e-6


def test_lq_norm_closed_forms():
    G = euclidean(2)
    N = lq_norm(G, 4, [1.0, 2.0])
    assert N(np.array([1.0, 0.0])) == 1.0
    assert N(np.array([0.0, 2.0])) == 1.0
    # area of {x^4 + (y/2)^4 < 1} = 2 * 4 Gamma(5/4)^2 / Gamma(3/2)
    assert N.unit_ball_volume == pytest.approx(8 * math.gamma(1.25) ** 2 / math.gamma(1.5))
    with pytest.raises(ValueError):
        lq_norm(H, 2)
    with pytest.raises(ValueError):
        lq_norm(G, 0.5)


def test_gauge_on_generic_group_is_homogeneous_and_symmetric():
    B = np.zeros((1, 3, 3))
    B[0, 0, 1], B[0, 1, 0] = 1.0, -1.0
    G = step2((3, 1), B)
    N = gauge_norm(G)
    x = np.random.default_rng(5).normal(size=(200, G.n))
    lam = 2.3
    assert np.allclose(N(dilate(G, lam, x)), lam * N(x), rtol=1e-13)
    assert np.allclose(N(-x), N(x))
    fd = grad_norm_fd(G, N, x)
    assert np.allclose(N.horizontal_gradient(x), fd, atol=1e-6)


def test_bounding_box_contains_ball():
    rng = np.random.default_rng(9)
    for G, N in ((H, K), (euclidean(2), lq_norm(euclidean(2), 4, [1, 3]))):
        y = sample_unit_sphere(N, 5000, rng)
        box = N.bounding_box(1.5)
        z = dilate(G, 1.5, y)
        assert np.all(z >= box[:, 0] - 1e-12) and np.all(z <= box[:, 1] + 1e-12)


@settings(max_examples=200, deadline=None)
@given(nonzero3, st.floats(0.01, 100))
def test_gradient_is_dilation_invariant(x, lam):
    g1 = np.linalg.norm(K.horizontal_gradient(x))
    g2 = np.linalg.norm(K.horizontal_gradient(dilate(H, lam, x)))
    assert g2 == pytest.approx(g1, abs=1e-8)


@settings(max_examples=300, deadline=None)
@given(nonzero3, nonzero3)
def test_koranyi_triangle_inequality(x, y):
    assert koranyi_norm(multiply(H, x, y)) <= (koranyi_norm(x) + koranyi_norm(y)) * (1 + 1e-12)
