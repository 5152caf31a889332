import math

import numpy as np
import pytest

from carnot_nonlocal.fields import (
    ScalarField,
    ball_indicator,
    bump,
    frame_pullback,
    poly_cutoff,
    smooth_ball,
    smooth_step,
)
from carnot_nonlocal.functionals import NonlocalContext, box_grid, taylor_remainder
from carnot_nonlocal.groups import X_derivative, euclidean, heisenberg
from carnot_nonlocal.mollifiers import ball_profile
from carnot_nonlocal.norms import euclidean_norm, koranyi
from carnot_nonlocal.quad import BoxGrid, integrate_box

H = heisenberg()
K = koranyi(H)


def _x3():
    return ScalarField("x3", H, lambda x: x[..., 2], np.array([[-1, 1]] * 3, float),
                       lambda x: np.broadcast_to([0.0, 0.0, 1.0], x.shape))


def test_pullback_of_vertical_coordinate():
    assert np.allclose(frame_pullback(H, _x3(), np.array([1.0, 2.0, 0.0])), [-1.0, 0.5])


def test_pullback_is_truncated_gradient_on_euclidean():
    G = euclidean(3)
    f = bump(G, [0.1, 0.2, -0.1], 1.0)
    x = np.random.default_rng(0).uniform(-0.5, 0.5, (20, 3))
    assert np.array_equal(frame_pullback(G, f, x), f.eucl_grad(x))


@pytest.mark.parametrize("field", [
    bump(H, [0.1, -0.2, 0.05], 1.2),
    poly_cutoff(H, [1.0, -0.5], 1.0, [0.2, 0.1, 0.0]),
    smooth_ball(H, K, None, 1.0, 0.25),
])
def test_pullback_matches_finite_differences(field):
    rng = np.random.default_rng(1)
    box = field.support_box
    x = box[:, 0] + rng.random((1000, 3)) * (box[:, 1] - box[:, 0])
    an = frame_pullback(H, field, x)
    fd = np.stack([X_derivative(H, field.evaluate, i, x, 1e-5) for i in (1, 2)], axis=-1)
    scale = np.abs(an).max()
    assert np.abs(an - fd).max() <= 1e-6 * scale


def test_bump_examples():
    f = bump(H, [0.5, 0.0, 0.0], 1.0)
    assert f(np.array([0.5, 0.0, 0.0])) == pytest.approx(math.exp(-1))
    assert f(np.array([3.0, 0.0, 0.0])) == 0.0
    assert np.array_equal(f.eucl_grad(np.array([0.5, 0.0, 0.0])), np.zeros(3))
    assert np.allclose(f.support_box, [[-0.5, 1.5], [-1, 1], [-1, 1]])
    g = bump(H, None, 2.0)
    assert np.allclose(g.support_box[:, 1], [2, 2, 4])
    with pytest.raises(ValueError):
        bump(H, None, 0.0)


def test_poly_cutoff_examples():
    a = np.array([0.7, -1.3])
    f = poly_cutoff(H, a, 1.0)
    assert f(np.zeros(3)) == 0.0
    assert np.allclose(frame_pullback(H, f, np.zeros(3)), a, atol=1e-15)
    c = np.array([0.3, -0.2, 0.1])
    g = poly_cutoff(H, a, 1.0, c)
    assert np.allclose(frame_pullback(H, g, c), a, atol=1e-14)
    with pytest.raises(ValueError):
        poly_cutoff(H, [1.0], 1.0)


def test_poly_cutoff_taylor_remainder_is_small_near_centre():
    a = np.array([1.0, 0.5])
    f = poly_cutoff(H, a, 1.0)
    ctx = NonlocalContext(H, K, ball_profile(H, K, 0.02), 2.0, sphere_resolution=16)
    grid = box_grid(np.array([[-0.05, 0.05], [-0.05, 0.05], [-0.01, 0.01]]), 8)
    va = lambda X: np.broadcast_to(a, (len(X), 2))  # noqa: E731
    v0 = lambda X: np.zeros((len(X), 2))  # noqa: E731
    small = taylor_remainder(ctx, f, va, 2.0, grid)
    base = taylor_remainder(ctx, f, v0, 2.0, grid)
    assert small < 1e-3 * base


def test_indicator_examples():
    f = ball_indicator(H, K, None, 1.0)
    assert f(np.zeros(3)) == 1.0
    assert f(np.array([5.0, 0.0, 0.0])) == 0.0
    with pytest.raises(ValueError):
        frame_pullback(H, f, np.zeros(3))
    grid = BoxGrid(f.support_box, (90, 90, 90))
    assert integrate_box(f.evaluate, grid) == pytest.approx(math.pi ** 2 / 8, rel=0.02)
    c = np.array([0.5, 0.5, 0.2])
    g = ball_indicator(H, K, c, 0.5)
    assert g(c) == 1.0
    grid = BoxGrid(g.support_box, (90, 90, 90))
    assert integrate_box(g.evaluate, grid) == pytest.approx(math.pi ** 2 / 8 * 0.5 ** 4, rel=0.02)


def test_fields_vanish_outside_support_box():
    rng = np.random.default_rng(4)
    for f in (bump(H, [0.2, 0.0, 0.1], 0.7), poly_cutoff(H, [1, 1], 0.8, [0.1, 0.1, 0.1]),
              ball_indicator(H, K, [0.3, 0.0, 0.1], 0.6), smooth_ball(H, K, [0.3, 0.0, 0.1], 0.6, 0.1)):
        box = f.support_box
        x = rng.uniform(-3, 3, (20000, 3))
        out = np.any((x < box[:, 0]) | (x > box[:, 1]), axis=1)
        assert np.all(f(x[out]) == 0)


def test_smooth_step():
    t = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    assert np.allclose(smooth_step(t), [1, 1, 0.5, 0, 0])


def test_euclidean_indicator_mass():
    G = euclidean(2)
    f = ball_indicator(G, euclidean_norm(G), None, 0.8)
    grid = BoxGrid(f.support_box, (400, 400))
    assert integrate_box(f.evaluate, grid) == pytest.approx(math.pi * 0.64, rel=0.02)
