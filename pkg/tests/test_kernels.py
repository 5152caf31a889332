"""The compiled kernels and their numpy twins must agree."""
import numpy as np
import pytest

from carnot_nonlocal import kernels
from carnot_nonlocal.fields import bump, poly_cutoff
from carnot_nonlocal.groups import euclidean, heisenberg, step2
from carnot_nonlocal.norms import euclidean_norm, koranyi, lq_norm
from carnot_nonlocal.quad import sphere_rule

needs_cython = pytest.mark.skipif("cython" not in kernels.available_backends(),
                                  reason="compiled extension not built")

H = heisenberg()
K = koranyi(H)
rng = np.random.default_rng(0)


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def _generic():
    A = rng.normal(size=(2, 3, 3))
    return step2((3, 2), A - A.transpose(0, 2, 1))


CASES = [
    (H, bump(H, [0.1, 0.0, -0.1], 1.0)),
    (H, poly_cutoff(H, [1.0, -2.0], 0.8, [0.2, 0.1, 0.0])),
    (euclidean(1), bump(euclidean(1), None, 1.0)),
    (euclidean(2), poly_cutoff(euclidean(2), [0.5, 1.5], 1.0)),
]
G5 = _generic()
CASES.append((G5, bump(G5, None, 1.0)))


@needs_cython
@pytest.mark.parametrize("G,f", CASES)
def test_pair_sums_backends_agree(G, f):
    X = rng.uniform(-1.2, 1.2, (300, G.n))
    Hs = rng.uniform(-0.4, 0.4, (150, G.n))
    wv = rng.normal(size=(150, G.m1))
    wa = rng.random((150, 2))
    wp = rng.random((150, 2))
    V = rng.normal(size=(300, G.m1))
    for p, VV in ((2.0, None), (1.5, V), (1.0, V)):
        c = kernels.pair_sums(G, f, X, Hs, wv, wa, wp, p, VV, backend="cython")
        py = kernels.pair_sums(G, f, X, Hs, wv, wa, wp, p, VV, backend="python")
        for a, b in zip(c, py):
            assert _rel(a, b) < 1e-12


@needs_cython
@pytest.mark.parametrize("G,f", CASES)
def test_grad_sums_backends_agree(G, f):
    X = rng.uniform(-1, 1, (200, G.n))
    Hs = rng.uniform(-0.3, 0.3, (100, G.n))
    w = rng.random(100)
    c = kernels.grad_sums(G, f, X, Hs, w, backend="cython")
    py = kernels.grad_sums(G, f, X, Hs, w, backend="python")
    assert _rel(c, py) < 1e-12


@needs_cython
@pytest.mark.parametrize("G,N", [(H, K), (euclidean(2), euclidean_norm(euclidean(2))),
                                 (euclidean(2), lq_norm(euclidean(2), 4, [1.0, 2.0]))])
def test_step_crossings_backends_agree(G, N):
    dirs = sphere_rule(G, N, 12)
    X = rng.uniform(-1.3, 1.3, (200, G.n))
    W = rng.normal(size=(len(dirs), G.m1))
    wa = rng.random((len(dirs), 2))
    c0 = np.full(G.n, 0.1)
    args = (G, N, c0, 1.0, X, dirs.points, 0.0, 0.3, 1.0, W, wa)
    c = kernels.step_crossings(*args, backend="cython")
    py = kernels.step_crossings(*args, backend="python")
    assert _rel(c[0], py[0]) < 1e-9
    assert _rel(c[1], py[1]) < 1e-9
    assert np.array_equal(c[2], py[2])


@needs_cython
def test_thread_count_does_not_change_results(monkeypatch):
    f = CASES[0][1]
    X = rng.uniform(-1, 1, (500, 3))
    Hs = rng.uniform(-0.3, 0.3, (100, 3))
    w = rng.random((100, 1))
    monkeypatch.setenv("CARNOT_NUM_THREADS", "1")
    one = kernels.pair_sums(H, f, X, Hs, wa=w, backend="cython")[2]
    monkeypatch.setenv("CARNOT_NUM_THREADS", "3")
    three = kernels.pair_sums(H, f, X, Hs, wa=w, backend="cython")[2]
    assert np.array_equal(one, three)


def test_backend_selection(monkeypatch):
    monkeypatch.setenv("CARNOT_NONLOCAL_BACKEND", "python")
    assert kernels.active_backend() == "python"
    monkeypatch.setenv("CARNOT_NONLOCAL_BACKEND", "auto")
    assert kernels.active_backend() in kernels.available_backends()
    with pytest.raises(ValueError):
        kernels.active_backend("fortran")
    monkeypatch.setenv("CARNOT_NUM_THREADS", "zero")
    assert kernels.num_threads() == 1


def test_python_fallback_handles_fields_without_native_code():
    from carnot_nonlocal.fields import ScalarField

    f0 = bump(H, None, 1.0)
    plain = ScalarField("plain", H, f0.evaluate, f0.support_box, f0.eucl_grad)
    X = rng.uniform(-1, 1, (50, 3))
    Hs = rng.uniform(-0.2, 0.2, (20, 3))
    w = rng.random((20, 1))
    a = kernels.pair_sums(H, plain, X, Hs, wa=w)[2]
    b = kernels.pair_sums(H, f0, X, Hs, wa=w, backend="python")[2]
    assert _rel(a, b) < 1e-14
