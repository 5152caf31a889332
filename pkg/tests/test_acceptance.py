"""The twelve acceptance criteria at their stated tolerances.

Each test records a one-line verdict (shown live with ``-s`` and again in the
terminal summary).  The long Heisenberg experiments run once per session and
are shared between criteria that read different columns of the same report.
Runtime budgets are checked alongside the numbers.
"""
import functools
import time
from pathlib import Path

import numpy as np
import pytest

from carnot_nonlocal import cli
from carnot_nonlocal.config import load_config
from carnot_nonlocal.experiments import run_experiment
from carnot_nonlocal.groups import dilate, euclidean, heisenberg, inverse, multiply
from carnot_nonlocal.norms import grad_norm_fd, koranyi, koranyi_grad, koranyi_norm

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@functools.lru_cache(maxsize=None)
def run(config: str, experiment: str):
    cfg = load_config(CONFIGS / config)
    t0 = time.perf_counter()
    rep = run_experiment(cfg, experiment)
    return rep, time.perf_counter() - t0


def crit(rep, name):
    assert rep.error is None, rep.error
    matches = [c for c in rep.criteria if c.name == name]
    assert matches, f"{rep.experiment} has no criterion {name}"
    return matches[0]


def test_01_group_axioms(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    worst = 0.0
    for G in (euclidean(1), euclidean(2), euclidean(3), heisenberg()):
        x, y, z = (rng.uniform(-1, 1, (1000, G.n)) for _ in range(3))
        lam = rng.uniform(0.25, 4.0, 1000)
        e = np.zeros(G.n)
        errs = [
            multiply(G, multiply(G, x, y), z) - multiply(G, x, multiply(G, y, z)),
            multiply(G, x, inverse(G, x)),
            multiply(G, inverse(G, x), x),
            multiply(G, x, e) - x,
            multiply(G, e, x) - x,
            dilate(G, lam, multiply(G, x, y)) - multiply(G, dilate(G, lam, x), dilate(G, lam, y)),
        ]
        worst = max(worst, max(float(np.abs(d).max()) for d in errs))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and dt < 1.0
    verdict(1, "group axioms", ok, f"max error {worst:.2e} (<= 1e-12), {dt:.2f}s")
    assert ok


def test_02_koranyi_closed_forms(verdict):
    t0 = time.perf_counter()
    H = heisenberg()
    K = koranyi(H)
    x = np.random.default_rng(1).uniform(-1, 1, (100, 3))
    an = koranyi_grad(x)
    fd = grad_norm_fd(H, K, x)
    fd_rel = float((np.linalg.norm(an - fd, axis=1) / np.linalg.norm(an, axis=1)).max())
    at_pole = float(np.linalg.norm(koranyi_grad([0.0, 0.0, 1.0])))
    modulus = np.sqrt(x[:, 0] ** 2 + x[:, 1] ** 2) / koranyi_norm(x)
    mod_err = float(np.abs(np.linalg.norm(an, axis=1) - modulus).max())
    dt = time.perf_counter() - t0
    ok = fd_rel <= 1e-6 and at_pole == 0.0 and mod_err <= 1e-10 and dt < 1.0
    verdict(2, "Koranyi closed forms", ok,
            f"fd rel {fd_rel:.1e}, |grad N(0,0,1)| = {at_pole}, modulus err {mod_err:.1e}, {dt:.2f}s")
    assert ok


def test_03_kernel_mass(verdict):
    rep, dt = run("heisenberg.ini", "kernel_props")
    mass = crit(rep, "kernel_mass").measured
    cf = crit(rep, "closed_form_vs_quadrature").measured
    families = {r["family"] for r in rep.rows}
    ok = mass <= 1e-3 and cf <= 1e-8 and families == {"ball", "fractional"} and dt < 5.0
    verdict(3, "kernel mass identity", ok,
            f"max |mass - 1| {mass:.1e}, closed form vs quadrature {cf:.1e}, {dt:.1f}s")
    assert ok


def test_04_representation_formula(verdict):
    rep, dt = run("heisenberg.ini", "repr_formula")
    worst = max(r["max_discrepancy"] / (1e-3 * (1 + r["grad_sup"])) for r in rep.rows)
    ok = crit(rep, "representation_identity").passed and worst <= 1.0 and dt < 120
    verdict(4, "representation formula", ok, f"discrepancy / bound {worst:.2e}, {dt:.1f}s")
    assert ok


def test_05_gradient_convergence(verdict):
    parts, total, ok = [], 0.0, True
    for label, config in (("R1", "euclidean_r1.ini"), ("R2", "euclidean_r2.ini"), ("H1", "heisenberg.ini")):
        rep, dt = run(config, "grad_convergence")
        total += dt
        errs = [r["lp_error"] for r in rep.rows]
        monotone = bool(np.all(np.diff(errs) < 0))
        final = crit(rep, "final_relative_error").measured
        ok &= monotone and final <= 0.05 and len(errs) == 6
        parts.append(f"{label} final {final:.1e}{'' if monotone else ' NOT monotone'}")
    ok &= total < 600
    verdict(5, "gradient convergence", ok, ", ".join(parts) + f", {total:.0f}s")
    assert ok


def test_06_reconstruction(verdict):
    parts, ok = [], True
    for label, config in (("R2", "euclidean_r2.ini"), ("l4", "anisotropic_r2.ini"), ("H1", "heisenberg.ini")):
        rep, dt = run(config, "reconstruction")
        z = crit(rep, "identity_within_3se").measured
        dev = crit(rep, "identity_max_abs").measured
        n = rep.rows[0]["n_samples"]
        ok &= z <= 3.0 and dev <= 0.02 and n >= 1_000_000 and dt < 60
        parts.append(f"{label} {z:.2f} SE / {dev:.4f} ({dt:.0f}s)")
    verdict(6, "reconstruction identity", ok, ", ".join(parts))
    assert ok


def test_07_energy_limit(verdict):
    rep, dt = run("heisenberg.ini", "energy_limit")
    gap = crit(rep, "energy_limit_rel_gap").measured
    routes = crit(rep, "limit_routes_rel_gap").measured
    z = crit(rep, "barbieri_v_independence").measured
    n_v = sum(1 for r in rep.tables["barbieri"][1] if r["route"] == "sphere")
    ok = gap <= 0.05 and routes <= 0.02 and z < 3.0 and n_v >= 10 and dt < 600
    verdict(7, "energy limit", ok,
            f"I* vs limit {gap:.1e}, routes {routes:.1e}, Barbieri spread {z:.2f} SE over {n_v} v, {dt:.0f}s")
    assert ok


def test_08_ludwig(verdict):
    rep, dt = run("heisenberg.ini", "ludwig")
    gap = crit(rep, "ludwig_limit_rel_gap").measured
    tails = [r["tail_bound"] for r in rep.rows]
    ok = gap <= 0.10 and all(np.isfinite(tails)) and dt < 600
    verdict(8, "Ludwig limit", ok, f"endpoint gap {gap:.1e}, final tail bound {tails[-1]:.2e}, {dt:.0f}s")
    assert ok


def test_09_inequality_chain(verdict):
    rep, dt = run("heisenberg.ini", "energy_limit")
    c1 = crit(rep, "chain_vtilde_le_I").measured
    c2 = crit(rep, "chain_I_le_Istar").measured
    sob = crit(rep, "sobolev_constant")
    ok = c1 <= 1e-9 and c2 <= 1e-9 and sob.passed
    parts = [f"H1 excess {max(c1, c2):.1e}, C(N) {sob.measured:.3f}"]
    for label, config in (("R1", "euclidean_r1.ini"), ("R2", "euclidean_r2.ini")):
        r, t = run(config, "energy_limit")
        dt += t
        eq = crit(r, "euclidean_I_equals_Istar").measured
        s = crit(r, "sobolev_constant")
        ok &= eq <= 1e-6 and s.passed
        ok &= crit(r, "chain_vtilde_le_I").passed and crit(r, "chain_I_le_Istar").passed
        parts.append(f"{label} |I - I*|/I* {eq:.1e}, C(N) {s.measured:.3f} <= {s.bound:.3f}")
    ok &= dt < 300
    verdict(9, "inequality chain", ok, ", ".join(parts) + f", {dt:.0f}s")
    assert ok


def test_10_taylor(verdict):
    rep, dt = run("heisenberg.ini", "taylor")
    drop = crit(rep, "remainder_drop").measured
    gap = crit(rep, "wrong_v_limit_rel_gap").measured
    limit = rep.rows[-1]["limit_wrong"]
    ok = drop < 0.10 and gap <= 0.05 and limit > 0 and crit(rep, "remainder_monotone").passed and dt < 600
    verdict(10, "Taylor remainder", ok, f"drop {drop:.1e}, wrong-v gap {gap:.1e} (limit {limit:.4g}), {dt:.0f}s")
    assert ok


def test_11_bv(verdict):
    rep, dt = run("heisenberg.ini", "bv_mass")
    ratio = crit(rep, "istar_bounded_max_over_min").measured
    plateau = crit(rep, "v_l1_plateau_vs_smoothed").measured
    ok = ratio <= 2.0 and plateau <= 0.05 and dt < 600
    verdict(11, "BV boundedness", ok, f"I* max/min {ratio:.3f}, plateau gap {plateau:.1e}, {dt:.0f}s")
    assert ok


def test_12_determinism(verdict, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        code = cli.main(["run", str(CONFIGS / "quick.ini"), "--out", str(out)])
        assert code in (0, 1)
        outs.append(out)
    names = sorted(p.name for p in outs[0].glob("*.csv"))
    same = names == sorted(p.name for p in outs[1].glob("*.csv")) and all(
        (outs[0] / n).read_bytes() == (outs[1] / n).read_bytes() for n in names)
    ok = same and len(names) >= 5
    verdict(12, "determinism", ok, f"{len(names)} CSV files byte-identical across two runs")
    assert ok


@pytest.fixture(scope="module", autouse=True)
def _release_cache():
    yield
    run.cache_clear()
