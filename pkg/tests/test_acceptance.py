"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary of all
criteria is printed at the end of the session.
"""

import time
from pathlib import Path

import numpy as np
import pytest

from oracles import brute_channel, fd_error, fd_gradient, fd_instance, random_iset
from risopt import cli
from risopt.channel import RisLoad, approx_transfer_function, transfer_function
from risopt.config import RisSpec, ScenarioConfig, load_config
from risopt.em_model import (
    Dipole, assemble_impedances, build_grid_scenario, mutual_impedance, self_impedance,
)
from risopt.gradient import e_diagonal, gradient
from risopt.metrics import complexity_benchmark, complexity_proposed, counted_run
from risopt.optimizer import OptimizerConfig, default_initializer, optimize
from test_optimizer import grid_max_1d, grid_max_2d, single_element, two_elements

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_criterion_1_gradient_matches_finite_differences(report):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for r0 in (1.0, 1e-2, 1e-3):
        for _ in range(10):
            iset, x = fd_instance(rng, 8, r0)
            g = gradient(transfer_function(iset, RisLoad(r0, x)), iset).grad
            fd = fd_gradient(lambda y: transfer_function(iset, RisLoad(r0, y)).objective, x)
            worst = max(worst, fd_error(g, fd))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-5 and elapsed < 10
    assert report(1, ok, f"30 instances, worst FD error {worst:.2e} (< 1e-5), {elapsed:.2f} s")


@pytest.mark.slow
def test_criterion_2_monotone_convergence(report, default_iset):
    details, ok = [], True
    for r0 in (1e-2, 1e-3, 1e-4):
        start = time.perf_counter()
        cfg = OptimizerConfig(max_outer_iters=10_000, plateau_tol=0.0)
        _, trace = optimize(default_iset, default_initializer(default_iset, r0), cfg)
        f = np.array([r.objective for r in trace])
        loops = max(r.inner_loops for r in trace)
        elapsed = time.perf_counter() - start
        good = (len(trace) == 10_001 and bool(np.all(np.diff(f) >= 0)) and f[-1] > f[0]
                and loops <= cfg.max_inner_loops and elapsed < 300)
        ok &= good
        details.append(f"R0={r0:g}: f {f[0]:.3e}->{f[-1]:.3e}, max loops {loops}, {elapsed:.0f} s")
    assert report(2, ok, "; ".join(details))


def test_criterion_3_grid_oracle(report):
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    r0 = 0.5
    gaps1, ratios2 = [], []
    for _ in range(3):
        iset, _ = single_element(rng)
        _, trace = optimize(iset, default_initializer(iset, r0))
        _, f_star = grid_max_1d(iset, r0)
        gaps1.append(abs(trace[-1].objective - f_star) / f_star)
    for _ in range(3):
        iset = two_elements(rng)
        load, trace = optimize(iset, default_initializer(iset, r0))
        ratios2.append(trace[-1].objective / grid_max_2d(iset, r0, load.x, 20.0, 500))
    elapsed = time.perf_counter() - start
    ok = max(gaps1) <= 1e-4 and min(ratios2) >= 0.999 and elapsed < 120
    assert report(3, ok, f"N=1 worst gap {max(gaps1):.1e} (<= 1e-4); "
                         f"N=2 worst ratio {min(ratios2):.6f} (>= 0.999); {elapsed:.0f} s")


def test_criterion_4_complexity_table(report):
    values = [
        (complexity_proposed(196, 3208, 5), 1.94e11),
        (complexity_proposed(196, 10935, 5), 6.61e11),
        (complexity_benchmark(196, 9683), 7.32e10),
        (complexity_benchmark(196, 22138), 1.68e11),
    ]
    errs = [abs(v - ref) / ref for v, ref in values]
    ok = max(errs) <= 5e-3
    assert report(4, ok, "relative errors " + ", ".join(f"{e:.2%}" for e in errs) + " (<= 0.5%)")


@pytest.mark.slow
def test_criterion_5_coupling_trend(report, tmp_path):
    start = time.perf_counter()
    results = {}
    for name in ("fig3_spacing", "fig4_equal_length"):
        cfg = load_config(CONFIGS / f"{name}.toml")
        out = tmp_path / name
        out.mkdir()
        path = cli.cmd_sweep_spacing(cfg, out, jobs=1)
        rows = [line.split(",") for line in path.read_text().splitlines()[1:]]
        results[name] = [(float(s), int(n), float(fa), float(fu)) for s, n, fa, fu in rows]
    elapsed = time.perf_counter() - start
    fig3, fig4 = results["fig3_spacing"], results["fig4_equal_length"]
    counts = [r[1] for r in fig3]
    aware = [r[2] for r in fig3]
    unaware = [r[3] for r in fig3]
    ok = (counts == [16, 49, 196]
          and all(b > a for a, b in zip(aware, aware[1:]))
          and all(b < a for a, b in zip(unaware, unaware[1:]))
          and all(fig4[i][3] < fig3[i][3] for i in (1, 2))
          and elapsed < 900)
    fmt = lambda v: "/".join(f"{x:.2e}" for x in v)  # noqa: E731
    assert report(5, ok, f"N={counts}; aware {fmt(aware)}; unaware {fmt(unaware)}; "
                         f"equal-length unaware {fmt([r[3] for r in fig4])}; {elapsed:.0f} s")


def test_criterion_6_brute_force_equivalence(report):
    rng = np.random.default_rng(6)
    start = time.perf_counter()
    worst = {"h": 0.0, "h_app": 0.0, "E": 0.0}
    for k in range(100):
        n = 1 + k % 5
        iset = random_iset(rng, n)
        load = RisLoad(rng.choice([1.0, 1e-2, 1e-3]), rng.uniform(-50, 50, n))
        ref = brute_channel(iset, load.z_ris)
        ceval = transfer_function(iset, load)
        e = e_diagonal(ceval, iset)
        e_ref = np.diag(ref["E"])
        worst["h"] = max(worst["h"], abs(ceval.h_e2e - ref["h"]) / abs(ref["h"]))
        worst["h_app"] = max(worst["h_app"],
                             abs(approx_transfer_function(iset, load) - ref["h_app"]) / abs(ref["h_app"]))
        worst["E"] = max(worst["E"], np.linalg.norm(e - e_ref) / np.linalg.norm(e_ref))
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) <= 1e-12 and elapsed < 10
    assert report(6, ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f" (<= 1e-12), {elapsed:.2f} s")


def test_criterion_7_approximation_order(report):
    rng = np.random.default_rng(7)
    base = random_iset(rng, 4, z_tr=0, scale=2.0)
    load = RisLoad(1.0, rng.uniform(-30, 30, 4))
    eps = np.array([1, 1 / 2, 1 / 4, 1 / 8])
    gaps = []
    for e in eps:
        iset = base.replace(z_ts=e * base.z_ts, z_rs=e * base.z_rs)
        h = transfer_function(iset, load).h_e2e
        gaps.append(abs(h - approx_transfer_function(iset, load)) / abs(h))
    slope = np.polyfit(np.log(eps), np.log(gaps), 1)[0]
    ok = 1.8 <= slope <= 2.2
    assert report(7, ok, f"log-log slope {slope:.3f} in [1.8, 2.2]; gap at eps=1 {gaps[0]:.1e}")


def test_criterion_8_impedance_backend(report):
    start = time.perf_counter()
    lam = 0.1
    z_half = self_impedance(Dipole((0, 0, 0), lam / 2, lam / 500), lam)
    real_err = abs(z_half.real - 73.1) / 73.1
    iset = assemble_impedances(build_grid_scenario(ScenarioConfig(ris=RisSpec(3, 3))))
    symmetric = bool(np.array_equal(iset.z_ss, iset.z_ss.T))
    p = Dipole((0, 0, 0), lam / 2, lam / 500)
    q = Dipole((0.03, 0.01, 0.02), lam / 3, lam / 500)
    pair_ok = abs(mutual_impedance(p, q, lam) - mutual_impedance(q, p, lam)) <= 1e-12 * abs(mutual_impedance(p, q, lam))
    refine = 0.0
    for a, b in ((p, p), (p, q), (Dipole((0, 0, 0), lam / 32, lam / 500), Dipole((0, lam / 4, 0), lam / 32, lam / 500))):
        coarse = mutual_impedance(a, b, lam)
        fine = mutual_impedance(a, b, lam, nodes=1024, max_nodes=4096)
        refine = max(refine, abs(fine - coarse) / abs(fine))
    elapsed = time.perf_counter() - start
    ok = real_err < 0.05 and symmetric and pair_ok and refine < 1e-8 and elapsed < 5
    assert report(8, ok, f"Re Z(half-wave) = {z_half.real:.2f} ({real_err:.1%} from 73.1); "
                         f"Z_SS symmetric {symmetric}; refinement {refine:.1e} (< 1e-8); {elapsed:.2f} s")


def test_criterion_9_complexity_scaling(report):
    start = time.perf_counter()
    grids = {16: (4, 4), 32: (4, 8), 64: (8, 8)}
    per_iter, ratios = {}, {}
    iters = 50
    for n, (rows, cols) in grids.items():
        iset = assemble_impedances(build_grid_scenario(ScenarioConfig(ris=RisSpec(rows, cols))))
        init = default_initializer(iset, 1e-3)
        (_, trace), counter = counted_run(iset, init, OptimizerConfig(max_outer_iters=iters, plateau_tol=0.0))
        steps = trace[1:]
        per_iter[n] = (trace[-1].cum_mults - trace[0].cum_mults) / len(steps)
        l_obs = float(np.mean([r.inner_loops for r in steps]))
        ratios[n] = per_iter[n] / (3 * n**3 + l_obs * (n**3 + n**2))
    growth = [per_iter[32] / per_iter[16], per_iter[64] / per_iter[32]]
    elapsed = time.perf_counter() - start
    within = all(0.25 <= r <= 4 for r in ratios.values())
    ok = within and all(6 <= g <= 10 for g in growth) and elapsed < 120
    assert report(9, ok, "measured / (3N^3 + L(N^3+N^2)) = "
                         + ", ".join(f"N={n}: {r:.3f}" for n, r in ratios.items())
                         + " (band [0.25, 4]); growth " + ", ".join(f"{g:.2f}" for g in growth)
                         + f" (in [6, 10]); {elapsed:.1f} s")
