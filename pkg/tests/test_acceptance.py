"""Acceptance suite: one test per criterion, each printing a PASS line with its margin.

Run with ``pytest -s tests/test_acceptance.py`` to see the per-criterion lines.
"""

import time

import numpy as np
import pytest

import postcap
from postcap import cli, feedback, realize, simulate

from conftest import bsc, capacity_grid_2input, fcap_grid_2x2, perturbed_post, random_post


def _random_surjective_references(count_per_size=5):
    """Seeded surjective square references of sizes 2 and 3."""
    rng = np.random.default_rng(1234)
    refs = []
    for size in (2, 3):
        found = 0
        attempts = 0
        while found < count_per_size:
            attempts += 1
            assert attempts < 500, "surjective reference generation stalled"
            W = postcap.MemorylessChannel(rng.dirichlet(np.full(size, 4.0), size=size).T)
            prof = postcap.capacity_iteration(W, tol=1e-12)
            if not prof.converged:
                continue
            rep = postcap.surjectivity_check(W, prof)
            if rep.is_surjective:
                refs.append((W, prof))
                found += 1
    return refs


def test_degenerate_channels_reproduce_memoryless_capacity():
    started = time.time()
    refs = _random_surjective_references()
    assert len(refs) == 10
    worst_value = worst_tv = 0.0
    for W, prof in refs:
        res = postcap.solve_fcap(W.degenerate_post(), tol=1e-10)
        assert res.converged
        value_err = abs(res.c_f_nats - prof.capacity_nats)
        tv = 0.5 * float(np.abs(res.maximizer.P - np.outer(prof.p_x, prof.p_y)).sum())
        assert value_err <= 1e-8
        assert tv <= 1e-6
        worst_value = max(worst_value, value_err)
        worst_tv = max(worst_tv, tv)
    elapsed = time.time() - started
    assert elapsed <= 10.0
    print(f"\nPASS degenerate-channel reproduction: 10 channels, worst value err {worst_value:.2e}, "
          f"worst TV {worst_tv:.2e}, {elapsed:.1f}s")


def test_small_delta_simulation_at_desk_scale():
    started = time.time()
    W = np.array([[.9, .2], [.1, .8]])
    rng = np.random.default_rng(777)
    worst_resid = worst_rate = 0.0
    min_entry_floor = np.inf
    for trial in range(20):
        U = rng.standard_normal((2, 2, 2))
        U -= U.mean(axis=1, keepdims=True)
        U /= np.max(np.abs(U))
        ch = postcap.PostChannel(W[None] + 1e-3 * U)
        fb = postcap.solve_fcap(ch, tol=1e-11)
        assert fb.converged
        law = postcap.MarkovOutputLaw.from_feedback(fb)
        for n in range(1, 9):
            plan = postcap.build_plan(ch, law, n)
            assert plan.valid, f"positivity failed at trial {trial}, n={n}"
            min_entry_floor = min(min_entry_floor, plan.min_entry)
            resid = postcap.verify_plan(ch, plan, law)["max_residual"]
            assert resid <= 1e-10
            rate_gap = abs(postcap.plan_mutual_information(ch, plan, law) - fb.c_f_nats)
            assert rate_gap <= 1e-7
            worst_resid = max(worst_resid, resid)
            worst_rate = max(worst_rate, rate_gap)
    elapsed = time.time() - started
    assert elapsed <= 60.0
    print(f"\nPASS small-delta simulation: 20 directions x n<=8, min entry {min_entry_floor:.2e}, "
          f"worst residual {worst_resid:.2e}, worst rate gap {worst_rate:.2e}, {elapsed:.1f}s")


EPS_GRID = [round(0.005 * k, 10) for k in range(21)]  # 0, 0.005, ..., 0.1


def test_example1_sweep_sign_pattern():
    started = time.time()
    rows = postcap.sweep_example(1, EPS_GRID, n=2)
    assert rows[0].D <= 1e-10
    for row in rows[1:]:
        assert row.D > 1e-8, f"D not positive at eps={row.eps}"
        assert not row.feasible_all
    # certificate validity at every positive point
    for eps in EPS_GRID[1:]:
        ch, _ = postcap.build_example(1, eps)
        fb = postcap.solve_fcap(ch, tol=1e-11)
        law = postcap.MarkovOutputLaw.from_feedback(fb)
        for y0 in range(3):
            v = postcap.lp_feasibility(ch, law, y0, 2)
            assert v.status == "infeasible"
            Q = simulate.nfold_stack(ch, 2, 10**7)[y0]
            q = simulate.markov_stack(law, 2, 10**7)[y0]
            sep = v.certificate @ q - max(v.certificate @ Q[:, j] for j in range(Q.shape[1]))
            assert sep > 1e-10
    elapsed = time.time() - started
    assert elapsed <= 120.0
    print(f"\nPASS example-1 sweep: D(0)={rows[0].D:.2e}, min positive D "
          f"{min(r.D for r in rows[1:]):.2e}, all 60 positive-eps LPs certified infeasible, "
          f"{elapsed:.1f}s")


def test_example2_sweep_rank_and_positivity():
    started = time.time()
    for eps in EPS_GRID:
        ch, _ = postcap.build_example(2, eps)
        fb = postcap.solve_fcap(ch, tol=1e-10)
        assert fb.converged
        law = postcap.MarkovOutputLaw.from_feedback(fb)
        D = 0.0
        for y0 in range(3):
            proj = postcap.lstsq_projection(ch, law, y0, 2)
            D += proj.residual_l1
            if eps > 0:
                assert proj.rank == 4, f"rank {proj.rank} != 4 at eps={eps}, y0={y0}"
        if eps >= 0.005:
            assert D > 1e-8
    elapsed = time.time() - started
    assert elapsed <= 120.0
    print(f"\nPASS example-2 sweep: rank 4 at every positive eps and state, D positive, "
          f"{elapsed:.1f}s")


def test_hessian_and_gradient_suite():
    rng = np.random.default_rng(2468)
    worst_eig = -np.inf
    worst_quad = worst_fd = 0.0
    points = 0
    for c in range(10):
        size = 2 if c % 2 == 0 else 3
        ch = random_post(rng, size, size)
        for _ in range(10):
            P = feedback.random_feasible(ch, rng, interior=0.2).P
            blocks = feedback.hessian_blocks(ch, P)
            for s, B in enumerate(blocks):
                eig = float(np.linalg.eigvalsh(B).max())
                assert eig <= 1e-9
                worst_eig = max(worst_eig, eig)
                p_cond = P[:, s] / P[:, s].sum()
                quad = abs(float(p_cond @ B @ p_cond))
                assert quad <= 1e-12
                worst_quad = max(worst_quad, quad)
            g = feedback.gradient(ch, P)
            h = 1e-6
            for i in range(ch.x_size):
                for j in range(ch.y_size):
                    Pp, Pm = P.copy(), P.copy()
                    Pp[i, j] += h
                    Pm[i, j] -= h
                    fd = (feedback.objective(ch, Pp) - feedback.objective(ch, Pm)) / (2 * h)
                    err = abs(g[i, j] - fd)
                    assert err <= 1e-5
                    worst_fd = max(worst_fd, err)
            points += 1
    assert points == 100
    print(f"\nPASS hessian/gradient suite: 100 points, max block eig {worst_eig:.2e}, "
          f"max p'Hp {worst_quad:.2e}, max grad-FD err {worst_fd:.2e}")


def test_oracle_equivalence():
    # (a) capacity iteration vs simplex grid search on the 2-input corpus
    corpus = [
        bsc(0.1).W,
        postcap.build_example(1, 0.0)[1].W,
        np.array([[.9, .2], [.1, .8]]),
        np.array([[.9, .3], [.1, .7]]),
        np.array([[.75, .2], [.25, .8]]),
    ]
    worst_a = 0.0
    for W in corpus:
        ref = postcap.MemorylessChannel(W)
        ba = postcap.capacity_iteration(ref, tol=1e-12).capacity_nats
        grid = capacity_grid_2input(W, step=1e-4)
        worst_a = max(worst_a, abs(ba - grid))
        assert abs(ba - grid) <= 1e-5

    # (b) feedback solve vs stationarity-manifold grid oracle on three 2x2 channels
    channels = [
        postcap.PostChannel(np.array([[[.9, .2], [.1, .8]], [[.88, .22], [.12, .78]]])),
        perturbed_post(np.array([[.9, .2], [.1, .8]]), 1e-3, seed=1),
        perturbed_post(np.array([[.8, .3], [.2, .7]]), 5e-3, seed=2),
    ]
    worst_b = 0.0
    for ch in channels:
        res = postcap.solve_fcap(ch, tol=1e-10)
        oracle = fcap_grid_2x2(ch, points=400)
        worst_b = max(worst_b, abs(res.c_f_nats - oracle))
        assert abs(res.c_f_nats - oracle) <= 2e-4

    # (c) plan recursion vs explicit n-fold inverse
    worst_c = 0.0
    ch = channels[0]
    fb = postcap.solve_fcap(ch, tol=1e-11)
    law = postcap.MarkovOutputLaw.from_feedback(fb)
    for n in (1, 2, 3):
        plan = postcap.build_plan(ch, law, n)
        for y0 in range(2):
            direct = np.linalg.solve(postcap.nfold_matrix(ch, y0, n),
                                     postcap.markov_output_vector(law, y0, n))
            err = float(np.max(np.abs(direct - plan.vectors[y0])))
            assert err <= 1e-12
            worst_c = max(worst_c, err)

    # (d) LP witness vs plan vector on small-delta channels
    worst_d = 0.0
    for seed in (31, 32):
        ch = perturbed_post(np.array([[.9, .2], [.1, .8]]), 1e-3, seed=seed)
        fb = postcap.solve_fcap(ch, tol=1e-11)
        law = postcap.MarkovOutputLaw.from_feedback(fb)
        for n in (1, 2, 4):
            plan = postcap.build_plan(ch, law, n)
            for y0 in range(2):
                v = postcap.lp_feasibility(ch, law, y0, n)
                assert v.status == "feasible"
                err = float(np.max(np.abs(v.witness - plan.vectors[y0])))
                assert err <= 1e-8
                worst_d = max(worst_d, err)
    print(f"\nPASS oracle equivalence: (a) {worst_a:.2e} <= 1e-5, (b) {worst_b:.2e} <= 2e-4, "
          f"(c) {worst_c:.2e} <= 1e-12, (d) {worst_d:.2e} <= 1e-8")


def test_structural_checks():
    rng = np.random.default_rng(97531)
    worst_sub = -np.inf
    for _ in range(100):
        n = int(rng.integers(2, 5))
        A = rng.dirichlet(np.ones(n), size=n).T
        B = rng.dirichlet(np.ones(n), size=n).T
        la = postcap.scrambling_coefficient(A)
        lb = postcap.scrambling_coefficient(B)
        lab = postcap.scrambling_coefficient(A @ B)
        assert 0.0 <= la <= 1.0
        assert lab <= la * lb + 1e-12
        worst_sub = max(worst_sub, lab - la * lb)
    contradictions = 0
    for _ in range(100):
        y = int(rng.integers(2, 4))
        W = rng.dirichlet(np.ones(y), size=y).T
        ref = postcap.MemorylessChannel(W)
        bound = postcap.delta_thresholds(ref, range(y)).conn
        delta = min(0.5 * bound, float(W.min()) * 0.9)
        ch = perturbed_post(W, delta, seed=int(rng.integers(10**9)))
        if postcap.proximity(ch, ref).delta < bound and not postcap.check_connected(ch):
            contradictions += 1
    assert contradictions == 0
    print(f"\nPASS structural checks: submultiplicativity margin {worst_sub:.2e} <= 1e-12 "
          f"on 100 pairs, 0 connectivity contradictions on 100 channels")


def test_sweep_determinism(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert cli.main(["sweep", "--example", "1", "--eps", "0:0.02:0.01",
                         "--n", "2", "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    print("\nPASS determinism: repeated sweep runs byte-identical")
