"""Acceptance criteria, each at its stated tolerance.

Every test records one ``PASS``/``FAIL`` line, printed in the terminal
summary.  Runtime budgets are measured after a warm-up call so that
one-off JIT compilation is not charged to the criterion.
"""
import time

import numpy as np
import pytest
from scipy.linalg import expm

from agentinvite.core import FluidState, SimState, to_centered
from agentinvite.fluid import FluidConfig, detect_convergence, integrate
from agentinvite.harness.experiments import fluid_start
from agentinvite.harness.presets import EXAMPLE1, EXAMPLE2, EXAMPLE4
from agentinvite.simulator import SimConfig, compare_to_fluid, replicate
from agentinvite.stability import (
    a1_inverse,
    a2_hurwitz_condition,
    build_matrices,
    char_poly,
    condition_i,
    condition_ii,
    cqlf_exists,
    det_poly_numerator,
    is_hurwitz_cubic,
)
from conftest import ACCEPTANCE_LINES, random_params

REPS = 20


def record(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def locally_stable(p) -> bool:
    return condition_i(p)[0] or condition_ii(p)[0]


def test_criterion_1_example1_condition():
    locally_stable(EXAMPLE1)
    n = 1000
    t0 = time.perf_counter()
    for _ in range(n):
        ok, _ = condition_i(EXAMPLE1)
    per_call = (time.perf_counter() - t0) / n
    good = ok is True and per_call < 1e-3
    record(1, good, f"condition (i) = {ok}, {per_call * 1e6:.1f} us per evaluation (< 1 ms)")
    assert good


def test_criterion_2_example2_conditions():
    got = {g: condition_i(EXAMPLE2.with_(gamma=g))[0] for g in (1.0, 5.0, 10.0, 20.0)}
    threshold = max(condition_i(EXAMPLE2)[1])
    good = got == {1.0: False, 5.0: False, 10.0: True, 20.0: True} and abs(threshold - 8.8) <= 1e-12
    record(2, good, f"condition (i) over gamma {got}, dominant threshold {threshold!r}")
    assert good


def test_criterion_3_hurwitz_suite():
    rng = np.random.default_rng(2024)
    draws = [random_params(rng) for _ in range(10_000)]
    t0 = time.perf_counter()
    a1_bad = a2_bad = cqlf_bad = 0
    for p in draws:
        pair = build_matrices(p)
        if not is_hurwitz_cubic(char_poly(pair.A1)):
            a1_bad += 1
        if a2_hurwitz_condition(p) != is_hurwitz_cubic(char_poly(pair.A2)):
            a2_bad += 1
        if locally_stable(p) and cqlf_exists(pair) is not True:
            cqlf_bad += 1
    elapsed = time.perf_counter() - t0
    good = a1_bad == a2_bad == cqlf_bad == 0 and elapsed < 5.0
    record(3, good, f"violations A1={a1_bad} A2={a2_bad} cqlf={cqlf_bad} over 10^4 draws in {elapsed:.2f} s (< 5 s)")
    assert good


def test_criterion_4_det_polynomial_oracle():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(1000):
        p = random_params(rng)
        pair = build_matrices(p)
        inv = a1_inverse(p)
        c = det_poly_numerator(p)
        scale = -p.beta * p.epsilon * p.mu
        for tau in rng.uniform(0, 100, 20):
            numeric = np.linalg.det(inv + tau * pair.A2) * scale
            worst = max(worst, abs(c(tau) - numeric) / abs(numeric))
    good = worst < 1e-8
    record(4, good, f"max relative error {worst:.2e} over 10^3 draws x 20 tau (< 1e-8)")
    assert good


def test_criterion_5_example1_fluid():
    cfg = FluidConfig(dt=1e-3, T=100.0, bounded=True, conv_tol=1e-3, conv_window=10.0)
    initials = [(0, 0, 0), (0, 2000, 0), (2000, -2000, 1000), (2000, 4000, 1000)]
    integrate(FluidState(0.1, 0.1, 0.1), EXAMPLE1, FluidConfig(T=1, conv_window=1))  # JIT warm-up
    t0 = time.perf_counter()
    trajs = [integrate(to_centered(SimState(*xyz), EXAMPLE1), EXAMPLE1, cfg) for xyz in initials]
    elapsed = time.perf_counter() - t0
    converged = [detect_convergence(tr, cfg).converged for tr in trajs]
    contacts = [tr.meta["boundary_contacts"] for tr in trajs]
    good = all(converged) and contacts[1] > 0 and contacts[3] > 0 and elapsed < 2.0
    record(5, good, f"converged {converged}, boundary contacts {contacts}, {elapsed:.2f} s (< 2 s)")
    assert good


def test_criterion_6_example2_non_convergence():
    cfg = FluidConfig(T=200.0)
    tr = integrate(to_centered(SimState(1000, 6000, 2000), EXAMPLE2), EXAMPLE2, cfg)
    norms, grid = tr.norms(), tr.grid
    starts = np.arange(50.0, 190.0 + 1e-9, 0.1)
    window_max = [norms[(grid >= a - 1e-9) & (grid <= a + 10 + 1e-9)].max() for a in starts]
    lowest = min(window_max)
    good = lowest > 0.1
    record(6, good, f"smallest window-max norm over [50, 200] is {lowest:.3f} (> 0.1 required)")
    assert good


@pytest.fixture(scope="module")
def warm():
    replicate(SimConfig(T=1.0, seed=0), EXAMPLE1, 1)
    replicate(SimConfig(T=1.0, seed=0, scheme="actual", initial=SimState(0, 0, 0, 10.0)), EXAMPLE4, 1)


def _comparison(params, initial, scheme):
    grid_T, sample_dt = 50.0, 0.1
    s0 = fluid_start(initial, params, scheme)
    fluid = integrate(s0, params, FluidConfig(T=grid_T)).on_grid(np.arange(501) * sample_dt)
    cfg = SimConfig(T=grid_T, sample_dt=sample_dt, seed=0, scheme=scheme, initial=initial)
    t0 = time.perf_counter()
    sims = replicate(cfg, params, REPS)
    elapsed = time.perf_counter() - t0
    dists = [compare_to_fluid(s, fluid).sup_dist for s in sims]
    return float(np.median(dists)), elapsed, sims


@pytest.fixture(scope="module")
def stylized_run(warm):
    return _comparison(EXAMPLE1, SimState(0, 0, 0), "stylized")


@pytest.fixture(scope="module")
def actual_runs(warm):
    initial = SimState(0, 0, 0, 1000.0)
    return {g: _comparison(EXAMPLE4.with_(gamma=g), initial, "actual") for g in (2.3, 20.0)}


def test_criterion_7_stylized_agreement(stylized_run):
    median, elapsed, _ = stylized_run
    good = median < 0.15 and elapsed < 30.0
    record(7, good, f"median sup distance {median:.4f} over {REPS} seeds (< 0.15), {elapsed:.2f} s (< 30 s)")
    assert good


def test_criterion_8_actual_scheme_gap(actual_runs):
    small, large = actual_runs[2.3][0], actual_runs[20.0][0]
    ratio = large / small
    good = ratio > 3.0
    record(8, good, f"median sup distance gamma=20 {large:.4f} vs gamma=2.3 {small:.4f}, ratio {ratio:.2f} (> 3)")
    assert good


def test_criterion_9_actual_invariants(stylized_run, actual_runs):
    runs = list(stylized_run[2]) + [s for v in actual_runs.values() for s in v[2]]
    events = sum(s.meta["events"] for s in runs)
    violations = sum(s.meta["violations"] for s in runs)
    sampled_ok = all(
        np.all(s.raw[:, 0] >= s.raw[:, 3]) and np.all(s.raw[:, 3] >= 0) for v in actual_runs.values() for s in v[2]
    )
    good = violations == 0 and sampled_ok
    record(9, good, f"{violations} invariant violations across {events} events")
    assert good


def test_criterion_10_matrix_exponential():
    rng = np.random.default_rng(10)
    worst, draws, attempts = 0.0, 0, 0
    while draws < 50:
        attempts += 1
        assert attempts < 100_000
        p = random_params(rng)
        if not locally_stable(p):
            continue
        A1 = build_matrices(p).A1
        u0 = np.array([rng.uniform(-0.1, 0.1), 1.0, rng.uniform(-0.1, 0.1)])
        tr = integrate(FluidState(*u0), p, FluidConfig(dt=1e-3, T=1.0, bounded=False, conv_window=1.0))
        if tr.states[:, 1].min() <= 0:
            continue
        ref = expm(A1) @ u0
        worst = max(worst, np.linalg.norm(tr.states[-1] - ref) / np.linalg.norm(ref))
        draws += 1
    good = worst < 1e-6
    record(10, good, f"max relative error at t=1 over {draws} draws {worst:.2e} (< 1e-6)")
    assert good
