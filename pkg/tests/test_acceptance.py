"""Acceptance suite: one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``. Tolerances are pinned
below; nothing is retried or reseeded on failure.
"""

from __future__ import annotations

import itertools
import json
import random
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from qswitch.bench import (
    DEFAULT_BETA_AXIS,
    DEFAULT_L_AXIS,
    Scenario,
    dominance_sweep,
    frontier_vs_beta,
    memory_dominance_window,
    sweep_rate_K_L,
    utilities_vs_K,
)
from qswitch.bmatch import CapacityVector, allocation_size, brute_force_max, emax_closed_form, greedy_max_allocation, is_feasible
from qswitch.cli import COMMANDS, main
from qswitch.hwmodel import HardwareProfile, half_link_transmittance, heralding_delay, initial_fidelity
from qswitch.memswitch import ConnectivityDistribution, expected_emax_exact, expected_emax_mc, mem_link_prob

BASE = HardwareProfile()
K_RANGE = range(1, 61)
TESTS_DIR = Path(__file__).parent

# pinned tolerances
F0_TARGET, F0_TOL = 0.9565, 0.0005
ETA_TARGET, ETA_TOL = 0.9772, 0.0005
TAU_HRLD = 5.0e-6
MC_SIGMAS = 3.0
RATE_KSTAR_WINDOW = (25, 35)
UTILITY_KSTAR_WINDOW = (4, 10)
FRONTIER_WINDOW, FRONTIER_WINDOW_TOL = (0.73, 0.90), 0.05
SENSITIVITY_WINDOW, SENSITIVITY_WINDOW_TOL = (0.66, 0.93), 0.05


def report(capsys, number: int, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\nCRITERION {number:>2} {'PASS' if ok else 'FAIL'}: {detail}")


def within(value: float, target: float, tol: float) -> bool:
    return abs(value - target) <= tol


def window_ok(window, target, tol) -> bool:
    return window is not None and within(window[0], target[0], tol) and within(window[1], target[1], tol)


def fmt_window(window) -> str:
    return "none" if window is None else f"[{window[0]:.3f}, {window[1]:.3f}]"


def unimodal(values: np.ndarray) -> bool:
    """Nondecreasing up to the argmax and nonincreasing after it, over defined entries."""
    v = values[~np.isnan(values)]
    if v.size == 0:
        return False
    peak = int(np.argmax(v))
    return bool(np.all(np.diff(v[: peak + 1]) >= 0) and np.all(np.diff(v[peak:]) <= 0))


def test_criterion_01_closed_form_matches_oracle(capsys):
    start = time.perf_counter()
    checked = mismatches = 0
    families = []
    for n in range(2, 6):
        for caps in itertools.product(range(4), repeat=n):
            for budget in range(9):
                families.append(CapacityVector(caps, budget))
    rng = random.Random(2024)
    while len(families) < 9 * (16 + 64 + 256 + 1024) + 1000:
        n = rng.randint(2, 7)
        caps = [rng.randint(0, 5) for _ in range(n)]
        if sum(caps) <= 24:
            families.append(CapacityVector(caps, rng.randint(0, 15)))
    for cv in families:
        value = emax_closed_form(cv)
        alloc = greedy_max_allocation(cv)
        if value != brute_force_max(cv)[0] or allocation_size(alloc) != value or not is_feasible(cv, alloc):
            mismatches += 1
        checked += 1
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 30.0
    report(capsys, 1, ok, f"{checked} instances, {mismatches} mismatches, {elapsed:.1f} s (limit 30 s)")
    assert ok


def test_criterion_02_baseline_scalar_chain(capsys):
    f0 = initial_fidelity(0.03)
    tau = heralding_delay(BASE.link_length, BASE.light_speed)
    eta = half_link_transmittance(BASE.attenuation, BASE.link_length)
    ok = within(f0, F0_TARGET, F0_TOL) and tau == TAU_HRLD and within(eta, ETA_TARGET, ETA_TOL)
    report(capsys, 2, ok, f"F0={f0:.5f} (0.9565+-0.0005), tau_hrld={tau * 1e6:.6f} us (5.0 exact), eta={eta:.5f} (0.9772+-0.0005)")
    assert ok


def test_criterion_03_monte_carlo_vs_exact(capsys):
    start = time.perf_counter()
    parts, ok = [], True
    for k in (1, 10, 30):
        dist = ConnectivityDistribution(BASE.switch_memories, mem_link_prob(BASE, k))
        exact = expected_emax_exact(dist, BASE.bsm_budget)
        est = expected_emax_mc(dist, BASE.bsm_budget, 100_000)
        z = (est.mean - exact) / est.std_error
        ok &= abs(z) <= MC_SIGMAS
        parts.append(f"K={k} z={z:+.2f}")
    for p in (0.0, 1.0):
        dist = ConnectivityDistribution(BASE.switch_memories, p)
        same = expected_emax_mc(dist, BASE.bsm_budget, 100_000).mean == expected_emax_exact(dist, BASE.bsm_budget)
        ok &= same
        parts.append(f"p={p:g} {'exact' if same else 'differs'}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 10.0
    report(capsys, 3, ok, ", ".join(parts) + f", {elapsed:.1f} s (limit 10 s)")
    assert ok


def test_criterion_04_rate_optimal_block_size(capsys):
    res = sweep_rate_K_L(BASE, list(K_RANGE), [0.1])
    k_star = res.axis("K").values[res.annotations["argmax_K"][0]]
    ok = RATE_KSTAR_WINDOW[0] <= k_star <= RATE_KSTAR_WINDOW[1]
    report(capsys, 4, ok, f"rate-optimal K*={k_star} at L=0.1 km (window [25, 35])")
    assert ok


def test_criterion_05_optimum_shifts(capsys):
    def argmax_ks(profile):
        res = sweep_rate_K_L(profile, list(K_RANGE), DEFAULT_L_AXIS)
        return np.array([res.axis("K").values[i] for i in res.annotations["argmax_K"]])

    base = argmax_ks(BASE)
    bright = argmax_ks(BASE.replace(beta=0.15))
    slow = argmax_ks(BASE.replace(pulse_rate=1e6))
    ok_beta = bool(np.all(bright < base))
    ok_f = bool(np.all(slow <= base))
    report(
        capsys,
        5,
        ok_beta and ok_f,
        f"beta=0.15 below beta=0.03 at {int(np.sum(bright < base))}/{len(base)} L; "
        f"1 MHz <= 10 MHz at {int(np.sum(slow <= base))}/{len(base)} L",
    )
    assert ok_beta and ok_f


def test_criterion_06_utility_optimal_block_size(capsys):
    res = utilities_vs_K(BASE.replace(link_length=0.1), list(K_RANGE))
    ks = res.axis("K").values
    parts, ok = [], True
    for name in ("U_DE", "U_SKF", "U_NGT"):
        idx = res.annotations[f"argmax_{name}"][0]
        k_star = ks[idx] if idx >= 0 else None
        shape_ok = unimodal(res.metrics[name])
        in_window = k_star is not None and UTILITY_KSTAR_WINDOW[0] <= k_star <= UTILITY_KSTAR_WINDOW[1]
        ok &= shape_ok and in_window
        parts.append(f"{name} K*={k_star} {'unimodal' if shape_ok else 'not unimodal'}")
    report(capsys, 6, ok, ", ".join(parts) + " (window [4, 10])")
    assert ok


@pytest.fixture(scope="module")
def baseline_frontier():
    start = time.perf_counter()
    res = frontier_vs_beta(BASE, DEFAULT_BETA_AXIS, K_RANGE)
    return res, time.perf_counter() - start


def test_criterion_07_frontier_structure(capsys, baseline_frontier):
    res, elapsed = baseline_frontier
    window = memory_dominance_window(res)
    ok_a = window_ok(window, FRONTIER_WINDOW, FRONTIER_WINDOW_TOL)
    max_mem = float(np.nanmax(res.metrics["mem_fidelity"]))
    max_egs = float(np.nanmax(res.metrics["egs_fidelity"]))
    ok_b = max_mem < max_egs
    betas = np.array(res.axis("beta").values)
    delta = res.metrics["delta_U_NGT"]
    low, high = delta[betas <= 0.02 + 1e-12], delta[betas >= 0.12 - 1e-12]
    ok_c = bool(low.size and high.size and np.all(low > 0) and np.all(high < 0))
    ok = ok_a and ok_b and ok_c and elapsed < 120.0
    report(
        capsys,
        7,
        ok,
        f"(a) window {fmt_window(window)} vs [0.73, 0.90]+-0.05 {'ok' if ok_a else 'off'}; "
        f"(b) max F mem {max_mem:.4f} < EGS {max_egs:.4f} {'ok' if ok_b else 'off'}; "
        f"(c) dU>0 for beta<=0.02, <0 for beta>=0.12 {'ok' if ok_c else 'off'}; {elapsed:.1f} s (limit 120 s)",
    )
    assert ok


def test_criterion_08_sensitivity_signs(capsys):
    scenarios = [
        Scenario("baseline", {}),
        Scenario("f_1GHz", {"pulse_rate": 1e9}),
        Scenario("f_10kHz", {"pulse_rate": 1e4}),
        Scenario("L_0.1km", {"link_length": 0.1}),
        Scenario("L_0.01km", {"link_length": 0.01}),
    ]
    res = dominance_sweep(BASE, DEFAULT_BETA_AXIS, scenarios, K_RANGE)
    delta = res.metrics["delta_U_NGT"]
    fast = delta[:, 1]
    ok_fast = bool(np.all(fast < 0))
    ok_slow = bool(np.all(delta[:, 2] > delta[:, 0]))
    windows = res.metadata["memory_window"]
    ok_windows = all(window_ok(windows[name], SENSITIVITY_WINDOW, SENSITIVITY_WINDOW_TOL) for name in ("L_0.1km", "L_0.01km"))
    positive = [f"{b:g}" for b, d in zip(DEFAULT_BETA_AXIS, fast) if not d < 0]
    ok = ok_fast and ok_slow and ok_windows
    report(
        capsys,
        8,
        ok,
        f"1 GHz dU<0 at all beta {'ok' if ok_fast else 'off (not negative at beta=' + ','.join(positive) + ')'}; "
        f"10 kHz above baseline {'ok' if ok_slow else 'off'}; "
        f"windows L=0.1 {fmt_window(windows['L_0.1km'])}, L=0.01 {fmt_window(windows['L_0.01km'])} "
        f"vs [0.66, 0.93]+-0.05 {'ok' if ok_windows else 'off'}",
    )
    assert ok


def test_criterion_09_cli_determinism(capsys, tmp_path):
    # Monte Carlo everywhere so worker count is actually exercised; heavy grids are trimmed
    light = {"estimator": "mc", "n_samples": 20_000}
    heavy = {
        **light,
        "n_samples": 4_000,
        "beta_axis": [0.01, 0.05, 0.1, 0.15],
        "K_range": [1, 40],
        "scenarios": [{"name": "baseline", "overrides": {}}, {"name": "f_1GHz", "overrides": {"pulse_rate": 1e9}}],
    }
    differing = []
    for command in COMMANDS:
        cfg = heavy if command in ("frontier", "dominance", "sweep-kl") else light
        for fmt in ("csv", "json"):
            blobs = []
            for run, workers in enumerate((1, 2, 8, 8)):
                cfg_path = tmp_path / f"{command}-{run}.json"
                cfg_path.write_text(json.dumps({**cfg, "workers": workers}))
                out = tmp_path / f"{command}-{run}.{fmt}"
                status = main([command, str(cfg_path), "--out", str(out), "--format", fmt])
                capsys.readouterr()
                blobs.append(out.read_bytes() if status == 0 else None)
            if None in blobs or len(set(blobs)) != 1:
                differing.append(f"{command}/{fmt}")
    ok = not differing
    report(capsys, 9, ok, f"{len(COMMANDS)} commands x 2 formats x workers 1,2,8,8: " + ("byte-identical" if ok else "differ: " + ", ".join(differing)))
    assert ok


def test_criterion_10_property_suite(capsys):
    files = sorted(str(p) for p in TESTS_DIR.glob("test_*.py") if p.name != "test_acceptance.py")
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *files],
        capture_output=True,
        text=True,
        cwd=TESTS_DIR.parent,
    )
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()[-200:]
    ok = proc.returncode == 0
    report(capsys, 10, ok, f"module property suites: {tail}")
    assert ok
