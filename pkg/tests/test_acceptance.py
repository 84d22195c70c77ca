"""Acceptance suite: one verdict line per criterion, tolerances pinned.

Run ``pytest tests/test_acceptance.py -v -s`` to see the lines as they are
produced; they are also repeated in the terminal summary.
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from boson_hamlearn.hamiltonian import chain_hamiltonian, coherent_expectation_multi, random_single_mode, single_mode
from boson_hamlearn.lindblad import standard_dissipation
from boson_hamlearn.protocol import (
    LearnConfig,
    ProjectedBackend,
    budget_report,
    color_rounds,
    decoupling_ladder,
    estimation_sweep,
    learn_multi_mode,
    learn_single_mode,
    make_backend,
)
from boson_hamlearn.recovery import Design, FrequencyTable, recover_coefficients
from boson_hamlearn.verify import (
    adiabatic_ladder,
    cat_convergence,
    effective_ham_decay,
    envelope_ratio_check,
    pseudoinverse_norm,
    spectral_gap,
)

TESTS = Path(__file__).resolve().parent

QUADRATIC = single_mode({(1, 1): 0.5, (0, 1): 0.3 - 0.2j, (1, 0): 0.3 + 0.2j, (0, 2): 0.25 + 0.15j,
                         (2, 0): 0.25 - 0.15j})


def test_criterion_1_heisenberg_estimation(verdict):
    start = time.perf_counter()
    rows = estimation_sweep([0.1, 0.03, 0.01], math.pi, trials=500, seed=0, q=1 / 3)
    summary = budget_report(rows, math.pi)
    elapsed = time.perf_counter() - start
    rmse_ok = all(r["rmse"] <= r["eps"] for r in rows)
    ok = rmse_ok and summary.time_eps_spread < 3 and summary.experiments_log_spread < 3 and elapsed < 60
    detail = (", ".join(f"eps={r['eps']}: rmse={r['rmse']:.2e}" for r in rows)
              + f"; T*eps spread {summary.time_eps_spread:.2f}; Gamma/log^2 spread {summary.experiments_log_spread:.2f}"
              + f"; {elapsed:.1f} s")
    assert verdict(1, ok, detail)


def test_criterion_2_exact_recovery(verdict):
    worst = 0.0
    for seed in range(5):
        H = random_single_mode(np.random.default_rng(seed), 3)
        assert max(abs(h) for h in H.monomials().values()) <= 1.0
        design = Design(((2.0, 10.0),), (3,), 3)
        table = FrequencyTable(design, eps1=0.0)
        for amps, phases in design.points():
            table.set(amps, phases, coherent_expectation_multi(H, [a * np.exp(1j * p) for a, p in zip(amps, phases)]))
        rec = recover_coefficients(table).coefficients
        truth = H.monomials()
        worst = max(worst, max(abs(rec.get(k, 0) - truth.get(k, 0)) for k in set(rec) | set(truth)))
    assert verdict(2, worst <= 1e-8, f"max coefficient error {worst:.2e} over 5 random d=3 Hamiltonians")


@pytest.mark.slow
def test_criterion_3_simulated_single_mode(verdict):
    start = time.perf_counter()
    cfg = LearnConfig(eps=0.1, delta=0.1, d=2, a_minus=2.5, a_plus=4.0, interval_policy="none",
                      backend="simulated-dissipation", gamma_policy="calibrate", dims=(40,))
    backend = make_backend(QUADRATIC, cfg)
    errors = [learn_single_mode(backend, cfg, np.random.default_rng(seed)).max_error(QUADRATIC)
              for seed in range(20)]
    elapsed = time.perf_counter() - start
    good = sum(e <= 0.1 for e in errors)
    ok = good >= 18 and elapsed <= 1800
    detail = (f"{good}/20 runs within 0.1 (max error {max(errors):.3f}), calibrated gamma {backend.gamma:.4g}, "
              f"{elapsed:.0f} s")
    assert verdict(3, ok, detail)


def test_criterion_4_adiabatic_law(verdict):
    ladder = adiabatic_ladder(QUADRATIC, [2.0], 1.0, [50, 100, 200, 400], [30])
    ok = -1.25 <= ladder.slope <= -0.75
    detail = f"slope {ladder.slope:.3f}, distances " + ", ".join(f"{d:.2e}" for d in ladder.distances)
    assert verdict(4, ok, detail)


def test_criterion_5_cat_convergence(verdict):
    parts, ok = [], True
    for r, alpha in ((1, 1.5), (1, 2.0), (2, 1.5), (2, 2.0)):
        res = cat_convergence(r, alpha, np.linspace(0, 5, 26), dim=30)
        rate_ok = res.fitted_rate >= 0.4 * math.factorial(r)
        ok &= res.weighted_ok and rate_ok
        parts.append(f"r={r} alpha={alpha}: weighted {'ok' if res.weighted_ok else 'violated'}, "
                     f"rate {res.fitted_rate:.3f}")
    assert verdict(5, ok, "; ".join(parts))


def test_criterion_6_effective_hamiltonian(verdict):
    checks = envelope_ratio_check(effective_ham_decay(QUADRATIC, [2.0, 3.0, 4.0]))
    ok = all(c["ok"] for c in checks)
    detail = ", ".join(f"{c['from']:g}->{c['to']:g}: relative {c['relative']:.3f}" for c in checks)
    assert verdict(6, ok, detail)


def test_criterion_7_spectral_machinery(verdict):
    gap = spectral_gap(standard_dissipation(0, 2, 2.0), 50)
    ok = gap.value >= 0.95 and gap.valid
    parts = [f"eta {gap.value:.3f}"]
    for k in (1, 2, 3):
        for alpha in (1.5, 2.0):
            res = pseudoinverse_norm(k, alpha, 60)
            ok &= res.valid and res.value >= 0.95 * math.sqrt(math.factorial(k))
            parts.append(f"sigma_min(k={k}, alpha={alpha}) {res.value:.3f} vs {0.95 * res.reference:.3f}")
    assert verdict(7, ok, "; ".join(parts))


PROPERTY_SUITES = [
    "tests/test_lindblad.py::test_trace_and_hermiticity_preserved",
    "tests/test_lindblad.py::test_matches_superoperator_exponential",
    "tests/test_recovery.py::test_interpolation_round_trip_property",
    "tests/test_recovery.py::test_fourier_round_trip",
    "tests/test_recovery.py::test_multivariate_fourier_round_trip",
    "tests/test_recovery.py::test_markov_bound_random_polynomials",
    "tests/test_recovery.py::test_chebyshev_sum_bound_random_polynomials",
    "tests/test_hamiltonian.py::test_coloring_on_random_low_intersection",
    "tests/test_experiment.py::test_ledger_merge_conserves",
    "tests/test_experiment.py::test_ledger_parallel_round",
]


def test_criterion_8_property_suites(verdict):
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *PROPERTY_SUITES],
                          cwd=TESTS.parent, capture_output=True, text=True)
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()[-200:]
    assert verdict(8, proc.returncode == 0, tail)


@pytest.mark.slow
def test_criterion_9_multi_mode(verdict):
    H = chain_hamiltonian(np.random.default_rng(0), 4, 1)
    rounds = color_rounds(H.supports)
    slopes, statics = [], []
    for rnd in rounds:
        res = decoupling_ladder(H, rnd, [50, 100, 200, 400], 1.0, np.random.default_rng(1))
        slopes.append(res.slope)
        statics.append(res.static_error)
    structural = all(-1.25 <= s <= -0.75 for s in slopes) and max(statics) <= 1e-12
    cfg = LearnConfig(eps=0.15, d=2, k=2, mode_degree=1, a_minus=3.0, a_plus=6.0, interval_policy="lemma",
                      backend="ideal-projected")
    errors = []
    for seed in range(10):
        chain = chain_hamiltonian(np.random.default_rng([seed, 9]), 4, 1)
        rep = learn_multi_mode(ProjectedBackend(chain, cfg.shots), chain.supports, cfg, np.random.default_rng(seed))
        errors.append(rep.max_error(chain))
    good = sum(e <= 0.15 for e in errors)
    ok = structural and len(rounds) == 3 and good >= 8
    detail = (f"{len(rounds)} rounds, decoupling slopes " + ", ".join(f"{s:.3f}" for s in slopes)
              + f", static error {max(statics):.1e}; learning {good}/10 within 0.15 (max {max(errors):.3f})")
    assert verdict(9, ok, detail)
