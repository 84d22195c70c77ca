"""Numerical checks of the adiabatic, cat-code, spectral and effective-Hamiltonian machinery."""

import math

import numpy as np
import pytest

from boson_hamlearn.fock import FockSpace
from boson_hamlearn.hamiltonian import BosonicHamiltonian, Term, single_mode
from boson_hamlearn.lindblad import Jump, kernel_projector, standard_dissipation
from boson_hamlearn.verify import (
    EDGE_WEIGHT_LIMIT,
    CalibrationError,
    DecayRow,
    SpectralResult,
    adiabatic_gap,
    adiabatic_ladder,
    calibrate_gamma,
    cat_convergence,
    commutator_bound,
    effective_ham_decay,
    envelope_ratio_check,
    few_mode_decay,
    learning_dissipation,
    loglog_slope,
    pseudoinverse_norm,
    spectral_gap,
    x_rotation_check,
)

QUADRATIC = single_mode({(1, 1): 0.5, (0, 1): 0.3 - 0.2j, (1, 0): 0.3 + 0.2j, (0, 2): 0.25 + 0.15j,
                         (2, 0): 0.25 - 0.15j})


# ---------------------------------------------------------------------------
# adiabatic convergence


def test_zero_hamiltonian_has_no_gap():
    H = single_mode({}, d=2)
    space = FockSpace((30,))
    gap = adiabatic_gap(H, learning_dissipation([2.0], 2, 100.0), space, 1.0, alphas=[2.0])
    assert gap <= 1e-8


def test_adiabatic_ladder_monotone_with_unit_slope():
    ladder = adiabatic_ladder(QUADRATIC, [2.0], 1.0, [50, 100, 200], [30])
    assert ladder.monotone
    assert all(a > b for a, b in zip(ladder.distances, ladder.distances[1:]))
    assert -1.25 <= ladder.slope <= -0.75


def test_spectral_and_runge_kutta_gaps_agree():
    space = FockSpace((24,))
    diss = learning_dissipation([2.0], 2, 50.0)
    spectral = adiabatic_gap(QUADRATIC, diss, space, 0.5, alphas=[2.0], method="spectral")
    expm = adiabatic_gap(QUADRATIC, diss, space, 0.5, alphas=[2.0], method="expm")
    assert spectral == pytest.approx(expm, abs=1e-7)


def test_loglog_slope_of_power_law():
    x = [1.0, 2.0, 4.0, 8.0]
    assert loglog_slope(x, [3.0 / v for v in x]) == pytest.approx(-1.0)
    assert loglog_slope(x, [v**2 for v in x]) == pytest.approx(2.0)


# ---------------------------------------------------------------------------
# gamma calibration


def test_calibration_reaches_target():
    res = calibrate_gamma(QUADRATIC, [2.0], 5.0, target=0.05, dims=30, gamma_hi=1e4)
    assert res.gamma <= 1e4
    assert res.distance <= 0.05
    assert res.distance >= 0.05 * 0.8


def test_calibration_rejects_nonpositive_target():
    with pytest.raises(CalibrationError):
        calibrate_gamma(QUADRATIC, [2.0], 5.0, target=0.0, dims=20)


def test_calibration_rejects_unreachable_target():
    with pytest.raises(CalibrationError):
        calibrate_gamma(QUADRATIC, [2.0], 5.0, target=1e-6, dims=20, gamma_hi=100.0)


@pytest.mark.slow
def test_calibrated_gamma_scales_with_time():
    short = calibrate_gamma(QUADRATIC, [2.0], 5.0, target=0.05, dims=30, gamma_hi=1e4)
    long = calibrate_gamma(QUADRATIC, [2.0], 10.0, target=0.05, dims=30, gamma_hi=1e4)
    assert 1.6 <= long.gamma / short.gamma <= 2.5


# ---------------------------------------------------------------------------
# cat-code convergence


def test_cat_r1_weighted_decay_bound():
    res = cat_convergence(1, 1.5, np.linspace(0, 5, 26), dim=30)
    assert res.weighted_ok
    assert res.distance_to_limit[-1] < res.distance_to_limit[0]


def test_code_space_state_is_stationary():
    dim = 30
    jump = Jump("cat", 0, 1, 1.5)
    P = kernel_projector((jump,), FockSpace((dim,))).matrix
    v = P[:, 0] / np.linalg.norm(P[:, 0])
    rho0 = np.outer(v, v.conj())
    res = cat_convergence(1, 1.5, np.linspace(0, 2, 5), dim=dim, rho0=rho0)
    assert max(res.distance_to_limit) <= 1e-8
    assert max(res.distance_to_code) <= 1e-8


def test_cat_r2_rate():
    res = cat_convergence(2, 2.0, np.linspace(0, 5, 26), dim=30)
    assert res.weighted_ok
    assert res.fitted_rate >= 0.8


# ---------------------------------------------------------------------------
# X rotation


def test_x_rotation_identity_at_zero():
    res = x_rotation_check(2.0, [0.0, 0.1, 0.2], 400.0, dim=30)
    assert res.cat_plus_population[0] == pytest.approx(1.0, abs=1e-10)
    assert res.fidelities[0] == pytest.approx(1.0, abs=1e-10)


def test_x_rotation_frequency():
    times = np.linspace(0, 3, 61)
    res = x_rotation_check(2.0, times, 400.0, dim=30)
    assert res.relative_frequency_error <= 0.02
    assert min(res.fidelities) >= 0.95


def test_x_rotation_infidelity_decreases_with_gamma():
    times = np.linspace(0, 1, 11)
    worst = [1 - min(x_rotation_check(2.0, times, g, dim=30).fidelities) for g in (50.0, 200.0, 800.0)]
    assert worst[0] > worst[1] > worst[2]


# ---------------------------------------------------------------------------
# spectral gap, pseudoinverse, commutator


def test_photon_loss_gap_is_one():
    res = spectral_gap((Jump("photon_loss", 0, 1),), 30)
    assert res.value == pytest.approx(1.0, abs=1e-12)
    assert res.valid


def test_standard_set_gap():
    res = spectral_gap(standard_dissipation(0, 2, 2.0), 50)
    assert res.value >= 0.95
    assert res.valid


def test_two_photon_cat_gap():
    res = spectral_gap((Jump("cat", 0, 2, 2.0),), 50)
    assert res.value >= 0.95 * 2
    assert res.valid


def test_pseudoinverse_trivial_case():
    res = pseudoinverse_norm(1, 0.0, 30)
    assert res.value == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_pseudoinverse_bound(k):
    res = pseudoinverse_norm(k, 1.5, 60)
    assert res.valid
    assert res.value >= 0.95 * math.sqrt(math.factorial(k))
    assert res.reference == pytest.approx(math.sqrt(math.factorial(k)))


@pytest.mark.parametrize("k", [1, 2, 3])
def test_commutator_bound(k):
    res = commutator_bound(k, 40)
    assert res.value == pytest.approx(math.factorial(k), abs=1e-9)
    assert res.valid


def test_edge_weight_flag():
    assert SpectralResult(1.0, 1.0, EDGE_WEIGHT_LIMIT / 2, 10).valid
    assert not SpectralResult(1.0, 1.0, EDGE_WEIGHT_LIMIT * 2, 10).valid


# ---------------------------------------------------------------------------
# effective-Hamiltonian decay


def test_effective_hamiltonian_tracks_envelope():
    rows = effective_ham_decay(QUADRATIC, [2.0, 3.0, 4.0])
    assert all(r.error > 0 for r in rows)
    assert rows[0].error > rows[-1].error
    assert all(c["ok"] for c in envelope_ratio_check(rows))


def test_zero_hamiltonian_has_zero_error():
    rows = effective_ham_decay(single_mode({}, d=2), [2.0, 3.0])
    assert all(r.error == 0.0 for r in rows)
    assert all(c["ok"] for c in envelope_ratio_check(rows))


def test_envelope_ratio_check_flags_mismatch():
    rows = [DecayRow(2.0, 1.0, 1.0), DecayRow(3.0, 1.0, 0.1)]
    (check,) = envelope_ratio_check(rows)
    assert check["relative"] == pytest.approx(10.0)
    assert not check["ok"]


def test_few_mode_decay_below_envelope():
    coeffs = {((1, 0), (0, 1)): 0.4, ((0, 1), (1, 0)): 0.4, ((1, 1), (1, 1)): 0.3}
    H = BosonicHamiltonian(2, (Term((0, 1), coeffs),), 4, 2)
    out = few_mode_decay(H, [(2.0, 2.0), (3.0, 3.0)])
    assert all(row["ratio"] <= 1.0 for row in out)
    assert out[1]["error"] < out[0]["error"]
