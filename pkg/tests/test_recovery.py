import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from boson_hamlearn.hamiltonian import (
    BosonicHamiltonian,
    ConfigurationError,
    Term,
    all_keys,
    coherent_expectation_multi,
    random_hermitian_coeffs,
    random_single_mode,
)
from boson_hamlearn.recovery import (
    AmplitudeGrid,
    Design,
    FrequencyTable,
    barycentric_eval,
    chebyshev_nodes,
    chebyshev_sum_constant,
    check_interval,
    fourier_forward,
    fourier_invert,
    fourier_invert_multi,
    hermitize_coefficients,
    interpolate_multi,
    interpolate_poly,
    interpolation_constant,
    interpolation_matrix,
    markov_coefficient_bound,
    multivariate_constant,
    multivariate_nodes,
    phase_grid,
    recover_coefficients,
)


def exact_table(H, design, noise=0.0, rng=None):
    table = FrequencyTable(design, eps1=noise)
    for amps, phases in design.points():
        alphas = [a * np.exp(1j * th) for a, th in zip(amps, phases)]
        value = coherent_expectation_multi(H, alphas)
        if noise:
            value += noise * rng.choice([-1.0, 1.0])
        table.set(amps, phases, value)
    return table


def max_error(recovered, H):
    truth = H.monomials()
    keys = set(truth) | set(recovered)
    return max(abs(recovered.get(k, 0) - truth.get(k, 0)) for k in keys)


# -- nodes and grids ----------------------------------------------------------


def test_nodes_example():
    np.testing.assert_allclose(chebyshev_nodes(0, 2, 1), [1 + math.cos(math.pi / 4), 1 + math.cos(3 * math.pi / 4)])
    np.testing.assert_allclose(chebyshev_nodes(0, 2, 1), [1.70711, 0.29289], atol=1e-5)


@pytest.mark.parametrize("d", [0, 1, 2, 5, 8])
def test_nodes_are_chebyshev_roots(d):
    a, b = 1.5, 7.0
    nodes = chebyshev_nodes(a, b, d)
    u = (2 * nodes - a - b) / (b - a)
    np.testing.assert_allclose(np.polynomial.chebyshev.chebval(u, [0] * (d + 1) + [1]), 0, atol=1e-12)
    assert np.all((nodes > a) & (nodes < b))
    np.testing.assert_allclose(nodes + nodes[::-1], a + b)


def test_degenerate_interval():
    with pytest.raises(ConfigurationError):
        chebyshev_nodes(2.0, 2.0, 3)


@pytest.mark.parametrize(
    "a,b,policy,ok",
    [
        (2, 10, "theorem", True),
        (2, 9, "theorem", False),
        (3, 6, "lemma", True),
        (3, 5.5, "lemma", False),
        (0, 1, "lemma", False),
        (3, 6, "none", True),
    ],
)
def test_interval_policies(a, b, policy, ok):
    if ok:
        assert check_interval(a, b, policy) == policy
        AmplitudeGrid(a, b, 2, policy)
    else:
        with pytest.raises(ConfigurationError):
            AmplitudeGrid(a, b, 2, policy)


def test_phase_grid():
    np.testing.assert_allclose(phase_grid(3), [0, math.pi / 4, math.pi / 2, 3 * math.pi / 4])


# -- univariate interpolation -------------------------------------------------


@pytest.mark.parametrize("seed", range(5))
def test_cubic_round_trip(seed):
    rng = np.random.default_rng(seed)
    p = rng.uniform(-1, 1, 4)
    nodes = chebyshev_nodes(2, 10, 3)
    got = interpolate_poly(np.polynomial.polynomial.polyval(nodes, p), 2, 10, 3)
    assert np.max(np.abs(got - p)) <= 1e-10


def test_constant_polynomial():
    np.testing.assert_allclose(interpolate_poly([2.5] * 4, 2, 10, 3), [2.5, 0, 0, 0], atol=1e-12)


def test_wrong_value_count():
    with pytest.raises(ValueError):
        interpolate_poly([1.0, 2.0], 2, 10, 3)


def test_barycentric_agrees_with_monomials():
    rng = np.random.default_rng(1)
    vals = rng.normal(size=5)
    p = interpolate_poly(vals, 1, 6, 4)
    x = np.linspace(0, 7, 31)
    np.testing.assert_allclose(barycentric_eval(vals, 1, 6, x).real, np.polynomial.polynomial.polyval(x, p), atol=1e-9)
    np.testing.assert_allclose(barycentric_eval(vals, 1, 6, chebyshev_nodes(1, 6, 4)).real, vals, atol=1e-12)


def test_worst_case_perturbation_obeys_markov_bound():
    a, b, d, eps = 2.0, 10.0, 3, 1e-3
    M = interpolation_matrix(a, b, d)
    for l in range(d + 1):
        signs = np.sign(M[l])
        worst = abs(M[l] @ (eps * signs))
        assert worst <= markov_coefficient_bound(l, d, a, b, eps)
        explicit = d * (2 * d - 2 and math.prod(range(2 * d - 2, 0, -2))) / math.factorial(l) * (2 / 8) ** l * eps / (1 - 2 * 2 / 8)
        assert markov_coefficient_bound(l, d, a, b, eps) == pytest.approx(explicit)


def test_interpolation_constant_definition():
    a, b, d = 2.0, 10.0, 3
    K = interpolation_constant(a, b, d)
    rows = np.abs(interpolation_matrix(a, b, d)).sum(axis=1)
    for l in range(d + 1):
        assert rows[l] <= K * 2**l / (b - a) ** l * (1 + 1e-12)


@pytest.mark.parametrize("seed", range(1000))
def test_markov_bound_random_polynomials(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 6))
    a = rng.uniform(0, 3)
    b = a + rng.uniform(2 * a + 1e-3, 2 * a + 10)
    eps = 10 ** rng.uniform(-4, 0)
    p = rng.normal(size=d + 1)
    grid = np.linspace(a, b, 4001)
    p *= eps / np.max(np.abs(np.polynomial.polynomial.polyval(grid, p)))
    for n in range(d + 1):
        # the grid maximum may miss the true supremum by a hair
        assert abs(p[n]) <= markov_coefficient_bound(n, d, a, b, eps) * (1 + 1e-6)


@pytest.mark.parametrize("seed", range(1000))
def test_chebyshev_sum_bound_random_polynomials(seed):
    rng = np.random.default_rng(seed + 10_000)
    d = int(rng.integers(0, 9))
    c = rng.normal(size=d + 1)
    roots = chebyshev_nodes(-1, 1, d)
    x = np.linspace(-1, 1, 2001)
    lhs = np.max(np.abs(np.polynomial.chebyshev.chebval(x, c)))
    rhs = chebyshev_sum_constant(d) * np.sum(np.abs(np.polynomial.chebyshev.chebval(roots, c)))
    assert lhs <= rhs * (1 + 1e-12)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31), d=st.integers(0, 6), a=st.floats(0.5, 4.0), extra=st.floats(0.0, 8.0))
def test_interpolation_round_trip_property(seed, d, a, extra):
    # intervals obeying b >= 2a, b - a >= 2, where extrapolation to zero is well conditioned
    rng = np.random.default_rng(seed)
    b = max(2 * a, a + 2) + extra
    p = rng.uniform(-1, 1, d + 1) / np.maximum(1.0, b) ** np.arange(d + 1)
    got = interpolate_poly(np.polynomial.polynomial.polyval(chebyshev_nodes(a, b, d), p), a, b, d)
    assert np.max(np.abs(got - p)) <= 1e-10


# -- Fourier inversion --------------------------------------------------------


def test_fourier_example():
    np.testing.assert_allclose(fourier_invert([2.0, 0.0], 1), [1.0, 1.0], atol=1e-15)
    assert fourier_forward([1, 1], 1, 0.3) == pytest.approx(2 * math.cos(0.3))


def test_fourier_zero():
    assert np.all(fourier_invert(np.zeros(4), 3) == 0)


def test_fourier_wrong_count():
    with pytest.raises(ValueError):
        fourier_invert([1.0, 2.0], 2)


@pytest.mark.parametrize("l", range(7))
def test_fourier_round_trip(l):
    rng = np.random.default_rng(l)
    h = rng.normal(size=l + 1) + 1j * rng.normal(size=l + 1)
    values = [fourier_forward(h, l, th) for th in phase_grid(l)]
    assert np.max(np.abs(fourier_invert(values, l) - h)) <= 1e-12


@pytest.mark.parametrize("l", range(1, 7))
def test_fourier_noise_not_amplified(l):
    from boson_hamlearn.recovery import fourier_matrix

    assert np.max(np.abs(fourier_matrix(l)).sum(axis=1)) <= 1 + 1e-12


@settings(max_examples=40, deadline=None)
@given(l1=st.integers(0, 3), l2=st.integers(0, 3), seed=st.integers(0, 2**31))
def test_multivariate_fourier_round_trip(l1, l2, seed):
    rng = np.random.default_rng(seed)
    h = rng.normal(size=(l1 + 1, l2 + 1)) + 1j * rng.normal(size=(l1 + 1, l2 + 1))
    values = np.empty_like(h)
    for u1, t1 in enumerate(phase_grid(l1)):
        for u2, t2 in enumerate(phase_grid(l2)):
            j1, j2 = np.meshgrid(np.arange(l1 + 1), np.arange(l2 + 1), indexing="ij")
            phase = np.exp(1j * (t1 * (l1 - 2 * j1) + t2 * (l2 - 2 * j2)))
            values[u1, u2] = np.sum(h * phase)
    assert np.max(np.abs(fourier_invert_multi(values, [l1, l2]) - h)) <= 1e-12


# -- multivariate interpolation -----------------------------------------------


def test_bilinear_grid():
    intervals, degrees = [(3, 6), (3, 6)], [1, 1]
    nodes = multivariate_nodes(intervals, degrees)
    assert sum(len(n) for n in nodes) == 4
    grid = np.outer(nodes[0], nodes[1])
    p = interpolate_multi(grid, intervals, degrees)
    expected = np.zeros((2, 2))
    expected[1, 1] = 1.0
    np.testing.assert_allclose(p, expected, atol=1e-12)


def test_multivariate_hypothesis_enforced():
    with pytest.raises(ConfigurationError):
        interpolate_multi(np.zeros((2, 2)), [(3, 4), (3, 6)], [1, 1])


@pytest.mark.parametrize("seed", range(5))
def test_multivariate_perturbation_constant(seed):
    rng = np.random.default_rng(seed)
    intervals, degrees, eps = [(2.5, 6.0), (3.0, 7.0)], [2, 1], 1e-3
    C = multivariate_constant(intervals, degrees)
    nodes = multivariate_nodes(intervals, degrees)
    coeffs = rng.normal(size=(3, 2))
    grid = np.array([[np.polynomial.polynomial.polyval2d(x, y, coeffs) for y in nodes[1]] for x in nodes[0]])
    noisy = grid + eps * rng.choice([-1.0, 1.0], size=grid.shape)
    err = np.max(np.abs(interpolate_multi(noisy, intervals, degrees) - coeffs))
    assert err <= C * eps * (1 + 1e-9)


# -- design and end-to-end recovery -------------------------------------------


def test_single_mode_design_size():
    design = Design(((2.0, 10.0),), (2,), 2)
    assert len(design.phase_vectors()) == 4
    assert len(design.points()) == 12


def test_two_mode_design_size():
    design = Design(((3.0, 6.0), (3.0, 6.0)), (1, 1), 2, policy="lemma")
    assert design.degree_vectors() == [(0, 1), (1, 0), (1, 1)]
    assert len(design.points()) == 16


@pytest.mark.parametrize("seed", range(5))
def test_exact_single_mode_recovery(seed):
    H = random_single_mode(np.random.default_rng(seed), 3)
    design = Design(((2.0, 10.0),), (3,), 3)
    rec = recover_coefficients(exact_table(H, design))
    assert max_error(rec.coefficients, H) <= 1e-8


def test_zero_hamiltonian_recovers_zero():
    H = BosonicHamiltonian(1, (), 2, 1)
    design = Design(((2.0, 10.0),), (2,), 2)
    rec = recover_coefficients(exact_table(H, design))
    assert max(abs(v) for v in rec.coefficients.values()) <= 1e-12


def test_exact_two_mode_recovery():
    rng = np.random.default_rng(8)
    H = BosonicHamiltonian(2, (Term((0, 1), random_hermitian_coeffs(rng, all_keys(2, 2, [1, 1]))),), 2, 2)
    design = Design(((3.0, 6.0), (3.0, 6.0)), (1, 1), 2, policy="lemma")
    rec = recover_coefficients(exact_table(H, design))
    assert max_error(rec.coefficients, H) <= 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_noisy_recovery_within_error_bars(seed):
    rng = np.random.default_rng(seed)
    H = random_single_mode(rng, 3)
    design = Design(((2.0, 10.0),), (3,), 3)
    eps1 = 1e-4
    rec = recover_coefficients(exact_table(H, design, eps1, rng), hermitize=False)
    truth = H.monomials()
    for key, val in rec.coefficients.items():
        assert abs(val - truth.get(key, 0)) <= rec.error_bars[key] * (1 + 1e-9)


def test_missing_entries_rejected():
    design = Design(((2.0, 10.0),), (1,), 1)
    with pytest.raises(ConfigurationError):
        recover_coefficients(FrequencyTable(design))


def test_table_csv(tmp_path):
    H = random_single_mode(np.random.default_rng(0), 1)
    design = Design(((2.0, 10.0),), (1,), 1)
    table = exact_table(H, design)
    table.write_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "A0,theta0,estimate,eps1,ledger_share"
    assert len(lines) == 1 + len(design.points())


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_hermitized_output(seed):
    rng = np.random.default_rng(seed)
    keys = all_keys(1, 3)
    raw = {k: complex(rng.normal(), rng.normal()) for k in keys}
    out = hermitize_coefficients(raw)
    for (j, jp), h in out.items():
        assert out[(jp, j)] == np.conj(h)
