import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from boson_hamlearn.fock import FockSpace, annihilation, coherent_ket, coherent_state
from boson_hamlearn.hamiltonian import BosonicHamiltonian, Term, random_hermitian_coeffs, all_keys, to_operator
from boson_hamlearn.lindblad import (
    DissipationSpec,
    Generator,
    IntegrationStats,
    Jump,
    Propagator,
    StiffnessError,
    decoupling_dissipation,
    evolve,
    jump_matrix,
    kernel_projector,
    r_for_degree,
    standard_dissipation,
    trace_distance,
    unvec,
    vec,
)


def random_density(rng, n, rank=None):
    rank = rank or n
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_generator(rng, dims, gamma):
    space = FockSpace(dims)
    n = space.total_dim
    H = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    H = 0.5 * (H + H.conj().T)
    jumps = []
    for q in range(len(dims)):
        jumps.append(Jump("modified_photon_loss", q, 1, complex(rng.normal(), rng.normal())))
    return Generator.build(space, H, DissipationSpec(tuple(jumps), gamma))


# -- jump sets ----------------------------------------------------------------


@pytest.mark.parametrize("d,expected_r", [(2, 0), (3, 1), (4, 1), (6, 2)])
def test_r_for_degree(d, expected_r):
    assert r_for_degree(d) == expected_r


@pytest.mark.parametrize("d", [2, 4])
def test_standard_dissipation_collapses(d):
    jumps = standard_dissipation(0, r_for_degree(d), 2.0)
    assert len(jumps) == 1
    assert jumps[0].kind == "modified_photon_loss" and jumps[0].r == 1


def test_standard_dissipation_two_jumps():
    jumps = standard_dissipation(0, r_for_degree(6), 2.0)
    assert [j.r for j in jumps] == [1, 2]


def test_negative_power_rejected():
    with pytest.raises(ValueError):
        standard_dissipation(0, -1, 1.0)
    with pytest.raises(ValueError):
        Jump("cat", 0, 0, 1.0)


def test_decoupling_jumps():
    assert [j.r for j in decoupling_dissipation(1, 2)] == [1, 3]
    assert [j.r for j in decoupling_dissipation(1, 0)] == [1]


@pytest.mark.parametrize("r", [0, 2])
def test_decoupling_kernel_is_vacuum(r):
    space = FockSpace((5,))
    P = kernel_projector(decoupling_dissipation(0, r), space).matrix
    expected = np.zeros((5, 5))
    expected[0, 0] = 1
    np.testing.assert_allclose(P, expected, atol=1e-12)


def test_vacuum_pinning_removes_terms():
    space = FockSpace((4, 4))
    coeffs = random_hermitian_coeffs(np.random.default_rng(0), all_keys(2, 2))
    H = to_operator(BosonicHamiltonian(2, (Term((0, 1), coeffs),), 2, 2), space).matrix
    P = kernel_projector(decoupling_dissipation(0, 1), space).matrix
    H_pinned = P @ H @ P
    # only monomials that leave mode 0 untouched survive
    H1 = BosonicHamiltonian(2, (Term((0, 1), {k: v for k, v in coeffs.items() if k[0][0] == 0 and k[1][0] == 0}),), 2, 2)
    np.testing.assert_allclose(H_pinned, P @ to_operator(H1, space).matrix @ P, atol=1e-12)


# -- kernel projectors --------------------------------------------------------


@pytest.mark.parametrize("truncation", ["compress", "kernel"])
def test_modified_loss_kernel(truncation):
    space = FockSpace((40,))
    jump = Jump("modified_photon_loss", 0, 1, 2.0, truncation)
    P = kernel_projector([jump], space).matrix
    assert np.allclose(P @ P, P, atol=1e-10) and np.allclose(P, P.conj().T, atol=1e-12)
    assert round(np.trace(P).real) == 2
    vac, coh = space.basis_state([0]), coherent_ket(2.0, 40)
    assert np.linalg.norm(P @ vac - vac) < 1e-8
    assert np.linalg.norm(P @ coh - coh) < 1e-8


def test_cat_kernel():
    space = FockSpace((40,))
    P = kernel_projector([Jump("cat", 0, 2, 2.0)], space).matrix
    assert round(np.trace(P).real) == 2
    for a in (2.0, -2.0):
        v = coherent_ket(a, 40)
        assert np.linalg.norm(P @ v - v) < 1e-8


def test_photon_loss_kernel():
    P = kernel_projector([Jump("photon_loss", 0, 1)], FockSpace((6,))).matrix
    assert P[0, 0] == pytest.approx(1) and np.trace(P).real == pytest.approx(1)


@pytest.mark.parametrize("jump", [Jump("modified_photon_loss", 0, 1, 1.5), Jump("cat", 0, 2, 1.5), Jump("photon_loss", 0, 2)])
def test_numerical_kernel_agrees(jump):
    space = FockSpace((30,))
    # the analytic kernel is only an approximate null space of the truncated matrix
    jump_k = Jump(jump.kind, jump.mode, jump.r, jump.alpha, "kernel")
    analytic = kernel_projector([jump_k], space).matrix
    numerical = kernel_projector([jump_k], space, method="numerical").matrix
    np.testing.assert_allclose(analytic, numerical, atol=1e-7)


def test_custom_jump_uses_numerics():
    b = annihilation(FockSpace((5,)), 0).matrix
    jump = Jump("custom", 0, matrix=b @ b)
    P = kernel_projector([jump], FockSpace((5,))).matrix
    np.testing.assert_allclose(P, np.diag([1, 1, 0, 0, 0]), atol=1e-10)


# -- evolution ----------------------------------------------------------------


def test_closed_diagonal_evolution():
    rng = np.random.default_rng(1)
    energies = rng.normal(size=6)
    space = FockSpace((6,))
    gen = Generator.build(space, np.diag(energies))
    rho0 = random_density(rng, 6)
    t = 2.3
    out = evolve(gen, rho0, t, tol=1e-10)
    expected = rho0 * np.exp(-1j * np.subtract.outer(energies, energies) * t)
    np.testing.assert_allclose(out, expected, atol=1e-8)


def test_cat_weighted_bound_r1():
    dim, alpha, gamma = 30, 1.0, 1.0
    space = FockSpace((dim,))
    spec = DissipationSpec((Jump("cat", 0, 1, alpha),), gamma)
    gen = Generator.build(space, None, spec)
    L = jump_matrix(spec.jumps[0], space)
    rho0 = np.outer(space.basis_state([3]), space.basis_state([3]))
    w0 = np.trace(L @ rho0 @ L.conj().T).real
    for t in (0.25, 0.5, 1.0, 2.0, 4.0):
        rho = evolve(gen, rho0, t, tol=1e-11)
        wt = np.trace(L @ rho @ L.conj().T).real
        assert wt <= math.exp(-gamma * t) * w0 * (1 + 1e-6)


@pytest.mark.parametrize("seed", range(3))
def test_matches_superoperator_exponential(seed):
    rng = np.random.default_rng(seed)
    gen = random_generator(rng, (2, 4), gamma=0.7)
    rho0 = random_density(rng, 8)
    t = 1.1
    reference = unvec(scipy.linalg.expm(t * gen.superoperator()) @ vec(rho0), 8)
    assert trace_distance(evolve(gen, rho0, t, tol=1e-10, method="rk"), reference) <= 1e-7
    assert trace_distance(evolve(gen, rho0, t, method="spectral"), reference) <= 1e-7


def test_superoperator_matches_apply():
    rng = np.random.default_rng(2)
    gen = random_generator(rng, (3, 2), gamma=1.3)
    X = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    np.testing.assert_allclose(gen.superoperator() @ vec(X), vec(gen.apply(X)), atol=1e-12)


def test_propagator_many_times():
    rng = np.random.default_rng(3)
    gen = random_generator(rng, (5,), gamma=50.0)
    rho0 = random_density(rng, 5)
    prop = Propagator(gen, t_min=1.0)
    S = gen.superoperator()
    for t, out in zip((0.5, 1.0, 3.0), prop.apply(rho0, [0.5, 1.0, 3.0])):
        np.testing.assert_allclose(out, unvec(scipy.linalg.expm(t * S) @ vec(rho0), 5), atol=1e-9)


def test_stiffness_error():
    rng = np.random.default_rng(4)
    gen = random_generator(rng, (6,), gamma=1e5)
    with pytest.raises(StiffnessError):
        evolve(gen, random_density(rng, 6), 10.0, method="rk", max_steps=50)


def test_negative_time_rejected():
    gen = Generator.build(FockSpace((2,)), None)
    with pytest.raises(ValueError):
        evolve(gen, np.eye(2) / 2, -1.0)


def test_stats_are_recorded():
    rng = np.random.default_rng(5)
    gen = random_generator(rng, (4,), gamma=1.0)
    stats = IntegrationStats()
    evolve(gen, random_density(rng, 4), 1.0, method="rk", stats=stats)
    assert stats.accepted > 0 and stats.min_step > 0


def test_code_space_is_invariant():
    space = FockSpace((20,))
    jump = Jump("cat", 0, 2, 1.5, "kernel")
    P = kernel_projector([jump], space).matrix
    gen = Generator.build(space, None, DissipationSpec((jump,), 1.0))
    rng = np.random.default_rng(6)
    rho0 = P @ random_density(rng, 20) @ P
    rho0 /= np.trace(rho0)
    out = evolve(gen, rho0, 3.0, tol=1e-10)
    assert np.linalg.norm(out - P @ out @ P) <= 1e-7


# -- trace distance -----------------------------------------------------------


def test_trace_distance_examples():
    space = FockSpace((40,))
    vac = space.basis_state([0])
    coh = coherent_state(space, 1.0).ket
    assert trace_distance(np.outer(vac, vac), np.outer(vac, vac)) == pytest.approx(0, abs=1e-15)
    one = space.basis_state([1])
    assert trace_distance(np.outer(vac, vac), np.outer(one, one)) == pytest.approx(1)
    d = trace_distance(np.outer(vac, vac), np.outer(coh, coh.conj()))
    assert d == pytest.approx(math.sqrt(1 - math.exp(-1)), abs=1e-9)
    assert abs(d - 0.7951) < 1e-4


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), gamma=st.floats(0.0, 5.0), t=st.floats(0.0, 2.0))
def test_trace_and_hermiticity_preserved(seed, gamma, t):
    tol = 1e-9
    rng = np.random.default_rng(seed)
    gen = random_generator(rng, (2, 3), gamma)
    rho0 = random_density(rng, 6, rank=2)
    out = evolve(gen, rho0, t, tol=tol)
    assert abs(np.trace(out) - 1) <= 10 * tol
    assert np.max(np.abs(out - out.conj().T)) <= 10 * tol
    assert np.linalg.eigvalsh(0.5 * (out + out.conj().T)).min() >= -100 * tol


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_trace_distance_symmetric(seed):
    rng = np.random.default_rng(seed)
    a, b = random_density(rng, 4), random_density(rng, 4)
    assert trace_distance(a, b) == pytest.approx(trace_distance(b, a))
    assert 0 <= trace_distance(a, b) <= 1 + 1e-12
