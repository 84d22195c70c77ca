"""Desk-scale numerical checks of the dissipative learning machinery.

Each check returns a small result dataclass carrying the measured quantity,
the envelope it is compared against and, for spectral checks, the weight the
extremal vector places on the top 20% of Fock levels (a truncation-artifact
flag).  :func:`calibrate_gamma` reuses :func:`adiabatic_gap` to choose the
dissipation strength for learning runs.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from .fock import FockSpace, annihilation_matrix, coherent_ket
from .hamiltonian import BosonicHamiltonian, projected_hamiltonian, to_operator
from .lindblad import (
    DissipationSpec,
    Generator,
    Jump,
    Propagator,
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

EDGE_FRACTION = 0.2
EDGE_WEIGHT_LIMIT = 0.01
DEFAULT_SLACK = 1.5


class CalibrationError(RuntimeError):
    """The requested adiabatic-gap target is out of reach."""


def _edge_weight(vecs: np.ndarray, dim: int, fraction: float = EDGE_FRACTION) -> float:
    """Largest weight any column places on the top ``fraction`` of levels (single-mode vectors)."""
    cut = dim - max(1, int(math.ceil(fraction * dim)))
    vecs = np.atleast_2d(vecs.T).T
    return float(np.max(np.sum(np.abs(vecs[cut:, :]) ** 2, axis=0) / np.sum(np.abs(vecs) ** 2, axis=0)))


# ---------------------------------------------------------------------------
# adiabatic convergence


def learning_dissipation(alphas: Sequence[complex], d: int, gamma: float, truncation: str = "kernel",
                         r: int | None = None) -> DissipationSpec:
    """Stabilizing jumps on active modes and vacuum pinning on modes with zero amplitude."""
    r = r_for_degree(d) if r is None else r
    jumps = []
    for q, a in enumerate(alphas):
        if a == 0:
            jumps.extend(decoupling_dissipation(q, r))
        else:
            jumps.extend(standard_dissipation(q, r, a, truncation))
    return DissipationSpec(tuple(jumps), gamma)


def superposition_state(space: FockSpace, alphas: Sequence[complex]) -> np.ndarray:
    """Product of normalized ``|0> + |alpha_q>`` per mode (vacuum where ``alpha_q = 0``)."""
    ket = np.ones(1, dtype=complex)
    for a, dim in zip(alphas, space.dims):
        v = np.zeros(dim, dtype=complex)
        v[0] = 1.0
        if a != 0:
            v = v + coherent_ket(a, dim, tol=1.0)
        ket = np.kron(ket, v / np.linalg.norm(v))
    return np.outer(ket, ket.conj())


def projected_evolution(H_mat: np.ndarray, P: np.ndarray, rho0: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i t PHP) rho0 exp(i t PHP)``."""
    php = P @ H_mat @ P
    php = 0.5 * (php + php.conj().T)
    w, v = np.linalg.eigh(php)
    U = (v * np.exp(-1j * w * t)) @ v.conj().T
    return U @ rho0 @ U.conj().T


def adiabatic_gap(
    H: BosonicHamiltonian | np.ndarray,
    dissipation: DissipationSpec,
    space: FockSpace,
    t: float,
    rho0: np.ndarray | None = None,
    alphas: Sequence[complex] | None = None,
    method: str = "spectral",
) -> float:
    """Trace distance between the dissipative evolution and the projected unitary evolution.

    ``rho0`` defaults to :func:`superposition_state` for ``alphas``; it is
    projected onto the kernel and renormalized either way.
    """
    P = kernel_projector(dissipation.jumps, space).matrix
    if rho0 is None:
        if alphas is None:
            raise ValueError("need rho0 or alphas")
        rho0 = superposition_state(space, alphas)
    rho0 = P @ np.asarray(rho0, dtype=complex) @ P
    rho0 = rho0 / np.trace(rho0)
    H_mat = to_operator(H, space).matrix if isinstance(H, BosonicHamiltonian) else np.asarray(H, dtype=complex)
    gen = Generator(space, H_mat, tuple(jump_matrix(j, space) for j in dissipation.jumps), dissipation.gamma)
    full = evolve(gen, rho0, t, method=method, check_positivity=False)
    return trace_distance(full, projected_evolution(H_mat, P, rho0, t))


@dataclass
class LadderResult:
    gammas: list[float]
    distances: list[float]
    slope: float
    monotone: bool

    def to_dict(self) -> dict:
        return asdict(self)


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def adiabatic_ladder(H: BosonicHamiltonian, alphas: Sequence[complex], t: float, gammas: Sequence[float],
                     dims: Sequence[int], truncation: str = "kernel", method: str = "spectral") -> LadderResult:
    space = FockSpace(tuple(dims))
    dist = []
    for g in gammas:
        diss = learning_dissipation(alphas, H.d, g, truncation)
        dist.append(adiabatic_gap(H, diss, space, t, alphas=alphas, method=method))
    mono = all(b <= a for a, b in zip(dist, dist[1:]))
    return LadderResult(list(map(float, gammas)), dist, loglog_slope(gammas, dist), mono)


# ---------------------------------------------------------------------------
# calibration


@dataclass
class CalibrationResult:
    gamma: float
    distance: float
    t_max: float
    target: float
    evaluations: list[tuple[float, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def calibrate_gamma(
    H: BosonicHamiltonian,
    alphas: Sequence[complex],
    t_max: float,
    target: float = 0.05,
    dims: Sequence[int] | int = 40,
    truncation: str = "kernel",
    gamma_lo: float = 1.0,
    gamma_hi: float = 1e6,
    rel_tol: float = 0.05,
) -> CalibrationResult:
    """Smallest ``gamma`` (to relative precision ``rel_tol``) with ``adiabatic_gap <= target`` at ``t_max``.

    Bisection in ``log(gamma)`` assuming the gap decreases with ``gamma``.  The
    default ceiling is kept at ``1e6``: beyond it the round-off in the slow
    eigenvalues of the superoperator (relative to its norm) dominates the
    gap at long times and monotonicity is lost.
    """
    if not target > 0:
        raise CalibrationError("target distance must be positive")
    dims = (dims,) * H.m if isinstance(dims, int) else tuple(dims)
    space = FockSpace(dims)
    H_mat = to_operator(H, space).matrix
    rho_alphas = list(alphas)
    evals: list[tuple[float, float]] = []

    def gap(g: float) -> float:
        diss = learning_dissipation(rho_alphas, H.d, g, truncation)
        val = adiabatic_gap(H_mat, diss, space, t_max, alphas=rho_alphas)
        evals.append((g, val))
        return val

    hi_val = gap(gamma_hi)
    if hi_val > target:
        raise CalibrationError(f"gap {hi_val:.3e} at gamma={gamma_hi:.3g} exceeds target {target}")
    lo_val = gap(gamma_lo)
    if lo_val <= target:
        return CalibrationResult(gamma_lo, lo_val, t_max, target, evals)
    lo, hi = math.log(gamma_lo), math.log(gamma_hi)
    while hi - lo > math.log1p(rel_tol):
        mid = 0.5 * (lo + hi)
        if gap(math.exp(mid)) <= target:
            hi, hi_val = mid, evals[-1][1]
        else:
            lo = mid
    return CalibrationResult(math.exp(hi), hi_val, t_max, target, evals)


# ---------------------------------------------------------------------------
# cat-code convergence


@dataclass
class CatResult:
    r: int
    alpha: complex
    times: list[float]
    weighted_ratio: list[float]
    envelope: list[float]
    distance_to_limit: list[float]
    distance_to_code: list[float]
    fitted_rate: float

    @property
    def weighted_ok(self) -> bool:
        return all(w <= e * (1 + 1e-4) + 1e-12 for w, e in zip(self.weighted_ratio, self.envelope))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["alpha"] = [self.alpha.real, self.alpha.imag]
        out["weighted_ok"] = self.weighted_ok
        return out


def default_cat_state(dim: int) -> np.ndarray:
    """Equal superposition of Fock states ``|0..3>``: outside the code space for any ``alpha != 0``."""
    v = np.zeros(dim, dtype=complex)
    v[:4] = 0.5
    return np.outer(v, v.conj())


def _fit_rate(times: np.ndarray, dist: np.ndarray, floor: float = 1e-9) -> float:
    keep = dist > floor
    if keep.sum() < 2:
        return float("inf")
    return float(-np.polyfit(times[keep], np.log(dist[keep]), 1)[0])


def _march(S: np.ndarray, rho0: np.ndarray, times: np.ndarray) -> list[np.ndarray]:
    """States at increasing ``times``, stepping with cached exponentials of each distinct increment."""
    if np.any(np.diff(times) < 0) or times[0] < 0:
        raise ValueError("times must be nonnegative and increasing")
    n = rho0.shape[0]
    cache: dict[float, np.ndarray] = {}
    v, last, out = vec(rho0), 0.0, []
    for t in times:
        step = round(float(t - last), 12)
        if step > 0:
            if step not in cache:
                cache[step] = scipy.linalg.expm(step * S)
            v = cache[step] @ v
        last = t
        out.append(unvec(v, n))
    return out


def cat_convergence(r: int, alpha: complex, times: Sequence[float], dim: int = 30, rho0: np.ndarray | None = None,
                    truncation: str = "compress", t_limit: float = 200.0) -> CatResult:
    """Relaxation under ``L = b^r - alpha^r`` at unit strength.

    Reports the weighted decay ``tr[L rho_t L^dag] / tr[L rho_0 L^dag]`` against
    ``exp(-t r!)``, the trace distance to the long-time limit of ``rho_0``
    (computed numerically) and to the projection of the state onto the code
    space, and the exponential rate fitted to the former.
    """
    space = FockSpace((dim,))
    jump = Jump("cat", 0, r, alpha, truncation)
    gen = Generator.build(space, None, DissipationSpec((jump,), 1.0))
    L = jump_matrix(jump, space)
    P = kernel_projector((jump,), space).matrix
    rho0 = default_cat_state(dim) if rho0 is None else np.asarray(rho0, dtype=complex)
    S = gen.superoperator()
    times = np.asarray(times, dtype=float)
    limit = unvec(scipy.linalg.expm(t_limit * S) @ vec(rho0), dim)
    w0 = np.trace(L @ rho0 @ L.conj().T).real
    ratios, dlim, dcode = [], [], []
    for rho in _march(S, rho0, times):
        ratios.append(float(np.trace(L @ rho @ L.conj().T).real / w0) if w0 > 0 else 0.0)
        dlim.append(trace_distance(rho, limit))
        dcode.append(trace_distance(rho, P @ rho @ P))
    env = np.exp(-times * math.factorial(r))
    return CatResult(r, complex(alpha), times.tolist(), ratios, env.tolist(), dlim, dcode,
                     _fit_rate(times, np.array(dlim)))


# ---------------------------------------------------------------------------
# cat-qubit X rotation


@dataclass
class RotationResult:
    alpha: complex
    gamma: float
    times: list[float]
    cat_plus_population: list[float]
    ideal_population: list[float]
    fidelities: list[float]
    fitted_frequency: float
    predicted_frequency: float

    @property
    def relative_frequency_error(self) -> float:
        return abs(self.fitted_frequency - self.predicted_frequency) / self.predicted_frequency

    def to_dict(self) -> dict:
        out = asdict(self)
        out["alpha"] = [self.alpha.real, self.alpha.imag]
        out["relative_frequency_error"] = self.relative_frequency_error
        return out


def x_rotation_check(alpha: float, times: Sequence[float], gamma: float, dim: int = 30) -> RotationResult:
    """Drive ``b + b^dag`` under two-photon cat stabilization, starting in the even cat.

    In the code space the drive acts as ``(alpha + conj(alpha))`` times the
    operator exchanging the two cats, so the even-cat population follows
    ``cos^2((alpha + conj(alpha)) t)``.  The fitted angular frequency is
    compared against ``alpha + conj(alpha)``, and fidelities against the
    projected unitary evolution.
    """
    space = FockSpace((dim,))
    b = annihilation_matrix(dim)
    H = b + b.conj().T
    jump = Jump("cat", 0, 2, alpha, "kernel")
    gen = Generator(space, H, (jump_matrix(jump, space),), gamma)
    plus = coherent_ket(alpha, dim, 1.0) + coherent_ket(-alpha, dim, 1.0)
    plus = plus / np.linalg.norm(plus)
    rho0 = np.outer(plus, plus.conj())
    P = kernel_projector((jump,), space).matrix
    times = np.asarray(times, dtype=float)
    prop = Propagator(gen, t_min=float(times[times > 0].min()) if (times > 0).any() else 1.0)
    states = prop.apply(rho0, times.tolist())
    pops, ideal_pops, fids = [], [], []
    for t, rho in zip(times, states):
        ideal = projected_evolution(H, P, rho0, t)
        pops.append(float((plus.conj() @ rho @ plus).real))
        ideal_pops.append(float((plus.conj() @ ideal @ plus).real))
        fids.append(float(np.trace(rho @ ideal).real))
    predicted = 2 * float(np.real(alpha))

    def model(t, w, amp, off, decay):
        return off + amp * np.exp(-decay * t) * np.cos(2 * w * t)

    # coarse frequency from the FFT peak, refined by least squares
    pops_arr = np.array(pops)
    dt = times[1] - times[0]
    spec = np.abs(np.fft.rfft(pops_arr - pops_arr.mean()))
    freqs = np.fft.rfftfreq(times.size, dt) * 2 * np.pi
    w0 = freqs[int(np.argmax(spec))] / 2 if spec.size > 1 else predicted
    w_fit = float(w0)
    if times.size > 4:
        try:
            popt, _ = scipy.optimize.curve_fit(model, times, pops_arr, p0=[w0, 0.5, 0.5, 0.0])
            w_fit = abs(float(popt[0]))
        except RuntimeError:
            pass
    return RotationResult(complex(alpha), gamma, times.tolist(), pops, ideal_pops, fids, w_fit, predicted)


# ---------------------------------------------------------------------------
# spectral checks


@dataclass
class SpectralResult:
    value: float
    reference: float
    edge_weight: float
    dim: int

    @property
    def valid(self) -> bool:
        """False when the extremal vector sits on the truncation edge."""
        return self.edge_weight <= EDGE_WEIGHT_LIMIT

    def to_dict(self) -> dict:
        out = asdict(self)
        out["valid"] = self.valid
        return out


def _restricted_min(mat: np.ndarray, P: np.ndarray) -> tuple[float, np.ndarray]:
    """Smallest eigenvalue of a hermitian ``mat`` on the complement of ``range(P)``."""
    w, v = np.linalg.eigh(np.eye(P.shape[0]) - P)
    comp = v[:, w > 0.5]
    sub = comp.conj().T @ mat @ comp
    lam, u = np.linalg.eigh(0.5 * (sub + sub.conj().T))
    return float(lam[0]), comp @ u[:, 0]


def spectral_gap(jumps: Sequence[Jump], dim: int) -> SpectralResult:
    """``eta``: smallest eigenvalue of ``sum_i L_i^dag L_i`` orthogonal to the common kernel.

    Every supported jump kind only lowers the occupation, so the truncated
    ``L^dag L`` is the exact compression of the untruncated one.
    """
    space = FockSpace((dim,))
    mats = [jump_matrix(j, space) for j in jumps]
    total = sum(L.conj().T @ L for L in mats)
    P = kernel_projector(jumps, space).matrix
    lam, vec_min = _restricted_min(total, P)
    return SpectralResult(lam, 1.0, _edge_weight(vec_min, dim), dim)


def pseudoinverse_norm(k: int, alpha: complex, dim: int) -> SpectralResult:
    """Smallest nonzero singular value of ``b^k - alpha^k`` (reference ``sqrt(k!)``)."""
    jump = Jump("cat", 0, k, alpha) if alpha != 0 else Jump("photon_loss", 0, k)
    res = spectral_gap((jump,), dim)
    return SpectralResult(math.sqrt(max(res.value, 0.0)), math.sqrt(math.factorial(k)), res.edge_weight, dim)


def commutator_bound(k: int, dim: int) -> SpectralResult:
    """Smallest eigenvalue of ``[b^k, (b^dag)^k]`` on the interior levels (reference ``k!``).

    The operator is built at ``dim + k`` so that the interior block is exact.
    """
    big = dim + k
    b = np.linalg.matrix_power(annihilation_matrix(big), k)
    comm = b @ b.conj().T - b.conj().T @ b
    interior = dim - max(1, int(math.ceil(EDGE_FRACTION * dim)))
    block = comm[:interior, :interior]
    lam, u = np.linalg.eigh(block)
    vmin = np.zeros(dim, dtype=complex)
    vmin[:interior] = u[:, 0]
    return SpectralResult(float(lam[0]), float(math.factorial(k)), _edge_weight(vmin, dim), dim)


# ---------------------------------------------------------------------------
# effective-Hamiltonian decay


@dataclass
class DecayRow:
    amplitude: float
    error: float
    envelope: float

    @property
    def ratio(self) -> float:
        return self.error / self.envelope


def effective_ham_decay(H: BosonicHamiltonian, amplitudes: Sequence[float], phase: float = 0.0) -> list[DecayRow]:
    """``||H~proj - Hproj||`` against ``A^d exp(-A^2/2)`` along a ladder (single mode)."""
    rows = []
    for A in amplitudes:
        proj = projected_hamiltonian(H, [A * np.exp(1j * phase)], approx="coherent")
        rows.append(DecayRow(float(A), proj.error, float(A ** H.d * math.exp(-A * A / 2))))
    return rows


def envelope_ratio_check(rows: Sequence[DecayRow], slack: float = DEFAULT_SLACK) -> list[dict]:
    """Successive error ratios compared with successive envelope ratios (within ``slack``)."""
    out = []
    for a, b in zip(rows, rows[1:]):
        err_ratio = b.error / a.error if a.error > 0 else 0.0
        env_ratio = b.envelope / a.envelope
        rel = err_ratio / env_ratio if env_ratio > 0 else float("inf")
        out.append({"from": a.amplitude, "to": b.amplitude, "error_ratio": err_ratio, "envelope_ratio": env_ratio,
                    "relative": rel, "ok": 1 / slack <= rel <= slack or err_ratio == 0.0})
    return out


def few_mode_decay(H: BosonicHamiltonian, amplitude_vectors: Sequence[Sequence[float]]) -> list[dict]:
    """Few-mode variant: error against ``4^k exp(-min A_q^2) prod_q (A_q + 1)^{d_q}``."""
    degrees = H.mode_degrees()
    out = []
    for amps in amplitude_vectors:
        proj = projected_hamiltonian(H, list(amps), approx="diagonal")
        k = sum(1 for a in amps if a != 0)
        env = 4**k * math.exp(-min(a * a for a in amps if a != 0)) * math.prod(
            (a + 1) ** dq for a, dq in zip(amps, degrees) if a != 0)
        out.append({"amplitudes": list(map(float, amps)), "error": proj.error, "envelope": env,
                    "ratio": proj.error / env})
    return out


# ---------------------------------------------------------------------------
# scorecard


def scorecard() -> dict:
    """Default verification suite; every entry carries its measured values and a pass flag."""
    from .hamiltonian import single_mode

    H = single_mode({(1, 1): 0.5, (0, 1): 0.3 - 0.2j, (1, 0): 0.3 + 0.2j, (0, 2): 0.25 + 0.15j,
                     (2, 0): 0.25 - 0.15j})
    card: dict[str, dict] = {}
    ladder = adiabatic_ladder(H, [2.0], 1.0, [50, 100, 200, 400], [30])
    card["adiabatic"] = {**ladder.to_dict(), "ok": -1.25 <= ladder.slope <= -0.75}
    for r in (1, 2):
        cat = cat_convergence(r, 1.5 if r == 1 else 2.0, np.linspace(0, 5, 26), 30)
        card[f"cat_r{r}"] = {**cat.to_dict(), "ok": cat.weighted_ok and cat.fitted_rate >= 0.4 * math.factorial(r)}
    gap = spectral_gap(standard_dissipation(0, 2, 2.0), 50)
    card["spectral_gap"] = {**gap.to_dict(), "ok": gap.valid and gap.value >= 0.95}
    for k in (1, 2, 3):
        pin = pseudoinverse_norm(k, 1.5, 60)
        com = commutator_bound(k, 60)
        card[f"pseudoinverse_k{k}"] = {**pin.to_dict(), "ok": pin.valid and pin.value >= 0.95 * pin.reference}
        card[f"commutator_k{k}"] = {**com.to_dict(), "ok": com.valid and com.value >= com.reference - 1e-9}
    rows = effective_ham_decay(H, [2.0, 3.0, 4.0])
    checks = envelope_ratio_check(rows)
    card["effective_hamiltonian"] = {"rows": [asdict(r) for r in rows], "ratios": checks,
                                     "ok": all(c["ok"] for c in checks)}
    return card
