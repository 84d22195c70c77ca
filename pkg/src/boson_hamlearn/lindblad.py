"""Lindblad generators, jump operators, kernel projectors and propagation.

The generator is ``rho -> -i[H, rho] + gamma * sum_i (L_i rho L_i^dag - {L_i^dag L_i, rho}/2)``.
Three propagation routes are available:

``rk``
    adaptive Dormand-Prince 5(4) with PI step control, acting on the matrix
    directly; raises :class:`StiffnessError` when the step budget is exhausted.
``expm``
    dense superoperator exponential (column-stacking vectorization).
``spectral``
    ordered complex Schur decomposition of the superoperator.  Modes that have
    decayed below ``exp(-60)`` by the earliest requested time are discarded and
    the rest is propagated exactly through the small slow block.  This is the
    route for stiff, large-``gamma`` problems where many time points are needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .fock import FockOperator, FockSpace, FockState, annihilation_matrix, coherent_ket, embed
from .hamiltonian import BosonicHamiltonian, to_operator

JUMP_KINDS = ("modified_photon_loss", "cat", "photon_loss", "custom")


class StiffnessError(RuntimeError):
    """The explicit integrator cannot finish within its step budget."""


class PositivityError(RuntimeError):
    """A propagated density matrix has an eigenvalue below the allowed threshold."""


@dataclass(frozen=True)
class Jump:
    """Single-mode jump operator descriptor.

    ``modified_photon_loss``: ``b^r (b - alpha)``;
    ``cat``: ``b^r - alpha^r``;
    ``photon_loss``: ``b^r``;
    ``custom``: an explicit single-mode ``matrix``.

    ``truncation`` controls how the operator is cut to a finite space:
    ``"compress"`` uses the product of truncated ladder operators (the exact
    compression, since every kind only lowers), while ``"kernel"`` additionally
    removes the action on the analytic kernel, ``L (1 - Q)``, so that truncated
    coherent states stay exactly stationary.
    """

    kind: str
    mode: int
    r: int = 1
    alpha: complex = 0.0
    truncation: str = "compress"
    matrix: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in JUMP_KINDS:
            raise ValueError(f"unknown jump kind {self.kind!r}")
        if self.kind != "custom" and self.r < 0:
            raise ValueError("jump power r must be >= 0")
        if self.kind == "cat" and self.r < 1:
            raise ValueError("cat dissipation needs r >= 1")
        if self.truncation not in ("compress", "kernel"):
            raise ValueError(f"unknown truncation {self.truncation!r}")
        object.__setattr__(self, "alpha", complex(self.alpha))

    def label(self) -> str:
        if self.kind == "modified_photon_loss":
            return f"b^{self.r}(b-{self.alpha:g})@{self.mode}"
        if self.kind == "cat":
            return f"b^{self.r}-({self.alpha:g})^{self.r}@{self.mode}"
        if self.kind == "photon_loss":
            return f"b^{self.r}@{self.mode}"
        return f"custom@{self.mode}"


@dataclass(frozen=True)
class DissipationSpec:
    jumps: tuple[Jump, ...]
    gamma: float

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        object.__setattr__(self, "jumps", tuple(self.jumps))

    def with_gamma(self, gamma: float) -> "DissipationSpec":
        return DissipationSpec(self.jumps, gamma)


def r_for_degree(d: int) -> int:
    """Second-jump power ``ceil(d/2) - 1`` used for degree-``d`` learning."""
    return int(math.ceil(d / 2)) - 1


def standard_dissipation(mode: int, r: int, alpha: complex, truncation: str = "compress") -> tuple[Jump, ...]:
    """Jumps ``b(b - alpha)`` and ``b^r (b - alpha)``; ``r <= 1`` collapses to the first."""
    if r < 0:
        raise ValueError("r must be >= 0")
    first = Jump("modified_photon_loss", mode, 1, alpha, truncation)
    if r <= 1:
        return (first,)
    return (first, Jump("modified_photon_loss", mode, r, alpha, truncation))


def decoupling_dissipation(mode: int, r: int) -> tuple[Jump, ...]:
    """Vacuum-pinning jumps ``b`` and ``b^{r+1}`` (duplicates removed)."""
    if r < 0:
        raise ValueError("r must be >= 0")
    first = Jump("photon_loss", mode, 1)
    if r + 1 == 1:
        return (first,)
    return (first, Jump("photon_loss", mode, r + 1))


# ---------------------------------------------------------------------------
# jump matrices and kernels


def analytic_kernel_basis(jump: Jump, dim: int, tol: float = 1e-8) -> np.ndarray | None:
    """Orthonormal basis (columns) of the infinite-space kernel, truncated to ``dim``.

    Returns ``None`` for custom jumps.  Coherent vectors are truncated without
    a leakage check; ``tol`` only controls the rank decision.
    """
    def number_states(n: int) -> list[np.ndarray]:
        out = []
        for k in range(min(n, dim)):
            v = np.zeros(dim, dtype=complex)
            v[k] = 1.0
            out.append(v)
        return out

    def coh(a: complex) -> np.ndarray:
        return coherent_ket(a, dim, tol=1.0)

    if jump.kind == "custom":
        return None
    if jump.kind == "photon_loss":
        vecs = number_states(jump.r)
    elif jump.kind == "modified_photon_loss":
        if jump.alpha == 0:
            vecs = number_states(jump.r + 1)
        else:
            vecs = number_states(jump.r) + [coh(jump.alpha)]
    else:  # cat
        if jump.alpha == 0:
            vecs = number_states(jump.r)
        else:
            vecs = [coh(jump.alpha * np.exp(2j * np.pi * j / jump.r)) for j in range(jump.r)]
    if not vecs:
        return np.zeros((dim, 0), dtype=complex)
    return _orthonormal_columns(np.stack(vecs, axis=1), tol)


def _orthonormal_columns(mat: np.ndarray, tol: float) -> np.ndarray:
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    keep = s > tol * max(1.0, s.max(initial=0.0))
    return u[:, keep]


def jump_mode_matrix(jump: Jump, dim: int) -> np.ndarray:
    """Single-mode matrix of the jump on a ``dim``-level truncation."""
    if jump.kind == "custom":
        mat = np.asarray(jump.matrix, dtype=complex)
        if mat.shape != (dim, dim):
            raise ValueError(f"custom jump matrix has shape {mat.shape}, expected {(dim, dim)}")
        return mat
    b = annihilation_matrix(dim)
    br = np.linalg.matrix_power(b, jump.r)
    eye = np.eye(dim, dtype=complex)
    if jump.kind == "photon_loss":
        mat = br
    elif jump.kind == "modified_photon_loss":
        mat = br @ (b - jump.alpha * eye)
    else:
        mat = br - (jump.alpha ** jump.r) * eye
    if jump.truncation == "kernel":
        basis = analytic_kernel_basis(jump, dim)
        mat = mat - (mat @ basis) @ basis.conj().T
    return mat


def jump_matrix(jump: Jump, space: FockSpace) -> np.ndarray:
    space.check_mode(jump.mode)
    return embed(space, {jump.mode: jump_mode_matrix(jump, space.dims[jump.mode])}).matrix


def _intersect(bases: Sequence[np.ndarray], dim: int, tol: float) -> np.ndarray:
    if not bases:
        return np.eye(dim, dtype=complex)
    acc = np.zeros((dim, dim), dtype=complex)
    for k in bases:
        acc += np.eye(dim) - k @ k.conj().T
    w, v = np.linalg.eigh(acc)
    return v[:, w < tol]


def numerical_kernel(mats: Sequence[np.ndarray], tol: float = 1e-8) -> np.ndarray:
    """Common null space of the stacked matrices via SVD (relative threshold)."""
    stacked = np.vstack(mats)
    _, s, vh = np.linalg.svd(stacked)
    full = np.zeros(vh.shape[0])
    full[: s.size] = s
    scale = max(1.0, s.max(initial=0.0))
    return vh[full <= tol * scale].conj().T


def kernel_projector(jumps: Sequence[Jump], space: FockSpace, method: str = "auto", tol: float = 1e-8) -> FockOperator:
    """Orthogonal projector onto the common kernel of the jumps, built per mode.

    ``method="auto"`` uses the analytic kernels of the known kinds and falls back
    to an SVD null space for custom jumps; ``"numerical"`` forces the SVD route.
    Modes without jumps contribute an identity factor.
    """
    factors = {}
    for q, dim in enumerate(space.dims):
        on_mode = [j for j in jumps if j.mode == q]
        if not on_mode:
            continue
        analytic = [analytic_kernel_basis(j, dim, tol) for j in on_mode] if method == "auto" else [None]
        if method == "auto" and all(a is not None for a in analytic):
            basis = _intersect(analytic, dim, tol)
        elif method in ("auto", "numerical"):
            basis = numerical_kernel([jump_mode_matrix(j, dim) for j in on_mode], tol)
        else:
            raise ValueError(f"unknown kernel method {method!r}")
        factors[q] = basis @ basis.conj().T
    return embed(space, factors)


# ---------------------------------------------------------------------------
# generator


@dataclass(frozen=True)
class Generator:
    """Lindblad generator on a Fock space (immutable)."""

    space: FockSpace
    hamiltonian: np.ndarray = field(repr=False)
    jumps: tuple[np.ndarray, ...] = field(repr=False)
    gamma: float = 0.0

    def __post_init__(self):
        n = self.space.total_dim
        H = np.asarray(self.hamiltonian, dtype=complex)
        if H.shape != (n, n):
            raise ValueError("Hamiltonian shape does not match the space")
        jumps = tuple(np.asarray(L, dtype=complex) for L in self.jumps)
        for L in jumps:
            if L.shape != (n, n):
                raise ValueError("jump shape does not match the space")
        object.__setattr__(self, "hamiltonian", H)
        object.__setattr__(self, "jumps", jumps)
        ldl = sum((L.conj().T @ L for L in jumps), np.zeros((n, n), dtype=complex))
        object.__setattr__(self, "_drift", -1j * H - 0.5 * self.gamma * ldl)
        object.__setattr__(self, "_cache", {})

    @classmethod
    def build(cls, space: FockSpace, hamiltonian, dissipation: DissipationSpec | None = None) -> "Generator":
        """Assemble from a Hamiltonian (model, operator or matrix) and a dissipation spec."""
        if isinstance(hamiltonian, BosonicHamiltonian):
            H = to_operator(hamiltonian, space).matrix
        elif isinstance(hamiltonian, FockOperator):
            H = hamiltonian.matrix
        elif hamiltonian is None:
            H = np.zeros((space.total_dim,) * 2, dtype=complex)
        else:
            H = np.asarray(hamiltonian, dtype=complex)
        if dissipation is None:
            return cls(space, H, (), 0.0)
        jumps = tuple(jump_matrix(j, space) for j in dissipation.jumps)
        return cls(space, H, jumps, float(dissipation.gamma))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        K = self._drift
        out = K @ rho + rho @ K.conj().T
        for L in self.jumps:
            out += self.gamma * (L @ rho @ L.conj().T)
        return out

    def superoperator(self) -> np.ndarray:
        """Column-stacking superoperator, ``vec(L(rho)) = S vec(rho)`` (cached)."""
        if "S" not in self._cache:
            n = self.space.total_dim
            eye = np.eye(n)
            K = self._drift
            S = np.kron(eye, K) + np.kron(K.conj(), eye)
            for L in self.jumps:
                S += self.gamma * np.kron(L.conj(), L)
            self._cache["S"] = S
        return self._cache["S"]

    def rate_bound(self) -> float:
        """Upper bound on the spectral radius of the generator."""
        n_h = np.linalg.norm(self.hamiltonian, 2)
        n_l = sum(np.linalg.norm(L, 2) ** 2 for L in self.jumps)
        return float(2 * n_h + 2 * self.gamma * n_l)


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, n: int) -> np.ndarray:
    return np.asarray(v).reshape((n, n), order="F")


# ---------------------------------------------------------------------------
# explicit adaptive integrator

_DP_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_DP_E = _DP_B - np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


@dataclass
class IntegrationStats:
    accepted: int = 0
    rejected: int = 0
    min_step: float = math.inf


def dormand_prince(
    rhs: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    t_end: float,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    max_steps: int = 20000,
    stats: IntegrationStats | None = None,
) -> np.ndarray:
    """Integrate the autonomous system ``y' = rhs(y)`` from 0 to ``t_end``.

    Dormand-Prince 5(4) with first-same-as-last reuse and a PI step controller.
    """
    stats = stats if stats is not None else IntegrationStats()
    y = np.array(y0, dtype=complex)
    if t_end == 0:
        return y
    t = 0.0
    k1 = rhs(y)
    scale0 = atol + rtol * np.abs(y).max()
    d0 = np.abs(y).max() / scale0
    d1 = np.abs(k1).max() / scale0
    h = min(t_end, 0.01 * max(d0, 1e-5) / d1 if d1 > 0 else t_end)
    err_prev = 1.0
    beta1, beta2, safety = 0.7 / 5, 0.4 / 5, 0.9
    steps = 0
    while t_end - t > 1e-15 * t_end:
        if steps >= max_steps:
            raise StiffnessError(
                f"step budget {max_steps} exhausted at t={t:.3g}/{t_end:.3g}; "
                "the generator is too stiff (raise tol, lower gamma or dim, or use the expm/spectral routes)"
            )
        if h <= 1e-14 * t_end:
            raise StiffnessError(f"step size underflow at t={t:.3g}")
        h = min(h, t_end - t)
        ks = [k1]
        for i in range(1, 7):
            yi = y + h * sum(a * k for a, k in zip(_DP_A[i], ks))
            ks.append(rhs(yi))
        y_new = y + h * sum(b * k for b, k in zip(_DP_B, ks) if b != 0)
        err_vec = h * sum(e * k for e, k in zip(_DP_E, ks) if e != 0)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(err_vec) / scale))
        steps += 1
        if err <= 1.0:
            t += h
            y = y_new
            k1 = ks[6]
            stats.accepted += 1
            stats.min_step = min(stats.min_step, h)
            fac = safety * err ** (-beta1) * err_prev ** beta2 if err > 0 else 5.0
            h *= min(5.0, max(0.2, fac))
            err_prev = max(err, 1e-4)
        else:
            stats.rejected += 1
            h *= max(0.2, safety * err ** (-1 / 5))
    return y


# ---------------------------------------------------------------------------
# slow-manifold propagator


class Propagator:
    """Exact propagation of ``exp(t L)`` for many times on one generator.

    The superoperator is brought to ordered complex Schur form once.  For times
    ``t >= t_min`` the eigenmodes with ``Re(lambda) * t_min < -cutoff`` are
    negligible (below ``exp(-cutoff)``), and the state is evolved through the
    slow block only, using the spectral projector obtained from a triangular
    Sylvester solve.  Earlier times use the dense exponential.
    """

    def __init__(self, gen: Generator, t_min: float, cutoff: float = 60.0, max_slow: int | None = None):
        self.gen = gen
        self.t_min = float(t_min)
        self.n = gen.space.total_dim
        S = gen.superoperator()
        N = S.shape[0]
        max_slow = max_slow if max_slow is not None else max(16, N // 4)
        T, Z = scipy.linalg.schur(S, output="complex")
        ev = np.diag(T)
        select = (ev.real * self.t_min > -cutoff).astype(np.int32)
        k = int(select.sum())
        self.n_slow = k
        self.eigenvalues = ev
        self.fast_rate = float(-ev.real[select == 0].max()) if k < N else 0.0
        if k == N or k > max_slow:
            self._split = False
            self._S = S
            return
        ts, qs, _, m, _, _, info = lapack.ztrsen(select, T, Z, job="N")
        if info != 0 or m != k:
            raise RuntimeError(f"Schur reordering failed (info={info})")
        T11, T12, T22 = ts[:k, :k], ts[:k, k:], ts[k:, k:]
        Y, scale, info = lapack.ztrsyl(T11, T22, T12, isgn=-1)
        if info < 0:
            raise RuntimeError(f"Sylvester solve failed (info={info})")
        self._Y = Y / scale
        self._Qs = qs[:, :k]
        self._Qf = qs[:, k:]
        self._T11 = T11
        self._split = True
        self._S = S

    @property
    def split(self) -> bool:
        return self._split

    def slow_coordinates(self, X: np.ndarray) -> np.ndarray:
        v = vec(X)
        return self._Qs.conj().T @ v + self._Y @ (self._Qf.conj().T @ v)

    def apply(self, X: np.ndarray, times: Sequence[float]) -> list[np.ndarray]:
        """``exp(t L)(X)`` for each ``t`` in ``times``."""
        out = []
        v = vec(X)
        c = self.slow_coordinates(X) if self._split else None
        for t in times:
            if t == 0:
                out.append(np.array(X, dtype=complex))
            elif self._split and t >= self.t_min:
                out.append(unvec(self._Qs @ (scipy.linalg.expm(t * self._T11) @ c), self.n))
            else:
                out.append(unvec(scipy.linalg.expm(t * self._S) @ v, self.n))
        return out

    def slow_eigenvalues(self) -> np.ndarray:
        return np.diag(self._T11) if self._split else self.eigenvalues


# ---------------------------------------------------------------------------
# public evolution entry point


def choose_method(gen: Generator, t: float, max_steps: int = 20000, max_superop_dim: int = 1600) -> str:
    steps = gen.rate_bound() * t / 3.0
    if steps <= max_steps:
        return "rk"
    if gen.space.total_dim ** 2 <= max_superop_dim:
        return "expm"
    return "spectral"


def evolve(
    gen: Generator,
    rho0: FockState | np.ndarray,
    t: float,
    tol: float = 1e-8,
    method: str = "auto",
    max_steps: int = 20000,
    check_positivity: bool = True,
    stats: IntegrationStats | None = None,
) -> np.ndarray:
    """Propagate ``rho0`` for time ``t`` under the generator.

    ``rho0`` may be any square operator (coherence blocks included); the
    positivity monitor only runs for hermitian inputs.  See the module
    docstring for the available methods.
    """
    rho = rho0.dm() if isinstance(rho0, FockState) else np.array(rho0, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    n = gen.space.total_dim
    if rho.shape != (n, n):
        raise ValueError("initial operator does not match the generator space")
    if t < 0:
        raise ValueError("t must be nonnegative")
    if method == "auto":
        method = choose_method(gen, t, max_steps)
    if method == "rk":
        flat = dormand_prince(
            lambda y: gen.apply(y.reshape(n, n)).reshape(-1),
            rho.reshape(-1),
            t,
            rtol=tol,
            atol=tol * 1e-2,
            max_steps=max_steps,
            stats=stats,
        )
        out = flat.reshape(n, n)
    elif method == "expm":
        out = unvec(scipy.linalg.expm(t * gen.superoperator()) @ vec(rho), n)
    elif method == "spectral":
        out = Propagator(gen, t_min=t).apply(rho, [t])[0]
    else:
        raise ValueError(f"unknown method {method!r}")
    if check_positivity and np.allclose(rho, rho.conj().T, atol=1e-12):
        herm = 0.5 * (out + out.conj().T)
        lam = np.linalg.eigvalsh(herm).min()
        if lam < -100 * tol:
            raise PositivityError(f"minimum eigenvalue {lam:.3e} below {-100 * tol:.1e}")
    return out


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Half the trace norm of the difference."""
    return float(0.5 * np.linalg.svd(np.asarray(rho) - np.asarray(sigma), compute_uv=False).sum())
