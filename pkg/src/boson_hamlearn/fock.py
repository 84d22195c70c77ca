"""Truncated Fock-space linear algebra.

Every operator is a dense complex matrix on the tensor product of per-mode
truncated number bases.  Mode ``0`` is the most significant Kronecker factor,
so the basis index of ``|n_0, n_1, ...>`` is the row-major flattening of
``(n_0, n_1, ...)`` over ``dims``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
from scipy.special import gammaln
from scipy.stats import poisson

DEFAULT_LEAKAGE_TOL = 1e-10


class TruncationError(ValueError):
    """Raised when a truncation dimension is too small for the requested state.

    :param required_dim: smallest dimension that would satisfy the check
    """

    def __init__(self, message: str, required_dim: int | None = None):
        super().__init__(message)
        self.required_dim = required_dim


@dataclass(frozen=True)
class FockSpace:
    """Tensor product of truncated single-mode Fock spaces."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise ValueError("a Fock space needs at least one mode")
        if any(d < 2 for d in dims):
            raise ValueError(f"every mode needs dimension >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def check_mode(self, mode: int) -> int:
        if not 0 <= mode < self.n_modes:
            raise IndexError(f"mode {mode} out of range for {self.n_modes} modes")
        return mode

    def basis_index(self, occupation: Sequence[int]) -> int:
        """Flat index of the number state with the given occupations."""
        return int(np.ravel_multi_index(tuple(occupation), self.dims))

    def basis_state(self, occupation: Sequence[int]) -> np.ndarray:
        ket = np.zeros(self.total_dim, dtype=complex)
        ket[self.basis_index(occupation)] = 1.0
        return ket


@dataclass(frozen=True)
class FockOperator:
    """Dense operator on a :class:`FockSpace`."""

    space: FockSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        n = self.space.total_dim
        if mat.shape != (n, n):
            raise ValueError(f"matrix shape {mat.shape} does not match total_dim {n}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    def hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0) <= tol)

    def dag(self) -> "FockOperator":
        return FockOperator(self.space, self.matrix.conj().T)

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, FockOperator):
            if other.space != self.space:
                raise ValueError("operators live on different spaces")
            return other.matrix
        return other

    def __matmul__(self, other):
        if isinstance(other, FockOperator):
            return FockOperator(self.space, self.matrix @ self._coerce(other))
        return self.matrix @ np.asarray(other)

    def __add__(self, other):
        return FockOperator(self.space, self.matrix + self._coerce(other))

    def __sub__(self, other):
        return FockOperator(self.space, self.matrix - self._coerce(other))

    def __mul__(self, scalar):
        return FockOperator(self.space, self.matrix * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return FockOperator(self.space, -self.matrix)


@dataclass(frozen=True)
class FockState:
    """A normalized ket or a density matrix on a :class:`FockSpace`."""

    space: FockSpace
    ket: np.ndarray | None = field(default=None, repr=False)
    density: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if (self.ket is None) == (self.density is None):
            raise ValueError("provide exactly one of ket or density")
        n = self.space.total_dim
        if self.ket is not None:
            ket = np.asarray(self.ket, dtype=complex).reshape(-1)
            if ket.shape != (n,):
                raise ValueError(f"ket length {ket.size} does not match total_dim {n}")
            if abs(np.linalg.norm(ket) - 1.0) > 1e-10:
                raise ValueError("ket is not normalized within 1e-10")
            ket.setflags(write=False)
            object.__setattr__(self, "ket", ket)
        else:
            rho = np.asarray(self.density, dtype=complex)
            if rho.shape != (n, n):
                raise ValueError(f"density shape {rho.shape} does not match total_dim {n}")
            if abs(np.trace(rho) - 1.0) > 1e-10:
                raise ValueError("density trace differs from 1 by more than 1e-10")
            herm = 0.5 * (rho + rho.conj().T)
            if np.max(np.abs(rho - herm)) > 1e-10:
                raise ValueError("density matrix is not hermitian")
            if np.linalg.eigvalsh(herm).min() < -1e-9:
                raise ValueError("density matrix has a negative eigenvalue below -1e-9")
            rho.setflags(write=False)
            object.__setattr__(self, "density", rho)

    def dm(self) -> np.ndarray:
        """Density matrix (computed from the ket when needed)."""
        if self.density is not None:
            return np.array(self.density)
        return np.outer(self.ket, self.ket.conj())


# ---------------------------------------------------------------------------
# single-mode building blocks


def annihilation_matrix(dim: int) -> np.ndarray:
    """Single-mode truncated annihilation matrix with sqrt(k) on the superdiagonal."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def tensor(*factors: np.ndarray) -> np.ndarray:
    """Kronecker product of the factors in mode order."""
    out = np.ones((1, 1), dtype=complex)
    for f in factors:
        out = np.kron(out, f)
    return out


def embed(space: FockSpace, local: dict[int, np.ndarray] | np.ndarray, modes: Sequence[int] | None = None) -> FockOperator:
    """Embed operators acting on some modes into the full space.

    ``local`` is either a ``{mode: single-mode matrix}`` mapping (identity on the
    remaining modes), or one matrix acting jointly on ``modes``, given in the
    same mode order as the space.
    """
    if isinstance(local, dict):
        factors = []
        for q, d in enumerate(space.dims):
            op = local.get(q)
            if op is None:
                factors.append(np.eye(d, dtype=complex))
            else:
                op = np.asarray(op, dtype=complex)
                if op.shape != (d, d):
                    raise ValueError(f"factor for mode {q} has shape {op.shape}, expected {(d, d)}")
                factors.append(op)
        for q in local:
            space.check_mode(q)
        return FockOperator(space, tensor(*factors))

    if modes is None:
        raise ValueError("modes are required when embedding a joint operator")
    modes = [space.check_mode(q) for q in modes]
    if sorted(set(modes)) != list(modes):
        raise ValueError("joint-operator modes must be strictly increasing")
    sub_dims = [space.dims[q] for q in modes]
    sub_n = int(np.prod(sub_dims))
    local = np.asarray(local, dtype=complex)
    if local.shape != (sub_n, sub_n):
        raise ValueError(f"joint operator shape {local.shape} does not match sub-space {sub_n}")
    rest = [q for q in range(space.n_modes) if q not in modes]
    rest_n = int(np.prod([space.dims[q] for q in rest])) if rest else 1
    big = np.kron(local, np.eye(rest_n))
    # big acts on ordering (modes..., rest...); permute axes back to natural order
    order = list(modes) + rest
    perm = np.argsort(order)
    shape = [space.dims[q] for q in order]
    n = space.total_dim
    t = big.reshape(shape + shape)
    k = len(shape)
    t = t.transpose(list(perm) + [k + p for p in perm])
    return FockOperator(space, t.reshape(n, n))


def annihilation(space: FockSpace, mode: int) -> FockOperator:
    space.check_mode(mode)
    return embed(space, {mode: annihilation_matrix(space.dims[mode])})


def creation(space: FockSpace, mode: int) -> FockOperator:
    return annihilation(space, mode).dag()


def number(space: FockSpace, mode: int) -> FockOperator:
    space.check_mode(mode)
    d = space.dims[mode]
    return embed(space, {mode: np.diag(np.arange(d, dtype=complex))})


def identity(space: FockSpace) -> FockOperator:
    return FockOperator(space, np.eye(space.total_dim, dtype=complex))


# ---------------------------------------------------------------------------
# coherent states and truncation accounting


def recommended_dim(alpha: complex) -> int:
    """Truncation heuristic ``ceil(|alpha|^2 + 6|alpha| + 10)``."""
    a = abs(alpha)
    return int(math.ceil(a * a + 6 * a + 10))


def leakage(alpha: complex, dim: int) -> float:
    """Coherent-state probability above the truncation, ``1 - sum_{n<dim} Poisson``."""
    return float(poisson.sf(dim - 1, abs(alpha) ** 2))


def required_dim(alpha: complex, tol: float = DEFAULT_LEAKAGE_TOL) -> int:
    """Smallest dimension whose leakage is at most ``tol``."""
    dim = 2
    while leakage(alpha, dim) > tol:
        dim += 1
    return dim


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    """Closed-form number-basis amplitudes of ``|alpha>`` truncated to ``dim`` (not renormalized)."""
    n = np.arange(dim)
    a = abs(alpha)
    if a == 0.0:
        out = np.zeros(dim, dtype=complex)
        out[0] = 1.0
        return out
    phase = np.exp(1j * np.angle(alpha) * n)
    return np.exp(-0.5 * a * a + n * np.log(a) - 0.5 * gammaln(n + 1)) * phase


def coherent_ket(alpha: complex, dim: int, tol: float = DEFAULT_LEAKAGE_TOL) -> np.ndarray:
    """Normalized truncated single-mode coherent ket, with the leakage check."""
    lk = leakage(alpha, dim)
    if lk > tol:
        raise TruncationError(
            f"coherent state alpha={alpha} leaks {lk:.3e} > {tol:.1e} at dim={dim}",
            required_dim=required_dim(alpha, tol),
        )
    v = coherent_amplitudes(alpha, dim)
    return v / np.linalg.norm(v)


def coherent_state(space: FockSpace, alphas: Sequence[complex] | complex, tol: float = DEFAULT_LEAKAGE_TOL) -> FockState:
    """Product coherent state ``|alpha_0> x |alpha_1> x ...``."""
    alphas = _as_alpha_list(alphas, space.n_modes)
    ket = tensor(*[coherent_ket(a, d, tol)[:, None] for a, d in zip(alphas, space.dims)])[:, 0]
    return FockState(space, ket=ket / np.linalg.norm(ket))


def _as_alpha_list(alphas, n_modes: int) -> list[complex]:
    if np.isscalar(alphas):
        alphas = [alphas]
    alphas = [complex(a) for a in alphas]
    if len(alphas) != n_modes:
        raise ValueError(f"need {n_modes} amplitudes, got {len(alphas)}")
    return alphas


def displacement_matrix(alpha: complex, dim: int) -> np.ndarray:
    """Single-mode ``exp(alpha b^dag - conj(alpha) b)`` on the truncated space."""
    b = annihilation_matrix(dim)
    return scipy.linalg.expm(alpha * b.conj().T - np.conj(alpha) * b)


def displacement(space: FockSpace, mode: int, alpha: complex, tol: float = 1e-8) -> FockOperator:
    """Displacement operator on one mode.

    The matrix exponential of the truncated generator is exactly unitary; the
    truncation is checked by comparing ``D(alpha)|0>`` with the closed-form
    coherent amplitudes.
    """
    space.check_mode(mode)
    dim = space.dims[mode]
    dmat = displacement_matrix(alpha, dim)
    err = np.linalg.norm(dmat[:, 0] - coherent_amplitudes(alpha, dim))
    if err > tol:
        need = dim
        while np.linalg.norm(displacement_matrix(alpha, need)[:, 0] - coherent_amplitudes(alpha, need)) > tol:
            need += max(2, need // 4)
        raise TruncationError(
            f"D({alpha})|0> deviates from |alpha> by {err:.2e} at dim={dim}", required_dim=need
        )
    return embed(space, {mode: dmat})


def top_population(state: FockState | np.ndarray, space: FockSpace, levels: int = 2) -> float:
    """Largest population found on the top ``levels`` Fock levels of any mode."""
    rho = state.dm() if isinstance(state, FockState) else np.asarray(state)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    pops = np.real(np.diag(rho)).reshape(space.dims)
    worst = 0.0
    for q, d in enumerate(space.dims):
        marginal = np.moveaxis(pops, q, 0).reshape(d, -1).sum(axis=1)
        worst = max(worst, float(marginal[max(0, d - levels):].sum()))
    return worst


def fidelity_pure(a: np.ndarray, b: np.ndarray) -> float:
    """``|<a|b>|^2`` for normalized kets."""
    return float(abs(np.vdot(a, b)) ** 2)


def modes_partition_ok(spaces: Iterable[FockSpace], target: FockSpace) -> bool:
    """True when the factor spaces concatenate exactly to ``target``."""
    dims: list[int] = []
    for s in spaces:
        dims.extend(s.dims)
    return tuple(dims) == target.dims


def tensor_operators(*ops: FockOperator) -> FockOperator:
    """Tensor product of operators on consecutive factor spaces."""
    space = FockSpace(tuple(d for op in ops for d in op.space.dims))
    return FockOperator(space, tensor(*[op.matrix for op in ops]))
