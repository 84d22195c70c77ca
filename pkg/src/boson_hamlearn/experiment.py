"""Ancilla-assisted phase experiment, frequency oracles and the evolution ledger.

The circuit prepares ``(|0>|0> + |1>|alpha>)/sqrt(2)`` with an
ancilla-controlled displacement, lets the modes evolve under the dissipative
generator, undoes the displacement on the ``|1>`` branch and measures the
ancilla in the X or Y basis.  Because neither the Hamiltonian nor the jumps
touch the ancilla, every ancilla block of the joint density matrix evolves
under the same mode-only generator, and

    <X> + i<Y> = 2 tr(D(-alpha) rho_10(t)),  rho_10(0) = |alpha><0| / 2,

which for strong dissipation approaches ``exp(-i <alpha|H|alpha> t)``.
Oracles report ``(cos(theta t), sin(theta t))`` estimates with
``theta = <alpha|H|alpha>``; the Y channel is therefore reported as
``-<Y>``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .fock import FockSpace, coherent_ket, displacement_matrix, tensor
from .hamiltonian import (
    BosonicHamiltonian,
    coherent_expectation_multi,
    coherent_psi_coordinates,
    projected_hamiltonian,
    _psi_change_of_basis,
)
from .lindblad import DissipationSpec, Generator, Propagator, evolve


# ---------------------------------------------------------------------------
# ledger


@dataclass
class EvolutionLedger:
    """Accumulated evolution time and experiment count, with a per-stage breakdown."""

    total_time: float = 0.0
    experiment_count: int = 0
    stages: dict[str, list[float]] = field(default_factory=dict)

    def record(self, time_each: float, count: int, stage: str = "default") -> None:
        if time_each < 0 or count < 0:
            raise ValueError("ledger entries must be nonnegative")
        self.total_time += time_each * count
        self.experiment_count += count
        entry = self.stages.setdefault(stage, [0.0, 0])
        entry[0] += time_each * count
        entry[1] += count

    def merged(self, other: "EvolutionLedger") -> "EvolutionLedger":
        out = EvolutionLedger(self.total_time + other.total_time, self.experiment_count + other.experiment_count)
        for src in (self.stages, other.stages):
            for k, (t, c) in src.items():
                e = out.stages.setdefault(k, [0.0, 0])
                e[0] += t
                e[1] += c
        return out

    __add__ = merged

    @classmethod
    def parallel(cls, ledgers: Sequence["EvolutionLedger"], stage: str) -> "EvolutionLedger":
        """Ledger of experiments run side by side: the round costs as much as its longest member."""
        out = cls()
        if ledgers:
            out.record(max(l.total_time for l in ledgers), 1, stage)
            out.experiment_count = max(l.experiment_count for l in ledgers)
            out.stages[stage][1] = out.experiment_count
        return out

    def to_dict(self) -> dict:
        return {
            "total_time": self.total_time,
            "experiment_count": self.experiment_count,
            "stages": {k: {"time": v[0], "count": int(v[1])} for k, v in sorted(self.stages.items())},
        }


# ---------------------------------------------------------------------------
# ancilla joint state


@dataclass(frozen=True)
class AncillaJointState:
    """Ancilla-indexed blocks ``rho_ab = <a| rho |b>`` of the joint state."""

    rho00: np.ndarray
    rho01: np.ndarray
    rho10: np.ndarray
    rho11: np.ndarray

    def validate(self, tol: float = 1e-9) -> None:
        tr = np.trace(self.rho00) + np.trace(self.rho11)
        if abs(tr - 1) > tol:
            raise ValueError(f"ancilla blocks have total trace {tr}")
        if np.max(np.abs(self.rho10 - self.rho01.conj().T)) > 10 * tol:
            raise ValueError("off-diagonal blocks are not adjoint")

    @classmethod
    def prepare(cls, space: FockSpace, alphas: Sequence[complex]) -> "AncillaJointState":
        disp = _product_displacement(space, alphas)
        vac = np.zeros(space.total_dim, dtype=complex)
        vac[0] = 1.0
        shifted = disp @ vac
        return cls(
            0.5 * np.outer(vac, vac),
            0.5 * np.outer(vac, shifted.conj()),
            0.5 * np.outer(shifted, vac),
            0.5 * np.outer(shifted, shifted.conj()),
        )

    def joint_matrix(self) -> np.ndarray:
        """Full ``2 * dim`` joint density matrix with the ancilla as the first factor."""
        return np.block([[self.rho00, self.rho01], [self.rho10, self.rho11]])

    def xy(self) -> complex:
        """``<X> + i<Y>`` of the ancilla."""
        return complex(2 * np.trace(self.rho10))


def _product_displacement(space: FockSpace, alphas: Sequence[complex]) -> np.ndarray:
    alphas = list(alphas)
    if len(alphas) != space.n_modes:
        raise ValueError("need one amplitude per mode")
    return tensor(*[displacement_matrix(a, d) for a, d in zip(alphas, space.dims)])


def evolve_joint(gen: Generator, state: AncillaJointState, t: float, **kw) -> AncillaJointState:
    """Evolve each ancilla block under the mode-only generator."""
    return AncillaJointState(
        evolve(gen, state.rho00, t, **kw),
        evolve(gen, state.rho01, t, **kw),
        evolve(gen, state.rho10, t, **kw),
        evolve(gen, state.rho11, t, **kw),
    )


def undisplace(state: AncillaJointState, space: FockSpace, alphas: Sequence[complex]) -> AncillaJointState:
    """Apply the controlled ``D(-alpha)`` on the ``|1>`` branch."""
    d = _product_displacement(space, [-complex(a) for a in alphas])
    return AncillaJointState(state.rho00, state.rho01 @ d.conj().T, d @ state.rho10, d @ state.rho11 @ d.conj().T)


def run_circuit(
    H: BosonicHamiltonian,
    dissipation: DissipationSpec,
    alphas: Sequence[complex],
    t: float,
    basis: str,
    space: FockSpace,
    **evolve_kw,
) -> float:
    """Expectation of the ancilla ``X`` or ``Y`` after the full circuit."""
    gen = Generator.build(space, H, dissipation)
    state = AncillaJointState.prepare(space, alphas)
    rho10 = evolve(gen, state.rho10, t, **evolve_kw)
    c = 2 * np.trace(_product_displacement(space, [-complex(a) for a in alphas]) @ rho10)
    if basis.upper() == "X":
        return float(c.real)
    if basis.upper() == "Y":
        return float(c.imag)
    raise ValueError("basis must be 'X' or 'Y'")


def run_circuit_joint(
    gen: Generator, space: FockSpace, alphas: Sequence[complex], t: float
) -> complex:
    """Reference implementation on the explicit ancilla-times-modes space (small dims only)."""
    n = space.total_dim
    big_space = FockSpace((2,) + space.dims)
    eye2 = np.eye(2)
    Hj = np.kron(eye2, gen.hamiltonian)
    Lj = tuple(np.kron(eye2, L) for L in gen.jumps)
    joint_gen = Generator(big_space, Hj, Lj, gen.gamma)
    disp = _product_displacement(space, alphas)
    cdisp = np.block([[np.eye(n), np.zeros((n, n))], [np.zeros((n, n)), disp]])
    vac = np.zeros(n, dtype=complex)
    vac[0] = 1.0
    psi0 = np.kron(np.array([1, 1]) / math.sqrt(2), vac)
    psi = cdisp @ psi0
    rho = evolve(joint_gen, np.outer(psi, psi.conj()), t, method="expm")
    undo = np.block([[np.eye(n), np.zeros((n, n))], [np.zeros((n, n)), disp.conj().T]])
    rho = undo @ rho @ undo.conj().T
    X = np.kron(np.array([[0, 1], [1, 0]]), np.eye(n))
    Y = np.kron(np.array([[0, -1j], [1j, 0]]), np.eye(n))
    return complex(np.trace(rho @ X).real + 1j * np.trace(rho @ Y).real)


# ---------------------------------------------------------------------------
# signals: simulated and projected


class SimulatedSignal:
    """``<X> + i<Y>`` of the circuit under the full dissipative dynamics, for many times.

    A :class:`Propagator` is built lazily for the earliest requested time, so a
    whole estimation schedule costs one Schur decomposition.
    """

    def __init__(
        self,
        H: BosonicHamiltonian,
        dissipation: DissipationSpec,
        alphas: Sequence[complex],
        space: FockSpace,
        t_min: float,
    ):
        self.space = space
        self.alphas = [complex(a) for a in alphas]
        self.gen = Generator.build(space, H, dissipation)
        self.t_min = float(t_min)
        state = AncillaJointState.prepare(space, self.alphas)
        self.rho10 = state.rho10
        self.undo = _product_displacement(space, [-a for a in self.alphas])
        self._prop: Propagator | None = None
        self.cache: dict[float, complex] = {}

    @property
    def propagator(self) -> Propagator:
        if self._prop is None:
            self._prop = Propagator(self.gen, self.t_min)
        return self._prop

    def __call__(self, times: Sequence[float]) -> np.ndarray:
        times = [float(t) for t in np.atleast_1d(times)]
        todo = [t for t in times if t not in self.cache]
        if todo:
            for t, rho in zip(todo, self.propagator.apply(self.rho10, todo)):
                self.cache[t] = complex(2 * np.trace(self.undo @ rho))
        return np.array([self.cache[t] for t in times])


def projected_displacement_block(alphas: Sequence[complex]) -> np.ndarray:
    """``Pi D(-alpha) Pi`` in the product Psi basis, from coherent overlaps."""
    blocks = []
    for a in alphas:
        a = complex(a)
        if a == 0:
            blocks.append(np.ones((1, 1), dtype=complex))
            continue
        s = math.exp(-0.5 * abs(a) ** 2)
        m = np.array([[s, 1.0], [math.exp(-2 * abs(a) ** 2), s]], dtype=complex)
        c = _psi_change_of_basis(s)
        blocks.append(c.conj().T @ m @ c)
    return tensor(*blocks)


class ProjectedSignal:
    """Infinite-dissipation limit: evolve with ``Hproj`` inside the stabilized subspace."""

    def __init__(self, H: BosonicHamiltonian, alphas: Sequence[complex], space: FockSpace | None = None):
        self.alphas = [complex(a) for a in alphas]
        proj = projected_hamiltonian(H, self.alphas, space)
        self.hproj = proj.hproj
        self.expectation = proj.expectation
        w, v = np.linalg.eigh(self.hproj)
        self._w, self._v = w, v
        dneg = projected_displacement_block(self.alphas)
        ket_alpha = coherent_psi_coordinates(self.alphas)
        bra0 = np.zeros(len(ket_alpha), dtype=complex)
        bra0[0] = 1.0
        # c(t) = sum_{mn} conj(<v_m|0>) <v_m|D|v_n> <v_n|alpha> exp(i(w_m - w_n)t)
        self._left = v.conj().T @ bra0
        self._mid = v.conj().T @ dneg @ v
        self._right = v.conj().T @ ket_alpha

    def __call__(self, times: Sequence[float]) -> np.ndarray:
        times = np.atleast_1d(np.asarray(times, dtype=float))
        w = self._w
        out = np.empty(times.shape, dtype=complex)
        for i, t in enumerate(times):
            left = np.conj(self._left) * np.exp(1j * w * t)
            right = self._right * np.exp(-1j * w * t)
            out[i] = left @ self._mid @ right
        return out


# ---------------------------------------------------------------------------
# sampling and oracles


def sample(expectation: float, shots: int, rng: np.random.Generator, ledger: EvolutionLedger | None = None,
           t: float = 0.0, stage: str = "default") -> np.ndarray:
    """``shots`` i.i.d. ancilla outcomes in ``{+1, -1}`` with mean ``expectation``."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = min(1.0, max(0.0, 0.5 * (1 + expectation)))
    out = np.where(rng.random(shots) < p, 1, -1)
    if ledger is not None:
        ledger.record(t, shots, stage)
    return out


class _TracingMixin:
    trace: list[tuple[float, str, float]] | None

    def _log(self, t: float, basis: str, values: np.ndarray) -> None:
        if self.trace is not None:
            self.trace.extend((t, basis, float(v)) for v in values)

    def dump_trace(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "basis", "outcome"])
            for t, b, v in self.trace or []:
                w.writerow([format(t, ".17g"), b, format(v, ".17g")])


class ExactOracle(_TracingMixin):
    """Closed-form samples of ``cos(theta t)``, ``sin(theta t)``, optionally corrupted.

    With probability ``q`` (independently per sample and quadrature) the value
    is replaced by the antipodal point ``-cos`` / ``-sin``, which violates the
    accuracy hypothesis maximally.  Otherwise ``noise`` (below ``1/sqrt(8)``) is
    added with a random sign.
    """

    def __init__(self, theta: float, q: float = 0.0, noise: float = 0.0, ledger: EvolutionLedger | None = None,
                 stage: str = "exact", trace: bool = False):
        self.theta = float(theta)
        self.q = q
        self.noise = noise
        self.ledger = ledger if ledger is not None else EvolutionLedger()
        self.stage = stage
        self.trace = [] if trace else None

    def _component(self, exact: float, n: int, rng: np.random.Generator) -> np.ndarray:
        vals = np.full(n, exact)
        if self.noise:
            vals = vals + self.noise * rng.choice([-1.0, 1.0], size=n)
        if self.q:
            bad = rng.random(n) < self.q
            vals[bad] = -exact
        return vals

    def draw(self, t: float, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        xs = self._component(math.cos(self.theta * t), n, rng)
        ys = self._component(math.sin(self.theta * t), n, rng)
        self.ledger.record(t, 2 * n, self.stage)
        self._log(t, "X", xs)
        self._log(t, "Y", ys)
        return xs, ys


def ideal_oracle(H: BosonicHamiltonian, alphas: Sequence[complex], q: float = 0.0, noise: float = 0.0,
                 **kw) -> ExactOracle:
    """Oracle reporting ``<alpha|H|alpha>`` exactly, bypassing dissipation."""
    return ExactOracle(coherent_expectation_multi(H, alphas), q=q, noise=noise, **kw)


ADVERSARIAL_NOISE = (1 - 1e-6) / math.sqrt(8)


class CircuitOracle(_TracingMixin):
    """Shot-noise samples drawn from a signal ``c(t) = <X> + i<Y>``.

    Each raw sample averages ``shots`` ancilla outcomes; the Y channel is
    negated so that the oracle reports ``sin(theta t)`` for
    ``c(t) ~ exp(-i theta t)``.
    """

    def __init__(self, signal: Callable[[Sequence[float]], np.ndarray], shots: int = 100,
                 ledger: EvolutionLedger | None = None, stage: str = "circuit", trace: bool = False):
        self.signal = signal
        self.shots = int(shots)
        self.ledger = ledger if ledger is not None else EvolutionLedger()
        self.stage = stage
        self.trace = [] if trace else None

    def _means(self, expectation: float, n: int, rng: np.random.Generator) -> np.ndarray:
        p = min(1.0, max(0.0, 0.5 * (1 + expectation)))
        ups = rng.binomial(self.shots, p, size=n)
        return (2 * ups - self.shots) / self.shots

    def draw(self, t: float, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        c = complex(self.signal([t])[0])
        xs = self._means(c.real, n, rng)
        ys = self._means(-c.imag, n, rng)
        self.ledger.record(t, 2 * n * self.shots, self.stage)
        self._log(t, "X", xs)
        self._log(t, "Y", ys)
        return xs, ys
