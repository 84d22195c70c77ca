"""Coefficient recovery from coherent-state expectation values.

For fixed phases the expectation ``<alpha|H|alpha>`` is a polynomial in the
amplitudes ``A_q = |alpha_q|``; its coefficients are trigonometric sums in the
phases whose Fourier coefficients are the Hamiltonian coefficients.  Recovery
therefore interpolates on a Chebyshev grid of amplitudes, reads off the
monomial coefficients about zero, and inverts a small discrete Fourier
transform on an equispaced phase grid.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from numpy.polynomial import chebyshev as npcheb

from .hamiltonian import ConfigurationError, Key

INTERVAL_POLICIES = ("theorem", "lemma", "none")


# ---------------------------------------------------------------------------
# amplitude grid


def chebyshev_nodes(a: float, b: float, d: int) -> np.ndarray:
    """``d + 1`` roots of the degree-``d+1`` Chebyshev polynomial mapped to ``[a, b]``."""
    if not b > a:
        raise ConfigurationError(f"degenerate interval [{a}, {b}]")
    if d < 0:
        raise ValueError("degree must be >= 0")
    mu = np.arange(1, d + 2)
    return 0.5 * (a + b) + 0.5 * (b - a) * np.cos((2 * mu - 1) * np.pi / (2 * d + 2))


def check_interval(a: float, b: float, policy: str) -> str:
    """Validate an amplitude interval against the requested regime; returns the policy used.

    ``theorem``: ``b - a >= 4a > 0``; ``lemma``: ``b - a >= 2`` and ``b >= 2a > 0``;
    ``none``: only ``b > a >= 0``.
    """
    if policy not in INTERVAL_POLICIES:
        raise ConfigurationError(f"unknown interval policy {policy!r}")
    if not b > a >= 0:
        raise ConfigurationError(f"interval [{a}, {b}] must satisfy b > a >= 0")
    if policy == "theorem" and not (b - a >= 4 * a > 0):
        raise ConfigurationError(f"interval [{a}, {b}] violates b - a >= 4a > 0")
    if policy == "lemma" and not (b - a >= 2 and b >= 2 * a > 0):
        raise ConfigurationError(f"interval [{a}, {b}] violates b - a >= 2 and b >= 2a > 0")
    return policy


@dataclass(frozen=True)
class AmplitudeGrid:
    a: float
    b: float
    d: int
    policy: str = "theorem"

    def __post_init__(self):
        check_interval(self.a, self.b, self.policy)

    @property
    def nodes(self) -> np.ndarray:
        return chebyshev_nodes(self.a, self.b, self.d)


def phase_grid(l: int) -> np.ndarray:
    """``pi u / (l + 1)`` for ``u = 0..l``."""
    return np.pi * np.arange(l + 1) / (l + 1)


# ---------------------------------------------------------------------------
# one-dimensional interpolation


def interpolation_matrix(a: float, b: float, d: int) -> np.ndarray:
    """Linear map from node values to monomial coefficients ``p_0..p_d`` about 0.

    Built column by column from the Chebyshev-series interpolant of each unit
    vector (discrete orthogonality at the roots), converted to the power basis
    in the original variable.
    """
    n = d + 1
    nodes_u = np.cos((2 * np.arange(1, n + 1) - 1) * np.pi / (2 * n))
    tk = npcheb.chebvander(nodes_u, d)  # tk[i, k] = T_k(u_i)
    weights = np.full(n, 2.0 / n)
    weights[0] = 1.0 / n
    to_cheb = (tk * weights).T  # c_k = w_k sum_i f_i T_k(u_i)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    # power coefficients in u, then substitute u = (x - mid) / half
    cheb_to_u = np.zeros((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        pu = npcheb.cheb2poly(e)
        cheb_to_u[: pu.size, k] = pu
    u_to_x = np.zeros((n, n))
    for k in range(n):
        # (x - mid)^k / half^k expanded in powers of x
        for i in range(k + 1):
            u_to_x[i, k] = math.comb(k, i) * (-mid) ** (k - i) / half**k
    return u_to_x @ cheb_to_u @ to_cheb


def interpolate_poly(values: Sequence[float], a: float, b: float, d: int) -> np.ndarray:
    """Monomial coefficients (about 0) of the degree-``d`` interpolant through the Chebyshev nodes."""
    values = np.asarray(values)
    if values.shape[0] != d + 1:
        raise ValueError(f"need exactly {d + 1} values")
    return interpolation_matrix(a, b, d) @ values


def barycentric_eval(values: Sequence[float], a: float, b: float, x) -> np.ndarray:
    """Evaluate the Chebyshev-root interpolant at ``x`` in barycentric form."""
    values = np.asarray(values, dtype=complex)
    n = values.size
    k = np.arange(n)
    theta = (2 * k + 1) * np.pi / (2 * n)
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * np.cos(theta)
    w = (-1.0) ** k * np.sin(theta)
    # the formula's node ordering is mu = k + 1, identical to chebyshev_nodes
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(x.shape, dtype=complex)
    for i, xi in enumerate(x):
        diff = xi - nodes
        hit = np.isclose(diff, 0.0, atol=1e-15)
        if hit.any():
            out[i] = values[np.argmax(hit)]
        else:
            t = w / diff
            out[i] = np.dot(t, values) / t.sum()
    return out


def interpolation_constant(a: float, b: float, d: int) -> float:
    """Observed ``K_d``: smallest constant with ``|dp_l| <= K_d 2^l eps / (b - a)^l`` for all ``l``.

    Worst-case node perturbations of size ``eps`` give ``|dp_l| = eps * ||row_l||_1``.
    """
    M = interpolation_matrix(a, b, d)
    rows = np.abs(M).sum(axis=1)
    return float(max(rows[l] * ((b - a) / 2) ** l for l in range(d + 1)))


def double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def markov_coefficient_bound(n: int, d: int, a: float, b: float, eps: float) -> float:
    """Bound on ``|p_n|`` for a degree-``d`` polynomial with ``|p| <= eps`` on ``[a, b]``.

    Valid when ``b - a > 2|a|``.
    """
    ratio = 2 * abs(a) / (b - a)
    if ratio >= 1:
        raise ValueError("the bound needs b - a > 2|a|")
    return d * double_factorial(2 * d - 2) / math.factorial(n) * (2 / (b - a)) ** n * eps / (1 - ratio)


def chebyshev_sum_constant(d: int) -> float:
    """``(2d + 1) / (d + 1)``: ``|f(x)| <= C sum_i |f(x_i)|`` on ``[-1, 1]`` at the Chebyshev roots."""
    return (2 * d + 1) / (d + 1)


# ---------------------------------------------------------------------------
# Fourier inversion


def fourier_forward(coeffs: Sequence[complex], l: int, theta: float) -> complex:
    """``h_l(theta) = exp(i theta l) sum_j h_{j, l-j} exp(-2 i j theta)``."""
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.size != l + 1:
        raise ValueError(f"need {l + 1} coefficients")
    j = np.arange(l + 1)
    return complex(np.exp(1j * theta * l) * np.sum(coeffs * np.exp(-2j * j * theta)))


def fourier_matrix(l: int) -> np.ndarray:
    """Inverse map from ``h_l(theta_u)`` (``u = 0..l``) to ``h_{j, l-j}`` (``j = 0..l``)."""
    u = np.arange(l + 1)
    th = phase_grid(l)
    j = u[:, None]
    return np.exp(-1j * th[None, :] * l) * np.exp(2j * np.pi * j * u[None, :] / (l + 1)) / (l + 1)


def fourier_invert(values: Sequence[complex], l: int) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    if values.size != l + 1:
        raise ValueError(f"need exactly {l + 1} values for l={l}")
    return fourier_matrix(l) @ values


# ---------------------------------------------------------------------------
# multivariate


def multivariate_nodes(intervals: Sequence[tuple[float, float]], degrees: Sequence[int]) -> list[np.ndarray]:
    if len(intervals) != len(degrees):
        raise ValueError("one interval per mode is required")
    return [chebyshev_nodes(a, b, d) for (a, b), d in zip(intervals, degrees)]


def _apply_axis(mat: np.ndarray, tensor: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(mat, tensor, axes=([1], [axis])), 0, axis)


def interpolate_multi(
    values: np.ndarray, intervals: Sequence[tuple[float, float]], degrees: Sequence[int], policy: str = "lemma"
) -> np.ndarray:
    """Tensor-grid interpolation; returns ``p[l_1, ..., l_k]`` (monomial coefficients about 0)."""
    values = np.asarray(values)
    expect = tuple(d + 1 for d in degrees)
    if values.shape != expect:
        raise ValueError(f"value grid has shape {values.shape}, expected {expect}")
    for a, b in intervals:
        check_interval(a, b, policy)
    out = values.astype(complex)
    for q, ((a, b), d) in enumerate(zip(intervals, degrees)):
        out = _apply_axis(interpolation_matrix(a, b, d), out, q)
    return out


def multivariate_constant(intervals: Sequence[tuple[float, float]], degrees: Sequence[int]) -> float:
    """Worst-case coefficient error per unit node perturbation (exact over sign patterns)."""
    rows = [np.abs(interpolation_matrix(a, b, d)).sum(axis=1) for (a, b), d in zip(intervals, degrees)]
    best = 0.0
    for l in itertools.product(*[range(d + 1) for d in degrees]):
        best = max(best, float(np.prod([r[i] for r, i in zip(rows, l)])))
    return best


def fourier_invert_multi(values: np.ndarray, ls: Sequence[int]) -> np.ndarray:
    """Tensor Fourier inversion on the grid ``prod_q phase_grid(l_q)``; returns ``h[j_1, ..., j_k]``."""
    values = np.asarray(values, dtype=complex)
    if values.shape != tuple(l + 1 for l in ls):
        raise ValueError("value grid does not match the phase grid")
    out = values
    for q, l in enumerate(ls):
        out = _apply_axis(fourier_matrix(l), out, q)
    return out


# ---------------------------------------------------------------------------
# experiment design and frequency tables


@dataclass(frozen=True)
class Design:
    """Amplitude and phase grid for learning a few-mode block.

    ``degrees`` are per-mode degrees, ``total_degree`` caps ``sum l_q``.
    """

    intervals: tuple[tuple[float, float], ...]
    degrees: tuple[int, ...]
    total_degree: int
    policy: str = "theorem"

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple((float(a), float(b)) for a, b in self.intervals))
        object.__setattr__(self, "degrees", tuple(int(d) for d in self.degrees))
        if len(self.intervals) != len(self.degrees):
            raise ConfigurationError("one interval per mode is required")
        for a, b in self.intervals:
            check_interval(a, b, self.policy)

    @property
    def k(self) -> int:
        return len(self.degrees)

    def degree_vectors(self) -> list[tuple[int, ...]]:
        out = []
        for l in itertools.product(*[range(d + 1) for d in self.degrees]):
            if 0 < sum(l) <= self.total_degree:
                out.append(tuple(l))
        return out

    def node_vectors(self) -> list[tuple[float, ...]]:
        nodes = multivariate_nodes(self.intervals, self.degrees)
        return [tuple(float(x) for x in p) for p in itertools.product(*nodes)]

    def phase_vectors(self) -> list[tuple[float, ...]]:
        seen: dict[tuple, tuple[float, ...]] = {}
        for l in self.degree_vectors():
            for u in itertools.product(*[range(lq + 1) for lq in l]):
                frac = tuple((ui, lq + 1) for ui, lq in zip(u, l))
                key = tuple(_reduce(ui, n) for ui, n in frac)
                seen.setdefault(key, tuple(math.pi * ui / n for ui, n in frac))
        return [seen[k] for k in sorted(seen, key=lambda k: tuple(a / b for a, b in k))]

    def points(self) -> list[tuple[tuple[float, ...], tuple[float, ...]]]:
        """All (amplitudes, phases) pairs to measure."""
        return [(A, th) for th in self.phase_vectors() for A in self.node_vectors()]


def _reduce(u: int, n: int) -> tuple[int, int]:
    g = math.gcd(u, n)
    return (u // g, n // g) if u else (0, 1)


def _phase_key(theta: Iterable[float]) -> tuple[float, ...]:
    return tuple(round(float(t), 12) for t in theta)


@dataclass
class FrequencyTable:
    """Estimated ``<alpha|H|alpha>`` on a design, keyed by ``(amplitudes, phases)``."""

    design: Design
    values: dict[tuple[tuple[float, ...], tuple[float, ...]], float] = field(default_factory=dict)
    eps1: float = 0.0
    ledger_share: dict[tuple[tuple[float, ...], tuple[float, ...]], float] = field(default_factory=dict)

    def set(self, amps, phases, value: float, time_used: float = 0.0) -> None:
        key = (_phase_key(amps), _phase_key(phases))
        self.values[key] = float(value)
        self.ledger_share[key] = float(time_used)

    def get(self, amps, phases) -> float:
        key = (_phase_key(amps), _phase_key(phases))
        if key not in self.values:
            raise KeyError(f"missing table entry for A={amps}, theta={phases}")
        return self.values[key]

    def missing(self) -> list:
        return [(A, th) for A, th in self.design.points() if (_phase_key(A), _phase_key(th)) not in self.values]

    def write_csv(self, path: str | Path) -> None:
        k = self.design.k
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"A{q}" for q in range(k)] + [f"theta{q}" for q in range(k)] + ["estimate", "eps1", "ledger_share"])
            for (A, th), v in sorted(self.values.items()):
                row = [format(x, ".17g") for x in A + th]
                row += [format(v, ".17g"), format(self.eps1, ".17g"), format(self.ledger_share.get((A, th), 0.0), ".17g")]
                w.writerow(row)


@dataclass
class Recovery:
    coefficients: dict[Key, complex]
    error_bars: dict[Key, float]
    interpolation_constant: float


def recover_coefficients(table: FrequencyTable, hermitize: bool = True) -> Recovery:
    """Invert a complete frequency table into normal-ordered coefficients on the design's modes."""
    design = table.design
    missing = table.missing()
    if missing:
        raise ConfigurationError(f"frequency table is missing {len(missing)} entries, e.g. {missing[0]}")
    nodes = multivariate_nodes(design.intervals, design.degrees)
    shape = tuple(d + 1 for d in design.degrees)
    poly_at_phase: dict[tuple[float, ...], np.ndarray] = {}
    for th in design.phase_vectors():
        grid = np.empty(shape)
        for idx in itertools.product(*[range(s) for s in shape]):
            amps = tuple(float(nodes[q][i]) for q, i in enumerate(idx))
            grid[idx] = table.get(amps, th)
        poly_at_phase[_phase_key(th)] = interpolate_multi(grid, design.intervals, design.degrees, policy="none")
    rows = [np.abs(interpolation_matrix(a, b, d)).sum(axis=1) for (a, b), d in zip(design.intervals, design.degrees)]
    coeffs: dict[Key, complex] = {}
    bars: dict[Key, float] = {}
    for l in design.degree_vectors():
        grid_shape = tuple(lq + 1 for lq in l)
        vals = np.empty(grid_shape, dtype=complex)
        for u in itertools.product(*[range(lq + 1) for lq in l]):
            th = tuple(math.pi * ui / (lq + 1) for ui, lq in zip(u, l))
            vals[u] = poly_at_phase[_phase_key(th)][l]
        hj = fourier_invert_multi(vals, l)
        bar = float(np.prod([r[lq] for r, lq in zip(rows, l)])) * table.eps1
        for j in itertools.product(*[range(lq + 1) for lq in l]):
            jp = tuple(lq - jq for lq, jq in zip(l, j))
            coeffs[(tuple(j), jp)] = complex(hj[j])
            bars[(tuple(j), jp)] = bar
    if hermitize:
        coeffs = hermitize_coefficients(coeffs)
    return Recovery(coeffs, bars, multivariate_constant(design.intervals, design.degrees))


def hermitize_coefficients(coeffs: Mapping[Key, complex]) -> dict[Key, complex]:
    """Average each coefficient with the conjugate of its partner, so ``h[jp, j] = conj(h[j, jp])``."""
    out: dict[Key, complex] = {}
    for (j, jp), h in coeffs.items():
        partner = coeffs.get((jp, j), np.conj(h))
        out[(j, jp)] = 0.5 * (h + np.conj(partner))
    for (j, jp) in list(out):
        if j == jp:
            out[(j, jp)] = complex(out[(j, jp)].real, 0.0)
        else:
            out[(jp, j)] = np.conj(out[(j, jp)])
    return out
