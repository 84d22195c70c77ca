"""Low-intersection bosonic Hamiltonians.

A Hamiltonian is a sum of terms ``E_a``; each term acts on a small sorted mode
support and stores normal-ordered coefficients ``h[(j, jp)]`` multiplying
``prod_q (b_q^dag)^{j_q} b_q^{jp_q}`` over the support.  Hermitian partners are
stored explicitly.  The constant monomial is excluded: an identity shift only
adds a global phase and cannot be learned.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .fock import FockOperator, FockSpace, annihilation_matrix, coherent_ket, tensor

Key = tuple[tuple[int, ...], tuple[int, ...]]


class ConfigurationError(ValueError):
    """Inconsistent model or experiment configuration."""


@dataclass(frozen=True)
class Term:
    """One interaction ``E_a`` with its support and coefficient table."""

    support: tuple[int, ...]
    coeffs: Mapping[Key, complex]

    def __post_init__(self):
        support = tuple(int(q) for q in self.support)
        if list(support) != sorted(set(support)):
            raise ConfigurationError(f"support {support} must be strictly increasing")
        k = len(support)
        clean: dict[Key, complex] = {}
        for (j, jp), h in self.coeffs.items():
            j, jp = tuple(int(x) for x in j), tuple(int(x) for x in jp)
            if len(j) != k or len(jp) != k:
                raise ConfigurationError(f"key {(j, jp)} does not match support size {k}")
            if min(j + jp, default=0) < 0:
                raise ConfigurationError(f"negative exponent in key {(j, jp)}")
            clean[(j, jp)] = clean.get((j, jp), 0j) + complex(h)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "coeffs", clean)

    def degree(self) -> int:
        return max((sum(j) + sum(jp) for j, jp in self.coeffs), default=0)

    def mode_degrees(self) -> dict[int, int]:
        out = {q: 0 for q in self.support}
        for j, jp in self.coeffs:
            for pos, q in enumerate(self.support):
                out[q] = max(out[q], j[pos] + jp[pos])
        return out


@dataclass(frozen=True)
class BosonicHamiltonian:
    """Sum of low-intersection terms on ``m`` modes.

    ``d`` is the declared maximal degree, ``k`` the declared maximal support
    size and ``overlap`` the declared maximal number of other terms a term may
    overlap (``None`` means "not declared").
    """

    m: int
    terms: tuple[Term, ...]
    d: int
    k: int
    overlap: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if t.support and t.support[-1] >= self.m:
                raise ConfigurationError(f"support {t.support} exceeds mode count {self.m}")

    # -- monomial view ------------------------------------------------------

    def monomials(self) -> dict[Key, complex]:
        """Coefficients keyed by global exponent vectors of length ``m`` (terms summed)."""
        out: dict[Key, complex] = {}
        for t in self.terms:
            for (j, jp), h in t.coeffs.items():
                gj, gjp = [0] * self.m, [0] * self.m
                for pos, q in enumerate(t.support):
                    gj[q], gjp[q] = j[pos], jp[pos]
                key = (tuple(gj), tuple(gjp))
                out[key] = out.get(key, 0j) + h
        return out

    def restricted(self, modes: Iterable[int]) -> "BosonicHamiltonian":
        """Sum of the terms fully supported inside ``modes`` (same global indexing)."""
        keep = set(modes)
        terms = tuple(t for t in self.terms if set(t.support) <= keep)
        return BosonicHamiltonian(self.m, terms, self.d, self.k, self.overlap)

    def monomial_restricted(self, modes: Iterable[int]) -> "BosonicHamiltonian":
        """All monomials whose exponents vanish outside ``modes``, gathered into one term.

        Unlike :meth:`restricted` this keeps, e.g., the single-mode pieces of a
        term that also reaches outside ``modes``; it is what survives when the
        other modes are pinned to vacuum.
        """
        support = tuple(sorted(set(int(q) for q in modes)))
        coeffs: dict[Key, complex] = {}
        for (j, jp), h in self.monomials().items():
            if all(j[q] == 0 and jp[q] == 0 for q in range(self.m) if q not in support):
                key = (tuple(j[q] for q in support), tuple(jp[q] for q in support))
                coeffs[key] = coeffs.get(key, 0j) + h
        terms = (Term(support, coeffs),) if coeffs else ()
        return BosonicHamiltonian(self.m, terms, self.d, max(self.k, len(support)), self.overlap)

    def localized(self, modes: Sequence[int]) -> "BosonicHamiltonian":
        """Terms inside ``modes``, re-indexed onto ``len(modes)`` local modes (sorted order)."""
        modes = sorted(set(int(q) for q in modes))
        local = {q: i for i, q in enumerate(modes)}
        terms = tuple(
            Term(tuple(local[q] for q in t.support), t.coeffs) for t in self.terms if set(t.support) <= set(modes)
        )
        return BosonicHamiltonian(len(modes), terms, self.d, self.k, self.overlap)

    @property
    def supports(self) -> list[tuple[int, ...]]:
        return [t.support for t in self.terms]

    def mode_degrees(self) -> list[int]:
        """Per-mode maximal exponent sum ``j_q + jp_q`` over all monomials."""
        out = [0] * self.m
        for t in self.terms:
            for q, dq in t.mode_degrees().items():
                out[q] = max(out[q], dq)
        return out

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        terms = []
        for t in self.terms:
            coeffs = [
                {"j": list(j), "jp": list(jp), "re": float(h.real), "im": float(h.imag)}
                for (j, jp), h in sorted(t.coeffs.items())
            ]
            terms.append({"support": list(t.support), "coeffs": coeffs})
        out = {"m": self.m, "d": self.d, "k": self.k, "terms": terms}
        if self.overlap is not None:
            out["overlap"] = self.overlap
        return out

    @classmethod
    def from_dict(cls, doc: Mapping) -> "BosonicHamiltonian":
        try:
            terms = []
            for t in doc["terms"]:
                coeffs = {}
                for c in t["coeffs"]:
                    key = (tuple(c["j"]), tuple(c["jp"]))
                    coeffs[key] = coeffs.get(key, 0j) + complex(c.get("re", 0.0), c.get("im", 0.0))
                terms.append(Term(tuple(t["support"]), coeffs))
            return cls(int(doc["m"]), tuple(terms), int(doc["d"]), int(doc["k"]), doc.get("overlap"))
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed Hamiltonian document: {exc!r}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "BosonicHamiltonian":
        return cls.from_dict(json.loads(Path(path).read_text()))


def single_mode(coeffs: Mapping[tuple[int, int], complex], d: int | None = None) -> BosonicHamiltonian:
    """Convenience constructor from ``{(j, jp): h}`` on one mode."""
    table = {((j,), (jp,)): h for (j, jp), h in coeffs.items()}
    term = Term((0,), table)
    return BosonicHamiltonian(1, (term,), d if d is not None else term.degree(), 1)


# ---------------------------------------------------------------------------
# validation


@dataclass
class Diagnostics:
    hermiticity_violations: list[tuple[int, Key]] = field(default_factory=list)
    bound_violations: list[tuple[int, Key]] = field(default_factory=list)
    degree_violations: list[tuple[int, Key]] = field(default_factory=list)
    constant_terms: list[int] = field(default_factory=list)
    support_violations: list[int] = field(default_factory=list)
    overlap_counts: list[int] = field(default_factory=list)
    overlap_violations: list[int] = field(default_factory=list)

    @property
    def max_overlap(self) -> int:
        return max(self.overlap_counts, default=0)

    @property
    def valid(self) -> bool:
        return not (
            self.hermiticity_violations
            or self.bound_violations
            or self.degree_violations
            or self.constant_terms
            or self.support_violations
            or self.overlap_violations
        )


def validate(H: BosonicHamiltonian, tol: float = 1e-12) -> Diagnostics:
    """Check hermiticity, coefficient bounds, degrees and overlap counts."""
    diag = Diagnostics()
    for a, t in enumerate(H.terms):
        if len(t.support) > H.k:
            diag.support_violations.append(a)
        for (j, jp), h in t.coeffs.items():
            partner = t.coeffs.get((jp, j))
            if partner is None:
                partner = 0j
            if abs(partner - np.conj(h)) > tol:
                diag.hermiticity_violations.append((a, (j, jp)))
            if abs(h) > 1 + tol:
                diag.bound_violations.append((a, (j, jp)))
            if sum(j) + sum(jp) > H.d:
                diag.degree_violations.append((a, (j, jp)))
            if sum(j) + sum(jp) == 0 and abs(h) > 0:
                diag.constant_terms.append(a)
    supports = [set(t.support) for t in H.terms]
    for a, s in enumerate(supports):
        cnt = sum(1 for b, s2 in enumerate(supports) if b != a and s & s2)
        diag.overlap_counts.append(cnt)
        if H.overlap is not None and cnt > H.overlap:
            diag.overlap_violations.append(a)
    return diag


# ---------------------------------------------------------------------------
# matrix realization


def _mode_power_matrix(b: np.ndarray, j: int, jp: int) -> np.ndarray:
    bd = b.conj().T
    return np.linalg.matrix_power(bd, j) @ np.linalg.matrix_power(b, jp)


def to_operator(H: BosonicHamiltonian, space: FockSpace, restrict_to: Sequence[int] | None = None) -> FockOperator:
    """Dense matrix of ``H`` (or of the terms inside ``restrict_to``).

    With ``restrict_to`` the space may either cover all ``H.m`` modes (global
    indexing) or exactly the restricted modes, in increasing order.
    """
    if restrict_to is not None:
        modes = sorted(set(int(q) for q in restrict_to))
        source = H.restricted(modes)
    else:
        modes = list(range(H.m))
        source = H
    if space.n_modes == H.m:
        local_of = {q: q for q in range(H.m)}
    elif space.n_modes == len(modes):
        local_of = {q: i for i, q in enumerate(modes)}
    else:
        raise ConfigurationError(
            f"space has {space.n_modes} modes but the Hamiltonian needs {H.m} (or {len(modes)} when restricted)"
        )
    bs = [annihilation_matrix(d) for d in space.dims]
    mat = np.zeros((space.total_dim, space.total_dim), dtype=complex)
    for t in source.terms:
        for (j, jp), h in t.coeffs.items():
            if h == 0:
                continue
            factors = [np.eye(d, dtype=complex) for d in space.dims]
            for pos, q in enumerate(t.support):
                lq = local_of[q]
                factors[lq] = _mode_power_matrix(bs[lq], j[pos], jp[pos])
            mat += h * tensor(*factors)
    return FockOperator(space, mat)


# ---------------------------------------------------------------------------
# coherent expectations


def coherent_expectation(H: BosonicHamiltonian, alpha: complex) -> complex:
    """Closed form ``sum h conj(alpha)^j alpha^jp`` for a single-mode Hamiltonian."""
    if H.m != 1:
        raise ConfigurationError("coherent_expectation is single-mode; use coherent_expectation_multi")
    return complex(sum(h * np.conj(alpha) ** j[0] * alpha ** jp[0] for (j, jp), h in H.monomials().items()))


def coherent_expectation_multi(H: BosonicHamiltonian, alphas: Sequence[complex]) -> float:
    """Closed-form product-coherent expectation on any number of modes."""
    alphas = np.asarray(alphas, dtype=complex)
    if alphas.shape != (H.m,):
        raise ConfigurationError(f"need {H.m} amplitudes")
    total = 0j
    for (j, jp), h in H.monomials().items():
        total += h * np.prod(np.conj(alphas) ** np.array(j) * alphas ** np.array(jp))
    return float(total.real)


def phase_polynomial(H: BosonicHamiltonian, thetas: Sequence[float]) -> dict[tuple[int, ...], complex]:
    """Amplitude-polynomial coefficients at fixed phases.

    Returns ``{(l_0, ..., l_{m-1}): h_l(theta)}`` such that
    ``<alpha|H|alpha> = sum_l h_l(theta) prod_q A_q^{l_q}`` with
    ``alpha_q = A_q exp(i theta_q)``.
    """
    thetas = np.asarray(thetas, dtype=float)
    out: dict[tuple[int, ...], complex] = {}
    for (j, jp), h in H.monomials().items():
        l = tuple(a + b for a, b in zip(j, jp))
        phase = np.exp(1j * np.dot(thetas, np.array(jp) - np.array(j)))
        out[l] = out.get(l, 0j) + h * phase
    return out


# ---------------------------------------------------------------------------
# projected (effective) Hamiltonian in the Psi basis


def _psi_change_of_basis(s: float) -> np.ndarray:
    """Columns express ``Psi_0, Psi_1`` in the non-orthogonal pair ``(|0>, |alpha>)``."""
    c = np.sqrt(1.0 - s * s)
    return np.array([[1.0, -s / c], [0.0, 1.0 / c]], dtype=complex)


def mode_block_closed_form(alpha: complex, j: int, jp: int) -> np.ndarray:
    """Matrix of ``(b^dag)^j b^jp`` in the per-mode Psi basis, from coherent algebra.

    A zero amplitude pins the mode to vacuum and yields a 1x1 block.
    """
    if alpha == 0:
        return np.array([[1.0 + 0j if (j == 0 and jp == 0) else 0j]])
    s = float(np.exp(-0.5 * abs(alpha) ** 2))
    ca = np.conj(alpha)
    m = np.zeros((2, 2), dtype=complex)
    m[0, 0] = 1.0 if (j == 0 and jp == 0) else 0.0
    m[0, 1] = (alpha ** jp) * s if j == 0 else 0.0
    m[1, 0] = (ca ** j) * s if jp == 0 else 0.0
    m[1, 1] = (ca ** j) * (alpha ** jp)
    c = _psi_change_of_basis(s)
    return c.conj().T @ m @ c


def psi_basis_vectors(alpha: complex, dim: int, tol: float = 1e-10) -> np.ndarray:
    """Truncated ``Psi_0, Psi_1`` as columns (Gram-Schmidt plus one re-orthonormalization)."""
    vac = np.zeros(dim, dtype=complex)
    vac[0] = 1.0
    if alpha == 0:
        return vac[:, None]
    coh = coherent_ket(alpha, dim, tol)
    psi1 = coh - vac * np.vdot(vac, coh)
    psi1 /= np.linalg.norm(psi1)
    psi1 -= vac * np.vdot(vac, psi1)
    psi1 /= np.linalg.norm(psi1)
    return np.stack([vac, psi1], axis=1)


def mode_block_truncated(alpha: complex, j: int, jp: int, dim: int, tol: float = 1e-10) -> np.ndarray:
    """Same block as :func:`mode_block_closed_form` but from truncated vectors.

    Uses ``<b^j u | b^jp v>``, which only applies lowering operators and is
    therefore exact inside the truncated space.
    """
    basis = psi_basis_vectors(alpha, dim, tol)
    b = annihilation_matrix(dim)
    left = np.linalg.matrix_power(b, j) @ basis
    right = np.linalg.matrix_power(b, jp) @ basis
    return left.conj().T @ right


@dataclass(frozen=True)
class ProjectedHamiltonian:
    """Effective Hamiltonian on the stabilized subspace, in the product Psi basis.

    ``block_dims[q]`` is 2 for an active mode and 1 for a vacuum-pinned mode;
    basis index order follows the mode order (mode 0 most significant).
    """

    alphas: tuple[complex, ...]
    hproj: np.ndarray
    happrox: np.ndarray
    approx: str
    expectation: float

    @property
    def error(self) -> float:
        """Operator norm ``||H~proj - Hproj||``."""
        return float(np.linalg.norm(self.happrox - self.hproj, 2))

    @property
    def block_dims(self) -> tuple[int, ...]:
        return tuple(1 if a == 0 else 2 for a in self.alphas)


def coherent_psi_coordinates(alphas: Sequence[complex]) -> np.ndarray:
    """Coordinates of the product coherent state in the product Psi basis."""
    vecs = []
    for a in alphas:
        if a == 0:
            vecs.append(np.array([1.0 + 0j]))
        else:
            s = float(np.exp(-0.5 * abs(a) ** 2))
            vecs.append(np.array([s, np.sqrt(1.0 - s * s)], dtype=complex))
    out = np.ones(1, dtype=complex)
    for v in vecs:
        out = np.kron(out, v)
    return out


def projected_hamiltonian(
    H: BosonicHamiltonian,
    alphas: Sequence[complex],
    space: FockSpace | None = None,
    approx: str | None = None,
    tol: float = 1e-10,
) -> ProjectedHamiltonian:
    """Project ``H`` onto ``span{|0>, |alpha_q>}`` per mode.

    Without ``space`` the blocks come from exact coherent-state algebra; with a
    space they are computed from truncated vectors (leakage-checked).  ``approx``
    selects the approximant: ``"coherent"`` is ``|alpha><alpha|H|alpha><alpha|``
    and ``"diagonal"`` keeps the diagonal of ``Hproj``.  The default is the
    coherent form for one active mode and the diagonal form otherwise.
    """
    alphas = tuple(complex(a) for a in alphas)
    if len(alphas) != H.m:
        raise ConfigurationError(f"need {H.m} amplitudes, got {len(alphas)}")
    if space is not None and space.n_modes != H.m:
        raise ConfigurationError("space must cover every mode of H")
    n_active = sum(1 for a in alphas if a != 0)
    if approx is None:
        approx = "coherent" if n_active <= 1 else "diagonal"
    if approx not in ("coherent", "diagonal"):
        raise ConfigurationError(f"unknown approximant {approx!r}")
    dims = [1 if a == 0 else 2 for a in alphas]
    n = int(np.prod(dims))
    cache: dict[tuple[int, int, int], np.ndarray] = {}

    def block(q: int, j: int, jp: int) -> np.ndarray:
        key = (q, j, jp)
        if key not in cache:
            if space is None:
                cache[key] = mode_block_closed_form(alphas[q], j, jp)
            else:
                cache[key] = mode_block_truncated(alphas[q], j, jp, space.dims[q], tol)
        return cache[key]

    hproj = np.zeros((n, n), dtype=complex)
    for (j, jp), h in H.monomials().items():
        factors = [block(q, j[q], jp[q]) for q in range(H.m)]
        hproj += h * tensor(*factors)
    hproj = 0.5 * (hproj + hproj.conj().T)
    expectation = coherent_expectation_multi(H, alphas)
    if approx == "coherent":
        vec = coherent_psi_coordinates(alphas)
        happrox = expectation * np.outer(vec, vec.conj())
    else:
        happrox = np.diag(np.diag(hproj))
    return ProjectedHamiltonian(alphas, hproj, happrox, approx, expectation)


# ---------------------------------------------------------------------------
# clusters, cluster graph and coloring


def maximal_supports(supports: Iterable[Sequence[int]]) -> list[tuple[int, ...]]:
    """Distinct nonempty supports that are not strictly contained in another one."""
    uniq = sorted({tuple(sorted(int(q) for q in s)) for s in supports if len(s)}, key=lambda s: (len(s), s))
    return sorted(s for s in uniq if not any(set(s) < set(o) for o in uniq))


def interacting_clusters(H: BosonicHamiltonian) -> list[tuple[int, ...]]:
    """Maximal term supports (supports contained in another support are dropped)."""
    return maximal_supports(t.support for t in H.terms)


@dataclass
class ClusterGraph:
    vertices: list[tuple[int, ...]]
    edges: set[tuple[int, int]]
    coloring: dict[int, int] | None = None

    def neighbors(self, v: int) -> set[int]:
        return {b if a == v else a for a, b in self.edges if v in (a, b)}

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    @property
    def max_degree(self) -> int:
        return max((self.degree(v) for v in range(len(self.vertices))), default=0)

    @property
    def n_colors(self) -> int:
        return len(set(self.coloring.values())) if self.coloring else 0

    def color_classes(self) -> list[list[tuple[int, ...]]]:
        if self.coloring is None:
            raise ValueError("graph is not colored")
        classes: dict[int, list[tuple[int, ...]]] = {}
        for v, c in sorted(self.coloring.items()):
            classes.setdefault(c, []).append(self.vertices[v])
        return [classes[c] for c in sorted(classes)]


def cluster_graph(clusters: Sequence[Sequence[int]]) -> ClusterGraph:
    """Edge when two clusters overlap or both overlap a common third cluster."""
    verts = [tuple(sorted(c)) for c in clusters]
    sets = [set(c) for c in verts]
    n = len(verts)
    touch = [[bool(sets[a] & sets[b]) for b in range(n)] for a in range(n)]
    edges = set()
    for a, b in itertools.combinations(range(n), 2):
        if touch[a][b] or any(touch[a][c] and touch[b][c] for c in range(n) if c not in (a, b)):
            edges.add((a, b))
    return ClusterGraph(verts, edges)


def greedy_color(graph: ClusterGraph) -> dict[int, int]:
    """Greedy coloring, visiting vertices by decreasing degree (ties by index)."""
    order = sorted(range(len(graph.vertices)), key=lambda v: (-graph.degree(v), v))
    nbrs = {v: graph.neighbors(v) for v in order}
    colors: dict[int, int] = {}
    for v in order:
        used = {colors[u] for u in nbrs[v] if u in colors}
        c = 0
        while c in used:
            c += 1
        colors[v] = c
    graph.coloring = colors
    return colors


def coloring_valid(graph: ClusterGraph) -> bool:
    """Same-colored clusters are disjoint and share no common neighbor cluster."""
    if graph.coloring is None:
        return False
    sets = [set(v) for v in graph.vertices]
    for a, b in itertools.combinations(range(len(sets)), 2):
        if graph.coloring[a] != graph.coloring[b]:
            continue
        if sets[a] & sets[b]:
            return False
        if any(sets[c] & sets[a] and sets[c] & sets[b] for c in range(len(sets)) if c not in (a, b)):
            return False
    return True


# ---------------------------------------------------------------------------
# generators for tests and experiments


def all_keys(k: int, d: int, mode_degrees: Sequence[int] | None = None) -> list[Key]:
    """All non-constant normal-ordered keys on ``k`` modes with total degree <= d."""
    limits = list(mode_degrees) if mode_degrees is not None else [d] * k
    keys = []
    for j in itertools.product(*[range(lim + 1) for lim in limits]):
        for jp in itertools.product(*[range(lim + 1) for lim in limits]):
            if any(a + b > lim for a, b, lim in zip(j, jp, limits)):
                continue
            tot = sum(j) + sum(jp)
            if 0 < tot <= d:
                keys.append((tuple(j), tuple(jp)))
    return keys


def random_hermitian_coeffs(rng: np.random.Generator, keys: Sequence[Key], scale: float = 1.0) -> dict[Key, complex]:
    """Random coefficients on ``keys`` with hermitian pairing and ``|h| <= scale``."""
    out: dict[Key, complex] = {}
    for j, jp in keys:
        if (j, jp) in out:
            continue
        r = scale * np.sqrt(rng.uniform())
        phi = rng.uniform(0, 2 * np.pi)
        if j == jp:
            out[(j, jp)] = complex(r * np.cos(phi), 0.0)
        else:
            h = r * np.exp(1j * phi)
            out[(j, jp)] = h
            out[(jp, j)] = np.conj(h)
    return out


def random_single_mode(rng: np.random.Generator, d: int, scale: float = 1.0) -> BosonicHamiltonian:
    coeffs = random_hermitian_coeffs(rng, all_keys(1, d), scale)
    return BosonicHamiltonian(1, (Term((0,), coeffs),), d, 1)


def random_low_intersection(
    rng: np.random.Generator, m: int, k: int, d: int, n_terms: int, scale: float = 1.0
) -> BosonicHamiltonian:
    """Random terms on random supports of size 1..k (degree <= d)."""
    terms = []
    for _ in range(n_terms):
        size = int(rng.integers(1, min(k, m) + 1))
        support = tuple(sorted(rng.choice(m, size=size, replace=False).tolist()))
        keys = [key for key in all_keys(size, d) if all(a + b > 0 for a, b in zip(*key))] or all_keys(size, d)
        coeffs = random_hermitian_coeffs(rng, keys, scale)
        terms.append(Term(support, coeffs))
    H = BosonicHamiltonian(m, tuple(terms), d, k)
    diag = validate(H)
    return BosonicHamiltonian(m, tuple(terms), d, k, diag.max_overlap)


def chain_hamiltonian(
    rng: np.random.Generator, m: int, mode_degree: int = 1, scale: float = 1.0, d: int = 2
) -> BosonicHamiltonian:
    """Nearest-neighbor chain: one two-mode term per bond with per-mode degree bound."""
    terms = []
    for q in range(m - 1):
        keys = all_keys(2, d, [mode_degree, mode_degree])
        terms.append(Term((q, q + 1), random_hermitian_coeffs(rng, keys, scale)))
    H = BosonicHamiltonian(m, tuple(terms), d, 2)
    return BosonicHamiltonian(m, tuple(terms), d, 2, validate(H).max_overlap)
