"""End-to-end learning: single-mode, few-mode and multi-mode (color rounds).

Every path shares one pipeline.  For each amplitude/phase design point a
backend supplies a frequency oracle for ``<alpha|H|alpha>``, the robust
estimator localizes that frequency, and the completed table is inverted into
coefficients.  Backends differ only in how the oracle is realized:

``exact-oracle``
    closed-form expectations (tests the estimator and the inversion only);
``ideal-projected``
    shot-noise samples of the evolution generated by the projected Hamiltonian,
    i.e. the infinite-dissipation limit;
``simulated-dissipation``
    shot-noise samples of the full master-equation circuit.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Protocol, Sequence

import numpy as np

from .experiment import (
    CircuitOracle,
    EvolutionLedger,
    ExactOracle,
    ProjectedSignal,
    SimulatedSignal,
)
from .fock import FockSpace, TruncationError, leakage, required_dim
from .freqest import FreqEstConfig, FrequencyOracle, estimate, schedule
from .hamiltonian import (
    BosonicHamiltonian,
    ConfigurationError,
    Key,
    all_keys,
    cluster_graph,
    coherent_expectation_multi,
    coloring_valid,
    greedy_color,
    maximal_supports,
)
from .lindblad import DissipationSpec, decoupling_dissipation, r_for_degree, standard_dissipation
from .recovery import Design, FrequencyTable, interpolation_matrix, recover_coefficients

BACKENDS = ("exact-oracle", "ideal-projected", "simulated-dissipation")


# ---------------------------------------------------------------------------
# configuration and report


@dataclass(frozen=True)
class LearnConfig:
    """Learning parameters.

    Amplitude interval: ``a_minus`` defaults to ``kappa_a * sqrt(log(1/eps))``
    and ``a_plus`` to ``5 * a_minus`` (so that ``a_plus - a_minus = 4 a_minus``).
    Frequency precision: ``eps1`` defaults to ``eps1_fraction * eps`` divided by
    the worst interpolation amplification of the design.  Median repetitions
    grow with ``log(1/delta1)`` where ``delta1 = delta / n_frequencies``.
    """

    eps: float = 0.1
    delta: float = 0.1
    d: int = 2
    k: int = 1
    mode_degree: int | None = None
    a_minus: float | None = None
    a_plus: float | None = None
    kappa_a: float = 1.5
    interval_policy: str = "theorem"
    eps1: float | None = None
    eps1_fraction: float = 0.5
    coeff_bound: float = 1.0
    phi: float | None = None
    c3: int = 21
    c4: int = 12
    median_scale: float = 3.0
    shots: int = 100
    backend: str = "exact-oracle"
    gamma: float | None = None
    gamma_policy: str = "calibrate"
    kappa_gamma: float = 1.0
    gap_target: float = 0.05
    dims: tuple[int, ...] | int = 40
    boundary_dim: int = 2
    truncation: str = "kernel"
    leak_tol: float = 1e-6

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigurationError("eps must be positive")
        if not 0 < self.delta < 1:
            raise ConfigurationError("delta must lie in (0, 1)")
        if self.d < 1 or self.k < 1:
            raise ConfigurationError("d and k must be >= 1")
        if self.backend not in BACKENDS:
            raise ConfigurationError(f"unknown backend {self.backend!r}; choose from {BACKENDS}")
        if self.gamma_policy not in ("calibrate", "formula", "fixed"):
            raise ConfigurationError(f"unknown gamma policy {self.gamma_policy!r}")
        if self.gamma_policy == "fixed" and self.gamma is None:
            raise ConfigurationError("gamma_policy 'fixed' needs gamma")
        if isinstance(self.dims, list):
            object.__setattr__(self, "dims", tuple(self.dims))

    @property
    def interval(self) -> tuple[float, float]:
        a = self.a_minus if self.a_minus is not None else self.kappa_a * math.sqrt(math.log(1 / self.eps))
        b = self.a_plus if self.a_plus is not None else 5 * a
        return float(a), float(b)

    def per_mode_degree(self) -> int:
        return self.mode_degree if self.mode_degree is not None else self.d

    def formula_gamma(self, m: int = 1) -> float:
        """``kappa_gamma * eps^-1 * log(1/eps)^(2d + 1/2)``, times ``m^2`` for several modes."""
        lg = max(math.log(1 / self.eps), 1.0)
        return self.kappa_gamma / self.eps * lg ** (2 * self.d + 0.5) * (m**2 if m > 1 else 1)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["dims"] = list(self.dims) if isinstance(self.dims, tuple) else self.dims
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "LearnConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigurationError(f"unknown learn options {sorted(unknown)}")
        doc = dict(doc)
        if isinstance(doc.get("dims"), list):
            doc["dims"] = tuple(doc["dims"])
        return cls(**doc)


def _key_str(key: Key) -> str:
    j, jp = key
    return "j=" + ",".join(map(str, j)) + ";jp=" + ",".join(map(str, jp))


@dataclass
class LearnReport:
    coefficients: dict[Key, complex]
    error_bars: dict[Key, float]
    total_evolution_time: float
    experiment_count: int
    stages: dict[str, dict]
    diagnostics: dict[str, Any]
    config: dict

    def max_error(self, H: BosonicHamiltonian) -> float:
        """Largest coefficient deviation from ``H`` over the union of recovered and true keys."""
        truth = H.monomials()
        keys = set(truth) | set(self.coefficients)
        return float(max((abs(self.coefficients.get(k, 0) - truth.get(k, 0)) for k in keys), default=0.0))

    def ledger_consistent(self) -> bool:
        st = sum(v["time"] for v in self.stages.values())
        cnt = sum(v["count"] for v in self.stages.values())
        return math.isclose(st, self.total_evolution_time, rel_tol=1e-12, abs_tol=1e-12) and cnt == self.experiment_count

    def to_dict(self) -> dict:
        coeffs = [
            {"key": _key_str(k), "j": list(k[0]), "jp": list(k[1]), "re": v.real, "im": v.imag,
             "error_bar": self.error_bars.get(k, 0.0)}
            for k, v in sorted(self.coefficients.items())
        ]
        return {
            "coefficients": coeffs,
            "total_evolution_time": self.total_evolution_time,
            "experiment_count": self.experiment_count,
            "stages": self.stages,
            "diagnostics": self.diagnostics,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True) + "\n"

    def write_coefficients_csv(self, path: str | Path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", "jp", "re", "im", "error_bar"])
            for k, v in sorted(self.coefficients.items()):
                w.writerow([" ".join(map(str, k[0])), " ".join(map(str, k[1])), format(v.real, ".17g"),
                            format(v.imag, ".17g"), format(self.error_bars.get(k, 0.0), ".17g")])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)) and not isinstance(obj, bool):
        return int(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


# ---------------------------------------------------------------------------
# backends


class Backend(Protocol):
    name: str
    m: int

    def oracle(self, modes: Sequence[int], alphas: Sequence[complex], t_min: float, ledger: EvolutionLedger,
               stage: str) -> FrequencyOracle:
        ...

    def diagnostics(self) -> dict:
        ...


def _full_alphas(m: int, modes: Sequence[int], alphas: Sequence[complex]) -> list[complex]:
    out = [0j] * m
    for q, a in zip(modes, alphas):
        out[q] = complex(a)
    return out


@dataclass
class ExactBackend:
    """Closed-form ``<alpha|H|alpha>``, optionally corrupted (antipodal with probability ``q``)."""

    H: BosonicHamiltonian
    q: float = 0.0
    noise: float = 0.0
    name: str = "exact-oracle"

    @property
    def m(self) -> int:
        return self.H.m

    def oracle(self, modes, alphas, t_min, ledger, stage):
        theta = coherent_expectation_multi(self.H, _full_alphas(self.H.m, modes, alphas))
        return ExactOracle(theta, self.q, self.noise, ledger=ledger, stage=stage)

    def diagnostics(self) -> dict:
        return {"backend": self.name}


@dataclass
class ProjectedBackend:
    """Shot-noise circuit samples in the infinite-dissipation limit.

    Modes outside the learned cluster are pinned to vacuum, so only terms
    inside the cluster survive the projection.
    """

    H: BosonicHamiltonian
    shots: int = 100
    name: str = "ideal-projected"
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def m(self) -> int:
        return self.H.m

    def oracle(self, modes, alphas, t_min, ledger, stage):
        full = tuple(_full_alphas(self.H.m, modes, alphas))
        if full not in self._cache:
            self._cache[full] = ProjectedSignal(self.H, full)
        return CircuitOracle(self._cache[full], self.shots, ledger=ledger, stage=stage)

    def diagnostics(self) -> dict:
        return {"backend": self.name, "signals": len(self._cache)}


@dataclass
class SimulatedBackend:
    """Full master-equation circuit on the cluster plus its vacuum-pinned boundary.

    Cluster modes carry ``b^r(b - alpha)``-type stabilization at truncation
    ``dims``; boundary modes (modes sharing a term with the cluster) carry the
    decoupling jumps at ``boundary_dim``.  Signals are cached per amplitude
    vector so repeated runs only redraw shot noise.
    """

    H: BosonicHamiltonian
    gamma: float
    dims: tuple[int, ...] | int = 40
    boundary_dim: int = 2
    truncation: str = "kernel"
    shots: int = 100
    leak_tol: float = 1e-6
    r: int | None = None
    name: str = "simulated-dissipation"
    _cache: dict = field(default_factory=dict, repr=False)
    max_leakage: float = 0.0

    @property
    def m(self) -> int:
        return self.H.m

    def _dim(self, q: int) -> int:
        return int(self.dims) if isinstance(self.dims, int) else int(self.dims[q])

    def boundary(self, modes: Sequence[int]) -> list[int]:
        inside = set(modes)
        out = set()
        for t in self.H.terms:
            if set(t.support) & inside:
                out |= set(t.support) - inside
        return sorted(out)

    def signal(self, modes: Sequence[int], alphas: Sequence[complex], t_min: float) -> SimulatedSignal:
        key = (tuple(modes), tuple(complex(a) for a in alphas))
        if key in self._cache:
            return self._cache[key]
        for q, a in zip(modes, alphas):
            lk = leakage(a, self._dim(q))
            if lk > self.leak_tol:
                raise TruncationError(
                    f"amplitude {abs(a):.3f} leaks {lk:.2e} > {self.leak_tol:.1e} at dim {self._dim(q)}",
                    required_dim=required_dim(a, self.leak_tol),
                )
            self.max_leakage = max(self.max_leakage, lk)
        bnd = self.boundary(modes)
        local_modes = sorted(set(modes) | set(bnd))
        loc = {q: i for i, q in enumerate(local_modes)}
        dims = tuple(self._dim(q) if q in modes else self.boundary_dim for q in local_modes)
        space = FockSpace(dims)
        r = self.r if self.r is not None else r_for_degree(self.H.d)
        jumps = []
        amp = dict(zip(modes, alphas))
        for q in local_modes:
            if q in amp:
                jumps.extend(standard_dissipation(loc[q], r, amp[q], self.truncation))
            else:
                jumps.extend(decoupling_dissipation(loc[q], r))
        H_local = self.H.localized(local_modes)
        local_alphas = [amp.get(q, 0j) for q in local_modes]
        sig = SimulatedSignal(H_local, DissipationSpec(tuple(jumps), self.gamma), local_alphas, space, t_min)
        self._cache[key] = sig
        return sig

    def oracle(self, modes, alphas, t_min, ledger, stage):
        return CircuitOracle(self.signal(modes, alphas, t_min), self.shots, ledger=ledger, stage=stage)

    def diagnostics(self) -> dict:
        r = self.r if self.r is not None else r_for_degree(self.H.d)
        return {"backend": self.name, "gamma": self.gamma, "max_leakage": self.max_leakage,
                "truncation": self.truncation, "signals": len(self._cache),
                "dims": list(self.dims) if not isinstance(self.dims, int) else self.dims,
                "boundary_dim": self.boundary_dim, "leak_tol": self.leak_tol,
                "second_jump_power": r, "single_jump_clamp": r <= 1}


def make_backend(H: BosonicHamiltonian, cfg: LearnConfig, **kw) -> Backend:
    """Backend named by ``cfg.backend``; the simulated one resolves ``gamma`` by policy."""
    if cfg.backend == "exact-oracle":
        return ExactBackend(H, **kw)
    if cfg.backend == "ideal-projected":
        return ProjectedBackend(H, cfg.shots)
    gamma = resolve_gamma(H, cfg)
    return SimulatedBackend(H, gamma, cfg.dims, cfg.boundary_dim, cfg.truncation, cfg.shots, cfg.leak_tol, **kw)


def resolve_gamma(H: BosonicHamiltonian, cfg: LearnConfig, modes: Sequence[int] | None = None) -> float:
    """Dissipation strength for the simulated backend.

    ``fixed`` uses ``cfg.gamma``; ``formula`` the asymptotic scaling with unit
    constant; ``calibrate`` the smallest strength keeping the adiabatic gap
    below ``cfg.gap_target`` at the longest schedule time, evaluated at the
    largest amplitude node with zero phase on a single cluster.
    """
    if cfg.gamma_policy == "fixed":
        return float(cfg.gamma)
    if cfg.gamma_policy == "formula":
        return cfg.formula_gamma(H.m)
    from .verify import calibrate_gamma

    modes = list(modes) if modes is not None else list(range(min(H.m, cfg.k)))
    design = _design(cfg, len(modes))
    phi, eps1 = _phi(cfg, design), _eps1(cfg, design)
    t_max = schedule(phi, eps1, cfg.c3, cfg.c4).max_time
    a_top = max(max(v) for v in design.node_vectors())
    backend = SimulatedBackend(H, 1.0, cfg.dims, cfg.boundary_dim, cfg.truncation, cfg.shots, cfg.leak_tol)
    bnd = backend.boundary(modes)
    local_modes = sorted(set(modes) | set(bnd))
    dims = tuple(backend._dim(q) if q in modes else cfg.boundary_dim for q in local_modes)
    alphas = [a_top if q in modes else 0.0 for q in local_modes]
    return calibrate_gamma(
        H.localized(local_modes), alphas, t_max, cfg.gap_target, dims=dims, truncation=cfg.truncation
    ).gamma


# ---------------------------------------------------------------------------
# design helpers


def _design(cfg: LearnConfig, k: int) -> Design:
    a, b = cfg.interval
    return Design(((a, b),) * k, (cfg.per_mode_degree(),) * k, cfg.d, cfg.interval_policy)


def _amplification(design: Design) -> float:
    rows = [np.abs(interpolation_matrix(a, b, d)).sum(axis=1) for (a, b), d in zip(design.intervals, design.degrees)]
    return max(float(np.prod([r[lq] for r, lq in zip(rows, l)])) for l in design.degree_vectors())


def _eps1(cfg: LearnConfig, design: Design) -> float:
    return cfg.eps1 if cfg.eps1 is not None else cfg.eps1_fraction * cfg.eps / _amplification(design)


def _phi(cfg: LearnConfig, design: Design) -> float:
    """Prior frequency bound ``coeff_bound * sum_keys prod_q A_plus^(j_q + jp_q)``."""
    if cfg.phi is not None:
        return float(cfg.phi)
    tops = [b for _, b in design.intervals]
    total = 0.0
    for j, jp in all_keys(design.k, design.total_degree, design.degrees):
        total += math.prod(t ** (a + c) for t, a, c in zip(tops, j, jp))
    return cfg.coeff_bound * total


def _median_reps(cfg: LearnConfig, delta1: float) -> int:
    return max(cfg.c3, int(math.ceil(cfg.median_scale * math.log(1 / delta1))))


# ---------------------------------------------------------------------------
# learning


@dataclass
class _ClusterResult:
    modes: tuple[int, ...]
    coefficients: dict[Key, complex]
    error_bars: dict[Key, float]
    ledger: EvolutionLedger
    diagnostics: dict


def _learn_cluster(backend: Backend, modes: Sequence[int], cfg: LearnConfig, rng: np.random.Generator,
                   delta1: float | None = None, stage_prefix: str = "") -> _ClusterResult:
    modes = tuple(int(q) for q in modes)
    design = _design(cfg, len(modes))
    points = design.points()
    phi = _phi(cfg, design)
    eps1 = _eps1(cfg, design)
    if not eps1 < phi:
        raise ConfigurationError(f"frequency precision {eps1} is not below the prior bound {phi}")
    delta1 = delta1 if delta1 is not None else cfg.delta / len(points)
    fcfg = FreqEstConfig(phi, eps1, _median_reps(cfg, delta1), cfg.c4, cfg.shots)
    t_min = math.pi / (2 * phi)
    ledger = EvolutionLedger()
    table = FrequencyTable(design, eps1=eps1)
    traces = []
    for idx, (amps, phases) in enumerate(points):
        alphas = [A * np.exp(1j * th) for A, th in zip(amps, phases)]
        stage = f"{stage_prefix}freq{idx:03d}"
        before = ledger.total_time
        oracle = backend.oracle(modes, alphas, t_min, ledger, stage)
        est = estimate(oracle, fcfg, rng)
        table.set(amps, phases, est.theta, ledger.total_time - before)
        traces.append({"amplitudes": list(amps), "phases": list(phases), "estimate": est.theta,
                       "interval": list(est.interval), "max_time": est.max_time})
    rec = recover_coefficients(table)
    m = backend.m
    coeffs: dict[Key, complex] = {}
    bars: dict[Key, float] = {}
    for (j, jp), h in rec.coefficients.items():
        gj, gjp = [0] * m, [0] * m
        for pos, q in enumerate(modes):
            gj[q], gjp[q] = j[pos], jp[pos]
        key = (tuple(gj), tuple(gjp))
        coeffs[key] = h
        bars[key] = rec.error_bars[(j, jp)]
    sch = schedule(phi, eps1, fcfg.c3, fcfg.c4)
    diag = {
        "modes": list(modes),
        "intervals": [list(iv) for iv in design.intervals],
        "degrees": list(design.degrees),
        "interval_policy": design.policy,
        "n_frequencies": len(points),
        "phi": phi,
        "eps1": eps1,
        "delta1": delta1,
        "median_repetitions": fcfg.c3,
        "levels": sch.levels,
        "max_evolution_time": sch.max_time,
        "interpolation_constant": rec.interpolation_constant,
        "amplification": _amplification(design),
        "frequencies": traces,
    }
    return _ClusterResult(modes, coeffs, bars, ledger, diag)


def learn_few_mode(backend: Backend, cfg: LearnConfig, rng: np.random.Generator,
                   modes: Sequence[int] | None = None) -> LearnReport:
    """Learn every coefficient supported on ``modes`` (default: all modes of the backend)."""
    modes = list(range(backend.m)) if modes is None else list(modes)
    res = _learn_cluster(backend, modes, cfg, rng)
    diag = dict(res.diagnostics)
    diag["backend"] = backend.diagnostics()
    return LearnReport(res.coefficients, res.error_bars, res.ledger.total_time, res.ledger.experiment_count,
                       res.ledger.to_dict()["stages"], diag, cfg.to_dict())


def learn_single_mode(backend: Backend, cfg: LearnConfig, rng: np.random.Generator, mode: int = 0) -> LearnReport:
    """Single-mode protocol: loops over degrees, phases and amplitude nodes, then inverts."""
    return learn_few_mode(backend, cfg, rng, [mode])


def color_rounds(supports: Sequence[Sequence[int]]) -> list[list[tuple[int, ...]]]:
    """Clusters grouped into rounds by a greedy coloring of the cluster graph."""
    graph = cluster_graph(maximal_supports(supports))
    greedy_color(graph)
    if not coloring_valid(graph):
        raise RuntimeError("greedy coloring produced an invalid schedule")
    return graph.color_classes()


def learn_multi_mode(backend: Backend, supports: Sequence[Sequence[int]], cfg: LearnConfig,
                     rng: np.random.Generator) -> LearnReport:
    """Color-round learning of a low-intersection Hamiltonian with declared supports.

    Clusters in one round are disjoint and non-neighboring; they are learned
    with independent random streams and independent ledgers, and the round is
    charged as one parallel experiment (its cost is the largest cluster cost).
    Coefficients learned by several clusters (terms on shared modes) are
    averaged.
    """
    rounds = color_rounds(supports)
    n_points = sum(len(_design(cfg, len(c)).points()) for rnd in rounds for c in rnd)
    delta1 = cfg.delta / n_points
    total = EvolutionLedger()
    sums: dict[Key, list] = {}
    bars: dict[Key, float] = {}
    cluster_diag = []
    for ridx, rnd in enumerate(rounds):
        streams = rng.spawn(len(rnd))
        results = [_learn_cluster(backend, c, cfg, s, delta1, f"round{ridx}/") for c, s in zip(rnd, streams)]
        total = total + EvolutionLedger.parallel([r.ledger for r in results], f"round{ridx}")
        for r in results:
            for key, h in r.coefficients.items():
                sums.setdefault(key, []).append(h)
                bars[key] = max(bars.get(key, 0.0), r.error_bars[key])
            d = dict(r.diagnostics)
            d["round"] = ridx
            d["cluster_time"] = r.ledger.total_time
            d.pop("frequencies", None)
            cluster_diag.append(d)
    coeffs = {k: complex(np.mean(v)) for k, v in sums.items()}
    diag = {
        "n_rounds": len(rounds),
        "rounds": [[list(c) for c in rnd] for rnd in rounds],
        "delta1": delta1,
        "n_frequencies": n_points,
        "clusters": cluster_diag,
        "max_evolution_time": max((c["max_evolution_time"] for c in cluster_diag), default=0.0),
        "backend": backend.diagnostics(),
    }
    return LearnReport(coeffs, bars, total.total_time, total.experiment_count, total.to_dict()["stages"], diag,
                       cfg.to_dict())


# ---------------------------------------------------------------------------
# budgets and sweeps


@dataclass(frozen=True)
class BudgetSummary:
    eps: tuple[float, ...]
    total_time: tuple[float, ...]
    experiments: tuple[float, ...]
    time_eps_spread: float
    experiments_log_spread: float
    time_slope: float
    experiments_slope: float

    def to_dict(self) -> dict:
        return asdict(self)


def budget_report(rows: Sequence[dict], phi: float = 1.0) -> BudgetSummary:
    """Scaling summary of a sweep (rows carry ``eps``, ``T`` and ``Gamma``).

    ``time_eps_spread`` is ``max/min`` of ``T * eps``; ``experiments_log_spread``
    is ``max/min`` of ``Gamma / log(phi/eps)^2``; slopes are least-squares fits
    of ``log T`` and ``log Gamma`` against ``log eps``.
    """
    eps = np.array([r["eps"] for r in rows], dtype=float)
    T = np.array([r["T"] for r in rows], dtype=float)
    G = np.array([r["Gamma"] for r in rows], dtype=float)
    te = T * eps
    gl = G / np.log(phi / eps) ** 2
    slope_t = float(np.polyfit(np.log(eps), np.log(T), 1)[0]) if len(rows) > 1 else float("nan")
    slope_g = float(np.polyfit(np.log(eps), np.log(G), 1)[0]) if len(rows) > 1 else float("nan")
    return BudgetSummary(tuple(eps), tuple(T), tuple(G), float(te.max() / te.min()), float(gl.max() / gl.min()),
                         slope_t, slope_g)


def estimation_sweep(eps_list: Sequence[float], phi: float, trials: int, seed: int, q: float = 1 / 3,
                     noise: float | None = None, c3: int = 21, c4: int = 12) -> list[dict]:
    """Frequency-estimation accuracy and cost on the adversarial exact oracle.

    Each trial draws a true frequency uniformly in ``[-phi, phi]``; rows report
    the root-mean-square error, the evolution time ``T`` and the experiment
    count ``Gamma`` of one estimate (both quadratures counted).
    """
    from .experiment import ADVERSARIAL_NOISE

    noise = ADVERSARIAL_NOISE if noise is None else noise
    rows = []
    for eps in eps_list:
        rng = np.random.default_rng([seed, int(round(1e6 * eps))])
        cfg = FreqEstConfig(phi, eps, c3, c4)
        errs = []
        ledger = EvolutionLedger()
        for _ in range(trials):
            theta = rng.uniform(-phi, phi)
            ledger = EvolutionLedger()
            est = estimate(ExactOracle(theta, q, noise, ledger=ledger), cfg, rng)
            errs.append(est.theta - theta)
        rows.append({"eps": eps, "rmse": float(np.sqrt(np.mean(np.square(errs)))), "T": ledger.total_time,
                     "Gamma": ledger.experiment_count, "trials": trials, "seed": seed})
    return rows


# ---------------------------------------------------------------------------
# decoupling check for one color round


@dataclass
class DecouplingResult:
    round_clusters: list[tuple[int, ...]]
    static_error: float
    gammas: list[float]
    distances: list[float]
    slope: float

    def to_dict(self) -> dict:
        return asdict(self)


def decoupling_ladder(H: BosonicHamiltonian, round_clusters: Sequence[Sequence[int]], gammas: Sequence[float],
                      t: float, rng: np.random.Generator, cluster_dim: int = 3, other_dim: int = 2) -> DecouplingResult:
    """Dissipative evolution of one color round against the product of projected cluster evolutions.

    Cluster modes carry ``b^2`` (kernel ``{|0>, |1>}``, exact at ``cluster_dim = 3``)
    and every other mode the vacuum-pinning jump ``b``.  ``static_error`` is
    ``||P H P - sum_C P H_C P||`` with ``H_C`` the monomials supported in ``C``;
    the ladder compares the full evolution of a random kernel state with
    ``exp(-i t sum_C P H_C P)``.
    """
    from .fock import FockSpace as _Space
    from .hamiltonian import to_operator
    from .lindblad import Generator, Jump, evolve, jump_matrix, kernel_projector, trace_distance
    from .verify import loglog_slope, projected_evolution

    active = sorted({q for c in round_clusters for q in c})
    dims = tuple(cluster_dim if q in active else other_dim for q in range(H.m))
    space = _Space(dims)
    jumps = []
    for q in range(H.m):
        if q in active:
            jumps.append(Jump("modified_photon_loss", q, 1, 0.0))
        else:
            jumps.extend(decoupling_dissipation(q, 0))
    P = kernel_projector(jumps, space).matrix
    H_mat = to_operator(H, space).matrix
    parts = sum(P @ to_operator(H.monomial_restricted(c), space).matrix @ P for c in round_clusters)
    static = float(np.linalg.norm(P @ H_mat @ P - parts, 2))
    w, v = np.linalg.eigh(P)
    basis = v[:, w > 0.5]
    psi = basis @ (rng.normal(size=basis.shape[1]) + 1j * rng.normal(size=basis.shape[1]))
    psi /= np.linalg.norm(psi)
    rho0 = np.outer(psi, psi.conj())
    ref = projected_evolution(parts, P, rho0, t)
    mats = tuple(jump_matrix(j, space) for j in jumps)
    dist = []
    for g in gammas:
        gen = Generator(space, H_mat, mats, float(g))
        dist.append(trace_distance(evolve(gen, rho0, t, method="spectral", check_positivity=False), ref))
    return DecouplingResult([tuple(c) for c in round_clusters], static, list(map(float, gammas)), dist,
                            loglog_slope(gammas, dist))
