"""Robust Heisenberg-limited frequency estimation by interval refinement.

An unknown frequency ``theta`` with ``|theta| <= phi`` is localized by shrinking
an interval ``[a, b]`` to two thirds of its width per level.  At level ``l``
the signal ``exp(i theta t)`` is sampled at ``t_l = pi / (b - a)``, a
per-component median over ``m_l`` repetitions suppresses outliers, and the
sign of a rotated imaginary part decides which overlapping sub-interval to
keep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np


@dataclass(frozen=True)
class FreqEstConfig:
    """Schedule parameters.

    :param phi: prior bound ``|theta| <= phi``
    :param eps: target root-mean-square error
    :param c3: base number of median repetitions
    :param c4: extra repetitions per remaining level
    :param inner_shots: projective shots averaged into one raw sample
    """

    phi: float
    eps: float
    c3: int = 21
    c4: int = 12
    inner_shots: int = 100

    def __post_init__(self):
        if not self.phi > 0:
            raise ValueError("phi must be positive")
        if not 0 < self.eps < self.phi:
            raise ValueError("need 0 < eps < phi")
        if self.c3 < 1 or self.c4 < 0:
            raise ValueError("need c3 >= 1 and c4 >= 0")
        if self.inner_shots < 1:
            raise ValueError("inner_shots must be >= 1")


@dataclass(frozen=True)
class Schedule:
    levels: int
    times: np.ndarray
    repetitions: np.ndarray

    @property
    def total_time(self) -> float:
        """Sum of ``m_l t_l`` (time spent on either quadrature)."""
        return float(np.dot(self.times, self.repetitions))

    @property
    def total_samples(self) -> int:
        return int(self.repetitions.sum())

    @property
    def max_time(self) -> float:
        return float(self.times[-1]) if self.times.size else 0.0


def n_levels(phi: float, eps: float) -> int:
    """Smallest ``L`` with ``(2/3)^L <= eps / (3 phi)``."""
    if not eps < 3 * phi:
        raise ValueError("need eps < 3 phi")
    L = math.ceil(math.log(3 * phi / eps) / math.log(1.5))
    # guard against floating round-off in the logarithm ratio
    while L > 0 and (2 / 3) ** (L - 1) <= eps / (3 * phi):
        L -= 1
    while (2 / 3) ** L > eps / (3 * phi):
        L += 1
    return max(L, 1)


def schedule(phi: float, eps: float, c3: int = 21, c4: int = 12) -> Schedule:
    L = n_levels(phi, eps)
    lv = np.arange(1, L + 1)
    times = (math.pi / (2 * phi)) * 1.5 ** (lv - 1)
    reps = c3 + c4 * (L - lv)
    return Schedule(L, times, reps.astype(int))


def refine(a: float, b: float, z: complex) -> tuple[float, float]:
    """Keep ``[a, (a+2b)/3]`` when the rotated sample has ``Im <= 0``, else ``[(2a+b)/3, b]``."""
    w = np.exp(-1j * (a + b) * math.pi / (2 * (b - a))) * z
    if w.imag <= 0:
        return a, (a + 2 * b) / 3
    return (2 * a + b) / 3, b


class FrequencyOracle(Protocol):
    """Anything that can produce repeated noisy samples of ``cos(theta t)`` and ``sin(theta t)``."""

    def draw(self, t: float, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        ...


@dataclass
class LevelRecord:
    level: int
    a: float
    b: float
    t: float
    m: int
    x_median: float
    y_median: float
    decision: str


@dataclass
class FreqEstimate:
    theta: float
    total_time: float
    total_samples: int
    max_time: float
    interval: tuple[float, float]
    trace: list[LevelRecord] = field(default_factory=list)


def estimate(oracle: FrequencyOracle, cfg: FreqEstConfig, rng: np.random.Generator) -> FreqEstimate:
    """Run every level of the schedule and return the final interval midpoint."""
    sch = schedule(cfg.phi, cfg.eps, cfg.c3, cfg.c4)
    a, b = -cfg.phi, cfg.phi
    trace = []
    for lvl, (t, m) in enumerate(zip(sch.times, sch.repetitions), start=1):
        xs, ys = oracle.draw(float(t), int(m), rng)
        xm, ym = float(np.median(xs)), float(np.median(ys))
        na, nb = refine(a, b, complex(xm, ym))
        trace.append(LevelRecord(lvl, a, b, float(t), int(m), xm, ym, "lower" if na == a else "upper"))
        a, b = na, nb
    return FreqEstimate(0.5 * (a + b), sch.total_time, sch.total_samples, sch.max_time, (a, b), trace)


def mse_bound(phi: float, eps: float, failure_probs) -> float:
    """Mean-squared-error decomposition ``sum_l delta_l (2 phi (2/3)^{l-2})^2 + eps^2/9``."""
    L = n_levels(phi, eps)
    deltas = np.broadcast_to(np.asarray(failure_probs, dtype=float), (L,))
    lv = np.arange(1, L + 1)
    return float(np.sum(deltas * (2 * phi * (2 / 3) ** (lv - 2)) ** 2) + eps**2 / 9)
