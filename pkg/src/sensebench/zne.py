"""Richardson zero-noise extrapolation over boosted noise levels."""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .response import ResponseSource, sample_response

DEFAULT_ORDER = 4
DEFAULT_X1 = 1.75


class BudgetTooSmallError(ValueError):
    """Raised when a shot budget cannot cover every required node."""


def tilted_chebyshev_nodes(m: int, x1: float) -> np.ndarray:
    """Noise multipliers ``x_0 = 1 < x_1 < ... < x_m`` for order ``m``.

    ``x_j = 1 + sin^2(j pi / (2(m+1))) / sin^2(pi / (2(m+1))) * (x1 - 1)``.
    """
    if m < 1:
        raise ValueError("extrapolation order must be >= 1")
    if not x1 > 1.0:
        raise ValueError("first boosted multiplier must exceed 1")
    j = np.arange(m + 1)
    h = math.pi / (2 * (m + 1))
    return 1.0 + (np.sin(j * h) ** 2 / math.sin(h) ** 2) * (x1 - 1.0)


def lagrange_weights_at_zero(nodes: Sequence[float]) -> np.ndarray:
    """Lagrange basis polynomials of ``nodes`` evaluated at ``x = 0``.

    The products are formed in exact rational arithmetic and rounded once,
    and ``gamma_0`` absorbs the rounding so the weights sum to one. Closely
    spaced nodes give weights of order ``1e6`` and more, where float products
    would lose the moment identities.
    """
    x = np.asarray(nodes, dtype=float).reshape(-1)
    if x.size < 1:
        raise ValueError("need at least one node")
    if np.unique(x).size != x.size:
        raise ValueError("extrapolation nodes must be distinct")
    xs = [Fraction(float(v)) for v in x]
    exact = []
    for j, xj in enumerate(xs):
        prod = Fraction(1)
        for l, xl in enumerate(xs):
            if l != j:
                prod *= -xl / (xj - xl)
        exact.append(prod)
    gam = np.array([float(v) for v in exact])
    gam[0] = float(1 - sum(Fraction(float(v)) for v in gam[1:]))
    return gam


@dataclass(frozen=True, eq=False)
class ZneConfig:
    """Extrapolation nodes ``x_j`` with their weights ``gamma_j`` at zero.

    Args:
        nodes: Strictly increasing multipliers starting at 1.
    """

    nodes: np.ndarray
    gammas: np.ndarray = field(init=False)

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float).reshape(-1)
        if x.size < 2:
            raise ValueError("need the base node plus at least one boosted node")
        if abs(x[0] - 1.0) > 1e-12 or np.any(np.diff(x) <= 0):
            raise ValueError("nodes must start at 1 and increase strictly")
        x.setflags(write=False)
        g = lagrange_weights_at_zero(x)
        g.setflags(write=False)
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "gammas", g)

    @classmethod
    def tilted(cls, m: int = DEFAULT_ORDER, x1: float = DEFAULT_X1) -> "ZneConfig":
        return cls(tilted_chebyshev_nodes(m, x1))

    @property
    def order(self) -> int:
        return self.nodes.size - 1

    @property
    def overhead(self) -> float:
        """Sampling overhead ``Lambda = sum_j |gamma_j|``."""
        return float(np.abs(self.gammas).sum())

    @property
    def max_weight(self) -> float:
        return float(np.abs(self.gammas).max())


@dataclass(frozen=True)
class ShotAllocation:
    shots: tuple

    def __post_init__(self):
        if any(s < 1 for s in self.shots):
            raise ValueError("every node needs at least one shot")

    @property
    def total(self) -> int:
        return int(sum(self.shots))


def allocate_shots(total: int, gammas: Sequence[float]) -> ShotAllocation:
    """Split ``total`` shots in proportion to ``|gamma_j|`` (largest remainder,
    at least one shot per node)."""
    g = np.abs(np.asarray(gammas, dtype=float))
    k = g.size
    total = int(total)
    if total < k:
        raise BudgetTooSmallError(f"budget {total} cannot cover {k} nodes")
    # reserve the one-shot floor, then share the rest by the optimal ratio
    target = total * g / g.sum()
    base = np.maximum(np.floor(target).astype(np.int64), 1)
    while base.sum() > total:
        # floors pushed us over; take from the most over-served node above one
        slack = np.where(base > 1, base - target, -np.inf)
        base[int(np.argmax(slack))] -= 1
    rem = total - int(base.sum())
    if rem:
        frac = target - base
        order = np.lexsort((np.arange(k), -frac))
        base[order[:rem]] += 1
    return ShotAllocation(tuple(int(v) for v in base))


def mitigated_estimate(values: Sequence[float], gammas: Sequence[float]) -> float:
    """``sum_j gamma_j * values[j]`` (unclamped)."""
    v = np.asarray(values, dtype=float).reshape(-1)
    g = np.asarray(gammas, dtype=float).reshape(-1)
    if v.shape != g.shape:
        raise ValueError(f"got {v.size} node values for {g.size} weights")
    return math.fsum(v * g)


def exact_mitigated_response(source: ResponseSource, theta, config: ZneConfig):
    """Shot-free extrapolated response ``R_M(theta)``."""
    vals = [source.boosted(x)(theta) for x in config.nodes]
    return sum(g * v for g, v in zip(config.gammas, vals))


@dataclass(frozen=True)
class MitigatedEstimate:
    value: float
    shots: int


def zne_measure(
    source: ResponseSource,
    theta: float,
    shots: int,
    config: ZneConfig,
    rng: np.random.Generator,
) -> MitigatedEstimate:
    """Sample every boosted node with its allocated shots and extrapolate."""
    alloc = allocate_shots(shots, config.gammas)
    vals = [
        sample_response(source.boosted(x)(theta), nj, rng).value
        for x, nj in zip(config.nodes, alloc.shots)
    ]
    return MitigatedEstimate(mitigated_estimate(vals, config.gammas), alloc.total)


def predicted_variance(source: ResponseSource, theta: float, config: ZneConfig, alloc: ShotAllocation) -> float:
    """``sum_j gamma_j^2 (1 - R_{x_j}^2) / N_j`` for a given allocation."""
    out = 0.0
    for g, x, nj in zip(config.gammas, config.nodes, alloc.shots):
        r = source.boosted(x)(theta)
        out += g * g * (1.0 - r * r) / nj
    return out


def hyperparameter_objective(
    source: ResponseSource,
    config: ZneConfig,
    shots: int,
    trials: int,
    rng: np.random.Generator,
    grid_size: int = 128,
) -> float:
    """Monte Carlo mean of the integrated squared error
    ``int_0^{2pi} |R(theta) - R_M(theta)|^2 dtheta`` (trapezoid rule on a
    periodic grid) against the noiseless response."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    theta = np.linspace(0.0, 2.0 * math.pi, grid_size + 1)
    ideal = source.noiseless()(theta)
    alloc = allocate_shots(shots, config.gammas)
    node_vals = np.array([source.boosted(x)(theta) for x in config.nodes])
    probs = 0.5 * (1.0 + np.clip(node_vals, -1.0, 1.0))
    acc = []
    for _ in range(trials):
        est = np.zeros_like(theta)
        for j, nj in enumerate(alloc.shots):
            k = rng.binomial(nj, probs[j])
            est += config.gammas[j] * (2.0 * k / nj - 1.0)
        acc.append(np.trapezoid((ideal - est) ** 2, theta))
    return math.fsum(acc) / trials


def tune_hyperparameters(
    source: ResponseSource,
    shots: int,
    orders: Sequence[int],
    x1_values: Sequence[float],
    trials: int,
    seed: int,
    grid_size: int = 128,
) -> list[tuple[int, float, float]]:
    """Evaluate the objective over an ``(m, x1)`` grid; returns
    ``(m, x1, objective)`` rows in grid order."""
    rows = []
    for i, m in enumerate(orders):
        for j, x1 in enumerate(x1_values):
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i, j)))
            cfg = ZneConfig.tilted(int(m), float(x1))
            if shots < cfg.order + 1:
                continue
            rows.append((int(m), float(x1), hyperparameter_objective(source, cfg, shots, trials, rng, grid_size)))
    return rows
