"""Response-function inference: fit the degree-n trigonometric polynomial
through shot-limited observations at 2n+1 uniformly spaced phases."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .response import ResponseSource, TrigPolynomial, sample_response
from .zne import BudgetTooSmallError, ZneConfig, zne_measure


def logfactor(n: float) -> float:
    """``max(ln n, 1)``: the logarithm used in every inference bound."""
    return max(math.log(n), 1.0)


def inference_nodes(n: int) -> np.ndarray:
    """``theta_k = 2 pi (k-1) / (2n+1)`` for ``k = 1..2n+1``."""
    if n < 1:
        raise ValueError("degree must be >= 1")
    return 2.0 * math.pi * np.arange(2 * n + 1) / (2 * n + 1)


@dataclass(frozen=True, eq=False)
class InferenceDataset:
    thetas: np.ndarray
    values: np.ndarray
    shots: np.ndarray

    def __post_init__(self):
        th = np.asarray(self.thetas, dtype=float).reshape(-1)
        y = np.asarray(self.values, dtype=float).reshape(-1)
        sh = np.asarray(self.shots, dtype=np.int64).reshape(-1)
        if th.size % 2 == 0 or th.size < 3 or y.size != th.size or sh.size != th.size:
            raise ValueError("dataset needs 2n+1 phases, values and shot counts")
        gap = 2.0 * math.pi / th.size
        if np.max(np.abs(np.diff(th) - gap)) > 1e-12:
            raise ValueError("dataset phases must be uniformly spaced by 2*pi/(2n+1)")
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "values", y)
        object.__setattr__(self, "shots", sh)

    @property
    def degree(self) -> int:
        return (self.thetas.size - 1) // 2

    @property
    def total_shots(self) -> int:
        return int(self.shots.sum())


def design_matrix(thetas: np.ndarray, n: int) -> np.ndarray:
    """Columns ``[1, cos(s theta), ..., sin(s theta), ...]`` for s = 1..n."""
    s = np.arange(1, n + 1)
    arg = np.outer(thetas, s)
    return np.hstack([np.ones((thetas.size, 1)), np.cos(arg), np.sin(arg)])


def fit_trig_polynomial(dataset: InferenceDataset, n: int | None = None) -> TrigPolynomial:
    """Unique degree-``n`` interpolant through the dataset (LU solve)."""
    n = dataset.degree if n is None else n
    if dataset.thetas.size != 2 * n + 1:
        raise ValueError(f"degree {n} needs {2 * n + 1} nodes, got {dataset.thetas.size}")
    A = design_matrix(dataset.thetas, n)
    try:
        coef = scipy.linalg.solve(A, dataset.values, check_finite=True)
    except scipy.linalg.LinAlgError as exc:
        raise ValueError("singular interpolation system") from exc
    return TrigPolynomial(coef[1 : n + 1], coef[n + 1 :], coef[0])


@dataclass(frozen=True, eq=False)
class InferredResponse:
    poly: TrigPolynomial
    mitigated: bool
    budget: int
    dataset: InferenceDataset | None = None

    @property
    def provenance(self) -> str:
        return "mitigated" if self.mitigated else "plain"

    def source(self) -> ResponseSource:
        return ResponseSource.from_polynomial(self.poly)


def split_node_shots(total: int, nodes: int) -> np.ndarray:
    """Equal split with the remainder going to the lowest-index nodes."""
    base, rem = divmod(int(total), nodes)
    out = np.full(nodes, base, dtype=np.int64)
    out[:rem] += 1
    return out


def infer_response(
    source: ResponseSource,
    n: int,
    budget: int,
    rng: np.random.Generator,
    mitigated: bool = False,
    zne: ZneConfig | None = None,
) -> InferredResponse:
    """Observe the source at the 2n+1 uniform phases and fit the response.

    Args:
        source: System being characterised.
        n: Degree (qubit count).
        budget: Total inference shots ``N_I`` across all nodes.
        rng: Random stream used sequentially across nodes.
        mitigated: Observe each node with zero-noise extrapolation.
        zne: Extrapolation settings; defaults to ``ZneConfig.tilted()``.
    """
    k = 2 * n + 1
    per_node_min = 1
    if mitigated:
        zne = zne or ZneConfig.tilted()
        per_node_min = zne.order + 1
    if budget < k * per_node_min:
        raise BudgetTooSmallError(f"inference budget {budget} too small for {k} nodes")
    thetas = inference_nodes(n)
    shots = split_node_shots(budget, k)
    vals = np.empty(k)
    for i, (th, nk) in enumerate(zip(thetas, shots)):
        if mitigated:
            vals[i] = zne_measure(source, th, int(nk), zne, rng).value
        else:
            vals[i] = sample_response(source(th), int(nk), rng).value
    data = InferenceDataset(thetas, vals, shots)
    return InferredResponse(fit_trig_polynomial(data, n), mitigated, int(budget), data)


def inference_error_bound(eps: float, n: int) -> float:
    """Worst-case interpolation error ``5 eps logfactor(n)`` from a maximum
    node error ``eps``."""
    if eps < 0:
        raise ValueError("node error must be >= 0")
    return 5.0 * eps * logfactor(n)


def shots_per_node_plain(n: int, delta: float, a: float) -> int:
    """Shots per node so the inferred response is within ``delta``
    everywhere with probability ``1 - a``."""
    if not (0 < a < 1 and delta > 0):
        raise ValueError("need 0 < a < 1 and delta > 0")
    return math.ceil(50.0 * logfactor(n) ** 2 * math.log((4 * n + 2) / a) / delta**2)


def shots_per_node_hoeffding_general(n: int, eps: float, beta: float, lipschitz: float, diameter: float) -> int:
    """Single-parameter Hoeffding-type shot count
    ``4(d+2)/eps^2 * ln(2^8 L^2 D^2 / (beta eps^2))`` with ``d = 1``.

    ``n`` is accepted for interface symmetry; the count depends on it only
    through ``lipschitz``.
    """
    if min(eps, beta, lipschitz, diameter) <= 0:
        raise ValueError("inputs must be positive")
    d = 1
    return math.ceil(4.0 * (d + 2) / eps**2 * math.log(2.0**8 * lipschitz**2 * diameter**2 / (beta * eps**2)))


def shots_per_node_mitigated(
    n: int,
    alpha: float,
    overhead: float,
    max_gamma: float,
    chi: float | None = None,
    delta: float | None = None,
    variance_bound: float = 1.0,
) -> int:
    """Shots per node for mitigated inference.

    Pass ``chi`` for the node-error form
    ``2 Lambda^3 Var ln((4n+2)/alpha) / (chi^2 max|gamma|)`` or ``delta`` for
    the inferred-function form, which carries an extra
    ``25 logfactor(n)^2``.
    """
    if (chi is None) == (delta is None):
        raise ValueError("give exactly one of chi or delta")
    if min(alpha, overhead, max_gamma, variance_bound) <= 0:
        raise ValueError("inputs must be positive")
    core = overhead**3 * variance_bound * math.log((4 * n + 2) / alpha) / max_gamma
    if chi is not None:
        if chi <= 0:
            raise ValueError("chi must be positive")
        return math.ceil(2.0 * core / chi**2)
    if delta <= 0:
        raise ValueError("delta must be positive")
    return math.ceil(50.0 * core * logfactor(n) ** 2 / delta**2)


def max_grid_error(a: TrigPolynomial, b, grid_size: int = 1000) -> float:
    """``max_theta |a(theta) - b(theta)|`` on a uniform periodic grid."""
    th = 2.0 * math.pi * np.arange(grid_size) / grid_size
    return float(np.max(np.abs(a(th) - b(th))))


def node_errors(inferred: InferredResponse, truth) -> np.ndarray:
    data = inferred.dataset
    return np.abs(data.values - np.asarray(truth(data.thetas)))
