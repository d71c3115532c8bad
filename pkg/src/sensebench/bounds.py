"""Analytic error estimates for every protocol under global depolarizing
noise, plus the SQL and HL reference lines.

Each bound is returned as a ``BoundTerms`` split into squared bias,
estimation variance and (for inference kinds) the variance contributed by
fluctuations of the inferred response.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .inference import logfactor
from .zne import ZneConfig

GAUSS_HERMITE_ORDER = 32


class StationaryPointDivergence(ZeroDivisionError):
    """Raised where the response slope vanishes and the bound diverges."""


def sql(n: int, shots: float) -> float:
    """Standard quantum limit ``1/(N n)``."""
    return 1.0 / (shots * n)


def hl(n: int, shots: float) -> float:
    """Heisenberg limit ``1/(N n^2)``."""
    return 1.0 / (shots * n * n)


def _slope_factor(n: int, theta: float) -> float:
    s = math.sin(n * theta)
    if abs(s) < 1e-12:
        raise StationaryPointDivergence(f"response is stationary at theta={theta!r}")
    return n * s


def precision_global_depol(n: int, shots: float, lam: float, theta: float) -> float:
    """Noise-aware phase variance
    ``(2p - p^2) / (N n^2 (1-p)^2 sin^2(n theta)) + 1/(N n^2)``,
    ``p = 1 - exp(-lam)``."""
    # 2p - p^2 = 1 - e^{-2 lam} and (1-p)^2 = e^{-2 lam}, kept exact for large lam
    s2 = _slope_factor(n, theta) ** 2 / (n * n)
    if math.exp(-2 * lam) == 0.0:
        return math.inf
    return -math.expm1(-2 * lam) / (shots * n * n * math.exp(-2 * lam) * s2) + 1.0 / (shots * n * n)


@dataclass(frozen=True)
class BoundTerms:
    bias_sq: float
    estimation_variance: float
    inference_variance: float = 0.0

    @property
    def variance(self) -> float:
        return self.estimation_variance + self.inference_variance

    def __float__(self) -> float:
        return self.total

    @property
    def total(self) -> float:
        return self.bias_sq + self.estimation_variance + self.inference_variance

    def __add__(self, other: "BoundTerms") -> "BoundTerms":
        return BoundTerms(
            self.bias_sq + other.bias_sq,
            self.estimation_variance + other.estimation_variance,
            self.inference_variance + other.inference_variance,
        )

    def scaled(self, w: float) -> "BoundTerms":
        return BoundTerms(w * self.bias_sq, w * self.estimation_variance, w * self.inference_variance)


@dataclass(frozen=True)
class BoundInputs:
    """Parameters shared by the analytic bounds.

    Args:
        n: Qubit count.
        shots: Total budget ``N``.
        lam: Global depolarizing fault rate.
        theta: Target phase; defaults to the steepest point ``pi/(2n)``.
        zne: Extrapolation settings for mitigated kinds.
        c_pre: Pre-characterisation overhead (``N_I = c_pre n N``).
        inference_shots: On-line inference budget ``N_I``; defaults to
            ``N/2`` (the remainder is the estimation budget).
    """

    n: int
    shots: float
    lam: float
    theta: float | None = None
    zne: ZneConfig = field(default_factory=ZneConfig.tilted)
    c_pre: float = 100.0
    inference_shots: float | None = None

    def __post_init__(self):
        if self.n < 1 or self.shots <= 0 or self.lam < 0:
            raise ValueError("need n >= 1, shots > 0 and lam >= 0")
        if self.theta is None:
            object.__setattr__(self, "theta", math.pi / (2 * self.n))

    @property
    def amplitude(self) -> float:
        return math.exp(-self.lam)

    @property
    def lipschitz(self) -> float:
        """``L = n`` for the noiseless fringe."""
        return float(self.n)

    @property
    def lipschitz_noisy(self) -> float:
        return self.amplitude * self.n

    def at(self, theta: float) -> "BoundInputs":
        return BoundInputs(self.n, self.shots, self.lam, theta, self.zne, self.c_pre, self.inference_shots)


def _noisy(inp: BoundInputs, x: float = 1.0) -> tuple[float, float]:
    """``(R_{x lam}(theta), Var R_{x lam}(theta))``."""
    r = math.exp(-x * inp.lam) * math.cos(inp.n * inp.theta)
    return r, 1.0 - r * r


def bound_noise_aware(inp: BoundInputs) -> BoundTerms:
    _, var = _noisy(inp)
    slope = inp.amplitude * _slope_factor(inp.n, inp.theta)
    return BoundTerms(0.0, var / (inp.shots * slope**2))


def bound_naive(inp: BoundInputs) -> BoundTerms:
    r, var = _noisy(inp)
    slope = _slope_factor(inp.n, inp.theta)
    bias = (r - math.cos(inp.n * inp.theta)) / slope
    return BoundTerms(bias * bias, var / (inp.shots * slope**2))


def bound_zne(inp: BoundInputs) -> BoundTerms:
    """Per-node variance with the optimal (real-valued) allocation plus the
    extrapolation bias ``lam^{m+1}`` propagated through the noiseless slope."""
    cfg = inp.zne
    slope = _slope_factor(inp.n, inp.theta)
    lam_total = cfg.overhead
    var = 0.0
    for g, x in zip(cfg.gammas, cfg.nodes):
        nj = inp.shots * abs(g) / lam_total
        _, vj = _noisy(inp, x)
        var += g * g * vj / nj
    bias = inp.lam ** (cfg.order + 1) / slope
    return BoundTerms(bias * bias, var / slope**2)


def _inference_budgets(inp: BoundInputs, precharacterized: bool) -> tuple[float, float]:
    """``(N_E, N_I)``."""
    if precharacterized:
        return inp.shots, inp.c_pre * inp.n * inp.shots
    ni = inp.shots / 2.0 if inp.inference_shots is None else float(inp.inference_shots)
    if not 0 < ni < inp.shots:
        raise ValueError("inference budget must leave estimation shots")
    return inp.shots - ni, ni


def _inference_terms(inp: BoundInputs, ne: float, ni: float, var_scale: float, delta_scale: float) -> BoundTerms:
    _, var = _noisy(inp)
    slope2 = (inp.amplitude * _slope_factor(inp.n, inp.theta)) ** 2
    nk = ni / (2 * inp.n + 1)
    delta2 = delta_scale * logfactor(inp.n) ** 3 / nk
    return BoundTerms(delta2 / slope2, var_scale * var / (ne * slope2), delta2 / slope2)


def bound_inference(inp: BoundInputs, precharacterized: bool = False) -> BoundTerms:
    """Worst-case inference error ``delta ~ sqrt(logfactor(n)^3 / N_k)`` as
    both bias and inferred-response variance, plus estimation variance."""
    ne, ni = _inference_budgets(inp, precharacterized)
    return _inference_terms(inp, ne, ni, 1.0, 1.0)


def bound_zne_inference(inp: BoundInputs) -> BoundTerms:
    """As ``bound_inference`` with estimation variance scaled by ``Lambda^2``
    and ``delta^2`` by ``Lambda^3 / max|gamma|``."""
    ne, ni = _inference_budgets(inp, False)
    cfg = inp.zne
    return _inference_terms(inp, ne, ni, cfg.overhead**2, cfg.overhead**3 / cfg.max_weight)


BOUND_KINDS = {
    "noise-aware": bound_noise_aware,
    "naive": bound_naive,
    "zne": bound_zne,
    "inference": lambda inp: bound_inference(inp, False),
    "precharacterized-inference": lambda inp: bound_inference(inp, True),
    "zne-inference": bound_zne_inference,
}


def bound_terms(kind: str, inp: BoundInputs, prior_average: bool = False) -> BoundTerms:
    """Bound for ``kind``, optionally averaged over target phases drawn from
    ``Normal(inp.theta, 1/(N n))`` by Gauss-Hermite quadrature."""
    fn = BOUND_KINDS[kind]
    if not prior_average:
        return fn(inp)
    x, w = np.polynomial.hermite_e.hermegauss(GAUSS_HERMITE_ORDER)
    w = w / w.sum()
    sd = math.sqrt(1.0 / (inp.shots * inp.n))
    acc = BoundTerms(0.0, 0.0, 0.0)
    for xi, wi in zip(x, w):
        acc = acc + fn(inp.at(inp.theta + sd * xi)).scaled(wi)
    return acc


def shots_n2log3(n: int, n0: float) -> int:
    """Budget ``round(n0 * n^2 * logfactor(n)^3)``."""
    return int(round(n0 * n * n * logfactor(n) ** 3))
