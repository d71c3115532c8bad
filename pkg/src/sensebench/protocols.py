"""Phase-estimation protocols, the classical prior and Monte Carlo error
estimation.

Every Monte Carlo trial owns three random streams derived from the master
seed and the trial index: one for the target phase, one for the estimation
shots and one for response inference. Protocols evaluated with the same seed
therefore see the same target phases (common random numbers), and results do
not depend on how trials are scheduled across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .inference import InferredResponse, infer_response
from .noise import NoiseSpec, make_source
from .response import (
    InvertibleBranch,
    ResponseSource,
    TrigPolynomial,
    derivative_trig,
    find_branch,
    invert_on_branch,
    sample_response,
    refine_slope_peak,
    SCAN_POINTS_PER_DEGREE,
)
from .zne import ZneConfig, zne_measure

KINDS = (
    "noise-aware",
    "naive",
    "zne",
    "inference",
    "precharacterized-inference",
    "zne-inference",
)
INFERENCE_KINDS = ("inference", "precharacterized-inference", "zne-inference")
MITIGATED_KINDS = ("zne", "zne-inference")

STREAM_PRIOR, STREAM_ESTIMATION, STREAM_INFERENCE = 0, 1, 2

# Lobes whose peak slope is within this relative margin of the global peak
# count as optimal; the one closest (forward) to the unbiased prior mean wins.
LOBE_TOLERANCE = 1e-3


class BranchError(ValueError):
    """Raised when no invertible branch exists around the prior mean."""


@dataclass(frozen=True)
class PhasePrior:
    """Classical knowledge of the target phase.

    The target phase is ``Normal(alpha_prior*T + theta_bias + eps_B, 1/(N n))``
    with ``eps_B = 2 pi / 2**bits``.
    """

    alpha_prior: float = 0.0
    interaction_time: float = 1.0
    theta_bias: float = 0.0
    bits: int = 10

    def __post_init__(self):
        if self.interaction_time <= 0:
            raise ValueError("interaction time must be positive")
        if self.bits < 1:
            raise ValueError("bias resolution must be at least one bit")

    @property
    def eps_b(self) -> float:
        return math.ldexp(2.0 * math.pi, -self.bits)

    @property
    def mean(self) -> float:
        return self.alpha_prior * self.interaction_time + self.theta_bias + self.eps_b

    @staticmethod
    def variance(n: int, shots: int) -> float:
        return 1.0 / (shots * n)

    def with_bias(self, theta_bias: float) -> "PhasePrior":
        return replace(self, theta_bias=float(theta_bias))


def sample_target_phase(prior: PhasePrior, n: int, shots: int, rng: np.random.Generator) -> float:
    """Draw a target phase from the prior."""
    if n < 1 or shots < 1:
        raise ValueError("n and shots must be positive")
    return prior.mean + math.sqrt(prior.variance(n, shots)) * rng.standard_normal()


def estimate_alpha(theta_hat: float, prior: PhasePrior) -> float:
    """Field estimate ``(theta_hat - theta_bias - eps_B) / T``."""
    return (theta_hat - prior.theta_bias - prior.eps_b) / prior.interaction_time


def _optimal_phase(poly: TrigPolynomial, start: float) -> float:
    """Phase of (near-)maximal slope, scanning one period forward from
    ``start`` and refining the selected lobe's peak."""
    m = SCAN_POINTS_PER_DEGREE * poly.degree
    h = 2.0 * math.pi / m
    grid = start + h * np.arange(m)
    g = np.abs(derivative_trig(poly, grid))
    peak = g.max()
    if peak <= 0.0:
        raise BranchError("response is constant")
    k = int(np.argmax(g >= peak * (1.0 - LOBE_TOLERANCE)))
    # climb to the local peak of the selected lobe
    while k + 1 < m and g[k + 1] > g[k]:
        k += 1
    return refine_slope_peak(poly, grid[k] - h, grid[k] + h)


def choose_bias(source, prior: PhasePrior) -> float:
    """Bias phase that moves the prior mean onto the steepest point of the
    inversion response, quantised to the ``eps_B`` grid."""
    poly = source if isinstance(source, TrigPolynomial) else source.polynomial()
    base = prior.alpha_prior * prior.interaction_time + prior.eps_b
    theta_opt = _optimal_phase(poly, base)
    return prior.eps_b * round((theta_opt - base) / prior.eps_b)


@dataclass(frozen=True, eq=False)
class ProtocolSpec:
    """A phase-estimation protocol and its shot budget.

    Args:
        kind: One of ``KINDS``.
        shots: Total budget ``N``. For pre-characterised inference this is
            the estimation budget and the offline inference budget is
            ``c_pre * n * N``.
        inference_shots: Explicit ``N_I``. For on-line inference kinds it
            must leave at least one estimation shot; defaults to ``N // 2``.
        c_pre: Pre-characterisation overhead factor.
        zne: Extrapolation settings for mitigated kinds.
        freeze_inference: Reuse a single inferred response across all trials.
    """

    kind: str
    shots: int
    inference_shots: int | None = None
    c_pre: float = 1.0
    zne: ZneConfig | None = None
    freeze_inference: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown protocol kind {self.kind!r}")
        if self.shots < 1:
            raise ValueError("shot budget must be positive")
        if self.kind in MITIGATED_KINDS and self.zne is None:
            object.__setattr__(self, "zne", ZneConfig.tilted())
        if self.kind in ("inference", "zne-inference") and self.inference_shots is not None:
            if not 0 < self.inference_shots < self.shots:
                raise ValueError("inference budget must leave estimation shots")
        if self.c_pre <= 0:
            raise ValueError("c_pre must be positive")

    def estimation_shots(self, n: int) -> int:
        if self.kind in ("inference", "zne-inference"):
            return self.shots - self.inference_budget(n)
        return self.shots

    def inference_budget(self, n: int) -> int:
        if self.kind == "precharacterized-inference":
            if self.inference_shots is not None:
                return int(self.inference_shots)
            return int(round(self.c_pre * n * self.shots))
        if self.kind in ("inference", "zne-inference"):
            return int(self.inference_shots) if self.inference_shots is not None else self.shots // 2
        return 0


@dataclass(frozen=True, eq=False)
class SensingSystem:
    """Qubit count plus noise; ``simulated`` forces the dense simulator."""

    n: int
    noise: NoiseSpec
    simulated: bool = False
    _source: list = field(default_factory=list, repr=False)

    @property
    def source(self) -> ResponseSource:
        if not self._source:
            self._source.append(make_source(self.n, self.noise, self.simulated))
        return self._source[0]


@dataclass(frozen=True, eq=False)
class Estimator:
    """Inversion function, branch and bias used by one trial."""

    inversion: TrigPolynomial
    branch: InvertibleBranch
    prior: PhasePrior
    inferred: InferredResponse | None = None


@dataclass(frozen=True)
class TrialResult:
    theta_star: float
    theta_hat: float
    sq_error: float
    alpha_hat: float | None = None


@dataclass(frozen=True)
class ErrorSummary:
    """Monte Carlo error estimate with its standard error."""

    bmse: float
    stderr: float
    trials: int
    bias_sq: float | None = None
    variance: float | None = None
    alpha_bmse: float | None = None
    alpha_stderr: float | None = None


def inversion_function(
    protocol: ProtocolSpec, system: SensingSystem, rng: np.random.Generator | None
) -> tuple[TrigPolynomial, InferredResponse | None]:
    """Response the protocol inverts: exact, noiseless or freshly inferred."""
    src = system.source
    kind = protocol.kind
    if kind == "noise-aware":
        return src.polynomial(), None
    if kind in ("naive", "zne"):
        return TrigPolynomial.cosine(system.n), None
    if rng is None:
        raise ValueError("inference kinds need a random stream")
    inf = infer_response(
        src,
        system.n,
        protocol.inference_budget(system.n),
        rng,
        mitigated=kind == "zne-inference",
        zne=protocol.zne,
    )
    return inf.poly, inf


def build_estimator(
    protocol: ProtocolSpec,
    system: SensingSystem,
    prior: PhasePrior,
    rng: np.random.Generator | None = None,
    choose: bool = True,
) -> Estimator:
    """Build the kind's inversion function, optionally re-centre the prior
    with ``choose_bias`` and locate the branch around the prior mean."""
    poly, inferred = inversion_function(protocol, system, rng)
    if choose:
        prior = prior.with_bias(choose_bias(poly, prior))
    try:
        branch = find_branch(poly, prior.mean)
    except ValueError as exc:
        raise BranchError(str(exc)) from exc
    return Estimator(poly, branch, prior, inferred)


def measure(protocol: ProtocolSpec, system: SensingSystem, theta: float, rng: np.random.Generator) -> float:
    """Shot-limited response estimate with the kind's estimation budget."""
    shots = protocol.estimation_shots(system.n)
    if protocol.kind in MITIGATED_KINDS:
        return zne_measure(system.source, theta, shots, protocol.zne, rng).value
    return sample_response(system.source(theta), shots, rng).value


def run_trial(
    protocol: ProtocolSpec,
    system: SensingSystem,
    prior: PhasePrior,
    theta_star: float,
    rng: np.random.Generator,
    estimator: Estimator | None = None,
) -> TrialResult:
    """Measure at ``theta_star`` and invert.

    Without an explicit ``estimator`` one is built from ``rng`` around the
    given prior (no bias re-centring, so ``theta_star`` keeps its meaning).
    """
    if estimator is None:
        estimator = build_estimator(protocol, system, prior, rng, choose=False)
    y = measure(protocol, system, theta_star, rng)
    theta_hat = invert_on_branch(estimator.inversion, estimator.branch, y)
    return TrialResult(
        theta_star,
        theta_hat,
        (theta_hat - theta_star) ** 2,
        estimate_alpha(theta_hat, estimator.prior),
    )


def trial_streams(seed: int, trial: int) -> tuple[np.random.Generator, ...]:
    """Independent (prior, estimation, inference) streams for one trial."""
    return tuple(
        np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial, s)))
        for s in (STREAM_PRIOR, STREAM_ESTIMATION, STREAM_INFERENCE)
    )


def _shared_estimator(protocol, system, prior, seed, choose):
    """Estimator reused by every trial, or ``None`` if built per trial."""
    if protocol.kind in INFERENCE_KINDS and not protocol.freeze_inference:
        return None
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2**32, STREAM_INFERENCE)))
    return build_estimator(protocol, system, prior, rng, choose=choose)


def _run_chunk(args) -> np.ndarray:
    """Trials ``[start, stop)``; returns rows ``(theta*, theta_hat)``."""
    protocol, system, prior, seed, start, stop, fixed_theta = args
    choose = fixed_theta is None
    shared = _shared_estimator(protocol, system, prior, seed, choose)
    out = np.empty((stop - start, 2))
    for i, t in enumerate(range(start, stop)):
        r_prior, r_est, r_inf = trial_streams(seed, t)
        est = shared or build_estimator(protocol, system, prior, r_inf, choose=choose)
        if fixed_theta is None:
            theta_star = sample_target_phase(est.prior, system.n, protocol.shots, r_prior)
        else:
            theta_star = fixed_theta
        y = measure(protocol, system, theta_star, r_est)
        out[i] = theta_star, invert_on_branch(est.inversion, est.branch, y)
    return out


def _chunks(trials: int, workers: int) -> list[tuple[int, int]]:
    size = max(1, min(2000, -(-trials // max(1, 4 * workers))))
    return [(s, min(trials, s + size)) for s in range(0, trials, size)]


def run_trials(
    protocol: ProtocolSpec,
    system: SensingSystem,
    prior: PhasePrior,
    trials: int,
    seed: int,
    workers: int = 1,
    fixed_theta: float | None = None,
) -> np.ndarray:
    """``(trials, 2)`` array of ``(theta*, theta_hat)`` in trial order."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    jobs = [(protocol, system, prior, seed, a, b, fixed_theta) for a, b in _chunks(trials, workers)]
    if workers <= 1 or len(jobs) == 1:
        parts = [_run_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    return np.concatenate(parts)


def _mean_and_stderr(x: np.ndarray) -> tuple[float, float]:
    n = x.size
    mean = math.fsum(x) / n
    if n < 2:
        return mean, float("nan")
    var = math.fsum((x - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def monte_carlo_bmse(
    protocol: ProtocolSpec,
    system: SensingSystem,
    prior: PhasePrior,
    trials: int,
    seed: int,
    workers: int = 1,
) -> ErrorSummary:
    """Prior-averaged mean squared phase error and the matching field error
    ``BMSE[alpha_hat] = BMSE[theta_hat] / T^2``."""
    rows = run_trials(protocol, system, prior, trials, seed, workers)
    sq = (rows[:, 1] - rows[:, 0]) ** 2
    bmse, se = _mean_and_stderr(sq)
    t2 = prior.interaction_time**2
    return ErrorSummary(bmse, se, trials, alpha_bmse=bmse / t2, alpha_stderr=se / t2)


@dataclass(frozen=True)
class ConditionalSummary:
    bias_sq: float
    variance: float
    cmse: float
    cmse_stderr: float
    trials: int


def conditional_decomposition(
    protocol: ProtocolSpec,
    system: SensingSystem,
    prior: PhasePrior,
    theta_star: float,
    trials: int,
    seed: int,
    workers: int = 1,
) -> ConditionalSummary:
    """Bias/variance split of the error at a fixed target phase. The branch
    is taken around ``prior.mean`` without re-centring."""
    if trials < 2:
        raise ValueError("need at least two trials")
    rows = run_trials(protocol, system, prior, trials, seed, workers, fixed_theta=float(theta_star))
    err = rows[:, 1] - theta_star
    mean = math.fsum(err) / trials
    variance = math.fsum((err - mean) ** 2) / trials
    sq = err**2
    cmse, se = _mean_and_stderr(sq)
    return ConditionalSummary(mean * mean, variance, cmse, se, trials)


def compare_protocols(
    protocols: Sequence[ProtocolSpec],
    system: SensingSystem,
    prior: PhasePrior,
    trials: int,
    seed: int,
    workers: int = 1,
) -> dict[str, ErrorSummary]:
    """BMSE for several protocols under common random numbers."""
    return {p.kind: monte_carlo_bmse(p, system, prior, trials, seed, workers) for p in protocols}
