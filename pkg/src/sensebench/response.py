"""Response functions: trigonometric polynomials, monotone branches, inversion
and shot sampling of ±1-valued (parity) measurements."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .noise import NoiseSpec

TWO_PI = 2.0 * math.pi

# Points per period (times the degree) used to locate stationary points.
SCAN_POINTS_PER_DEGREE = 1024
STATIONARY_TOL = 1e-9
BRANCH_TOL = 1e-12


class StationaryPointError(ValueError):
    """Raised when a branch is requested around a point of zero slope."""


@dataclass(frozen=True, eq=False)
class TrigPolynomial:
    """Degree-``n`` trigonometric polynomial
    ``c + sum_s a[s-1] cos(s*theta) + b[s-1] sin(s*theta)``."""

    a: np.ndarray
    b: np.ndarray
    c: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(-1)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if a.shape != b.shape or a.size < 1:
            raise ValueError("cosine and sine coefficient vectors must have equal, nonzero length")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "_s", np.arange(1, a.size + 1, dtype=float))

    @property
    def degree(self) -> int:
        return self.a.size

    @classmethod
    def cosine(cls, n: int, amplitude: float = 1.0) -> "TrigPolynomial":
        """``amplitude * cos(n*theta)``, the GHZ parity fringe."""
        a = np.zeros(n)
        a[n - 1] = amplitude
        return cls(a, np.zeros(n), 0.0)

    def __call__(self, theta):
        return eval_trig(self, theta)

    def derivative(self, theta):
        return derivative_trig(self, theta)

    def coefficients(self) -> np.ndarray:
        """Stacked ``[c, a_1..a_n, b_1..b_n]``."""
        return np.concatenate(([self.c], self.a, self.b))


def eval_trig(poly: TrigPolynomial, theta):
    """Evaluate ``poly`` at scalar or array ``theta``."""
    th = np.asarray(theta, dtype=float)
    arg = np.multiply.outer(th, poly._s)
    out = poly.c + np.cos(arg) @ poly.a + np.sin(arg) @ poly.b
    return float(out) if out.ndim == 0 else out


def derivative_trig(poly: TrigPolynomial, theta):
    """d/dtheta of ``poly`` at scalar or array ``theta``."""
    th = np.asarray(theta, dtype=float)
    arg = np.multiply.outer(th, poly._s)
    out = np.cos(arg) @ (poly._s * poly.b) - np.sin(arg) @ (poly._s * poly.a)
    return float(out) if out.ndim == 0 else out


def second_derivative_trig(poly: TrigPolynomial, theta):
    """d^2/dtheta^2 of ``poly``."""
    th = np.asarray(theta, dtype=float)
    arg = np.multiply.outer(th, poly._s)
    s2 = poly._s**2
    out = -(np.cos(arg) @ (s2 * poly.a) + np.sin(arg) @ (s2 * poly.b))
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# Response sources
# --------------------------------------------------------------------------

VARIANTS = ("analytic-global-depol", "analytic-local-depol", "simulated", "trig-polynomial")


@dataclass(frozen=True, eq=False)
class ResponseSource:
    """Exact response oracle ``R_{x*lambda}(theta)`` of a sensing system.

    Analytic variants use closed forms, ``simulated`` is backed by the dense
    density-matrix simulator and ``trig-polynomial`` wraps a stored
    polynomial (for example an inferred response). Every variant is exposed
    as an exact degree-``n`` trigonometric polynomial at the current boost.
    """

    variant: str
    n: int
    noise: "NoiseSpec | None" = None
    poly: TrigPolynomial | None = None
    boost: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown response variant {self.variant!r}")
        if self.boost < 1.0:
            raise ValueError("boost multiplier must be >= 1")
        if self.variant == "trig-polynomial":
            if self.poly is None:
                raise ValueError("trig-polynomial source needs a polynomial")
        elif self.noise is None:
            raise ValueError(f"{self.variant} source needs a noise specification")

    @classmethod
    def from_polynomial(cls, poly: TrigPolynomial) -> "ResponseSource":
        return cls("trig-polynomial", poly.degree, poly=poly)

    @classmethod
    def noiseless_ghz(cls, n: int) -> "ResponseSource":
        from .noise import NoiseSpec

        return cls("analytic-global-depol", n, noise=NoiseSpec.noiseless())

    def boosted(self, x: float) -> "ResponseSource":
        """Same system with its fault rates multiplied by ``x``."""
        if self.variant == "trig-polynomial" and x != 1.0:
            raise ValueError("a stored polynomial cannot be noise-boosted")
        if x == self.boost:
            return self
        key = ("boost", float(x))
        child = self._cache.get(key)
        if child is None:
            child = replace(self, boost=float(x), _cache={})
            self._cache[key] = child
        return child

    def polynomial(self) -> TrigPolynomial:
        if self.variant == "trig-polynomial":
            return self.poly
        poly = self._cache.get("poly")
        if poly is None:
            from . import noise as _noise

            if self.variant == "simulated":
                poly = _noise.simulated_polynomial(self.n, self.noise, self.boost)
            else:
                amp = _noise.analytic_amplitude(self.noise, self.n, self.boost)
                poly = TrigPolynomial.cosine(self.n, amp)
            self._cache["poly"] = poly
        return poly

    def noiseless(self) -> "ResponseSource":
        """Noiseless GHZ parity response ``cos(n*theta)``."""
        return ResponseSource.noiseless_ghz(self.n)

    def __call__(self, theta):
        return eval_trig(self.polynomial(), theta)

    def derivative(self, theta):
        return derivative_trig(self.polynomial(), theta)


def _as_poly(source) -> TrigPolynomial:
    if isinstance(source, TrigPolynomial):
        return source
    return source.polynomial()


# --------------------------------------------------------------------------
# Branches and inversion
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class InvertibleBranch:
    theta_min: float
    theta_max: float
    direction: int
    y_lo: float
    y_hi: float

    def __post_init__(self):
        if not self.theta_min < self.theta_max:
            raise ValueError("branch needs theta_min < theta_max")
        if self.theta_max - self.theta_min > TWO_PI + 1e-9:
            raise ValueError("branch wider than one period")
        if self.direction not in (1, -1):
            raise ValueError("direction must be +1 or -1")

    def contains(self, theta: float) -> bool:
        return self.theta_min <= theta <= self.theta_max


def _refine_root(dfun, lo: float, hi: float, tol: float = BRANCH_TOL) -> float:
    """Bisection on a sign change of ``dfun`` between ``lo`` and ``hi``."""
    flo = dfun(lo)
    if flo == 0.0:
        return lo
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fm = dfun(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _scan_to_stationary(poly: TrigPolynomial, theta0: float, sign0: float, step: float) -> float:
    """Walk from ``theta0`` in steps of ``step`` (signed) until the derivative
    leaves sign ``sign0``; return the refined stationary point."""
    n_total = SCAN_POINTS_PER_DEGREE * poly.degree
    block = 256
    k0 = 0
    while k0 < n_total:
        ks = np.arange(k0 + 1, min(k0 + block, n_total) + 1)
        d = derivative_trig(poly, theta0 + ks * step)
        bad = np.nonzero(d * sign0 <= 0.0)[0]
        if bad.size:
            k = ks[bad[0]]
            a, b = theta0 + (k - 1) * step, theta0 + k * step
            lo, hi = (a, b) if a < b else (b, a)
            return _refine_root(lambda t: derivative_trig(poly, t), lo, hi)
        k0 += block
    raise ValueError("response has no stationary point within one period")


def find_branch(source, theta_center: float) -> InvertibleBranch:
    """Maximal monotone interval around ``theta_center`` bounded by the two
    neighbouring stationary points of the response."""
    poly = _as_poly(source)
    d0 = derivative_trig(poly, theta_center)
    if abs(d0) < STATIONARY_TOL:
        raise StationaryPointError(f"response is stationary at theta={theta_center!r}")
    sign0 = 1.0 if d0 > 0 else -1.0
    step = TWO_PI / (SCAN_POINTS_PER_DEGREE * poly.degree)
    hi = _scan_to_stationary(poly, theta_center, sign0, step)
    lo = _scan_to_stationary(poly, theta_center, sign0, -step)
    ya, yb = eval_trig(poly, lo), eval_trig(poly, hi)
    return InvertibleBranch(lo, hi, int(sign0), min(ya, yb), max(ya, yb))


def invert_on_branch(source, branch: InvertibleBranch, y: float) -> float:
    """Solve ``R(theta) = y`` on ``branch`` by bisection, clamping ``y`` into
    the branch's response range first."""
    poly = _as_poly(source)
    lo, hi = branch.theta_min, branch.theta_max
    d = branch.direction
    # at a clamped extremum the response is flat, so return the endpoint itself
    if y <= branch.y_lo:
        return lo if d > 0 else hi
    if y >= branch.y_hi:
        return hi if d > 0 else lo
    s, a, b, c = poly._s, poly.a, poly.b, poly.c
    cos, sin = np.cos, np.sin
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        arg = s * mid
        f = c + cos(arg) @ a + sin(arg) @ b
        if (f - y) * d < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _golden_max(f, lo: float, hi: float, tol: float = 1e-10) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def refine_slope_peak(poly: TrigPolynomial, lo: float, hi: float) -> float:
    """Local maximiser of ``|R'|`` in ``[lo, hi]``.

    A sign change of ``R''`` is bisected (exact to round-off); otherwise a
    golden-section search on ``|R'|`` is used.
    """
    f_lo, f_hi = second_derivative_trig(poly, lo), second_derivative_trig(poly, hi)
    if f_lo * f_hi < 0:
        return _refine_root(lambda t: second_derivative_trig(poly, t), lo, hi, 1e-15)
    return _golden_max(lambda t: abs(derivative_trig(poly, t)), lo, hi)


def max_gradient_point(source, branch: InvertibleBranch | None = None) -> float:
    """Phase of largest ``|dR/dtheta|`` within ``branch`` (or over
    ``[0, 2*pi)`` when no branch is given)."""
    poly = _as_poly(source)
    if branch is None:
        lo, hi = 0.0, TWO_PI
    else:
        lo, hi = branch.theta_min, branch.theta_max
    m = SCAN_POINTS_PER_DEGREE * poly.degree
    grid = np.linspace(lo, hi, m + 1)
    k = int(np.argmax(np.abs(derivative_trig(poly, grid))))
    h = (hi - lo) / m
    a, b = grid[k] - h, grid[k] + h
    if branch is not None:
        a, b = max(lo, a), min(hi, b)
    return refine_slope_peak(poly, a, b)


# --------------------------------------------------------------------------
# Measurement statistics
# --------------------------------------------------------------------------


def _check_unit(r: float) -> float:
    if not abs(r) <= 1.0 + 1e-9:
        raise ValueError(f"response {r!r} outside [-1, 1]")
    return min(1.0, max(-1.0, float(r)))


def response_variance(r):
    """Single-shot variance ``1 - R**2`` of a ±1-valued observable."""
    arr = np.asarray(r, dtype=float)
    if np.any(np.abs(arr) > 1.0 + 1e-9):
        raise ValueError("response outside [-1, 1]")
    out = 1.0 - np.clip(arr, -1.0, 1.0) ** 2
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ShotEstimate:
    value: float
    shots: int


def sample_response(r_true: float, shots: int, rng: np.random.Generator) -> ShotEstimate:
    """Empirical mean of ``shots`` parity outcomes with expectation ``r_true``."""
    r = _check_unit(r_true)
    if shots < 1:
        raise ValueError("shot count must be positive")
    k = rng.binomial(shots, 0.5 * (1.0 + r))
    return ShotEstimate(2.0 * k / shots - 1.0, int(shots))
