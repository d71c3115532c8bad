"""Noisy GHZ sensing circuits.

Dense density-matrix simulation of GHZ preparation (Hadamard plus a CNOT
ladder), phase encoding, per-qubit interrogation depolarizing noise and
parity readout; closed-form responses for depolarizing models; and
construction of two-qubit Pauli channels from sparse Pauli-Lindblad rates.

States are stored as complex tensors of shape ``(2,) * 2n``: axes ``0..n-1``
index the ket, axes ``n..2n-1`` the bra, and qubit 0 is the most significant
bit of the flattened index.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np

from .response import ResponseSource, TrigPolynomial

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

MAX_QUBITS = 12

PAULI_CHARS = "IXYZ"
PAULI_LABELS = tuple(a + b for a in PAULI_CHARS for b in PAULI_CHARS)
_LABEL_INDEX = {lab: i for i, lab in enumerate(PAULI_LABELS)}

NOISE_VARIANTS = ("global-depolarizing", "local-depolarizing", "pauli-lindblad")


class SimulationSizeError(ValueError):
    """Raised for qubit counts beyond the dense backend's limit."""


class NoiseModelError(ValueError):
    """Raised for malformed noise-model data."""


# --------------------------------------------------------------------------
# Pauli algebra
# --------------------------------------------------------------------------


def pauli_index(label: str) -> int:
    """Index ``4*idx(A) + idx(B)`` of a two-qubit label ``"AB"``."""
    try:
        return _LABEL_INDEX[label]
    except KeyError:
        raise NoiseModelError(f"unknown two-qubit Pauli label {label!r}") from None


def _anticommute_1q(a: str, b: str) -> int:
    return int(a != "I" and b != "I" and a != b)


def symplectic_product(a: str, b: str) -> int:
    """Binary symplectic product of two-qubit Pauli labels: 0 if the
    operators commute, 1 if they anticommute."""
    pauli_index(a)
    pauli_index(b)
    return (_anticommute_1q(a[0], b[0]) + _anticommute_1q(a[1], b[1])) % 2


@lru_cache(maxsize=None)
def _sign_matrix() -> np.ndarray:
    """``S[a, b] = (-1)**<a, b>`` over the 16 two-qubit Paulis."""
    s = np.empty((16, 16))
    for i, a in enumerate(PAULI_LABELS):
        for j, b in enumerate(PAULI_LABELS):
            s[i, j] = -1.0 if symplectic_product(a, b) else 1.0
    s.setflags(write=False)
    return s


# --------------------------------------------------------------------------
# Noise descriptions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PauliChannel:
    """Two-qubit Pauli channel on qubits ``(site, site + 1)``.

    ``probs[i]`` is the weight of ``PAULI_LABELS[i]``; the label's first
    character acts on qubit ``site``.
    """

    site: int
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).reshape(16)
        if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
            raise NoiseModelError("Pauli channel probabilities must be >= 0 and sum to 1")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def depolarizing(cls, site: int, p: float) -> "PauliChannel":
        probs = np.full(16, p / 16.0)
        probs[0] = 1.0 - 15.0 * p / 16.0
        return cls(site, probs)

    def fidelities(self) -> np.ndarray:
        """Pauli transfer eigenvalues ``f_a = sum_b (-1)**<a,b> c_b``."""
        return _sign_matrix() @ self.probs


@dataclass(frozen=True, eq=False)
class LindbladSpec:
    """Sparse Pauli-Lindblad model: per-site generator rates ``gamma[site]``
    (16-vector indexed like ``PAULI_LABELS``) and a global scale."""

    rates: Mapping[int, np.ndarray]
    base_lambda: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        clean = {}
        for site, g in self.rates.items():
            g = np.asarray(g, dtype=float).reshape(16).copy()
            if np.any(g < 0) or not np.all(np.isfinite(g)):
                raise NoiseModelError(f"site {site}: generator rates must be finite and >= 0")
            g.setflags(write=False)
            clean[int(site)] = g
        if self.base_lambda < 0:
            raise NoiseModelError("base_lambda must be >= 0")
        object.__setattr__(self, "rates", dict(sorted(clean.items())))
        object.__setattr__(self, "base_lambda", float(self.base_lambda))

    def scaled(self, factor: float) -> "LindbladSpec":
        return LindbladSpec(self.rates, self.base_lambda * factor, self.seed)

    def key(self):
        return (self.base_lambda,) + tuple((s, g.tobytes()) for s, g in self.rates.items())


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """Noise acting on the GHZ sensor.

    Args:
        variant: ``"global-depolarizing"``, ``"local-depolarizing"`` or
            ``"pauli-lindblad"``.
        lam: Global fault rate (global variant).
        p: Two-qubit depolarizing probability per CNOT (local variant).
        lindblad: Rates for the Pauli-Lindblad variant.
        k_rate: Interrogation noise rate per unit time.
        interaction_time: Phase accumulation time ``T``.
    """

    variant: str
    lam: float = 0.0
    p: float = 0.0
    lindblad: LindbladSpec | None = None
    k_rate: float = 0.0
    interaction_time: float = 1.0

    def __post_init__(self):
        if self.variant not in NOISE_VARIANTS:
            raise NoiseModelError(f"unknown noise variant {self.variant!r}")
        if self.lam < 0:
            raise NoiseModelError("fault rate must be >= 0")
        if not 0.0 <= self.p < 1.0:
            raise NoiseModelError("gate error probability must lie in [0, 1)")
        if self.k_rate < 0 or self.interaction_time <= 0:
            raise NoiseModelError("need k_rate >= 0 and interaction_time > 0")
        if self.variant == "pauli-lindblad" and self.lindblad is None:
            raise NoiseModelError("pauli-lindblad noise needs a LindbladSpec")

    @classmethod
    def global_depolarizing(cls, lam: float, **kw) -> "NoiseSpec":
        return cls("global-depolarizing", lam=lam, **kw)

    @classmethod
    def local_depolarizing(cls, p: float, **kw) -> "NoiseSpec":
        return cls("local-depolarizing", p=p, **kw)

    @classmethod
    def pauli_lindblad(cls, spec: LindbladSpec, **kw) -> "NoiseSpec":
        return cls("pauli-lindblad", lindblad=spec, **kw)

    @classmethod
    def noiseless(cls) -> "NoiseSpec":
        return cls("global-depolarizing")

    @property
    def interrogation_rate(self) -> float:
        """Per-qubit interrogation fault rate ``k_rate * T``."""
        return self.k_rate * self.interaction_time

    def key(self):
        lk = self.lindblad.key() if self.lindblad is not None else None
        return (self.variant, self.lam, self.p, lk, self.k_rate, self.interaction_time)


def boosted_probability(p: float, x: float) -> float:
    """Scale the fault rate ``-ln(1-p)`` by ``x`` and map back."""
    return -math.expm1(x * math.log1p(-p))


# --------------------------------------------------------------------------
# Pauli-Lindblad to Pauli channel
# --------------------------------------------------------------------------


def lindblad_to_pauli_channel(spec: LindbladSpec, site: int, boost: float = 1.0) -> PauliChannel:
    """Pauli channel generated by the site's Lindblad rates at rate
    ``boost * base_lambda``."""
    if site not in spec.rates:
        raise NoiseModelError(f"noise model has no rates for site {site}")
    gamma = spec.rates[site]
    lam = boost * spec.base_lambda
    w = 0.5 * (1.0 + np.exp(-2.0 * lam * gamma))
    sign = _sign_matrix()
    # f_j = prod_k [w_k + (1 - w_k) (-1)^<j,k>]
    f = np.prod(w[None, :] + (1.0 - w[None, :]) * sign, axis=1)
    c = sign @ f / 16.0
    if np.any(c < -1e-12):
        raise NoiseModelError("Lindblad rates produced a non-physical channel")
    c = np.clip(c, 0.0, None)
    return PauliChannel(site, c / c.sum())


# --------------------------------------------------------------------------
# Noise-model files
# --------------------------------------------------------------------------


def parse_lindblad_toml(text: str) -> LindbladSpec:
    """Parse a noise-model document with top-level ``base_lambda`` and
    ``[[site]]`` tables holding ``index`` and a ``gamma`` label map."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise NoiseModelError(f"invalid noise-model TOML: {exc}") from exc
    known = {"base_lambda", "site", "seed", "description"}
    extra = set(doc) - known
    if extra:
        raise NoiseModelError(f"unknown noise-model keys: {sorted(extra)}")
    base = doc.get("base_lambda", 1.0)
    if not isinstance(base, (int, float)) or isinstance(base, bool):
        raise NoiseModelError("base_lambda must be a number")
    rates: dict[int, np.ndarray] = {}
    for entry in doc.get("site", []):
        if not isinstance(entry, dict) or "index" not in entry:
            raise NoiseModelError("each [[site]] needs an integer 'index'")
        idx = entry["index"]
        if not isinstance(idx, int) or isinstance(idx, bool) or idx < 0:
            raise NoiseModelError(f"site index must be a non-negative integer, got {idx!r}")
        if idx in rates:
            raise NoiseModelError(f"duplicate site index {idx}")
        bad = set(entry) - {"index", "gamma"}
        if bad:
            raise NoiseModelError(f"site {idx}: unknown keys {sorted(bad)}")
        g = np.zeros(16)
        for label, rate in entry.get("gamma", {}).items():
            if not isinstance(rate, (int, float)) or isinstance(rate, bool):
                raise NoiseModelError(f"site {idx}: rate for {label!r} must be a number")
            if rate < 0:
                raise NoiseModelError(f"site {idx}: negative rate for {label!r}")
            g[pauli_index(label)] = float(rate)
        rates[idx] = g
    seed = doc.get("seed")
    return LindbladSpec(rates, float(base), seed if isinstance(seed, int) else None)


def load_lindblad_toml(path: str | os.PathLike, scale: float = 1.0) -> LindbladSpec:
    """Read a noise-model file; ``scale`` multiplies its ``base_lambda``."""
    with open(path, encoding="utf-8") as fh:
        spec = parse_lindblad_toml(fh.read())
    return spec.scaled(scale) if scale != 1.0 else spec


def dump_lindblad_toml(spec: LindbladSpec, description: str | None = None) -> str:
    """Serialize ``spec`` in the noise-model format (zero rates omitted)."""
    lines = []
    if description:
        lines.append(f"description = {description!r}".replace("'", '"'))
    if spec.seed is not None:
        lines.append(f"seed = {spec.seed}")
    lines.append(f"base_lambda = {spec.base_lambda!r}")
    for site, g in spec.rates.items():
        lines += ["", "[[site]]", f"index = {site}", "[site.gamma]"]
        for i, rate in enumerate(g):
            if rate > 0:
                lines.append(f"{PAULI_LABELS[i]} = {float(rate)!r}")
    return "\n".join(lines) + "\n"


def synthetic_lindblad(n_sites: int, seed: int, low: float = 1e-4, high: float = 1e-2) -> LindbladSpec:
    """Random sparse model: every non-identity generator on every site gets
    a rate drawn log-uniformly from ``[low, high]``."""
    rng = np.random.default_rng(seed)
    rates = {}
    for site in range(n_sites):
        g = np.zeros(16)
        g[1:] = np.exp(rng.uniform(math.log(low), math.log(high), size=15))
        rates[site] = g
    return LindbladSpec(rates, 1.0, seed)


def bundled_noise_model_path() -> str:
    """Path of the shipped synthetic Pauli-Lindblad model."""
    return os.path.join(os.path.dirname(__file__), "data", "eagle_synthetic.toml")


# --------------------------------------------------------------------------
# Dense density-matrix kernels
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    n: int
    tensor: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        d = 2**self.n
        return self.tensor.reshape(d, d)

    def is_valid(self, tol: float = 1e-10) -> bool:
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > tol or abs(np.trace(m) - 1.0) > tol:
            return False
        return bool(np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min() >= -1e-9)


def _zero_state(n: int) -> np.ndarray:
    rho = np.zeros((2,) * (2 * n), dtype=complex)
    rho[(0,) * (2 * n)] = 1.0
    return rho


_Z_SIGN = np.array([[1.0, -1.0], [-1.0, 1.0]])


def _conj_x(rho: np.ndarray, q: int, n: int) -> np.ndarray:
    return np.flip(rho, axis=(q, n + q))


def _conj_z(rho: np.ndarray, q: int, n: int) -> np.ndarray:
    shape = [1] * (2 * n)
    shape[q] = shape[n + q] = 2
    return rho * _Z_SIGN.reshape(shape)


def conjugate_pauli(rho: np.ndarray, label: str, qubits, n: int) -> np.ndarray:
    """``P rho P`` for a Pauli string ``label`` on ``qubits``."""
    out = rho
    for ch, q in zip(label, qubits):
        if ch == "I":
            continue
        if ch in "ZY":
            out = _conj_z(out, q, n)
        if ch in "XY":
            out = _conj_x(out, q, n)
    return out


def apply_pauli_channel(rho: np.ndarray, channel: PauliChannel, n: int) -> np.ndarray:
    qubits = (channel.site, channel.site + 1)
    out = np.zeros_like(rho)
    for i, c in enumerate(channel.probs):
        if c > 0:
            out += c * conjugate_pauli(rho, PAULI_LABELS[i], qubits, n)
    return out


def apply_single_qubit_depolarizing(rho: np.ndarray, q: int, prob: float, n: int) -> np.ndarray:
    """``(1 - 3p/4) rho + p/4 (X rho X + Y rho Y + Z rho Z)`` on qubit ``q``."""
    if prob == 0.0:
        return rho
    zz = _conj_z(rho, q, n)
    out = (1.0 - 0.75 * prob) * rho + 0.25 * prob * zz
    out += 0.25 * prob * (_conj_x(rho, q, n) + _conj_x(zz, q, n))
    return out


_H = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)


def _apply_1q_unitary(rho: np.ndarray, u: np.ndarray, q: int, n: int) -> np.ndarray:
    out = np.moveaxis(np.tensordot(u, rho, axes=([1], [q])), 0, q)
    return np.moveaxis(np.tensordot(u.conj(), out, axes=([1], [n + q])), 0, n + q)


def _apply_cnot(rho: np.ndarray, control: int, target: int, n: int) -> np.ndarray:
    out = rho.copy()
    for c_ax, t_ax in ((control, target), (n + control, n + target)):
        idx = [slice(None)] * (2 * n)
        idx[c_ax] = 1
        idx = tuple(idx)
        # the target axis shifts down by one once the control axis is indexed out
        t_local = t_ax - (1 if t_ax > c_ax else 0)
        out[idx] = np.flip(out[idx], axis=t_local)
    return out


def cnot_ladder(n: int) -> list[tuple[int, int]]:
    """``(control, target)`` pairs spreading outward from the centre qubit,
    alternating right then left."""
    centre = (n - 1) // 2
    right = left = centre
    pairs = []
    while right < n - 1 or left > 0:
        if right < n - 1:
            pairs.append((right, right + 1))
            right += 1
        if left > 0:
            pairs.append((left, left - 1))
            left -= 1
    return pairs


def _check_size(n: int, boost: float):
    if not 1 <= n <= MAX_QUBITS:
        raise SimulationSizeError(f"dense simulation supports 1 <= n <= {MAX_QUBITS}, got {n}")
    if boost < 1.0:
        raise ValueError("boost multiplier must be >= 1")


@dataclass(frozen=True, eq=False)
class GhzPreparation:
    """Noisy GHZ preparation for ``n`` qubits: Hadamard on the centre qubit,
    a CNOT ladder, and the per-CNOT (or global) noise at boost ``x``."""

    n: int
    noise: NoiseSpec
    boost: float = 1.0
    gates: tuple = field(init=False)

    def __post_init__(self):
        _check_size(self.n, self.boost)
        object.__setattr__(self, "gates", tuple(cnot_ladder(self.n)))

    def site_channel(self, control: int, target: int) -> PauliChannel | None:
        site = min(control, target)
        nz = self.noise
        if nz.variant == "local-depolarizing":
            if nz.p == 0.0:
                return None
            return PauliChannel.depolarizing(site, boosted_probability(nz.p, self.boost))
        if nz.variant == "pauli-lindblad":
            return lindblad_to_pauli_channel(nz.lindblad, site, self.boost)
        return None

    def __call__(self, rho: np.ndarray | None = None) -> DensityMatrix:
        n = self.n
        t = _zero_state(n) if rho is None else np.asarray(rho, dtype=complex).reshape((2,) * (2 * n))
        t = _apply_1q_unitary(t, _H, (n - 1) // 2, n)
        for c, tg in self.gates:
            t = _apply_cnot(t, c, tg, n)
            ch = self.site_channel(c, tg)
            if ch is not None:
                t = apply_pauli_channel(t, ch, n)
        if self.noise.variant == "global-depolarizing" and self.noise.lam > 0:
            p = -math.expm1(-self.boost * self.noise.lam)
            d = 2**n
            t = (1.0 - p) * t + (p / d) * np.eye(d, dtype=complex).reshape(t.shape)
        return DensityMatrix(n, t)


def build_ghz_channel(n: int, noise: NoiseSpec, boost: float = 1.0) -> GhzPreparation:
    """Noisy GHZ preparation procedure; call it to obtain the prepared state."""
    return GhzPreparation(n, noise, boost)


def _hamming_weights(n: int) -> np.ndarray:
    idx = np.arange(2**n)
    return np.array([bin(i).count("1") for i in idx])


def _phase_vector(n: int, theta: float) -> np.ndarray:
    """Diagonal of ``(exp(-i theta Z / 2))^{(x) n}``."""
    return np.exp(-0.5j * theta * (n - 2 * _hamming_weights(n)))


def apply_interrogation(rho: np.ndarray, noise: NoiseSpec, n: int, boost: float = 1.0) -> np.ndarray:
    prob = -math.expm1(-boost * noise.interrogation_rate)
    for q in range(n):
        rho = apply_single_qubit_depolarizing(rho, q, prob, n)
    return rho


def parity(rho: np.ndarray, n: int) -> float:
    """``Tr[rho X^{(x) n}]``."""
    d = 2**n
    m = rho.reshape(d, d)
    return float(np.real(m[np.arange(d), d - 1 - np.arange(d)].sum()))


_PREP_CACHE: dict = {}
_PREP_CACHE_LIMIT = 32


def _prepared(n: int, noise: NoiseSpec, boost: float) -> np.ndarray:
    key = (n, noise.key(), boost)
    t = _PREP_CACHE.get(key)
    if t is None:
        if len(_PREP_CACHE) >= _PREP_CACHE_LIMIT:
            _PREP_CACHE.clear()
        t = build_ghz_channel(n, noise, boost)().tensor
        t.setflags(write=False)
        _PREP_CACHE[key] = t
    return t


def simulate_response(n: int, noise: NoiseSpec, theta: float, boost: float = 1.0) -> float:
    """Parity expectation after noisy preparation, phase encoding and
    interrogation noise, by dense simulation."""
    _check_size(n, boost)
    rho = _prepared(n, noise, boost)
    ph = _phase_vector(n, theta)
    d = 2**n
    rho = (ph[:, None] * rho.reshape(d, d) * ph.conj()[None, :]).reshape(rho.shape)
    rho = apply_interrogation(rho, noise, n, boost)
    return parity(rho, n)


def simulated_polynomial(n: int, noise: NoiseSpec, boost: float = 1.0) -> TrigPolynomial:
    """Exact trigonometric-polynomial form of the simulated response.

    Interrogation depolarizing commutes with the phase rotation, so the
    response is ``sum_i rho[i, ~i] exp(-i (n - 2 w_i) theta)`` over the
    interrogated, pre-encoding state.
    """
    _check_size(n, boost)
    rho = apply_interrogation(np.array(_prepared(n, noise, boost)), noise, n, boost)
    d = 2**n
    anti = rho.reshape(d, d)[np.arange(d), d - 1 - np.arange(d)]
    freq = n - 2 * _hamming_weights(n)
    a, b = np.zeros(n), np.zeros(n)
    c = 0.0
    for r, s in zip(anti, freq):
        if s == 0:
            c += r.real
        elif s > 0:
            a[s - 1] += r.real
            b[s - 1] += r.imag
        else:
            a[-s - 1] += r.real
            b[-s - 1] -= r.imag
    return TrigPolynomial(a, b, c)


# --------------------------------------------------------------------------
# Closed forms
# --------------------------------------------------------------------------


def analytic_amplitude(noise: NoiseSpec, n: int, boost: float = 1.0) -> float:
    """Fringe amplitude of ``A cos(n theta)`` for depolarizing models,
    including the interrogation factor ``exp(-n x k T)``."""
    if noise.variant == "global-depolarizing":
        amp = math.exp(-boost * noise.lam)
    elif noise.variant == "local-depolarizing":
        amp = (1.0 - boosted_probability(noise.p, boost)) ** (n - 1)
    else:
        raise NoiseModelError("no closed form for pauli-lindblad noise; use simulate_response")
    return amp * math.exp(-n * boost * noise.interrogation_rate)


def analytic_response(noise: NoiseSpec, n: int, theta, boost: float = 1.0):
    """Closed-form response ``A cos(n theta)`` (scalar or array ``theta``)."""
    out = analytic_amplitude(noise, n, boost) * np.cos(n * np.asarray(theta, dtype=float))
    return float(out) if out.ndim == 0 else out


def make_source(n: int, noise: NoiseSpec, simulated: bool = False) -> ResponseSource:
    """Response source for ``noise``: closed form for depolarizing models
    unless ``simulated`` is set; Pauli-Lindblad always uses simulation."""
    if simulated or noise.variant == "pauli-lindblad":
        return ResponseSource("simulated", n, noise=noise)
    variant = "analytic-global-depol" if noise.variant == "global-depolarizing" else "analytic-local-depol"
    return ResponseSource(variant, n, noise=noise)


def response_function(n: int, noise: NoiseSpec, boost: float = 1.0) -> Callable[[float], float]:
    """Convenience callable ``theta -> simulate_response(...)``."""
    return lambda theta: simulate_response(n, noise, theta, boost)
