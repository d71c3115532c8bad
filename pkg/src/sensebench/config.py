"""Experiment configuration files (TOML, kebab-case keys).

A minimal file::

    experiment = "compare-protocols"
    seed = 7
    trials = 2000

    [system]
    n = 9

    [noise]
    model = "local-depolarizing"
    p = 9e-3

    [budget]
    shots = 50000

Unknown keys are rejected so typos surface instead of silently falling back
to defaults.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Any

from . import noise as _noise
from .protocols import KINDS, PhasePrior
from .zne import DEFAULT_ORDER, DEFAULT_X1, ZneConfig

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

EXPERIMENTS = (
    "response-scan",
    "zne-demo",
    "zne-tune",
    "inference-demo",
    "compare-protocols",
    "bounds-scan",
    "precharacterization-sweep",
    "interrogation-sweep",
)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


class _Table:
    """Key reader that tracks consumed keys for strict validation."""

    def __init__(self, data: dict, path: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{path or 'document'}: expected a table")
        self.data = data
        self.path = path
        self.used: set[str] = set()

    def _where(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def has(self, key: str) -> bool:
        return key in self.data

    def raw(self, key: str, default=None):
        self.used.add(key)
        return self.data.get(key, default)

    def number(self, key: str, default=None, minimum=None, strict_min=False, integer=False):
        v = self.raw(key, default)
        if v is None:
            return None
        if not _is_num(v) or (integer and not isinstance(v, int)):
            kind = "an integer" if integer else "a number"
            raise ConfigError(f"{self._where(key)}: expected {kind}, got {v!r}")
        if not math.isfinite(v):
            raise ConfigError(f"{self._where(key)}: must be finite")
        if minimum is not None and (v < minimum or (strict_min and v == minimum)):
            op = ">" if strict_min else ">="
            raise ConfigError(f"{self._where(key)}: must be {op} {minimum}, got {v!r}")
        return v

    def numbers(self, key: str, default=None, minimum=None, strict_min=False, integer=False):
        """Scalar or non-empty list of numbers, returned as a list."""
        v = self.raw(key, default)
        if v is None:
            return None
        items = v if isinstance(v, list) else [v]
        if not items:
            raise ConfigError(f"{self._where(key)}: range must be non-empty")
        out = []
        for item in items:
            sub = _Table({key: item}, self.path)
            out.append(sub.number(key, minimum=minimum, strict_min=strict_min, integer=integer))
        return out

    def string(self, key: str, default=None, choices=None):
        v = self.raw(key, default)
        if v is None:
            return None
        if not isinstance(v, str):
            raise ConfigError(f"{self._where(key)}: expected a string, got {v!r}")
        if choices is not None and v not in choices:
            raise ConfigError(f"{self._where(key)}: {v!r} is not one of {list(choices)}")
        return v

    def boolean(self, key: str, default=False) -> bool:
        v = self.raw(key, default)
        if not isinstance(v, bool):
            raise ConfigError(f"{self._where(key)}: expected true/false, got {v!r}")
        return v

    def table(self, key: str) -> "_Table":
        self.used.add(key)
        return _Table(self.data.get(key, {}), self._where(key))

    def finish(self):
        extra = sorted(set(self.data) - self.used)
        if extra:
            raise ConfigError(f"{self.path or 'document'}: unknown keys {extra}")


@dataclass(frozen=True)
class NoiseConfig:
    model: str = "global-depolarizing"
    levels: tuple = (0.0,)
    file: str | None = None
    lambda_scale: float = 1.0
    k_rate: float = 0.0
    interaction_times: tuple = (1.0,)
    simulated: bool = False
    lambda_per_qubit: float | None = None

    def levels_for(self, n: int) -> list[float]:
        if self.lambda_per_qubit is not None:
            return [self.lambda_per_qubit * n]
        return list(self.levels)

    def spec(self, level: float | None = None, interaction_time: float | None = None) -> _noise.NoiseSpec:
        """Noise at one sweep point; ``level`` is lambda, p or the Lindblad
        scale factor depending on the model."""
        lvl = self.levels[0] if level is None else level
        t = self.interaction_times[0] if interaction_time is None else interaction_time
        kw = dict(k_rate=self.k_rate, interaction_time=t)
        if self.model == "global-depolarizing":
            return _noise.NoiseSpec.global_depolarizing(lvl, **kw)
        if self.model == "local-depolarizing":
            return _noise.NoiseSpec.local_depolarizing(lvl, **kw)
        path = self.file or _noise.bundled_noise_model_path()
        spec = _noise.load_lindblad_toml(path, self.lambda_scale * lvl)
        return _noise.NoiseSpec.pauli_lindblad(spec, **kw)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    trials: int
    n_values: tuple
    noise: NoiseConfig
    shots: tuple
    scaling: str | None = None
    n0: float = 1.0
    c_pre: float = 1.0
    inference_shots: tuple | None = None
    inference_fraction: float | None = None
    protocols: tuple = ("noise-aware", "naive", "zne", "inference", "precharacterized-inference")
    freeze_inference: bool = False
    prior: PhasePrior = field(default_factory=PhasePrior)
    zne_order: int = DEFAULT_ORDER
    zne_x1: float = DEFAULT_X1
    zne_orders: tuple = (1, 2, 3, 4, 5)
    zne_x1_values: tuple = (1.25, 1.5, 1.75, 2.0, 2.5)
    theta_points: int = 128
    boosts: tuple = (1.0,)
    prior_average: bool = True
    theta_offset: float | None = None
    output_dir: str | None = None
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def zne(self) -> ZneConfig:
        return ZneConfig.tilted(self.zne_order, self.zne_x1)

    def shots_for(self, n: int) -> list[int]:
        if self.scaling == "n2log3":
            from .bounds import shots_n2log3

            return [shots_n2log3(n, self.n0)]
        return list(self.shots)


def parse_config(text: str, base_dir: str | None = None) -> ExperimentConfig:
    """Parse and validate a configuration document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}") from exc
    top = _Table(doc, "")
    experiment = top.string("experiment", choices=EXPERIMENTS)
    if experiment is None:
        raise ConfigError("experiment: required key missing")
    seed = top.number("seed", integer=True, minimum=0)
    if seed is None:
        raise ConfigError("seed: required key missing (no implicit entropy)")
    trials = top.number("trials", 1000, minimum=1, integer=True)

    sysm = top.table("system")
    n_values = sysm.numbers("n", minimum=1, integer=True)
    if n_values is None:
        n_lo = sysm.number("n-min", minimum=1, integer=True)
        n_hi = sysm.number("n-max", minimum=1, integer=True)
        if n_lo is None or n_hi is None:
            raise ConfigError("system.n: required (or give system.n-min and system.n-max)")
        if n_hi < n_lo:
            raise ConfigError("system.n-max: must be >= system.n-min")
        n_values = list(range(n_lo, n_hi + 1))
    sysm.finish()

    nz = top.table("noise")
    model = nz.string("model", "global-depolarizing", choices=_noise.NOISE_VARIANTS)
    lambda_per_qubit = None
    if model == "global-depolarizing":
        lambda_per_qubit = nz.number("lambda-per-qubit", None, minimum=0)
        if lambda_per_qubit is not None and nz.has("lambda"):
            raise ConfigError("noise.lambda-per-qubit: give either lambda or lambda-per-qubit")
        levels = nz.numbers("lambda", [0.0], minimum=0)
        for other in ("p", "scale"):
            if nz.has(other):
                raise ConfigError(f"noise.{other}: not used by the global-depolarizing model")
    elif model == "local-depolarizing":
        levels = nz.numbers("p", [0.0], minimum=0)
        if any(v >= 1 for v in levels):
            raise ConfigError("noise.p: must be < 1")
    else:
        levels = nz.numbers("scale", [1.0], minimum=0)
    file = nz.string("file")
    if file is not None:
        if model != "pauli-lindblad":
            raise ConfigError("noise.file: only used by the pauli-lindblad model")
        if base_dir and not os.path.isabs(file):
            file = os.path.join(base_dir, file)
    lambda_scale = nz.number("lambda-scale", 1.0, minimum=0)
    k_rate = nz.number("k-rate", 0.0, minimum=0)
    times = nz.numbers("interaction-time", [1.0], minimum=0, strict_min=True)
    simulated = nz.boolean("simulated", False)
    nz.finish()
    noise_cfg = NoiseConfig(
        model, tuple(levels), file, lambda_scale, k_rate, tuple(times), simulated, lambda_per_qubit
    )
    if model == "pauli-lindblad":
        try:
            noise_cfg.spec()
        except (OSError, _noise.NoiseModelError) as exc:
            raise ConfigError(f"noise.file: {exc}") from exc
    if (simulated or model == "pauli-lindblad") and max(n_values) > _noise.MAX_QUBITS:
        raise ConfigError(f"system.n: dense simulation supports n <= {_noise.MAX_QUBITS}")

    bud = top.table("budget")
    scaling = bud.string("scaling", None, choices=("n2log3",))
    n0 = bud.number("n0", 1.0, minimum=0, strict_min=True)
    shots = bud.numbers("shots", None, minimum=1, integer=True)
    if shots is None and scaling is None:
        shots = [10_000]
    if shots is not None and scaling is not None:
        raise ConfigError("budget.shots: give either shots or scaling, not both")
    c_pre = bud.number("c-pre", 1.0, minimum=0, strict_min=True)
    inference_shots = bud.numbers("inference-shots", None, minimum=1, integer=True)
    inference_fraction = bud.number("inference-fraction", None, minimum=0, strict_min=True)
    if inference_fraction is not None and inference_fraction >= 1:
        raise ConfigError("budget.inference-fraction: must be < 1")
    bud.finish()

    pro = top.table("protocols")
    kinds = pro.raw("kinds", None)
    if kinds is None:
        kinds = list(ExperimentConfig.protocols)
    if not isinstance(kinds, list) or not kinds:
        raise ConfigError("protocols.kinds: expected a non-empty list")
    for k in kinds:
        if k not in KINDS:
            raise ConfigError(f"protocols.kinds: unknown protocol {k!r}")
    freeze = pro.boolean("freeze-inference", False)
    pro.finish()

    pr = top.table("prior")
    prior = PhasePrior(
        alpha_prior=pr.number("alpha", 0.0),
        interaction_time=1.0,
        theta_bias=0.0,
        bits=pr.number("bits", 10, minimum=1, integer=True),
    )
    pr.finish()

    z = top.table("zne")
    order = z.number("order", DEFAULT_ORDER, minimum=1, integer=True)
    x1 = z.number("x1", DEFAULT_X1, minimum=1, strict_min=True)
    orders = z.numbers("orders", [1, 2, 3, 4, 5], minimum=1, integer=True)
    x1_values = z.numbers("x1-values", [1.25, 1.5, 1.75, 2.0, 2.5], minimum=1, strict_min=True)
    z.finish()

    sc = top.table("scan")
    theta_points = sc.number("theta-points", 128, minimum=2, integer=True)
    boosts = sc.numbers("boosts", [1.0], minimum=1)
    prior_average = sc.boolean("prior-average", True)
    theta_offset = sc.number("theta-offset", None)
    sc.finish()

    out = top.table("output")
    out_dir = out.string("dir")
    if out_dir is not None and base_dir and not os.path.isabs(out_dir):
        out_dir = os.path.join(base_dir, out_dir)
    out.finish()
    top.finish()

    return ExperimentConfig(
        experiment=experiment,
        seed=int(seed),
        trials=int(trials),
        n_values=tuple(int(v) for v in n_values),
        noise=noise_cfg,
        shots=tuple(int(v) for v in shots) if shots else (),
        scaling=scaling,
        n0=float(n0),
        c_pre=float(c_pre),
        inference_shots=tuple(int(v) for v in inference_shots) if inference_shots else None,
        inference_fraction=inference_fraction,
        protocols=tuple(kinds),
        freeze_inference=freeze,
        prior=prior,
        zne_order=int(order),
        zne_x1=float(x1),
        zne_orders=tuple(int(v) for v in orders),
        zne_x1_values=tuple(float(v) for v in x1_values),
        theta_points=int(theta_points),
        boosts=tuple(float(b) for b in boosts),
        prior_average=prior_average,
        theta_offset=theta_offset,
        output_dir=out_dir,
        raw=doc,
    )


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text, os.path.dirname(os.path.abspath(path)))


def config_to_dict(cfg: ExperimentConfig) -> dict[str, Any]:
    """Echo of the raw document for run manifests."""
    return cfg.raw
