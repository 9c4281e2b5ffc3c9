"""Run configuration: parsing and validation.

Text format: UTF-8, one ``key = value`` per line, ``#`` starts a comment, SI
units. A JSON object with the same keys is accepted when the input starts
with ``{``. Recognised keys:

=========================  ===============================================
``params``                 ``derive``, ``fixture:ion`` or ``fixture:polzik``
``normalization``          factor on g^2 in derive mode (default 1)
``n_photons``              photons per pulse
``n_atoms``                ions in the beam
``wavelength``             m
``linewidth``              Hz (not rad/s)
``detuning``               Hz; or ``detuning_over_linewidth``
``beam_area``              m^2
``loss_in``, ``loss_det``  optical losses before / after the sample
``window_loss``            per-window loss, with ``windows_in`` and
                           ``windows_det`` counts (replaces loss_in/loss_det)
``collision_time``         s; or ``collision_rate`` in 1/s
``temperature``            K
``ion_mass``               kg; or ``ion_mass_u`` in atomic mass units
``mirror_transmission``    cavity coupling mirror, in (0, 1]
``fiber_attenuation``      dB/km
``fiber_index``            refractive index
``time``                   storage time in s (default 0)
``seed``                   unsigned 64-bit integer
=========================  ===============================================
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from importlib import resources

from cvmemory.errors import ConfigError, InvalidArgument, ParseError
from cvmemory.physics import (
    AMU,
    CouplingParams,
    PhysicalConfig,
    derive_couplings,
    fixture_params,
    rescale,
    table2_rows,
)
from cvmemory.protocol import LossBudget

MAX_SWEEP_POINTS = 10**7
U64_MAX = 2**64 - 1

PHYSICAL_KEYS = tuple(f.name for f in fields(PhysicalConfig))
ALIASES = {
    "detuning_over_linewidth": "detuning",
    "collision_rate": "collision_time",
    "ion_mass_u": "ion_mass",
}
WINDOW_KEYS = ("window_loss", "windows_in", "windows_det")
NUMERIC_KEYS = (
    PHYSICAL_KEYS + tuple(ALIASES) + WINDOW_KEYS + ("normalization", "time")
)
KNOWN_KEYS = NUMERIC_KEYS + ("params", "seed")


@dataclass(frozen=True)
class SweepAxis:
    path: str
    start: float
    stop: float
    n: int
    log: bool = False

    def __post_init__(self):
        if self.path not in NUMERIC_KEYS:
            raise ConfigError(f"sweep path {self.path!r} is not a numeric config key", self.path)
        if self.n < 1:
            raise ConfigError(f"sweep {self.path}: step count must be >= 1", self.path)
        if self.n == 1:
            if self.start != self.stop:
                raise ConfigError(f"sweep {self.path}: a single point needs START == STOP", self.path)
        elif not self.start < self.stop:
            raise ConfigError(f"sweep {self.path}: START must be < STOP", self.path)
        if self.log and self.start <= 0:
            raise ConfigError(f"sweep {self.path}: log spacing needs START > 0", self.path)

    def values(self) -> list[float]:
        if self.n == 1:
            return [self.start]
        if self.log:
            a, b = math.log(self.start), math.log(self.stop)
            vals = [math.exp(a + (b - a) * i / (self.n - 1)) for i in range(self.n)]
        else:
            vals = [self.start + (self.stop - self.start) * i / (self.n - 1) for i in range(self.n)]
        vals[0], vals[-1] = self.start, self.stop
        return vals

    @classmethod
    def parse(cls, spec: str) -> SweepAxis:
        """``PATH=START:STOP:N[:log]``"""
        try:
            path, rng = spec.split("=", 1)
            parts = rng.split(":")
            if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != "log"):
                raise ValueError
            return cls(path.strip(), float(parts[0]), float(parts[1]), int(parts[2]), len(parts) == 4)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise InvalidArgument(f"bad --vary {spec!r}; expected PATH=START:STOP:N[:log]") from None


@dataclass(frozen=True)
class RunConfig:
    physical: PhysicalConfig
    params_source: str = "fixture"
    fixture: str = "ion"
    normalization: float = 1.0
    losses: LossBudget = field(default_factory=LossBudget)
    tau: float = 1.0 / 0.03
    time: float = 0.0
    sweeps: tuple[SweepAxis, ...] = ()
    output_format: str = "table"
    seed: int = 0
    raw: dict = field(default_factory=dict, compare=False)

    @property
    def params_label(self) -> str:
        return "derive" if self.params_source == "derive" else f"fixture:{self.fixture}"

    def with_overrides(self, **values) -> RunConfig:
        """Re-resolve with some raw keys replaced (used by sweeps)."""
        raw = dict(self.raw)
        for k, v in values.items():
            # an alias and its target must not both be set
            for alias, target in ALIASES.items():
                if k == alias:
                    raw.pop(target, None)
                elif k == target:
                    raw.pop(alias, None)
            raw[k] = v
        return replace(
            build_config(raw),
            sweeps=self.sweeps,
            output_format=self.output_format,
            seed=self.seed,
        )


def _parse_kv(text: str) -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not value:
            raise ParseError(f"empty key or value in {line!r}", lineno)
        if key in raw:
            raise ParseError(f"duplicate key {key!r}", lineno)
        raw[key] = value
    return raw


def _number(key: str, value) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected a number, got {value!r}", key)
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number, got {value!r}", key) from None
    if not math.isfinite(x):
        raise ConfigError(f"{key}: must be finite", key)
    return x


def parse_config(text: bytes | str) -> RunConfig:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8: {exc}") from None
    if not text.strip():
        raise ParseError("empty configuration")
    if text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, exc.lineno) from None
        if not isinstance(raw, dict):
            raise ParseError("JSON configuration must be an object")
    else:
        raw = _parse_kv(text)
    if not raw:
        raise ParseError("configuration has no keys")
    return build_config(raw)


def build_config(raw: dict) -> RunConfig:
    """Validate a raw key/value mapping into a RunConfig."""
    for key in raw:
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown key {key!r}", key)
    for alias, target in ALIASES.items():
        if alias in raw and target in raw:
            raise ConfigError(f"both {alias!r} and {target!r} given", alias)
    if any(k in raw for k in WINDOW_KEYS):
        if not all(k in raw for k in WINDOW_KEYS):
            raise ConfigError(f"window losses need all of {WINDOW_KEYS}", "window_loss")
        if "loss_in" in raw or "loss_det" in raw:
            raise ConfigError("window losses replace loss_in/loss_det", "window_loss")

    num = {k: _number(k, v) for k, v in raw.items() if k in NUMERIC_KEYS}
    phys = {k: num[k] for k in PHYSICAL_KEYS if k in num}
    if "detuning_over_linewidth" in num:
        phys["detuning"] = num["detuning_over_linewidth"] * phys.get(
            "linewidth", PhysicalConfig.linewidth
        )
    if "collision_rate" in num:
        if num["collision_rate"] <= 0:
            raise ConfigError("collision_rate must be > 0", "collision_rate")
        phys["collision_time"] = 1.0 / num["collision_rate"]
    if "ion_mass_u" in num:
        phys["ion_mass"] = num["ion_mass_u"] * AMU
    if "window_loss" in num:
        w = num["window_loss"]
        if not 0 <= w <= 1:
            raise ConfigError("window_loss must lie in [0, 1]", "window_loss")
        for side in ("in", "det"):
            count = num[f"windows_{side}"]
            if count < 0 or count != int(count):
                raise ConfigError(f"windows_{side} must be a non-negative integer", f"windows_{side}")
        budget = LossBudget.from_windows(w, int(num["windows_in"]), int(num["windows_det"]))
        phys["loss_in"], phys["loss_det"] = budget.eta_in, budget.eta_det
    try:
        physical = PhysicalConfig(**phys)
    except InvalidArgument as exc:
        name = str(exc).split()[0]
        raise ConfigError(str(exc), name) from None

    source = str(raw.get("params", "fixture:ion")).strip()
    if source == "derive":
        params_source, fixture = "derive", ""
    elif source.startswith("fixture:"):
        params_source, fixture = "fixture", source.split(":", 1)[1]
        if fixture not in table2_rows():
            raise ConfigError(f"unknown fixture {fixture!r}", "params")
    else:
        raise ConfigError(f"params must be 'derive' or 'fixture:NAME', got {source!r}", "params")

    normalization = num.get("normalization", 1.0)
    if normalization <= 0:
        raise ConfigError("normalization must be > 0", "normalization")
    t = num.get("time", 0.0)
    if t < 0:
        raise ConfigError("time must be >= 0", "time")
    seed = raw.get("seed", 0)
    try:
        seed = int(seed)
    except (TypeError, ValueError):
        raise ConfigError(f"seed must be an integer, got {seed!r}", "seed") from None
    if not 0 <= seed <= U64_MAX:
        raise ConfigError("seed must be an unsigned 64-bit integer", "seed")

    return RunConfig(
        physical=physical,
        params_source=params_source,
        fixture=fixture,
        normalization=normalization,
        losses=LossBudget(physical.loss_in, physical.loss_det),
        tau=physical.collision_time,
        time=t,
        seed=seed,
        raw=dict(raw),
    )


def default_config_text() -> str:
    return resources.files("cvmemory.fixtures").joinpath("ion.cfg").read_text(encoding="utf-8")


def load_fixture_config(name: str) -> RunConfig:
    text = resources.files("cvmemory.fixtures").joinpath(f"{name}.cfg").read_text(encoding="utf-8")
    return parse_config(text)


def resolve_params(config: RunConfig) -> CouplingParams:
    """Coupling parameters for ``config``.

    Fixture parameters are tabulated for a reference photon number and
    detuning; other values of either are reached with :func:`rescale`.
    """
    phys = config.physical
    if config.params_source == "derive":
        return derive_couplings(phys, config.normalization)
    ref = table2_rows()[config.fixture]
    if not math.isclose(phys.n_atoms, float(ref["n_atoms"]), rel_tol=1e-12):
        raise ConfigError(
            f"fixture:{config.fixture} is tabulated for n_atoms = {ref['n_atoms']}; "
            "use params = derive to vary the ion number",
            "n_atoms",
        )
    params = fixture_params(config.fixture)
    np_ratio = phys.n_photons / float(ref["n_photons"])
    delta_ref = float(ref["detuning_over_linewidth"]) * float(ref["linewidth_hz"])
    delta_ratio = phys.detuning / delta_ref
    if math.isclose(np_ratio, 1.0, rel_tol=1e-12) and math.isclose(delta_ratio, 1.0, rel_tol=1e-12):
        return params
    return rescale(params, np_ratio, delta_ratio)
