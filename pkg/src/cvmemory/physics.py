"""Light-matter interface parameters and environment models.

Frequencies (``linewidth``, ``detuning``) are plain frequencies in Hz, not
angular frequencies; this is the reading under which the coupling-constant
formula reproduces the tabulated g^2 values for both the vapour-cell and the
ion-cloud setups.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields, replace
from importlib import resources

from scipy import constants

from cvmemory.errors import InvalidArgument, PhysicsViolation

C_LIGHT = constants.c
K_B = constants.k
AMU = constants.atomic_mass

IDENTITY_TOL = 1e-12
CONSISTENCY_THRESHOLD = 0.05


@dataclass(frozen=True)
class PhysicalConfig:
    """Experimental parameters, SI units. Defaults describe the ion cloud."""

    n_photons: float = 2.1e12
    n_atoms: float = 1.5e6
    wavelength: float = 422e-9
    linewidth: float = 20e6
    detuning: float = 8e3 * 20e6
    beam_area: float = 1.1e-8
    loss_in: float = 0.01
    loss_det: float = 0.05
    collision_time: float = 1.0 / 0.03
    temperature: float = 0.1
    ion_mass: float = 88 * AMU
    mirror_transmission: float = 0.1
    fiber_attenuation: float = 0.2
    fiber_index: float = 1.5

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise InvalidArgument(f"{f.name} must be a finite number, got {v!r}")
        for name in ("n_photons", "n_atoms"):
            if getattr(self, name) < 0:
                raise InvalidArgument(f"{name} must be >= 0")
        for name in (
            "wavelength", "linewidth", "detuning", "beam_area", "collision_time",
            "temperature", "ion_mass", "fiber_attenuation", "fiber_index",
        ):
            if getattr(self, name) <= 0:
                raise InvalidArgument(f"{name} must be > 0")
        for name in ("loss_in", "loss_det"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidArgument(f"{name} must lie in [0, 1]")
        if not 0.0 < self.mirror_transmission <= 1.0:
            raise InvalidArgument("mirror_transmission must lie in (0, 1]")

    @property
    def detuning_over_linewidth(self) -> float:
        return self.detuning / self.linewidth


@dataclass(frozen=True)
class CouplingParams:
    """Dimensionless interface parameters.

    ``provenance`` is ``"derived"`` (computed from a PhysicalConfig) or
    ``"fixture-override"`` (tabulated values). ``rescaling`` accumulates the
    ``(photon-number ratio, detuning ratio)`` applied by :func:`rescale`.
    """

    kappa: float
    eps_a: float
    eps_p: float
    g2: float
    cooperativity: float | None = None
    provenance: str = "derived"
    label: str = ""
    rescaling: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.kappa >= 0:
            raise InvalidArgument(f"kappa must be >= 0, got {self.kappa}")
        for name in ("eps_a", "eps_p"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise PhysicsViolation(f"{name} = {v:.6g} outside [0, 1]", **{name: v})
        if self.provenance not in ("derived", "fixture-override"):
            raise InvalidArgument(f"unknown provenance {self.provenance!r}")


def derive_g2(wavelength: float, linewidth: float, beam_area: float) -> float:
    """Atom-photon coupling ``3 c lambda^2 gamma / (16 pi^2 A)``."""
    if min(wavelength, linewidth, beam_area) <= 0:
        raise InvalidArgument("wavelength, linewidth and beam_area must be > 0")
    return 3.0 * C_LIGHT * wavelength**2 * linewidth / (16.0 * math.pi**2 * beam_area)


def cooperativity(g2: float, n_atoms: float, linewidth: float, mirror_transmission: float) -> float:
    """Intracavity cooperativity ``2 pi g^2 N_a / (c gamma T)``."""
    if min(g2, n_atoms, linewidth) <= 0 or not 0 < mirror_transmission <= 1:
        raise InvalidArgument("cooperativity inputs out of range")
    return 2.0 * math.pi * g2 * n_atoms / (C_LIGHT * linewidth * mirror_transmission)


def beam_area(waist: float, convention: str = "full") -> float:
    """Beam cross section from a Gaussian waist.

    ``"full"`` is ``pi w^2``; ``"effective"`` is the mode area ``pi w^2 / 2``.
    """
    if convention == "full":
        return math.pi * waist**2
    if convention == "effective":
        return math.pi * waist**2 / 2.0
    raise InvalidArgument(f"unknown area convention {convention!r}")


def derive_couplings(config: PhysicalConfig, normalization: float = 1.0) -> CouplingParams:
    """Evaluate the kappa / loss formulas on ``config``.

    ``normalization`` multiplies g^2 before use. With the default of 1 the
    formulas are taken literally in SI units, which gives losses far above 1
    for realistic configurations; that case raises PhysicsViolation rather
    than being rescaled silently.
    """
    if not normalization > 0:
        raise InvalidArgument(f"normalization must be > 0, got {normalization}")
    g2 = derive_g2(config.wavelength, config.linewidth, config.beam_area)
    g2n = g2 * normalization
    delta, gamma = config.detuning, config.linewidth
    eps_a = config.n_photons * g2n * gamma / delta**2
    eps_p = config.n_atoms * g2n * gamma / delta**2
    kappa = 2.0 * math.sqrt(config.n_photons * config.n_atoms) * g2n / delta
    if eps_a > 1 or eps_p > 1:
        raise PhysicsViolation(
            f"derived losses exceed 1 (eps_a={eps_a:.3g}, eps_p={eps_p:.3g}); "
            "supply a normalization or use fixture parameters",
            eps_a=eps_a, eps_p=eps_p, kappa=kappa,
        )
    if eps_a > 0 and eps_p > 0:
        lhs = kappa**2 / (eps_a * eps_p)
        rhs = 4.0 * (delta / gamma) ** 2
        assert abs(lhs - rhs) <= IDENTITY_TOL * rhs, (lhs, rhs)
        assert abs(eps_a / eps_p - config.n_photons / config.n_atoms) <= (
            IDENTITY_TOL * config.n_photons / config.n_atoms
        )
    return CouplingParams(
        kappa=kappa,
        eps_a=eps_a,
        eps_p=eps_p,
        g2=g2,
        cooperativity=cooperativity(g2, config.n_atoms, gamma, config.mirror_transmission)
        if config.n_atoms > 0
        else None,
        provenance="derived",
    )


def read_fixture_csv(name: str) -> list[dict[str, str]]:
    text = resources.files("cvmemory.fixtures").joinpath(name).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    return list(csv.DictReader(lines))


def table2_rows() -> dict[str, dict[str, str]]:
    return {row["setup"]: row for row in read_fixture_csv("table2_expected.csv")}


def fixture_params(name: str = "ion") -> CouplingParams:
    """Tabulated interface parameters for ``"ion"`` or ``"polzik"``."""
    rows = table2_rows()
    if name not in rows:
        raise InvalidArgument(f"unknown fixture {name!r}; known: {sorted(rows)}")
    row = rows[name]
    return CouplingParams(
        kappa=float(row["kappa"]),
        eps_a=float(row["eps_a"]),
        eps_p=float(row["eps_p"]),
        g2=float(row["g2"]),
        cooperativity=cooperativity(
            float(row["g2"]), float(row["n_atoms"]), float(row["linewidth_hz"]),
            float(row["mirror_transmission"]),
        ),
        provenance="fixture-override",
        label=name,
    )


@dataclass(frozen=True)
class ConsistencyReport:
    """Checks of the two identities the coupling formulas imply.

    Deviations are relative: ``(tabulated - implied) / implied``.
    """

    kappa_sq: float
    kappa_sq_implied: float
    kappa_deviation: float
    loss_ratio: float
    photon_atom_ratio: float
    ratio_deviation: float
    threshold: float = CONSISTENCY_THRESHOLD
    kappa_ok: bool = field(init=False)
    ratio_ok: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "kappa_ok", abs(self.kappa_deviation) <= self.threshold)
        object.__setattr__(self, "ratio_ok", abs(self.ratio_deviation) <= self.threshold)

    @property
    def ratio_mismatch_factor(self) -> float:
        return self.loss_ratio / self.photon_atom_ratio


def consistency_report(params: CouplingParams, config: PhysicalConfig) -> ConsistencyReport:
    implied = 4.0 * params.eps_a * params.eps_p * config.detuning_over_linewidth**2
    k2 = params.kappa**2
    loss_ratio = params.eps_a / params.eps_p if params.eps_p > 0 else math.inf
    np_na = config.n_photons / config.n_atoms if config.n_atoms > 0 else math.inf

    def rel(a, b):
        if b == 0:
            return 0.0 if a == 0 else math.inf
        return (a - b) / b

    return ConsistencyReport(
        kappa_sq=k2,
        kappa_sq_implied=implied,
        kappa_deviation=rel(k2, implied),
        loss_ratio=loss_ratio,
        photon_atom_ratio=np_na,
        ratio_deviation=rel(loss_ratio, np_na),
    )


def rescale(params: CouplingParams, np_ratio: float, delta_ratio: float) -> CouplingParams:
    """Move to ``N_p * np_ratio`` photons and detuning ``Delta * delta_ratio``.

    kappa scales as sqrt(N_p)/Delta, eps_a as N_p/Delta^2, eps_p as 1/Delta^2.
    """
    if not (np_ratio > 0 and delta_ratio > 0):
        raise InvalidArgument("rescaling ratios must be > 0")
    eps_a = params.eps_a * np_ratio / delta_ratio**2
    eps_p = params.eps_p / delta_ratio**2
    if eps_a > 1 or eps_p > 1:
        raise PhysicsViolation(
            f"rescaled losses exceed 1 (eps_a={eps_a:.3g}, eps_p={eps_p:.3g})",
            eps_a=eps_a, eps_p=eps_p,
        )
    prev = params.rescaling or (1.0, 1.0)
    return replace(
        params,
        kappa=params.kappa * math.sqrt(np_ratio) / delta_ratio,
        eps_a=eps_a,
        eps_p=eps_p,
        # cooperativity does not depend on N_p or Delta
        rescaling=(prev[0] * np_ratio, prev[1] * delta_ratio),
    )


def storage_loss(t: float, tau: float) -> float:
    """Loss accumulated after storing for ``t`` seconds: ``1 - exp(-2t/tau)``."""
    if t < 0:
        raise InvalidArgument(f"storage time must be >= 0, got {t}")
    if not tau > 0:
        raise InvalidArgument(f"tau must be > 0, got {tau}")
    return -math.expm1(-2.0 * t / tau)


def fiber_loss_rate(attenuation: float = 0.2, index: float = 1.5) -> float:
    """Attenuation of light circulating in a fiber, in dB per second."""
    return attenuation * (C_LIGHT / index) / 1000.0


def fiber_transmission(t: float, attenuation: float = 0.2, index: float = 1.5) -> float:
    """Intensity transmission after ``t`` seconds in a fiber loop.

    ``attenuation`` in dB/km.
    """
    if t < 0:
        raise InvalidArgument(f"time must be >= 0, got {t}")
    return 10.0 ** (-fiber_loss_rate(attenuation, index) * t / 10.0)


def doppler_rms(temperature: float, ion_mass: float, wavelength: float) -> float:
    """One-dimensional rms Doppler shift ``sqrt(k_B T / m) / lambda`` in Hz."""
    if min(temperature, ion_mass, wavelength) <= 0:
        raise InvalidArgument("temperature, ion_mass and wavelength must be > 0")
    return math.sqrt(K_B * temperature / ion_mass) / wavelength
