"""Quantum-memory criteria and the fiber-loop baseline.

Identity memory (IdQM): unit gain on both quadratures and added noise N < 2,
the best a measure-and-prepare memory can do. Delayed-measurement memory
(DMQM): equivalent input noise N/G < 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.optimize import bisect

from cvmemory.errors import InvalidArgument, MemoryErased
from cvmemory.physics import CouplingParams, fiber_loss_rate, fiber_transmission
from cvmemory.protocol import LossBudget, MemoryChannel, memory_store, memory_write

IDQM_NOISE_LIMIT = 2.0
DMQM_LIMIT = 1.0
LIFETIME_XTOL = 1e-9
BRACKET_TAUS = 20.0


@dataclass(frozen=True)
class Verdict:
    kind: str
    passes: bool
    figure: float
    threshold: float
    margin: float
    details: dict = field(default_factory=dict)


def idqm_verdict(mem: MemoryChannel, gain_tolerance: float = 0.02) -> Verdict:
    """IdQM test with the unit-gain condition relaxed to ``|G - 1| <= gain_tolerance``.

    ``details["generalized"]`` is set when G is within tolerance but the two
    quadrature gains differ, i.e. the memory also squeezes its input.
    """
    gain_ok = abs(mem.G - 1.0) <= gain_tolerance
    squeezing = gain_ok and abs(mem.G_Q - mem.G_P) > gain_tolerance
    return Verdict(
        kind="IdQM",
        passes=gain_ok and mem.N < IDQM_NOISE_LIMIT,
        figure=mem.N,
        threshold=IDQM_NOISE_LIMIT,
        margin=IDQM_NOISE_LIMIT - mem.N,
        details={
            "G_Q": mem.G_Q, "G_P": mem.G_P, "N_Q": mem.N_Q, "N_P": mem.N_P,
            "G": mem.G, "gain_ok": gain_ok, "gain_tolerance": gain_tolerance,
            "generalized": squeezing,
        },
    )


def dmqm_figure(mem: MemoryChannel) -> float:
    """Equivalent input noise ``N / G``."""
    if mem.G <= 0.0:
        raise MemoryErased("memory gain is zero; N/G undefined")
    return mem.N / mem.G


def dmqm_verdict(mem: MemoryChannel) -> Verdict:
    fig = dmqm_figure(mem)
    return Verdict(
        kind="DMQM",
        passes=fig < DMQM_LIMIT,
        figure=fig,
        threshold=DMQM_LIMIT,
        margin=DMQM_LIMIT - fig,
        details={"G_Q": mem.G_Q, "G_P": mem.G_P, "N_Q": mem.N_Q, "N_P": mem.N_P},
    )


@dataclass(frozen=True)
class Lifetime:
    """Time during which N/G stays below 1.

    ``seconds`` is ``math.inf`` when the figure never reaches 1, and 0 with
    ``quantum=False`` when the memory is classical from the start.
    """

    seconds: float
    quantum: bool

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.seconds)


def crossing_time(figure, t_max: float, xtol: float = LIFETIME_XTOL) -> Lifetime:
    """First ``t`` in ``[0, t_max]`` with ``figure(t) = 1`` for non-decreasing ``figure``."""
    f0 = figure(0.0)
    if f0 >= DMQM_LIMIT:
        return Lifetime(0.0, quantum=False)
    if figure(t_max) < DMQM_LIMIT:
        return Lifetime(math.inf, quantum=True)
    t = bisect(lambda s: figure(s) - DMQM_LIMIT, 0.0, t_max, xtol=xtol)
    return Lifetime(t, quantum=True)


def quantum_lifetime(
    params: CouplingParams, losses: LossBudget | None, tau: float
) -> Lifetime:
    """Storage time at which the stored memory stops beating the DMQM bound."""
    if not tau > 0:
        raise InvalidArgument(f"tau must be > 0, got {tau}")
    written = memory_write(params, losses)
    if math.isinf(tau):
        return crossing_time(lambda t: dmqm_figure(written), 0.0)

    def figure(t):
        stored = memory_store(written, t, tau)
        return dmqm_figure(stored) if stored.G > 0 else math.inf

    return crossing_time(figure, BRACKET_TAUS * tau)


def fiber_idqm_noise(transmission: float) -> float:
    """Added noise of a fiber of transmission T preceded by a 1/T preamplifier."""
    if not 0.0 < transmission <= 1.0:
        raise InvalidArgument(f"transmission must lie in (0, 1], got {transmission}")
    return 2.0 * (1.0 - transmission)


def fiber_memory(t: float, attenuation: float = 0.2, index: float = 1.5) -> MemoryChannel:
    """Bare fiber loop as a memory: gain T and added noise 1 - T on both quadratures."""
    tr = fiber_transmission(t, attenuation, index)
    return MemoryChannel(G_Q=tr, G_P=tr, N_Q=1.0 - tr, N_P=1.0 - tr)


def fiber_dmqm_limit(attenuation: float = 0.2, index: float = 1.5) -> float:
    """Storage time at which the fiber transmission falls to 1/2."""
    if not attenuation > 0:
        raise InvalidArgument(f"attenuation must be > 0, got {attenuation}")
    return 10.0 * math.log10(2.0) / fiber_loss_rate(attenuation, index)


def fiber_quantum_lifetime(attenuation: float = 0.2, index: float = 1.5) -> Lifetime:
    """DMQM lifetime of the fiber loop found by bisection on N/G."""
    # bracket ends where 30 dB have been lost
    t_max = 30.0 / fiber_loss_rate(attenuation, index)
    return crossing_time(
        lambda t: dmqm_figure(fiber_memory(t, attenuation, index)), t_max, xtol=1e-12
    )
