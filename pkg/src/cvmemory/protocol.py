"""Write / store pipeline of the X-scheme memory.

Mode 0 is the light pulse ``(Q_p, P_p)``, mode 1 the collective atomic spin
``(Q_a, P_a)``. Writing is:

1. optical loss ``eta_in`` on the light before the sample;
2. the Faraday interaction (:func:`faraday_channel`);
3. detection loss ``eta_det`` on the transmitted light;
4. homodyne measurement of ``Q_p`` and a feedback displacement of ``P_a``
   by ``gain * Q_p``; the light is then discarded.

Storage is a symmetric loss ``1 - exp(-2t/tau)`` on the atomic mode.
``P_p`` ends up in ``Q_a`` (gain ``G_Q``) and ``Q_p`` in ``P_a`` (gain ``G_P``).

The feedback gain is chosen so that the atomic input ``P_a`` cancels exactly
in the stored ``P_a``, including the attenuation from ``eps_a``, ``eps_p`` and
the detection loss. Detection loss therefore shows up as added noise, not as
reduced gain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from cvmemory.errors import InvalidArgument, NoCancellation, PhysicsViolation
from cvmemory.gaussian import (
    GaussianState,
    LinearChannel,
    apply_channel,
    compose,
    lossy_channel,
    vacuum_state,
)
from cvmemory.physics import CouplingParams, storage_loss

PHYSICALITY_TOL = 1e-9

LIGHT, ATOMS = 0, 1
Q_P, P_P, Q_A, P_A = range(4)


@dataclass(frozen=True)
class LossBudget:
    eta_in: float = 0.0
    eta_det: float = 0.0

    def __post_init__(self):
        for name in ("eta_in", "eta_det"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidArgument(f"{name} must lie in [0, 1], got {v}")

    @classmethod
    def from_windows(cls, per_window: float, n_in: int, n_det: int) -> LossBudget:
        """Losses of ``n_in`` windows before and ``n_det`` after the sample."""
        return cls(1.0 - (1.0 - per_window) ** n_in, 1.0 - (1.0 - per_window) ** n_det)


@dataclass(frozen=True)
class MemoryChannel:
    """Per-quadrature gains and added noises (vacuum units) of the memory."""

    G_Q: float
    G_P: float
    N_Q: float
    N_P: float

    def __post_init__(self):
        for name in ("G_Q", "G_P", "N_Q", "N_P"):
            v = getattr(self, name)
            if not v >= -PHYSICALITY_TOL:
                raise PhysicsViolation(f"{name} = {v} is negative", **{name: v})
        if self.N < abs(self.G - 1.0) - PHYSICALITY_TOL:
            raise PhysicsViolation(
                f"unphysical memory channel: N = {self.N:.6g} < |G - 1| = {abs(self.G - 1):.6g}",
                G=self.G, N=self.N,
            )

    @property
    def G(self) -> float:
        return math.sqrt(max(self.G_Q, 0.0) * max(self.G_P, 0.0))

    @property
    def N(self) -> float:
        return math.sqrt(max(self.N_Q, 0.0) * max(self.N_P, 0.0))

    def as_channel(self) -> LinearChannel:
        """Single-mode channel ``diag(sqrt G_Q, sqrt G_P)`` plus ``diag(N_Q, N_P)``."""
        return LinearChannel(
            np.diag([math.sqrt(self.G_Q), math.sqrt(self.G_P)]),
            np.diag([self.N_Q, self.N_P]),
        )


def faraday_channel(params: CouplingParams, orientation: int = 1) -> LinearChannel:
    """Light-atom Faraday interaction with spontaneous-emission losses.

    ``orientation=-1`` reverses the sign of the coupling (``kappa -> -kappa``).
    """
    ea, ep = params.eps_a, params.eps_p
    if not (0.0 <= ea <= 1.0 and 0.0 <= ep <= 1.0):
        raise InvalidArgument(f"losses outside [0, 1]: eps_a={ea}, eps_p={ep}")
    k = orientation * params.kappa
    ap, aa = math.sqrt(1.0 - ep), math.sqrt(1.0 - ea)
    t = np.array(
        [
            [ap, 0.0, 0.0, ap * k],
            [0.0, ap, 0.0, 0.0],
            [0.0, aa * k, aa, 0.0],
            [0.0, 0.0, 0.0, aa],
        ]
    )
    return LinearChannel(t, np.diag([ep, ep, ea, ea]))


def feedback_gain(params: CouplingParams, eta_det: float = 0.0, orientation: int = 1) -> float:
    """Gain on the measured ``Q_p`` that removes the atomic input ``P_a``.

    The transmitted light carries ``sqrt((1-eta_det)(1-eps_p)) * kappa * P_a_in``
    while the atoms keep ``sqrt(1-eps_a) * P_a_in``; the gain equates the two.
    Reduces to ``-1/kappa`` without losses.
    """
    if not 0.0 <= eta_det <= 1.0:
        raise InvalidArgument(f"eta_det must lie in [0, 1], got {eta_det}")
    k = orientation * params.kappa
    carried = math.sqrt((1.0 - eta_det) * (1.0 - params.eps_p)) * k
    if carried == 0.0:
        raise NoCancellation(
            "no atomic signal reaches the detector; feedback cannot cancel it",
            kappa=params.kappa, eta_det=eta_det, eps_p=params.eps_p,
        )
    return -math.sqrt(1.0 - params.eps_a) / carried


def feedback_channel(gain: float) -> LinearChannel:
    """Measure ``Q_p``, add ``gain * Q_p`` to ``P_a`` and discard the light.

    Averaged over measurement outcomes this is a noiseless linear map onto the
    atomic mode.
    """
    t = np.zeros((2, 4))
    t[0, Q_A] = 1.0
    t[1, P_A] = 1.0
    t[1, Q_P] = gain
    return LinearChannel(t, np.zeros((2, 2)))


def pipeline_channel(
    params: CouplingParams,
    losses: LossBudget,
    t: float = 0.0,
    tau: float = math.inf,
    orientation: int = 1,
) -> LinearChannel:
    """Whole write+store pipeline as one channel from (light, atoms) to atoms."""
    g = feedback_gain(params, losses.eta_det, orientation)
    eps_sto = 0.0 if math.isinf(tau) else storage_loss(t, tau)
    ch = lossy_channel(losses.eta_in, LIGHT, 2)
    for stage in (
        faraday_channel(params, orientation),
        lossy_channel(losses.eta_det, LIGHT, 2),
        feedback_channel(g),
        lossy_channel(eps_sto, 0, 1),
    ):
        ch = compose(ch, stage)
    return ch


def memory_write(params: CouplingParams, losses: LossBudget | None = None) -> MemoryChannel:
    """Closed-form figures of merit right after writing."""
    losses = losses or LossBudget()
    if not params.kappa > 0:
        raise NoCancellation("kappa must be > 0 to write both quadratures", kappa=params.kappa)
    k2 = params.kappa**2
    a = 1.0 - params.eps_a
    b = 1.0 - params.eps_p
    eta_in, eta_det = losses.eta_in, losses.eta_det
    if eta_det >= 1.0 or b <= 0.0:
        raise NoCancellation("no light reaches the detector", eta_det=eta_det, eps_p=params.eps_p)
    return MemoryChannel(
        G_Q=k2 * a * (1.0 - eta_in),
        G_P=a * (1.0 - eta_in) / k2,
        N_Q=a * (1.0 + k2 * eta_in) + params.eps_a,
        N_P=params.eps_a
        + (a / k2) * (eta_in + params.eps_p / b + eta_det / ((1.0 - eta_det) * b)),
    )


def memory_store(mem: MemoryChannel, t: float, tau: float) -> MemoryChannel:
    """Apply storage decay for ``t`` seconds to both atomic quadratures."""
    eps = storage_loss(t, tau)
    keep = 1.0 - eps
    return MemoryChannel(
        G_Q=keep * mem.G_Q,
        G_P=keep * mem.G_P,
        N_Q=keep * mem.N_Q + eps,
        N_P=keep * mem.N_P + eps,
    )


def homodyne_feedback(
    state: GaussianState, gain: float, measured: int = Q_P, target: int = P_A, keep=(Q_A, P_A)
) -> GaussianState:
    """Unconditional state after measuring quadrature ``measured`` and
    displacing quadrature ``target`` by ``gain`` times the outcome.

    Conditioning on outcome ``q`` leaves the kept quadratures with covariance
    ``C - c c^T / v`` and mean ``m + c (q - m_q) / v`` (``v`` the measured
    variance, ``c`` the cross covariance). Adding ``gain * q`` and averaging
    over ``q ~ N(m_q, v)`` gives the returned moments.
    """
    keep = list(keep)
    cov, mean = state.cov, state.mean
    v = cov[measured, measured]
    m_q = mean[measured]
    if v <= 0:
        raise InvalidArgument("measured quadrature has zero variance")
    c = cov[keep, measured]
    e = np.array([1.0 if k == target else 0.0 for k in keep])
    cond_cov = cov[np.ix_(keep, keep)] - np.outer(c, c) / v
    # kept quadratures after feedback are m_keep + (c/v + gain e)(q - m_q) + gain e m_q
    slope = c / v + gain * e
    out_cov = cond_cov + v * np.outer(slope, slope)
    out_mean = mean[keep] + gain * m_q * e
    return GaussianState(out_mean, 0.5 * (out_cov + out_cov.T))


def _run_pipeline(
    params: CouplingParams,
    losses: LossBudget,
    t: float,
    tau: float,
    orientation: int,
    feedback: bool,
    input_mean,
) -> GaussianState:
    state = GaussianState(np.asarray(input_mean, dtype=float), vacuum_state(2).cov)
    state = apply_channel(state, lossy_channel(losses.eta_in, LIGHT, 2))
    state = apply_channel(state, faraday_channel(params, orientation))
    state = apply_channel(state, lossy_channel(losses.eta_det, LIGHT, 2))
    if feedback:
        gain = feedback_gain(params, losses.eta_det, orientation)
        atoms = homodyne_feedback(state, gain)
    else:
        atoms = state.mode(ATOMS)
    eps_sto = 0.0 if math.isinf(tau) else storage_loss(t, tau)
    return apply_channel(atoms, lossy_channel(eps_sto))


def pipeline_response(
    params: CouplingParams,
    losses: LossBudget | None = None,
    t: float = 0.0,
    tau: float = math.inf,
    orientation: int = 1,
    feedback: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Propagate the pipeline state by state.

    Returns ``(response, cov)``: ``response[:, j]`` is the stored atomic mean
    for a unit mean in input quadrature ``j`` of ``(Q_p, P_p, Q_a, P_a)``;
    ``cov`` is the stored atomic covariance for vacuum inputs.
    """
    losses = losses or LossBudget()
    response = np.empty((2, 4))
    for j in range(4):
        unit = np.zeros(4)
        unit[j] = 1.0
        response[:, j] = _run_pipeline(
            params, losses, t, tau, orientation, feedback, unit
        ).mean
    cov = _run_pipeline(params, losses, t, tau, orientation, feedback, np.zeros(4)).cov
    return response, cov


def simulate_memory(
    params: CouplingParams,
    losses: LossBudget | None = None,
    t: float = 0.0,
    tau: float = math.inf,
    orientation: int = 1,
    feedback: bool = True,
) -> MemoryChannel:
    """Figures of merit from explicit covariance propagation.

    Gains are the squared responses of the stored quadratures to unit signals
    (``P_p -> Q_a``, ``Q_p -> P_a``); added noises are the stored variances
    minus the share carried over from the signal's own vacuum fluctuations.
    """
    response, cov = pipeline_response(params, losses, t, tau, orientation, feedback)
    carried = (response[:, :2] ** 2).sum(axis=1)  # unit-variance light input
    return MemoryChannel(
        G_Q=response[0, P_P] ** 2,
        G_P=response[1, Q_P] ** 2,
        N_Q=cov[0, 0] - carried[0],
        N_P=cov[1, 1] - carried[1],
    )
