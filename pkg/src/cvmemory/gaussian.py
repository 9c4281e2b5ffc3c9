"""Gaussian states and channels over quadrature modes.

Conventions used throughout the package:

* quadratures are interleaved, ``(Q1, P1, Q2, P2, ...)``;
* ``[Q, P] = 2i``, so the vacuum has unit variance on every quadrature and a
  covariance matrix is physical iff ``cov + i*Omega >= 0`` with ``Omega`` the
  block-diagonal form built from ``[[0, 1], [-1, 0]]``;
* a channel is the affine map ``x -> T x + w`` with ``w ~ N(0, noise_add)``,
  so that ``cov -> T cov T^T + noise_add``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cvmemory.errors import InvalidArgument, InvalidState

SYM_TOL = 1e-12
EIG_TOL = 1e-9


def symplectic_form(n_modes: int) -> np.ndarray:
    block = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return np.kron(np.eye(n_modes), block)


def _as_matrix(a, name: str) -> np.ndarray:
    m = np.array(a, dtype=float)
    if m.ndim != 2:
        raise InvalidArgument(f"{name} must be a 2-d matrix, got shape {m.shape}")
    m.setflags(write=False)
    return m


def _is_symmetric(m: np.ndarray) -> bool:
    return m.shape[0] == m.shape[1] and bool(np.all(np.abs(m - m.T) <= SYM_TOL))


@dataclass(frozen=True)
class GaussianState:
    """First and second moments of an ``n_modes``-mode Gaussian state."""

    mean: np.ndarray
    cov: np.ndarray
    n_modes: int = field(init=False)

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        mean.setflags(write=False)
        cov = _as_matrix(self.cov, "cov")
        if mean.size == 0 or mean.size % 2:
            raise InvalidArgument("mean must have even, nonzero length 2n")
        if cov.shape != (mean.size, mean.size):
            raise InvalidArgument(
                f"cov shape {cov.shape} does not match mean length {mean.size}"
            )
        if not _is_symmetric(cov):
            raise InvalidState("covariance matrix is not symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "n_modes", mean.size // 2)

    def mode(self, k: int) -> GaussianState:
        """Reduced state of mode ``k`` (partial trace)."""
        if not 0 <= k < self.n_modes:
            raise InvalidArgument(f"mode {k} out of range for {self.n_modes} modes")
        sl = slice(2 * k, 2 * k + 2)
        return GaussianState(self.mean[sl], self.cov[sl, sl])


@dataclass(frozen=True)
class LinearChannel:
    """Affine Gaussian map from ``n_in`` modes to ``n_out`` modes."""

    transform: np.ndarray
    noise_add: np.ndarray
    n_in: int = field(init=False)
    n_out: int = field(init=False)

    def __post_init__(self):
        t = _as_matrix(self.transform, "transform")
        n = _as_matrix(self.noise_add, "noise_add")
        if t.shape[0] % 2 or t.shape[1] % 2 or 0 in t.shape:
            raise InvalidArgument(f"transform shape {t.shape} is not 2n_out x 2n_in")
        if n.shape != (t.shape[0], t.shape[0]):
            raise InvalidArgument(
                f"noise_add shape {n.shape} does not match transform output {t.shape[0]}"
            )
        if not _is_symmetric(n):
            raise InvalidArgument("noise_add is not symmetric")
        if np.linalg.eigvalsh(n).min() < -SYM_TOL:
            raise InvalidArgument("noise_add is not positive semidefinite")
        object.__setattr__(self, "transform", t)
        object.__setattr__(self, "noise_add", n)
        object.__setattr__(self, "n_in", t.shape[1] // 2)
        object.__setattr__(self, "n_out", t.shape[0] // 2)


@dataclass(frozen=True)
class McEstimate:
    mean_hat: np.ndarray
    cov_hat: np.ndarray
    n_samples: int
    seed: int


def vacuum_state(n_modes: int) -> GaussianState:
    if int(n_modes) != n_modes or n_modes < 1:
        raise InvalidArgument(f"n_modes must be a positive integer, got {n_modes!r}")
    n_modes = int(n_modes)
    return GaussianState(np.zeros(2 * n_modes), np.eye(2 * n_modes))


def identity_channel(n_modes: int) -> LinearChannel:
    dim = 2 * n_modes
    return LinearChannel(np.eye(dim), np.zeros((dim, dim)))


def lossy_channel(epsilon: float, target_mode: int = 0, n_modes: int = 1) -> LinearChannel:
    """Beamsplitter loss ``epsilon`` on one mode, vacuum entering the open port."""
    if not 0.0 <= epsilon <= 1.0:
        raise InvalidArgument(f"loss must lie in [0, 1], got {epsilon}")
    if not 0 <= target_mode < n_modes:
        raise InvalidArgument(f"target_mode {target_mode} out of range for {n_modes} modes")
    t = np.eye(2 * n_modes)
    n = np.zeros((2 * n_modes, 2 * n_modes))
    sl = slice(2 * target_mode, 2 * target_mode + 2)
    t[sl, sl] = np.sqrt(1.0 - epsilon) * np.eye(2)
    n[sl, sl] = epsilon * np.eye(2)
    return LinearChannel(t, n)


def compose(first: LinearChannel, second: LinearChannel) -> LinearChannel:
    """Channel that applies ``first`` and then ``second``."""
    if second.n_in != first.n_out:
        raise InvalidArgument(
            f"cannot compose: first outputs {first.n_out} modes, second takes {second.n_in}"
        )
    t2 = second.transform
    noise = t2 @ first.noise_add @ t2.T + second.noise_add
    return LinearChannel(t2 @ first.transform, 0.5 * (noise + noise.T))


def apply_channel(state: GaussianState, channel: LinearChannel) -> GaussianState:
    if channel.n_in != state.n_modes:
        raise InvalidArgument(
            f"channel takes {channel.n_in} modes, state has {state.n_modes}"
        )
    t = channel.transform
    cov = t @ state.cov @ t.T + channel.noise_add
    return GaussianState(t @ state.mean, 0.5 * (cov + cov.T))


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """Symplectic spectrum of ``cov``, ascending, one value per mode."""
    cov = np.asarray(cov, dtype=float)
    omega = symplectic_form(cov.shape[0] // 2)
    nu = np.sort(np.abs(np.linalg.eigvals(omega @ cov)))
    # eigenvalues come in +-i*nu pairs
    return nu[::2]


def uncertainty_check(state: GaussianState) -> tuple[bool, float]:
    """Return ``(physical, smallest symplectic eigenvalue)``."""
    if not _is_symmetric(state.cov):
        raise InvalidState("covariance matrix is not symmetric")
    nu_min = float(symplectic_eigenvalues(state.cov)[0])
    return nu_min >= 1.0 - EIG_TOL, nu_min


def cp_witness(channel: LinearChannel) -> tuple[bool, float]:
    """Complete-positivity test ``N + i*Omega_out - i*T Omega_in T^T >= 0``.

    Returns ``(is_cp, smallest eigenvalue of the Hermitian witness)``.
    """
    t = channel.transform
    w = (
        channel.noise_add
        + 1j * symplectic_form(channel.n_out)
        - 1j * (t @ symplectic_form(channel.n_in) @ t.T)
    )
    lam = float(np.linalg.eigvalsh(0.5 * (w + w.conj().T)).min())
    return lam >= -EIG_TOL, lam


# --- Monte Carlo oracle -----------------------------------------------------
#
# Uniform doubles come from numpy's PCG64 bit generator (PCG-XSL-RR 128/64),
# whose ``random()`` output is a fixed function of the seed. Normal deviates are
# produced here by the Box-Muller transform rather than numpy's ziggurat so the
# whole path is a documented, frozen algorithm. Independent substreams for the
# input draws and the channel noise are spawned from the master seed.


def _spawn(seed: int, n: int) -> list[np.random.Generator]:
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1))
    return [np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(n)]


def box_muller(rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` standard normal deviates from ``rng.random()`` via Box-Muller."""
    m = (size + 1) // 2
    u1 = 1.0 - rng.random(m)  # (0, 1], keeps log finite
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
    return z[:size]


def _sqrt_psd(cov: np.ndarray) -> np.ndarray:
    lam, vec = np.linalg.eigh(cov)
    if lam.min() < -EIG_TOL:
        raise InvalidState(f"cannot sample: covariance has eigenvalue {lam.min():.3e}")
    return vec * np.sqrt(np.clip(lam, 0.0, None))


def gaussian_samples(mean, cov, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    mean = np.asarray(mean, dtype=float)
    root = _sqrt_psd(np.asarray(cov, dtype=float))
    z = box_muller(rng, n_samples * mean.size).reshape(n_samples, mean.size)
    return mean + z @ root.T


def mc_oracle(
    channel: LinearChannel, state: GaussianState, n_samples: int, seed: int
) -> McEstimate:
    """Brute-force estimate of ``apply_channel(state, channel)`` by sampling."""
    if n_samples < 1000:
        raise InvalidArgument(f"n_samples must be >= 1000, got {n_samples}")
    if channel.n_in != state.n_modes:
        raise InvalidArgument(
            f"channel takes {channel.n_in} modes, state has {state.n_modes}"
        )
    rng_in, rng_noise = _spawn(seed, 2)
    x = gaussian_samples(state.mean, state.cov, n_samples, rng_in)
    w = gaussian_samples(
        np.zeros(2 * channel.n_out), channel.noise_add, n_samples, rng_noise
    )
    y = x @ channel.transform.T + w
    return McEstimate(
        mean_hat=y.mean(axis=0),
        cov_hat=np.cov(y, rowvar=False),
        n_samples=n_samples,
        seed=int(seed),
    )


def cov_standard_error(cov: np.ndarray, n_samples: int) -> np.ndarray:
    """Element-wise standard error of a sample covariance of Gaussian data."""
    d = np.diag(cov)
    return np.sqrt((np.outer(d, d) + cov**2) / (n_samples - 1))


def amplifier_channel(gain: float, target_mode: int = 0, n_modes: int = 1) -> LinearChannel:
    """Phase-insensitive amplifier with the minimal added noise ``gain - 1``."""
    if gain < 1.0:
        raise InvalidArgument(f"amplifier gain must be >= 1, got {gain}")
    if not 0 <= target_mode < n_modes:
        raise InvalidArgument(f"target_mode {target_mode} out of range for {n_modes} modes")
    t = np.eye(2 * n_modes)
    n = np.zeros((2 * n_modes, 2 * n_modes))
    sl = slice(2 * target_mode, 2 * target_mode + 2)
    t[sl, sl] = np.sqrt(gain) * np.eye(2)
    n[sl, sl] = (gain - 1.0) * np.eye(2)
    return LinearChannel(t, n)
