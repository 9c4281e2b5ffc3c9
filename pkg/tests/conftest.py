import numpy as np
import pytest
from scipy.linalg import expm

from cvmemory.gaussian import GaussianState, LinearChannel, symplectic_form

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


def random_symplectic(n_modes, rng, scale=0.5):
    h = rng.normal(size=(2 * n_modes, 2 * n_modes)) * scale
    h = h + h.T
    return expm(symplectic_form(n_modes) @ h)


def random_state(n_modes, rng):
    s = random_symplectic(n_modes, rng)
    nu = np.repeat(1.0 + rng.exponential(0.5, size=n_modes), 2)
    cov = s @ np.diag(nu) @ s.T
    return GaussianState(rng.normal(size=2 * n_modes), 0.5 * (cov + cov.T))


def random_cp_channel(n_in, n_out, rng):
    """Random transform, with just enough noise (plus a random PSD excess) to be CP."""
    t = rng.normal(size=(2 * n_out, 2 * n_in)) * 0.8
    m = 1j * (t @ symplectic_form(n_in) @ t.T - symplectic_form(n_out))
    floor = np.linalg.eigvalsh(m).max()
    a = rng.normal(size=(2 * n_out, 2 * n_out)) * 0.3
    noise = floor * np.eye(2 * n_out) + a @ a.T
    return LinearChannel(t, 0.5 * (noise + noise.T))
