"""Continuous-variable quantum memory in a trapped-ion ensemble.

Gaussian-channel model of the write/store/read pipeline, derivation of the
light-matter coupling parameters, and the identity / delayed-measurement
memory criteria with their fiber-loop baselines.
"""

from cvmemory.errors import (
    ConfigError,
    InvalidArgument,
    InvalidState,
    MemoryErased,
    NoCancellation,
    ParseError,
    PhysicsViolation,
)
from cvmemory.gaussian import (
    GaussianState,
    LinearChannel,
    McEstimate,
    apply_channel,
    compose,
    identity_channel,
    lossy_channel,
    mc_oracle,
    uncertainty_check,
    vacuum_state,
)
from cvmemory.physics import (
    CouplingParams,
    PhysicalConfig,
    consistency_report,
    cooperativity,
    derive_couplings,
    derive_g2,
    doppler_rms,
    fiber_transmission,
    fixture_params,
    rescale,
    storage_loss,
)
from cvmemory.protocol import (
    LossBudget,
    MemoryChannel,
    faraday_channel,
    feedback_gain,
    memory_store,
    memory_write,
    pipeline_channel,
    simulate_memory,
)
from cvmemory.criteria import (
    Lifetime,
    Verdict,
    dmqm_figure,
    dmqm_verdict,
    fiber_dmqm_limit,
    fiber_idqm_noise,
    fiber_memory,
    idqm_verdict,
    quantum_lifetime,
)

__version__ = "0.1.0"
