"""Simulation and analysis toolkit for a post-selected entangled-photon-pair
source built from a pulsed single-photon emitter.

Subpackages and modules:

- ``fock``: exact linear optics on a truncated multimode Fock space.
- ``twoqubit``: polarisation density matrices, Bell states, singlet fraction.
- ``photostat``: photon-number statistics, detection outcomes, rate budget.
- ``wavepacket``: temporal-mode overlap and closed-form fidelity models.
- ``tomography``: projective measurement model and maximum-likelihood
  state reconstruction with bootstrap uncertainties.
- ``timetag``: time-tag stream synthesis and the histogram analysis chain
  (g2, two-photon interference, jitter, temporal filtering).
- ``swap``: entanglement-swapping rate and fidelity comparison between
  emitter types.
- ``cli``: command-line entry point.
"""

__version__ = "0.1.0"

from .errors import (ConfigError, ContractError, ModelDomainError,
                     NumericalError, ReconstructionError)

__all__ = [
    "ConfigError",
    "ContractError",
    "ModelDomainError",
    "NumericalError",
    "ReconstructionError",
    "__version__",
]
