"""Post-quantum secure blockchain-based federated learning, simulated.

Layers, bottom up: counted hash primitives, one-time Winternitz signatures,
Merkle-tree many-time signatures, hybrid signing with a stateless
certifier, a hash-based VRF, a small federated-learning substrate,
multi-factor role selection, the endorsement-gated ledger, and the round
simulator that ties them together behind the ``pqbfl`` CLI.
"""

__version__ = "0.1.0"

from .config import RunConfig
from .sim import Simulation, SimResult, run

__all__ = ["RunConfig", "SimResult", "Simulation", "run", "__version__"]
