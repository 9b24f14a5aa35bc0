"""Tensor-network simulation of digitized quantum annealing.

The package evolves matrix product states under the pattern-factorised
annealing step, checks them against dense and symmetric-sector exact
evolutions, searches classical ground states with DMRG and compiles the
final states into quantum circuits.
"""

from .circuit import *  # noqa: F401,F403
from .compress import *  # noqa: F401,F403
from .dmrg import *  # noqa: F401,F403
from .dqa import *  # noqa: F401,F403
from .ed import *  # noqa: F401,F403
from .errors import (  # noqa: F401
    CapacityError,
    CircuitFormatError,
    DimensionError,
    NumericalConsistencyError,
    RunAborted,
)
from .harness import *  # noqa: F401,F403
from .mpo import *  # noqa: F401,F403
from .mps import *  # noqa: F401,F403
from .patterns import *  # noqa: F401,F403
from .schedule import Schedule  # noqa: F401

__version__ = "0.1.0"
