"""bohmlab: nodal points, X-points and Bohmian trajectories.

A numerical lab for superpositions of 2-d harmonic-oscillator eigenstates
(hbar = m = 1): the wavefield and its guidance velocity, the motion of
nodal points, the X-points of the co-moving flow, trajectories that loop
around nodes, and a stretching-number chaos indicator.

Example:
    ```python
    from bohmlab import SuperpositionSpec
    from bohmlab.core.nodes import node_census

    spec = SuperpositionSpec.from_terms(
        [(3, 3, 1.0), (3, 4, 1.0), (4, 5, 0.5**0.5)], 1.0, 0.5**0.5
    )
    nodes = node_census(spec, t=0.1)
    ```
"""

__version__ = "0.1.0"

from bohmlab.config import Settings, get_settings
from bohmlab.core.errors import BohmlabError
from bohmlab.core.models import Mode, OscillatorParams, SuperpositionSpec

__all__ = [
    # Version
    "__version__",
    # Config
    "Settings",
    "get_settings",
    # Core
    "BohmlabError",
    "Mode",
    "OscillatorParams",
    "SuperpositionSpec",
]
