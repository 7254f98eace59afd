"""Figure rendering for trajectory record files.

Consumes the NDJSON record format (one header object per trajectory
followed by sample objects) purely as a file contract; the simulation
package is not imported.
"""

from .reader import SchemaVersionError, Trajectory, load_trajectories
from .panels import PanelSpec, render_ensemble_summary, render_fig1

__all__ = [
    "SchemaVersionError",
    "Trajectory",
    "load_trajectories",
    "PanelSpec",
    "render_fig1",
    "render_ensemble_summary",
]

__version__ = "0.1.0"
