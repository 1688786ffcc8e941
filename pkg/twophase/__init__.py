try:
    from .version import version as __version__
except ImportError:  # not installed
    __version__ = "0.0.0+unknown"

from .coefficient import INFINITE, MetricParams, check_admissible
from .config import RunConfig, load_config, parse_config
from .curves import Path, length_functional, push_to_walls, snap_to_matrix
from .geometry import ConvexPolygon, Disk, InclusionShape, Square
from .grid_solver import GridSpec, distance_folded
from .homogenization import estimate_psi, psi_table
from .opacity import estimate_lambda, verify_avoidance

__all__ = [
    "__version__",
    "ConvexPolygon",
    "Disk",
    "GridSpec",
    "INFINITE",
    "InclusionShape",
    "MetricParams",
    "Path",
    "RunConfig",
    "Square",
    "check_admissible",
    "distance_folded",
    "estimate_lambda",
    "estimate_psi",
    "length_functional",
    "load_config",
    "parse_config",
    "psi_table",
    "push_to_walls",
    "snap_to_matrix",
    "verify_avoidance",
]
