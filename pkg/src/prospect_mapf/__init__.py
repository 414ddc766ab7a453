"""Decentralized prioritized multi-robot path planning on grid worlds.

Robots of heterogeneous square footprints negotiate priorities online and
plan conflict-free space-time paths; the flagship priority counts a robot's
path prospects, the number of Z2-homology classes of routes it can still
take to its goal.
"""

from .coordination import (
    RobotSpec,
    RunRecord,
    Scenario,
    Simulation,
    World,
    load_scenario,
    run_scenario,
    save_scenario,
)
from .errors import InfeasibleError, InvariantViolation, MapFormatError
from .grid import (
    ConfigSpace,
    DistanceField,
    Footprint,
    GridMap,
    build_config_space,
    load_map,
    load_map_file,
    save_map_file,
    true_distance_field,
)
from .harness import (
    MetricsRow,
    Roster,
    aggregate,
    finalize_row,
    generate_problem,
    hierarchic_diversity,
    ideal_metrics,
    shannon_diversity,
)
from .mapgen import generate_map
from .priority import HeuristicKind, PriorityScore, compare, compute_priority, parse_heuristic
from .prospects import (
    ForwardSet,
    ProspectValue,
    forwards_vertices,
    homology_class_oracle,
    path_prospects,
)
from .spacetime import (
    Plan,
    ReservationTable,
    footprints_overlap,
    format_plan,
    parse_plan,
    plan_path,
    transition_conflicts,
)

__version__ = "0.1.0"
