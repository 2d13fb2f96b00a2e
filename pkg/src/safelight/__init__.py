"""Safety-enforcing traffic signal control on fluid link networks.

The pipeline: validate a network (network), compile the safety
requirement to a box union (geometry), bound one-step images of boxes
(reach), partition the state space into a finite abstraction
(abstraction), solve safety and reachability games on it (games), and
run a receding-horizon controller whose every move is certified against
the winning cells (mpc).  milp exports the exact dynamics as
mixed-integer linear constraints; scenario/cli wrap the pipeline behind
JSON configuration files.
"""

from .abstraction import (
    PartitionGrid,
    TransitionSystem,
    build_partition,
    build_transitions,
    export_edges,
    label_cells,
)
from .errors import (
    AssumptionViolationError,
    EmptyWinningSetError,
    EnumerationCapError,
    GridError,
    PlanInfeasibleError,
    ReachExplosionError,
    RecursiveFeasibilityError,
    SafelightError,
    ScenarioError,
    SpecValidationError,
    UnrecoverableStateError,
)
from .games import Attractor, WinningSet, reachability_game, safety_game, winning_boxes
from .geometry import (
    AllOf,
    AnyOf,
    Atom,
    Box,
    SafeSet,
    box_intersect,
    closed_box,
    compile_safety_expr,
    holds,
    robustness,
    safe_contains,
)
from .milp import MldModel, build_mld, check_substitution, emit_lp
from .mpc import (
    MpcConfig,
    Plan,
    Trace,
    box_in_cellunion,
    closed_loop,
    nominal_demands,
    plan,
    sample_demand,
    shifted_witness,
)
from .network import (
    DemandBox,
    Link,
    NetworkSpec,
    PhaseConstraint,
    Turn,
    ValidatedNetwork,
    admissible_controls,
    check_flow_bound_assumption,
    outflow,
    step,
    validate_spec,
)
from .reach import ReachBox, reach_h, reach_one, reach_one_box
from .scenario import Scenario, bundled_names, load_scenario, parse_scenario

__version__ = "0.1.0"

__all__ = [
    "AllOf",
    "AnyOf",
    "AssumptionViolationError",
    "Atom",
    "Attractor",
    "Box",
    "DemandBox",
    "EmptyWinningSetError",
    "EnumerationCapError",
    "GridError",
    "Link",
    "MldModel",
    "MpcConfig",
    "NetworkSpec",
    "PartitionGrid",
    "PhaseConstraint",
    "Plan",
    "PlanInfeasibleError",
    "ReachBox",
    "ReachExplosionError",
    "RecursiveFeasibilityError",
    "SafeSet",
    "SafelightError",
    "Scenario",
    "ScenarioError",
    "SpecValidationError",
    "Trace",
    "TransitionSystem",
    "Turn",
    "UnrecoverableStateError",
    "ValidatedNetwork",
    "WinningSet",
    "admissible_controls",
    "box_in_cellunion",
    "box_intersect",
    "build_mld",
    "build_partition",
    "build_transitions",
    "bundled_names",
    "check_flow_bound_assumption",
    "check_substitution",
    "closed_box",
    "closed_loop",
    "compile_safety_expr",
    "emit_lp",
    "export_edges",
    "holds",
    "label_cells",
    "load_scenario",
    "outflow",
    "parse_scenario",
    "nominal_demands",
    "plan",
    "reach_h",
    "reach_one",
    "reach_one_box",
    "reachability_game",
    "robustness",
    "safe_contains",
    "safety_game",
    "sample_demand",
    "shifted_witness",
    "step",
    "validate_spec",
    "winning_boxes",
]
