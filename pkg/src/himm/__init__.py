"""Hierarchical Mealy machines: modelling, exit-cost preprocessing and optimal planning."""

from .machines import (
    INF,
    Alphabet,
    MealyMachine,
    MultipleEntrances,
    NotWellDefined,
    StructuralError,
    contract,
    entrances,
    expand,
    is_module,
    machines_equal,
    restrict,
    roundtrip_holds,
    run_plan,
    step,
)
from .hierarchy import (
    SHARED,
    TREE,
    BudgetExceeded,
    Himm,
    flatten,
    hier_step,
    run_himm_plan,
    start_of,
    to_tree,
    validate,
)
from .exits import ExitCostTable, compute_optimal_exits, exit_cost_oracle, fresh_table
from .modifications import (
    AddState,
    ArcModification,
    Composition,
    SubtractState,
    apply,
    compose,
    mark,
    mark_all,
)
from .planner import PlanResult, plan
from .system import LiveSystem
from .generators import Warehouse, example_system, gen_recursive, gen_warehouse, random_himm
from .io import DocumentError, load, save

__all__ = [
    "INF",
    "Alphabet",
    "MealyMachine",
    "MultipleEntrances",
    "NotWellDefined",
    "StructuralError",
    "contract",
    "entrances",
    "expand",
    "is_module",
    "machines_equal",
    "restrict",
    "roundtrip_holds",
    "run_plan",
    "step",
    "SHARED",
    "TREE",
    "BudgetExceeded",
    "Himm",
    "flatten",
    "hier_step",
    "run_himm_plan",
    "start_of",
    "to_tree",
    "validate",
    "AddState",
    "ArcModification",
    "Composition",
    "SubtractState",
    "apply",
    "compose",
    "mark",
    "mark_all",
    "ExitCostTable",
    "compute_optimal_exits",
    "exit_cost_oracle",
    "fresh_table",
    "PlanResult",
    "plan",
    "LiveSystem",
    "Warehouse",
    "example_system",
    "gen_recursive",
    "gen_warehouse",
    "random_himm",
    "DocumentError",
    "load",
    "save",
]
