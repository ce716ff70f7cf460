"""A hierarchy kept together with its exit-cost table and pending marks."""

from __future__ import annotations

from typing import Optional

from .exits import ExitCostTable, compute_optimal_exits
from .hierarchy import Himm, Path
from .modifications import Modification, Receipt, apply, mark, mark_all
from .planner import PlanResult, plan


class LiveSystem:
    def __init__(self, z: Himm, table: Optional[ExitCostTable] = None):
        self.z = z
        self.table = ExitCostTable() if table is None else table
        self.marks: set[int] = mark_all(z) if table is None else set()

    def update(self) -> int:
        """Refresh every marked entry; returns the number of machine searches."""
        return compute_optimal_exits(self.z, self.marks, self.table)

    def modify(self, mod: Modification, attached: Optional[ExitCostTable] = None) -> Receipt:
        """Apply ``mod`` and mark what it invalidates.

        ``attached`` supplies precomputed entries for a subtree brought in by
        the modification, so those machines need no search.
        """
        receipt = apply(self.z, mod)
        for mid in receipt.removed:
            self.table.cost.pop(mid, None)
            self.table.witness.pop(mid, None)
        if attached is not None:
            self.table.update(attached)
        mark(self.z, self.marks, receipt)
        return receipt

    def plan(self, init: Path, goal: Path, **options) -> PlanResult:
        self.update()
        return plan(self.z, self.table, init, goal, marks=self.marks, **options)
