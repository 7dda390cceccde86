from __future__ import annotations

from dataclasses import asdict, dataclass

OPTIMAL = "optimal"
ITERATION_LIMIT = "iteration_limit"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_FAILURE = "numerical_failure"

STATUSES = (OPTIMAL, ITERATION_LIMIT, INFEASIBLE, UNBOUNDED, NUMERICAL_FAILURE)


@dataclass
class SolveReport:
    status: str
    objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    seconds: float
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL

    def to_dict(self) -> dict:
        return asdict(self)
