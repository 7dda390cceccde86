from .lp import BandOperator, DenseOperator, LinearProgram, LpResult, solve_lp
from .qp import QpResult, solve_qp_nonneg
from .report import SolveReport
from .sdp import SdpProblem, SdpResult, solve_sdp
from .simplex import SimplexResult, simplex_dense

__all__ = [
    "BandOperator", "DenseOperator", "LinearProgram", "LpResult", "solve_lp",
    "QpResult", "solve_qp_nonneg", "SolveReport", "SdpProblem", "SdpResult", "solve_sdp",
    "SimplexResult", "simplex_dense",
]
