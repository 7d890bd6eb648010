from .closed_loop import ClosedLoopLog, ClosedLoopSummary, run_closed_loop, summarize_closed_loop, write_closed_loop_csv
from .costs import attitude_gap, stage_cost
from .models import ControlPlan, CostSpec, MPCProblem, PendulumSwingup, QuadrotorTrack, SolverConfig, upright_goal
from .reference import HoverReference, PiecewiseLinearReference, make_reference
from .solver import plan_cost, solve_mpc

__all__ = [
    "ClosedLoopLog",
    "ClosedLoopSummary",
    "ControlPlan",
    "CostSpec",
    "HoverReference",
    "MPCProblem",
    "PendulumSwingup",
    "PiecewiseLinearReference",
    "QuadrotorTrack",
    "SolverConfig",
    "attitude_gap",
    "make_reference",
    "plan_cost",
    "run_closed_loop",
    "solve_mpc",
    "stage_cost",
    "summarize_closed_loop",
    "upright_goal",
    "write_closed_loop_csv",
]
