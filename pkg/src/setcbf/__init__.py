"""Control barrier functions between parameterized convex sets.

Sets are smoothed with an epsilon-scaled log-sum-exp, which makes the
squared distance between two sets differentiable in their parameters. That
gradient drives per-obstacle barrier constraints in a safety-filter QP.
"""

__version__ = "0.1.0"

from .cbf import BarrierConfig, ClassK, FilteredInput, QPStatus, SafetyConstraintRow, \
    assemble_rows, barrier_value, solve_filter_qp
from .distance import DistanceProblem, DistanceSolution, SolverOptions, Status, solve_distance
from .dynamics import ControlAffineDynamics, UnicycleAgent, integrate_step, modified_g, \
    unicycle_transform
from .errors import ConfigError, EmptyInterior, InvalidInput, IoError, NumericalFailure, \
    SetCBFError, SingularJacobian
from .lse import SmoothMaxParams, hessian_min_eigenvalue, lse, lse_eps_plus
from .sensitivity import DistanceGradient, assemble_kkt_system, distance_gradient, \
    solve_sensitivity
from .sets import ConstraintStack, ParamVector, RigidPolytope, box, find_interior_point, \
    membership_margin, regular_polygon, rigid_pose, verify_standard_conditions
