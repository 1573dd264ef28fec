"""Eulerian-Lagrangian Runge-Kutta discontinuous Galerkin methods for linear hyperbolic systems."""

from .basis import ModalBasis, QuadratureRule, basis_eval, test_function_dx, test_function_eval
from .characteristics import (CharSystem, SingularDecompositionError, constant_system,
                              scalar_system, wave_system, wave_system_from)
from .harness import (ConfigError, RunConfig, run_cfl_sweep, run_convergence,
                      run_mass_tracking, solve)
from .limiter import tvd_limit
from .mesh import (DynamicElement, InvertedElementError, Mesh1D, UpstreamMesh, alpha_eval,
                   build_uniform_mesh, trace_upstream)
from .norms import Norms, convergence_orders, error_norms
from .problems import PROBLEMS, ProblemSpec, get_problem
from .projection import DGField, l2_project, overlap_decompose, project_function
from .scalar import ScalarProblem, scalar_rhs, step_scalar
from .siac import SiacKernel, siac_filter
from .splitting import Field2D, fourth_order_step, project_2d, strang_step, sweep_x, sweep_y
from .system import (TABLEAUS, ButcherTableau, SchemeVariant, el_rk_step, forward_euler_step,
                     get_tableau, system_rhs, total_mass)

__version__ = "0.1.0"
