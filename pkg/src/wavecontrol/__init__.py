"""
Frequency-domain FEM and optimal control of wave-induced floating-body motion
in a vertical 2D slice.

Three control modes act on the water surface next to the body: an active
surface pressure (linear-quadratic, solved in one shot) and two passive
coverings, a membrane and a thin plate, whose stiffness and mass
distributions are optimized by projected gradient descent.
"""

__version__ = "0.1.0"

from .errors import (AssemblyFailure, BuoyancyImbalance, ConfigError, InadmissibleControl,
                     InadmissibleInitialControl, InvalidGeometry, MeshingFailure,
                     NonConvergence, SingularKKT, SingularSystem, WaveControlError)
from .geometry import (BoundaryTag, Mesh2D, SliceGeometryConfig, build_channel_mesh,
                       build_slice_mesh, read_mesh, validate_mesh, write_mesh)
from .physics import (GRAVITY, RHO_WATER, RigidBody2D, WaveEnvironment, body_matrices,
                      incident_potential, solve_dispersion)
from .fem import (AssembledOperators, ControlTensors, assemble, assemble_membrane_tensors,
                  assemble_plate_tensor)
from .solver import (StateSolution, AdjointSolution, build_system, scattered_ratio,
                     solve_adjoint_membrane, solve_adjoint_plate, solve_adjoint_pressure,
                     solve_state_membrane, solve_state_plate, solve_state_pressure)
from .ocp import (CostConfig, OCPResult, PGOptions, PassiveProblem, PressureProblem, cost,
                  fd_gradient_check, motion_term, solve_lq_pressure, solve_passive,
                  solve_pressure_iterative)
