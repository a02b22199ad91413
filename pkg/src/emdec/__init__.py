"""emdec: Maxwell's equations as discrete-exterior-calculus operator equations.

One operator core (incidence matrices and diagonal Hodge stars on a primal
complex and its boundary-restricted circumcentric dual) drives three time
integrators: the classic staggered-grid scheme on rectangular grids, its
unstructured-mesh generalization, and an asynchronous integrator where
every face advances on its own clock through a priority queue.
"""

from .config import Config, parse_config
from .dec import (Cochain, OperatorMatrix, codifferential, dual_divergence,
                  exterior_derivative, hodge_star, ibp_residual, inner_product)
from .diagnostics import (EnergySample, Spectrum, SubBlock, divb_residual,
                          energy, gauss_residual, multisymplectic_residual,
                          spectrum)
from .errors import (ConfigError, DegenerateMeshError, EmdecError,
                     ExpressionError, MeshError, MeshParseError,
                     NonManifoldError, NumericError)
from .expressions import Expression, parse_expression
from .integrators import (AviState, AviTrajectory, RunConfig, TimeSchedule,
                          Trajectory, build_schedule, cfl_dt, leapfrog_step,
                          local_cfl_dt, run_avi, run_sync)
from .maxwell import (FieldState, MaterialParams, SourceTerm, apply_pec,
                      constitutive_stars, continuity_residual, init_random_E,
                      make_source, zero_state)
from .mesh import (CellComplex, DualComplex, MeshQualityReport, build_rect_grid,
                   circumcentric_dual, delaunay_mesh, grid_from_axes, load_mesh,
                   quality, random_partition_axes, save_mesh)

__version__ = "0.1.0"
