"""Minimization of the weighted sup norm of mean curvature over closed
genus-0 triangle meshes, by p-norm continuation under a fixed-area
constraint, with numerical certification of the limiting optimality
system."""

__version__ = "0.1.0"

from .diffgeo import (LaplacianOperator, SurfaceFields, cotan_laplacian,
                      gauss_curvature, laplacian_apply, mean_curvature,
                      surface_fields, willmore_energy)
from .distance import (ReferenceSurface, brute_force_distance, distance_eval,
                       hausdorff_distance)
from .energy import (INF, LOW_ENERGY_THRESHOLD, EnergyParams, linf_energy,
                     low_energy_check, lp_energy, penalisation, total_energy)
from .errors import (ConfigError, CurvminError, EnergyOverflowError,
                     MeshError, ObjFormatError)
from .mesh import (TriMesh, build_icosphere, load_obj, perturb_radial,
                   rescale_to_area, save_obj, total_area, validate,
                   vertex_measure)
from .optimize import (RunResult, Schedule, StageResult, continuation_run,
                       el_density, flow_step, lambda_estimate, sphericity)
from .verifier import (ELReport, MINUS, PLUS, ZERO, classify_three_values,
                       compute_Q, compute_w, el_residual, holder_curve,
                       three_value_report)
from .weights import (AxisQuadraticWeight, ConstantWeight,
                      RadialQuadraticWeight, normal_weight_derivative,
                      weight_eval, weight_from_dict)
