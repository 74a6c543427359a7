"""probgeom: distances and geodesic geometry for discrete probability measures.

Exact p-Wasserstein distances with dual certificates, energy distance and
MMD, f-divergences, geodesic constructors and verification predicates,
convexity probes, and the statistical-rate experiment harness behind them.
"""

from .errors import InvariantViolation, SolverError
from .measures import (DiscreteMeasure, GroundMetric, RngStream,
                       common_support, dirac, ground_distance, make_discrete,
                       measures_close, merge_duplicate_atoms,
                       sample_from, sample_uniform_circle,
                       sample_uniform_segment, sample_uniform_sphere,
                       segment_grid, two_atom, uniform_circle_grid,
                       vertical_segment_grid)
from .divergences import (FDivergenceKind, conjugate_domain, conjugate_eval,
                          f_divergence, generator_eval, total_variation)
from .transport import (DualPotentials, DualityReport, TransportPlan,
                        assignment_oracle, ot_position_gradient,
                        solve_exact_ot, verify_duality, wasserstein)
from .kernels import (GramMatrix, check_negative_definite, ed_bias_exact,
                      energy_distance, energy_distance_sq,
                      induced_ground_kernel, mmd_sq_via_gram,
                      triangular_gap_gram, triangular_gap_kernel)
from .geodesics import (AlignmentReport, Curve, SpeedReport, TripleCoupling,
                        constant_speed_check, displacement_curve, glue_plans,
                        hybrid_curve, mixture_at, mixture_curve,
                        w1_alignment_check)
from .landscapes import (AlmostConvexityReport, ConvexityReport,
                         DisplacementProbeReport, LandscapeGrid,
                         LocalMinReport, SegmentFamily, TwoAtomFamily,
                         almost_convexity_check, displacement_convexity_probe,
                         expected_diameter, family_eval, grid_index_of,
                         grid_scan, landscape_axes, level_set_components,
                         local_min_check, mixture_convexity_check,
                         two_atom_ed_sq_oracle, two_atom_w1_oracle)
from .rates import (InequalityReport, MinibatchReport, RateReport, SlopeFit,
                    SphereReport, enumerate_ed_expectation, fit_loglog_slope,
                    inequality_sweep, minibatch_bias_experiment, rate_sweep,
                    sphere_experiment)

__version__ = "0.1.0"
