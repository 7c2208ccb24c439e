"""singrid: fields with dense lattice singularities, and their verification.

The package constructs integrable fields whose singular set is the node set
of ever finer periodic grids, evaluates them exactly and in vectorized
batches, computes their integrals in closed form, and cross-examines every
claimed property (uniform mean bounds, local and pointwise blow-up, coverage
of the domain by shrinking node balls, loss of integrability under
reweighting, growth-condition sandwiches) with independent seeded Monte
Carlo and quadrature oracles.
"""

__version__ = "0.1.0"

from .errors import (ContainmentFailure, DeltaNotFound, DivergentIntegral,
                     InconclusiveTolerance, NodeNotInSet, OutsideDomain,
                     SearchExhausted, SingridError)
from .geometry import (BallConstants, BallUnion, Box, Domain, GridNode,
                       NodeSet, ball_inside_domain, ball_union_measure, box,
                       domain, domain_measure, enumerate_nodes, load_domain,
                       minimal_grid_index, node_balls, parse_domain,
                       save_domain, unit_ball_constants, unit_cube)
from .profiles import (AdmissibilityReport, ProbeConfig, ProfileTransform,
                       SigmaProfile, UniformBound, admissibility_report,
                       builtin_profile, constant_profile, identity_transform,
                       load_profile, log_power_transform, loglog_profile,
                       parse_profile, power_profile, power_transform,
                       sigma_one, transformed_profile, uniform_bound)
from .quadrature import QuadratureResult, radial_integral, radial_quadrature
from .fields import BumpField, BumpSum, FieldValue, RootField, node_membership
from .mc import (DEFAULT_SEED, MeasureEstimate, mc_integrate, mc_measure,
                 sample_ball, stream)
from .integrals import (CubeIntegral, ball_integral, cube_integral,
                        field_integral, open_cube, shell_integral,
                        sum_field_integral)
from .checks import (ExhaustionReport, MajorantReport, NonIntegrabilityReport,
                     ProbeTable, ResidualReport, WitnessReport,
                     exhaustion_estimate, exhaustion_residual,
                     majorant_violations, non_integrability_table,
                     pointwise_unboundedness_probe,
                     shrunk_cover_measure_exact, witness_unboundedness)
from .gamma import (GrowthReport, IntegrandFamily, SandwichProbe,
                    SequenceReport, check_growth_conditions,
                    check_sequence_conditions, model_family,
                    sandwich_violation_search)
