"""Diagonal scaling of nonnegative matrices, tensors and positive maps."""

from .config import (DimensionError, DivergenceError, MarginError, NotScalableError,
                     ScalingError, SingularMarginalError, SolverConfig, Status)
from .structure import Pattern, StructureReport, analyze_structure, pattern_of
from .feasibility import (Copositivity, Feasibility, MarginSpec, Verdict,
                          build_transportation_graph, is_strictly_copositive,
                          maximal_subpattern, psd_scalability, scalability, subset_witness)
from .equivalence import (ConvergenceTrace, ScalingResult, gradient_scale, i_projection_step,
                          menon_scale, ras_scale, rel_entropy)
from .potentials import evaluate_potentials
from .generalized import loglinear_scale, nd_ras, pnorm_scale, product_scale
from .diagnostics import cross_ratios, rate_estimate, verify_scaling
from .balance import balance, dad_scale_sym, sym_embed
from .cones import ConePoint, contraction_report, hilbert_distance, projective_diameter
from .operators import (OperatorScalingResult, PositiveMapRep, apply_map, ds_error,
                        filter_normal_form, menon_pos_scale, operator_sinkhorn,
                        scale_with_marginals)
from .capacity import (capacity_bounds_check, capacity_estimate, decoherence_tuple,
                       mixed_discriminant, operator_convergence_report,
                       rank_nondecreasing_probe)

__version__ = "0.1.0"
