"""Transition probabilities of random walks on finitely generated groups.

Exact kernels where group structure allows it (wreath products over the
line, free groups, lattice walks) and seeded Monte Carlo estimators
elsewhere.
"""

__version__ = "0.1.0"

from .errors import (Caps, DEFAULT_CAPS, DomainError, LampwalkError,
                     ResourceCapError)
from .groups import (FiniteTable, Free, IteratedWreathZ, WreathZ2OverF,
                     WreathZOverF, Zd, ball_enumerate, format_element,
                     generators, identity, inverse, lamp_element,
                     metric_kind, multiply, translation, validate,
                     word_length)
from .linedp import (StepLawZ, default_step, endpoint_law_exact,
                     endpoint_law_float, folded_law_float, kernel_ratio_span,
                     max_law, range_table, reflected_radial_table)
from .measures import (FiniteMeasure, convolve, convolve_power, point_mass,
                       power_sequence, sample_trajectory, shift_tv_curve,
                       sws_measure, tv_distance)
from .lamplighter import (ClassedDistribution, ConstancyProfile,
                          InvarianceReport, RadiusProfile,
                          almost_constancy_profile, check_exact_invariance,
                          entropy_curve, entropy_tv_profile,
                          exact_distribution, exact_entropy, exact_tv_shift,
                          point_probability, radius_profile)
from .freegroup import (CancellationLaw, RatioLaw, SphereSizes, ball_mass,
                        cancellation_probability, cancellation_tail,
                        free_point_probability, levy_distance,
                        ratio_distribution)
from .estimators import (CoverRadiusSample, DriftCurve, EventEstimate,
                         FitResult, InnerDriftCurve, InvarianceDiagnostic,
                         NilpotentCheck, WitnessReport,
                         anti_invariance_witness, cover_radius,
                         cover_radius_grid, default_shift, drift_curve,
                         fit_exponent, inner_value_drift, lamp_height_event,
                         nilpotent_check, plane_law, wilson_interval,
                         z2f_invariance_bound)
from .records import RunConfig, RunRecord, Store, write_csv

__all__ = [name for name in dir() if not name.startswith("_")]
