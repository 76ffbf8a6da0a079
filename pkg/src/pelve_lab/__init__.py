"""PELVE computation, calibration and tail analysis."""

from .calib_curve import (ResidualReport, SteppedSolution, ZCurve, seed_f0, solve_advanced_ode,
                          u_from_z, validate_solution)
from .calib_point import (C2Bound, CalibrationResult, TwoPointConstraint, bound_c2,
                          build_two_point_quantile, calibrate_one_point, classify_two_point,
                          solve_xi_from_c)
from .constant_solver import (CharacteristicRoot, OscillatorySolutionSpec, complex_roots,
                              oscillatory_solution, real_roots, solve_alpha, structure_check,
                              theorem51_structure_check)
from .dist_core import (GPD, CantorExample, Constant, DistributionModel, Exponential,
                        LocationScale, LogNormal, MonotoneTransform, Normal, PiecewiseQuantile,
                        QuantileCurve, RiskLevel, StudentT, TailConditioned, TriangleDensity,
                        Uniform, es, gpd_quantile_shape, integrate_quantile, model_from_json, var)
from .errors import *  # noqa: F401,F403
from .pelve_engine import (LinkPoint, PelveCurve, dual_pelve, gamma_link, pelve, pelve_curve,
                           z_of_curve)
from .tail_analysis import (HazardProfile, MonotonicityVerdict, classify_monotonicity,
                            hazard_profile, limit_at_zero, tail_condition)

__version__ = "0.1.0"
