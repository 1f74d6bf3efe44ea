"""Triangular-lattice site percolation: interfaces, arms, and exponents."""

from .lattice import (Annulus, Disc, Rect, Region, SiteCoord, SubTriangle,
                      TriangleDomain, build_domain, neighbors, sites_in_region)
from .sampling import (Coloring, CouplingField, FlipSchedule, coloring_at,
                       dense_coloring, flip_schedule, sample_field)
from .explorer import (DiscSide, GoodTriangleReport, InterfacePath, SideOutcome,
                       TriangleStatus, asymmetry, box_count, explore,
                       explore_reference, f_hat, good_triangle_status,
                       pivotal_sweep, region_side, side_outcome,
                       unit_triangulation)
from .arms import (FOUR_ARM, ONE_ARM, TWO_ARM, ArmPattern, ArmQuery,
                   detect_arms, detect_arms_bruteforce, quasi_mult_ratio,
                   sample_arm_prob)
from .stats import Estimate, PowerFit, fit_exponent
from .estimators import (BracketResult, ExperimentResult, enumerate_exact,
                         estimate_L, estimate_R, estimate_pstar,
                         asymmetry_experiment, dimension_experiment,
                         length_experiment, regime_sweep, scaling_check,
                         z_statistic)

__version__ = "0.1.0"
