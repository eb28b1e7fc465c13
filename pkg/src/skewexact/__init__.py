"""Exact simulation of one-dimensional diffusions whose drift jumps at two points.

The package evaluates two-barrier skew Brownian transition densities as
series with certified remainders and uses them in generalised and
retrospective rejection samplers.
"""
from .density import (BetaParams, ThetaParams, TruncatedValue, bound_C, bridge_density_q, coeffs_beta,
                      coeffs_theta, contour_oracle, geometric_terms, omega_jk, params_from_kappa,
                      transition_density_p, v_bar, v_beta, v_theta)
from .drift import (DriftSpec, builtin_drift, drift_b1, drift_b2, drift_constant, eval_B, eval_b,
                    eval_phi_plus, load_drift, make_drift)
from .grs import GrsOutcome, SeriesTarget, grs, grs_batch, make_bridge_target, make_h_target
from .sim import (PoissonField, SimConfig, Skeleton, euler_maruyama, fill_path, rrs, sample_poisson_field,
                  simulate, srrs)

__version__ = "0.1.0"
