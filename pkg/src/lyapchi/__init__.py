"""Lyapunov exponents of periodic orbits of expanding circle maps and their normal limit."""
from .circle_map import (CircleMap, ExpansivityCertificate, Family, custom_map, expansivity_certificate,
                         from_id, log_derivative, make_builtin)
from .clt import CltReport, clt_parameters, clt_report, clt_study
from .errors import (CapExceeded, ConvergenceFailure, DegenerateRange, DegenerateSigma,
                     DegenerateVariance, EmptyDistribution, InconsistentMap, NotExpanding,
                     ParameterError, ResolutionError)
from .periodic_points import (BranchIndex, FixedPointSet, PeriodicPointRecord, birkhoff_average,
                              enumerate_fix, exponent_multiset, solve_branch)
from .spectral import (SpectralModel, VarianceEstimate, asymptotic_variance, autocorrelation,
                       build_model, mean_exponent, mme_integral, preimage_average, twisted_eigenvalue)
from .stats import (EmpiricalDistribution, Histogram, characteristic_fn, histogram,
                    interval_probability, ks_distance, normalize)

__version__ = "0.1.0"
