"""Coarse Minkowski dimension, wedge certificates and dimension amplification."""
from .amplify import AmplificationState, coordinate_projection_bound
from .covering import (CountTable, DimensionEstimate, cover_count, dimension_estimate,
                       grid_count)
from .errors import (ApertureTooWide, BudgetExceeded, CertificateInvalid, CoarseDimError,
                     ConfigError, InsufficientData)
from .qi import QiParams, QiReport, min_lambda_profile, qi_dimension_experiment, verify_qi
from .setgen import (LinearMap, PointCloud, SetGenerator, apply_linear, difference_cloud,
                     enumerate_within, image_of_power, power_cloud)
from .sexpr import parse_generator
from .wedge import (DensityCertificate, DichotomyParams, DichotomyResult, WedgeCertificate,
                    WedgeSpec, avoidance_search, cone_slope_of_aperture, dichotomy,
                    direction_scan, projection, qi_from_wedge, wedge_contains)

__version__ = "0.1.0"
