"""Affine shape densities for matrix-variate elliptical landmark models.

Scalars live in one of the real normed division algebras, indexed by their
real dimension ``beta`` (1 real, 2 complex, 4 quaternion; 8 octonion for
formula-level work only).
"""

__version__ = "0.1.0"

from .errors import (
    AffineShapeError,
    AlgebraError,
    ConvergenceError,
    DegenerateConfigurationError,
    DimensionError,
    DomainError,
    NotHermitianError,
    NotPositiveDefiniteError,
)
from .algebra import MatrixF, Scalar, algebra, eigvals_hermitian, inv_posdef, logdet_posdef
from .special_functions import gen_pochhammer, mv_gamma_ln, partitions_of, stiefel_volume_ln
from .jack import jack_c, jack_table
from .hypergeometric import HypergeometricSpec, hypergeometric_matrix
from .generators import CustomGenerator, GaussianGenerator, KotzGenerator, MatrixTGenerator
from .shape import ConfigurationCoordinates, configuration_coords, helmert_submatrix
from .densities import (
    EllipticalShapeModel,
    Truncation,
    density_central,
    density_gaussian,
    density_general,
    density_isotropic,
    log_density_central,
    log_density_gaussian,
    log_density_general,
    log_density_isotropic,
)
from .inference import FitOptions, ShapeSample, chisq_sf, fit_mle, loglik, lrt_equal_means, nelder_mead
from .mc_validation import RngSpec, run_suite

import types as _types

__all__ = sorted(name for name, obj in globals().items()
                 if not name.startswith("_") and not isinstance(obj, _types.ModuleType))
