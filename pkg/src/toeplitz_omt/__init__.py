"""Optimal mass transport between Toeplitz covariance matrices."""
from .clustering import (
    BarycenterResult,
    ClusterModel,
    barycenter_tk,
    classify,
    kmeans,
    kmeans_comparison,
    tk_distance_table,
)
from .errors import (
    ConvergenceError,
    InfeasibleError,
    SchemaError,
    SingularMatrixError,
    SolverError,
    ToeplitzOMTError,
    ValidationError,
)
from .io import io_read, io_write
from .matrices import (
    ellipticity_barycenter,
    ellipticity_distance,
    ellipticity_fixed_point,
    geodesic_convex,
    geodesic_gaussian_omt,
    geodesic_gconvex,
    geodesic_log_euclidean,
    hermitian_eig,
    kl_barycenter,
    kl_divergence,
    matrix_function,
)
from .paths import (
    CovariancePath,
    fit_euclidean_path,
    fit_log_euclidean_path,
    interpolate,
    interpolate_with_mass_terms,
    track,
)
from .signals import ArSpec, UlaScene, sample_covariance, simulate_ar, ula_covariance
from .sos import bounds_sandwich, sos_lower_bound
from .spectral import (
    DiscreteSpectrum,
    FrequencyGrid,
    ToeplitzCov,
    TransportPlan,
    correlogram,
    fourier_vector,
    gamma_adjoint,
    gamma_apply,
    validate_psd,
)
from .transport import (
    CHORDAL2,
    CostSpec,
    DistanceResult,
    compute_S,
    compute_S_kappa,
    compute_T,
    compute_T_kappa,
    dual_grid,
)

__version__ = "0.1.0"
