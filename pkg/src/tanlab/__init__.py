"""Local PCA tangent-space estimation: sampling, estimation, bounds and experiments."""

from .bounds import BoundParams, BoundReport, angle_bound, bound_report, k_bounds, nu_bound_quad, s3_bound, smooth_terms
from .estimator import TangentEstimate, local_pca, projection_distance, subspace_angle
from .manifold import CurvatureSpectrum, EmbeddingSpec, estimate_cs, evaluate_embedding, generate_embedding, generate_spectrum
from .numerics import matrix_norms, sym_eig, thin_svd
from .sampling import SampleCloud, embed_cloud, sample_cloud

__all__ = [
    "BoundParams", "BoundReport", "CurvatureSpectrum", "EmbeddingSpec", "SampleCloud", "TangentEstimate",
    "angle_bound", "bound_report", "embed_cloud", "estimate_cs", "evaluate_embedding", "generate_embedding",
    "generate_spectrum", "k_bounds", "local_pca", "matrix_norms", "nu_bound_quad", "projection_distance",
    "s3_bound", "sample_cloud", "smooth_terms", "subspace_angle", "sym_eig", "thin_svd",
]
