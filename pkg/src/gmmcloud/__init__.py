"""Gaussian mixture shape models for 3D point clouds.

Fit AIC-weighted mixture ensembles with EM, draw new clouds from them,
morph between shapes along closed-form product-manifold geodesics, and
classify shapes through density-probe embeddings on a unit hypersphere.
"""

from .em import FitConfig, FitError, FitResult, Responsibilities, e_step, fit_em, kmeans_init, m_step
from .embedding import (
    ClassificationMetrics,
    ProbeSet,
    SphereEmbedding,
    arc_distance,
    embed,
    evaluate,
    knn_classify,
    make_probe_set,
)
from .geodesics import (
    InterpolationConfig,
    InterpolationResult,
    ProductPoint,
    gmm_to_product_point,
    interpolate_point_clouds,
    match_components,
    product_geodesic,
    product_point_to_gmm,
    project_to_k,
    spd_geodesic,
    sphere_geodesic,
)
from .model import (
    DegenerateCovarianceError,
    EnsembleMember,
    GaussianComponent,
    Gmm,
    GmmEnsemble,
    PointCloud,
    gaussian_density,
    gmm_density,
    gmm_log_likelihood,
)
from .sampling import RngStream, generate_point_cloud, sample_categorical, sample_gaussian
from .selection import AicTable, aic_score, akaike_weights, build_ensemble, default_candidate_ks
from .shapes import TubeSpec, add_outliers, make_bent_tube, tube_spec_for_class

__version__ = "0.1.0"

__all__ = [
    "AicTable",
    "ClassificationMetrics",
    "DegenerateCovarianceError",
    "EnsembleMember",
    "FitConfig",
    "FitError",
    "FitResult",
    "GaussianComponent",
    "Gmm",
    "GmmEnsemble",
    "InterpolationConfig",
    "InterpolationResult",
    "PointCloud",
    "ProbeSet",
    "ProductPoint",
    "Responsibilities",
    "RngStream",
    "SphereEmbedding",
    "TubeSpec",
    "add_outliers",
    "aic_score",
    "akaike_weights",
    "arc_distance",
    "build_ensemble",
    "default_candidate_ks",
    "e_step",
    "embed",
    "evaluate",
    "fit_em",
    "gaussian_density",
    "generate_point_cloud",
    "gmm_density",
    "gmm_log_likelihood",
    "gmm_to_product_point",
    "interpolate_point_clouds",
    "kmeans_init",
    "knn_classify",
    "m_step",
    "make_bent_tube",
    "make_probe_set",
    "match_components",
    "product_geodesic",
    "product_point_to_gmm",
    "project_to_k",
    "sample_categorical",
    "sample_gaussian",
    "spd_geodesic",
    "sphere_geodesic",
    "tube_spec_for_class",
]
