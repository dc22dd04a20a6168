"""Robust factor analysis with latent group structure in the loadings.

Loadings are first estimated robustly from the spatial Kendall's tau matrix
(or by principal components), clustered with complete-linkage agglomerative
clustering, and re-estimated under the group restriction selected by an
information criterion.
"""

from .cluster import MergePath, ahc_complete_linkage, cut_path, loading_distance_matrix
from .datagen import gen_example1, gen_example2, make_rng, sample_elliptical
from .errors import ConfigError, InputError, NumericalError, RFAError
from .evaluate import common_component_mse, fit_var, forecast_var, nmi, purity
from .factor import pca_fit, rts_factors, rts_fit, rts_loadings, top_eigen_sym
from .groupfit import (
    goodness_of_fit,
    grouped_loadings,
    reestimate_factors,
    rfa_pipeline,
    rho_rule,
    select_group_number,
)
from .kendall import spatial_kendall_tau
from .partition import Partition

__version__ = "0.1.0"
