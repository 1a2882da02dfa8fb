"""Dimension identification for curve time series.

Finds the finite number of scalar components driving the serial
dependence of a sequence of curves, via eigenanalysis of an operator
built from lag autocovariances, with a bootstrap test for the number of
nonzero eigenvalues, subspace error metrics, VAR modeling of the
extracted loadings, and a tick-data-to-density front end.
"""

from .dimension import (
    BootstrapConfig,
    DimensionReport,
    bootstrap_test,
    default_epsilon,
    select_dimension,
    subspace_distance,
    subspace_distance_general,
    threshold_estimate,
)
from .eigen import (
    DualMatrix,
    EigenDecomposition,
    LoadingsSeries,
    decompose,
    dual_matrix,
    eigen_dual,
    eigenfunctions_from_dual,
    fit_panel,
    gram_schmidt,
    loadings,
    operator_eigenvalues,
    reconstruct,
)
from .errors import CurveDimError
from .grids import (
    CurvePanel,
    Grid,
    LagCovKernel,
    gram_matrix,
    inner_product,
    lag_cov_kernel,
    mean_curve,
    read_panel_csv,
    write_panel_csv,
)
from .tsmodels import (
    PortmanteauResult,
    VarFit,
    aic_select,
    ar1_simulate,
    fit_var_with_aic,
    ljung_box,
    multivariate_portmanteau,
    var_fit_yule_walker,
)

__version__ = "0.1.0"

__all__ = [
    "BootstrapConfig",
    "CurveDimError",
    "CurvePanel",
    "DimensionReport",
    "DualMatrix",
    "EigenDecomposition",
    "Grid",
    "LagCovKernel",
    "LoadingsSeries",
    "PortmanteauResult",
    "VarFit",
    "aic_select",
    "ar1_simulate",
    "bootstrap_test",
    "decompose",
    "default_epsilon",
    "dual_matrix",
    "eigen_dual",
    "eigenfunctions_from_dual",
    "fit_panel",
    "fit_var_with_aic",
    "gram_matrix",
    "gram_schmidt",
    "inner_product",
    "lag_cov_kernel",
    "ljung_box",
    "loadings",
    "mean_curve",
    "multivariate_portmanteau",
    "operator_eigenvalues",
    "read_panel_csv",
    "reconstruct",
    "select_dimension",
    "subspace_distance",
    "subspace_distance_general",
    "threshold_estimate",
    "var_fit_yule_walker",
    "write_panel_csv",
]
