"""Explainable livestock price models: data, regression, local surrogate
explanations, weight bands, an edge capture pipeline, and an HTTP service."""

from .bands import (
    BandEvalReport,
    BandScheme,
    LabeledSample,
    assign_band,
    evaluate_bands,
    gen_weight_samples,
    make_bands,
    train_band_model,
)
from .discretize import (
    Discretization,
    fit_discretization,
    fit_quantile_bins,
    locate_bin,
    render_bin_label,
)
from .errors import MartlensError
from .explain import (
    Contribution,
    ExplainerConfig,
    Explanation,
    explain,
    explanation_from_doc,
    explanation_to_doc,
    render_text,
    sample_perturbations,
)
from .linreg import (
    LinearModel,
    RegressionMetrics,
    evaluate,
    fit,
    model_from_doc,
    model_to_doc,
    predict,
    solve_weighted_ridge,
    train_price_model,
)
from .mart_data import (
    Dataset,
    FeatureSchema,
    SaleRecord,
    fit_standardization,
    gen_synthetic_mart,
    load_csv,
    split_train_test,
    write_csv,
)
from .service import create_app

__version__ = "0.1.0"

__all__ = [
    "BandEvalReport",
    "BandScheme",
    "Contribution",
    "Dataset",
    "Discretization",
    "ExplainerConfig",
    "Explanation",
    "FeatureSchema",
    "LabeledSample",
    "LinearModel",
    "MartlensError",
    "RegressionMetrics",
    "SaleRecord",
    "assign_band",
    "create_app",
    "evaluate",
    "evaluate_bands",
    "explain",
    "explanation_from_doc",
    "explanation_to_doc",
    "fit",
    "fit_discretization",
    "fit_quantile_bins",
    "fit_standardization",
    "gen_synthetic_mart",
    "gen_weight_samples",
    "load_csv",
    "locate_bin",
    "make_bands",
    "model_from_doc",
    "model_to_doc",
    "predict",
    "render_bin_label",
    "render_text",
    "sample_perturbations",
    "solve_weighted_ridge",
    "split_train_test",
    "train_band_model",
    "train_price_model",
    "write_csv",
    "__version__",
]
