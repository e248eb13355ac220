"""Weighted ridge / OLS linear regression: the one numeric solver shared by
price prediction and the local surrogate explainer.

Solver contract: solves (Xa' W Xa + lam*P) beta = Xa' W y where Xa carries a
leading intercept column and P penalizes every coefficient except the
intercept. Sample weights are normalized to mean 1 before solving, so the
solution is invariant to the overall weight scale and ``lam`` keeps the same
meaning for any weighting. Factorization is Cholesky first, then Gaussian
elimination with partial pivoting; a pivot below 1e-12 * max(diag) of the
Gram matrix is the documented singularity boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .errors import NonFiniteInput, SchemaMismatch, ScoreUndefined, SingularMatrix
from .mart_data import (
    Dataset,
    StandardizationStats,
    apply_standardization_matrix,
    fit_standardization,
    stats_from_doc,
    stats_to_doc,
)

PIVOT_REL_TOL = 1e-12
MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class RegressionMetrics:
    rmse: float
    mae: float
    r2: float

    def to_doc(self) -> dict:
        return {"rmse": self.rmse, "mae": self.mae, "r2": self.r2}


@dataclass(frozen=True)
class LinearModel:
    """Immutable trained regression model.

    ``coefficients`` apply to standardized feature values; the
    ``original_*`` pair expresses the same hyperplane in raw feature units.
    Dropped constant columns keep coefficient 0 and are listed in
    ``dropped``. ``prediction_range`` is the (min, max) of this model's
    predictions over its own training set, recorded for explanation display.
    """

    feature_names: tuple[str, ...]
    target_name: str
    coefficients: Mapping[str, float]
    intercept: float
    original_coefficients: Mapping[str, float]
    original_intercept: float
    standardization: StandardizationStats | None
    lam: float
    dropped: tuple[str, ...] = ()
    train_metrics: RegressionMetrics | None = None
    prediction_range: tuple[float, float] | None = None

    def coefficient_vector(self) -> np.ndarray:
        return np.array([self.coefficients[n] for n in self.feature_names], dtype=float)


# ---------------------------------------------------------------------------
# raw solver

def solve_weighted_ridge(
    X: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray | None = None,
    lam: float = 0.0,
) -> tuple[np.ndarray, float]:
    """Solve the weighted ridge normal equations; returns (coefficients, intercept)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError(f"bad shapes: X {X.shape}, y {y.shape}")
    n, d = X.shape
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise NonFiniteInput("design matrix or targets contain non-finite values")
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (n,):
            raise ValueError(f"weights shape {w.shape} != ({n},)")
        if not np.isfinite(w).all():
            raise NonFiniteInput("weights contain non-finite values")
        if (w < 0).any() or not (w > 0).any():
            raise ValueError("weights must be >= 0 with at least one > 0")
        w = w * (n / w.sum())

    Xa = np.concatenate([np.ones((n, 1)), X], axis=1)
    A = kernels.weighted_gram(Xa, w)
    b = kernels.weighted_moment(Xa, w, y)
    if lam > 0:
        idx = np.arange(1, d + 1)
        A[idx, idx] += lam

    x, ok = kernels.cholesky_solve(A, b)
    if not ok:
        x, ok = kernels.gauss_solve(A, b, PIVOT_REL_TOL)
        if not ok:
            raise SingularMatrix(
                "weighted Gram matrix is rank deficient (pivot below "
                f"{PIVOT_REL_TOL} * max diagonal) with lambda={lam}"
            )
    return x[1:], float(x[0])


def fit(
    design: np.ndarray,
    targets: np.ndarray,
    sample_weights: np.ndarray | None = None,
    lam: float = 0.0,
    feature_names: Sequence[str] | None = None,
    target_name: str = "y",
) -> LinearModel:
    """Fit on a raw design matrix (no standardization) and wrap as a LinearModel."""
    design = np.asarray(design, dtype=float)
    if feature_names is None:
        feature_names = tuple(f"x{i}" for i in range(design.shape[1]))
    else:
        feature_names = tuple(feature_names)
        if len(feature_names) != design.shape[1]:
            raise ValueError("feature_names length != design columns")
    coef, intercept = solve_weighted_ridge(design, targets, sample_weights, lam)
    coef_map = {n: float(c) for n, c in zip(feature_names, coef)}
    return LinearModel(
        feature_names=feature_names,
        target_name=target_name,
        coefficients=coef_map,
        intercept=intercept,
        original_coefficients=dict(coef_map),
        original_intercept=intercept,
        standardization=None,
        lam=float(lam),
    )


# ---------------------------------------------------------------------------
# dataset-level training

def _collinear_pairs(X: np.ndarray, names: Sequence[str]) -> list[tuple[str, str]]:
    """Perfectly correlated column pairs, reported in singularity diagnostics."""
    pairs = []
    stds = X.std(axis=0)
    live = [j for j in range(X.shape[1]) if stds[j] > 0]
    if len(live) >= 2:
        C = np.corrcoef(X[:, live], rowvar=False)
        for a in range(len(live)):
            for b in range(a + 1, len(live)):
                if abs(C[a, b]) > 1 - 1e-10:
                    pairs.append((names[live[a]], names[live[b]]))
    return pairs


def train_price_model(d: Dataset, lam: float = 0.0,
                      sample_weights: np.ndarray | None = None) -> LinearModel:
    """Standardize, drop constant columns, solve, and record training metrics."""
    X = d.matrix()
    y = d.targets()
    names = d.schema.feature_names
    stats = fit_standardization(d)
    keep = [j for j, c in enumerate(stats.constant) if not c]
    dropped = tuple(names[j] for j, c in enumerate(stats.constant) if c)
    if not keep:
        raise SingularMatrix("every feature column is constant")
    Z = apply_standardization_matrix(stats, X)[:, keep]
    try:
        coef_kept, intercept = solve_weighted_ridge(Z, y, sample_weights, lam)
    except SingularMatrix as exc:
        pairs = _collinear_pairs(X, names)
        if pairs:
            detail = "; collinear columns: " + ", ".join(f"{a}~{b}" for a, b in pairs)
            raise SingularMatrix(str(exc) + detail) from None
        raise

    coefficients = {n: 0.0 for n in names}
    for j, col in enumerate(keep):
        coefficients[names[col]] = float(coef_kept[j])

    mu = stats.mean_vector()
    sigma = stats.std_vector()
    orig = {n: 0.0 for n in names}
    orig_intercept = intercept
    for j, col in enumerate(keep):
        c_std = coef_kept[j]
        orig[names[col]] = float(c_std / sigma[col])
        orig_intercept -= float(c_std * mu[col] / sigma[col])

    model = LinearModel(
        feature_names=names,
        target_name=d.schema.target_name,
        coefficients=coefficients,
        intercept=float(intercept),
        original_coefficients=orig,
        original_intercept=float(orig_intercept),
        standardization=stats,
        lam=float(lam),
        dropped=dropped,
    )
    preds = predict_matrix(model, X)
    metrics = _metrics_from_arrays(y, preds)
    return LinearModel(
        **{**model.__dict__,
           "train_metrics": metrics,
           "prediction_range": (float(preds.min()), float(preds.max()))}
    )


# ---------------------------------------------------------------------------
# prediction / evaluation

def _ordered_vector(model: LinearModel, record: Mapping[str, float]) -> np.ndarray:
    missing = tuple(n for n in model.feature_names if n not in record)
    extra = tuple(k for k in record if k not in model.feature_names)
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing: {', '.join(missing)}")
        if extra:
            parts.append(f"unknown: {', '.join(extra)}")
        raise SchemaMismatch("record does not match model schema (" + "; ".join(parts) + ")",
                             missing=missing, extra=extra)
    x = np.array([record[n] for n in model.feature_names], dtype=float)
    if not np.isfinite(x).all():
        raise NonFiniteInput("record contains non-finite values")
    return x


def predict_matrix(model: LinearModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if model.standardization is not None:
        Z = apply_standardization_matrix(model.standardization, X)
    else:
        Z = X
    return model.intercept + Z @ model.coefficient_vector()


def predict(model: LinearModel, record: Mapping[str, float]) -> float:
    x = _ordered_vector(model, record)
    return float(predict_matrix(model, x.reshape(1, -1))[0])


def _metrics_from_arrays(y: np.ndarray, preds: np.ndarray) -> RegressionMetrics:
    resid = y - preds
    rmse = float(np.sqrt(np.mean(resid ** 2)))
    mae = float(np.mean(np.abs(resid)))
    ybar = float(np.mean(y))
    sstot = float(np.sum((y - ybar) ** 2))
    ssres = float(np.sum(resid ** 2))
    if sstot == 0.0:
        # constant targets: perfect fit is r2 = 1, anything else is undefined
        if rmse <= 1e-9 * max(1.0, abs(ybar)):
            return RegressionMetrics(rmse, mae, 1.0)
        raise ScoreUndefined("targets are constant but residuals are nonzero")
    return RegressionMetrics(rmse, mae, 1.0 - ssres / sstot)


def evaluate(model: LinearModel, d: Dataset) -> RegressionMetrics:
    if set(d.schema.feature_names) != set(model.feature_names):
        raise SchemaMismatch(
            "dataset schema does not match model schema",
            missing=tuple(n for n in model.feature_names if n not in d.schema.feature_names),
            extra=tuple(n for n in d.schema.feature_names if n not in model.feature_names),
        )
    X = np.array([[rec.values[n] for n in model.feature_names] for rec in d.records], dtype=float)
    preds = predict_matrix(model, X)
    return _metrics_from_arrays(d.targets(), preds)


# ---------------------------------------------------------------------------
# serialization (single canonical JSON document)

def model_to_doc(model: LinearModel) -> dict:
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "schema": {
            "feature_names": list(model.feature_names),
            "target_name": model.target_name,
        },
        "coefficients": {k: float(v) for k, v in model.coefficients.items()},
        "intercept": model.intercept,
        "original_coefficients": {k: float(v) for k, v in model.original_coefficients.items()},
        "original_intercept": model.original_intercept,
        "lambda": model.lam,
        "standardization": None if model.standardization is None else stats_to_doc(model.standardization),
        "dropped": list(model.dropped),
        "train_metrics": None if model.train_metrics is None else model.train_metrics.to_doc(),
        "prediction_range": None if model.prediction_range is None else list(model.prediction_range),
    }


def model_from_doc(doc: Mapping) -> LinearModel:
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format_version {doc.get('format_version')!r}")
    metrics = doc.get("train_metrics")
    rng = doc.get("prediction_range")
    return LinearModel(
        feature_names=tuple(doc["schema"]["feature_names"]),
        target_name=doc["schema"]["target_name"],
        coefficients={k: float(v) for k, v in doc["coefficients"].items()},
        intercept=float(doc["intercept"]),
        original_coefficients={k: float(v) for k, v in doc["original_coefficients"].items()},
        original_intercept=float(doc["original_intercept"]),
        standardization=None if doc.get("standardization") is None else stats_from_doc(doc["standardization"]),
        lam=float(doc["lambda"]),
        dropped=tuple(doc.get("dropped", ())),
        train_metrics=None if metrics is None else RegressionMetrics(
            float(metrics["rmse"]), float(metrics["mae"]), float(metrics["r2"])),
        prediction_range=None if rng is None else (float(rng[0]), float(rng[1])),
    )
