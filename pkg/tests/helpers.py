"""Small builders shared across test modules."""

from __future__ import annotations

import numpy as np

from martlens.mart_data import Dataset, FeatureSchema, SaleRecord


def make_dataset(X, y, names=None, target="total_price") -> Dataset:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if names is None:
        names = tuple(f"x{i}" for i in range(X.shape[1]))
    schema = FeatureSchema(feature_names=tuple(names), target_name=target)
    records = tuple(
        SaleRecord(values=dict(zip(names, row)), target=float(t))
        for row, t in zip(X.tolist(), y.tolist())
    )
    return Dataset(schema=schema, records=records)


def random_regression(rng, n, d, noise=0.5):
    """A well-conditioned random linear problem with known truth.

    The intercept is large enough that targets stay positive, so the same
    problems can be wrapped in a Dataset (whose price target must be >= 0).
    """
    X = rng.normal(size=(n, d)) * rng.uniform(0.5, 3.0, size=d)
    true_coef = rng.normal(scale=2.0, size=d)
    true_intercept = float(rng.uniform(500.0, 1000.0))
    y = true_intercept + X @ true_coef + rng.normal(scale=noise, size=n)
    return X, y, true_coef, true_intercept
