"""Tabular mart sales data: ingestion, validation, synthesis, splitting, scaling.

CSV dialect (fixed for bit-exact round trips): comma separator, "." decimal
point, UTF-8, mandatory header, numerics written with Python's shortest
round-trip repr. Data rows are numbered from 1 in errors; the header is row 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import InvalidFraction, ParseError, SchemaError
from .persist import atomic_write_text


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature names plus the target column name and per-feature units."""

    feature_names: tuple[str, ...]
    target_name: str
    units: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        names = self.feature_names
        if len(names) < 2:
            raise SchemaError("schema needs at least 2 features")
        if len(set(names)) != len(names):
            raise SchemaError("duplicate feature names in schema")
        if any(not n for n in names):
            raise SchemaError("empty feature name")
        if self.target_name in names:
            raise SchemaError(f"target {self.target_name!r} overlaps feature names")
        if not self.target_name:
            raise SchemaError("empty target name")


@dataclass(frozen=True)
class SaleRecord:
    """One animal's feature values plus its total-price target."""

    values: Mapping[str, float]
    target: float


@dataclass(frozen=True)
class Dataset:
    schema: FeatureSchema
    records: tuple[SaleRecord, ...]

    def __post_init__(self):
        if not self.records:
            raise SchemaError("dataset needs at least one record")
        for i, rec in enumerate(self.records, start=1):
            _validate_record(self.schema, rec, row=i)

    def __len__(self) -> int:
        return len(self.records)

    def matrix(self) -> np.ndarray:
        """Feature values as an (n, d) float array, columns in schema order."""
        names = self.schema.feature_names
        return np.array([[rec.values[n] for n in names] for rec in self.records], dtype=float)

    def targets(self) -> np.ndarray:
        return np.array([rec.target for rec in self.records], dtype=float)


def _validate_record(schema: FeatureSchema, rec: SaleRecord, row: int) -> None:
    for name in schema.feature_names:
        if name not in rec.values:
            raise SchemaError(f"row {row}: missing feature {name!r}")
        v = rec.values[name]
        if not math.isfinite(v):
            raise SchemaError(f"row {row}: non-finite value for {name!r}")
    if "WT" in schema.feature_names and rec.values["WT"] <= 0:
        raise SchemaError(f"row {row}: WT must be > 0")
    if not math.isfinite(rec.target) or rec.target < 0:
        raise SchemaError(f"row {row}: target must be finite and >= 0")


# ---------------------------------------------------------------------------
# CSV

def load_csv(path: str | Path, target_name: str, units: Mapping[str, str] | None = None) -> Dataset:
    """Parse a mart CSV whose header names the columns; ``target_name`` picks the target."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty file, header required")
    header = lines[0].split(",")
    if len(set(header)) != len(header):
        raise SchemaError(f"{path}: duplicate header names")
    if target_name not in header:
        raise SchemaError(f"{path}: target column {target_name!r} not in header")
    feature_names = tuple(h for h in header if h != target_name)
    schema = FeatureSchema(feature_names, target_name, units or {})
    t_idx = header.index(target_name)

    records = []
    for row_no, line in enumerate(lines[1:], start=1):
        cells = line.split(",")
        if len(cells) != len(header):
            raise ParseError(
                f"row {row_no}: expected {len(header)} cells, got {len(cells)}",
                row=row_no,
            )
        parsed = {}
        for col_name, cell in zip(header, cells):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(
                    f"row {row_no}, column {col_name!r}: non-numeric cell {cell!r}",
                    row=row_no, col=col_name,
                ) from None
            if not math.isfinite(v):
                raise ParseError(
                    f"row {row_no}, column {col_name!r}: non-finite cell {cell!r}",
                    row=row_no, col=col_name,
                )
            parsed[col_name] = v
        target = parsed.pop(target_name)
        records.append(SaleRecord(parsed, target))
    if not records:
        raise SchemaError(f"{path}: no data rows")
    return Dataset(schema, tuple(records))


def dataset_to_csv(d: Dataset) -> str:
    """Render with shortest round-trip float repr so load(write(d)) is exact."""
    header = list(d.schema.feature_names) + [d.schema.target_name]
    out = [",".join(header)]
    for rec in d.records:
        cells = [repr(rec.values[n]) for n in d.schema.feature_names]
        cells.append(repr(rec.target))
        out.append(",".join(cells))
    return "\n".join(out) + "\n"


def write_csv(d: Dataset, path: str | Path) -> None:
    atomic_write_text(path, dataset_to_csv(d))


# ---------------------------------------------------------------------------
# synthetic mart generator
#
# Desk-scale stand-in for the private mart dataset: 22 features, and the
# target is a known linear combination plus Gaussian noise so tests can
# check coefficient recovery. PPK is drawn independently of WT and the
# target, which keeps total price distinct from PPK * WT.

_CONT_FEATURES: tuple[tuple[str, str, float, float], ...] = (
    ("WT", "kg", 50.0, 1000.0),
    ("PPK", "currency-per-kg", 150.0, 300.0),
    ("age_months", "months", 3.0, 120.0),
    ("height_cm", "cm", 90.0, 160.0),
    ("girth_cm", "cm", 120.0, 260.0),
    ("lot_size", "count", 1.0, 30.0),
    ("body_condition", "score", 1.0, 9.0),
    ("daily_gain_kg", "kg", 0.2, 2.0),
    ("health_score", "score", 0.0, 100.0),
    ("milk_yield_l", "litre", 0.0, 30.0),
    ("fat_cover", "score", 1.0, 15.0),
    ("muscle_score", "score", 1.0, 15.0),
    ("temperament", "score", 1.0, 10.0),
    ("sire_rating", "score", 0.0, 100.0),
    ("dam_rating", "score", 0.0, 100.0),
    ("transport_km", "km", 0.0, 400.0),
    ("days_on_feed", "count", 0.0, 300.0),
)

# one-hot over 6 breed categories, first category dropped (all-zero row)
_N_BREED_COLS = 5
_BREED_FEATURES = tuple(f"breed_code_{i}" for i in range(_N_BREED_COLS))

SYNTHETIC_FEATURES: tuple[str, ...] = tuple(n for n, _, _, _ in _CONT_FEATURES) + _BREED_FEATURES
SYNTHETIC_TARGET = "total_price"

# ground truth for the target: total_price = intercept + sum(coef * feature) + N(0, sigma)
SYNTHETIC_INTERCEPT = 50.0
SYNTHETIC_COEFFICIENTS: dict[str, float] = {
    "WT": 1.6,
    "PPK": 2.2,
    "age_months": -1.2,
    "muscle_score": 28.0,
    "body_condition": 9.0,
    "breed_code_2": 40.0,
}
SYNTHETIC_NOISE_SIGMA = 25.0


def synthetic_ground_truth() -> dict:
    """Generator parameters, as written to the sidecar metadata file."""
    coefs = {name: SYNTHETIC_COEFFICIENTS.get(name, 0.0) for name in SYNTHETIC_FEATURES}
    return {
        "features": list(SYNTHETIC_FEATURES),
        "target": SYNTHETIC_TARGET,
        "intercept": SYNTHETIC_INTERCEPT,
        "coefficients": coefs,
        "noise_sigma": SYNTHETIC_NOISE_SIGMA,
    }


def gen_synthetic_mart(n: int, seed: int) -> Dataset:
    """Generate ``n`` sale records; a pure function of (n, seed)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    cols: dict[str, np.ndarray] = {}
    units: dict[str, str] = {}
    for name, unit, low, high in _CONT_FEATURES:
        vals = rng.uniform(low, high, size=n)
        if name in ("lot_size", "days_on_feed"):
            vals = np.floor(vals)
            vals = np.clip(vals, low, None)
        cols[name] = vals
        units[name] = unit
    breed = rng.integers(0, _N_BREED_COLS + 1, size=n)
    for i, name in enumerate(_BREED_FEATURES):
        cols[name] = (breed == i).astype(float)
        units[name] = "unitless"

    lin = np.full(n, SYNTHETIC_INTERCEPT)
    for name, coef in SYNTHETIC_COEFFICIENTS.items():
        lin = lin + coef * cols[name]
    noise = rng.normal(0.0, SYNTHETIC_NOISE_SIGMA, size=n)
    target = np.maximum(lin + noise, 0.0)

    schema = FeatureSchema(SYNTHETIC_FEATURES, SYNTHETIC_TARGET, units)
    records = tuple(
        SaleRecord({name: float(cols[name][i]) for name in SYNTHETIC_FEATURES}, float(target[i]))
        for i in range(n)
    )
    return Dataset(schema, records)


# ---------------------------------------------------------------------------
# splitting

def split_train_test(d: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded shuffle split. Train size is round(n * fraction), half away from
    zero, clamped so both sides keep at least one record."""
    if not (0.0 < train_fraction < 1.0):
        raise InvalidFraction(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(d.records)
    if n < 2:
        raise SchemaError("need at least 2 records to split")
    n_train = int(math.floor(n * train_fraction + 0.5))
    n_train = min(max(n_train, 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    train = tuple(d.records[i] for i in perm[:n_train])
    test = tuple(d.records[i] for i in perm[n_train:])
    return Dataset(d.schema, train), Dataset(d.schema, test)


# ---------------------------------------------------------------------------
# standardization
#
# Sample (n-1) standard deviation throughout. Constant columns (or n == 1)
# are flagged and passed through with sentinel scale 1, so apply() yields
# 0-centered values for them.

@dataclass(frozen=True)
class StandardizationStats:
    feature_names: tuple[str, ...]
    means: tuple[float, ...]
    stds: tuple[float, ...]
    constant: tuple[bool, ...]

    def mean_vector(self) -> np.ndarray:
        return np.asarray(self.means, dtype=float)

    def std_vector(self) -> np.ndarray:
        return np.asarray(self.stds, dtype=float)


def fit_standardization(d: Dataset) -> StandardizationStats:
    X = d.matrix()
    n = X.shape[0]
    means = X.mean(axis=0)
    if n >= 2:
        stds = X.std(axis=0, ddof=1)
    else:
        stds = np.zeros(X.shape[1])
    constant = stds == 0.0
    stds = np.where(constant, 1.0, stds)
    return StandardizationStats(
        d.schema.feature_names,
        tuple(float(m) for m in means),
        tuple(float(s) for s in stds),
        tuple(bool(c) for c in constant),
    )


def apply_standardization(stats: StandardizationStats, values: Iterable[float] | np.ndarray) -> np.ndarray:
    x = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
    return (x - stats.mean_vector()) / stats.std_vector()


def apply_standardization_matrix(stats: StandardizationStats, X: np.ndarray) -> np.ndarray:
    return (X - stats.mean_vector()) / stats.std_vector()


def invert_standardization(stats: StandardizationStats, z: np.ndarray) -> np.ndarray:
    return np.asarray(z, dtype=float) * stats.std_vector() + stats.mean_vector()


def stats_to_doc(stats: StandardizationStats) -> dict:
    return {
        "feature_names": list(stats.feature_names),
        "means": list(stats.means),
        "stds": list(stats.stds),
        "constant": list(stats.constant),
    }


def stats_from_doc(doc: Mapping) -> StandardizationStats:
    return StandardizationStats(
        tuple(doc["feature_names"]),
        tuple(float(v) for v in doc["means"]),
        tuple(float(v) for v in doc["stds"]),
        tuple(bool(v) for v in doc["constant"]),
    )
