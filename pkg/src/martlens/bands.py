"""Weight-band classification by regressing continuous weight, then binning.

Binning a continuous prediction (instead of training a per-band classifier)
keeps the estimate stable across band layouts: coarsening to wider bands can
only merge errors away, never create new ones, so accuracy is monotone in
band width for nested schemes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ParseError, SchemaError
from .linreg import LinearModel, predict_matrix, train_price_model
from .mart_data import Dataset, FeatureSchema, SaleRecord

POVS = ("side", "front", "back", "cross")
BAND_TARGET = "weight_kg"


@dataclass(frozen=True)
class BandScheme:
    """Contiguous integer-kg bands: 0-200, 201-400, ... of equal width."""

    width_kg: float
    n_bands: int
    labels: tuple[str, ...]


def make_bands(max_weight_kg: float, width_kg: float) -> BandScheme:
    if width_kg <= 0:
        raise ValueError("band width must be > 0")
    if max_weight_kg <= 0:
        raise ValueError("max weight must be > 0")
    n = int(math.ceil(max_weight_kg / width_kg))
    labels = []
    for k in range(n):
        lo = 0 if k == 0 else round(k * width_kg) + 1
        hi = round((k + 1) * width_kg)
        labels.append(f"{lo}-{hi}")
    return BandScheme(width_kg=float(width_kg), n_bands=n, labels=tuple(labels))


def assign_band(weight_kg: float, scheme: BandScheme) -> int:
    """Band index for a weight; clamped into [0, n_bands - 1]."""
    k = int(math.ceil(weight_kg / scheme.width_kg)) - 1
    return min(max(k, 0), scheme.n_bands - 1)


def band_overflow(weight_kg: float, scheme: BandScheme) -> bool:
    """True when the weight lies beyond the last band before clamping."""
    return weight_kg > scheme.n_bands * scheme.width_kg


@dataclass(frozen=True)
class LabeledSample:
    features: tuple[float, ...]
    true_weight_kg: float
    pov: str

    def __post_init__(self):
        if self.pov not in POVS:
            raise ValueError(f"pov must be one of {POVS}, got {self.pov!r}")
        if not self.true_weight_kg > 0:
            raise ValueError("true_weight_kg must be > 0")


def _feature_names(n_features: int) -> tuple[str, ...]:
    return tuple(f"f{i}" for i in range(n_features))


def _samples_to_dataset(samples: Sequence[LabeledSample]) -> Dataset:
    if not samples:
        raise ValueError("no samples")
    width = len(samples[0].features)
    if any(len(s.features) != width for s in samples):
        raise SchemaError("samples have inconsistent feature counts")
    names = _feature_names(width)
    schema = FeatureSchema(
        feature_names=names,
        target_name=BAND_TARGET,
        units={name: "unitless" for name in names},
    )
    records = tuple(
        SaleRecord(values=dict(zip(names, s.features)), target=s.true_weight_kg)
        for s in samples
    )
    return Dataset(schema=schema, records=records)


def train_band_model(samples: Sequence[LabeledSample], lam: float = 0.0) -> LinearModel:
    """One pooled regression of true weight on the extracted features."""
    return train_price_model(_samples_to_dataset(samples), lam=lam)


@dataclass(frozen=True)
class BandEvalReport:
    scheme: BandScheme
    n: int
    accuracy: float
    confusion: tuple[tuple[int, ...], ...]  # rows: true band, cols: predicted
    per_pov_accuracy: Mapping[str, float]
    overflow_count: int

    def to_doc(self) -> dict:
        return {
            "width_kg": self.scheme.width_kg,
            "n_bands": self.scheme.n_bands,
            "labels": list(self.scheme.labels),
            "n": self.n,
            "accuracy": self.accuracy,
            "confusion": [list(r) for r in self.confusion],
            "per_pov_accuracy": dict(self.per_pov_accuracy),
            "overflow_count": self.overflow_count,
        }


def evaluate_bands(
    model: LinearModel, samples: Sequence[LabeledSample], scheme: BandScheme
) -> BandEvalReport:
    ds = _samples_to_dataset(samples)
    preds = predict_matrix(model, ds.matrix())
    true_bands = np.array([assign_band(s.true_weight_kg, scheme) for s in samples])
    pred_bands = np.array([assign_band(float(p), scheme) for p in preds])
    hits = true_bands == pred_bands

    confusion = np.zeros((scheme.n_bands, scheme.n_bands), dtype=np.int64)
    np.add.at(confusion, (true_bands, pred_bands), 1)

    per_pov: dict[str, float] = {}
    povs = np.array([s.pov for s in samples])
    for pov in POVS:
        mask = povs == pov
        if mask.any():
            per_pov[pov] = float(hits[mask].mean())

    overflow = sum(band_overflow(s.true_weight_kg, scheme) for s in samples)
    return BandEvalReport(
        scheme=scheme,
        n=len(samples),
        accuracy=float(hits.mean()),
        confusion=tuple(tuple(int(v) for v in row) for row in confusion),
        per_pov_accuracy=per_pov,
        overflow_count=int(overflow),
    )


def render_report(report: BandEvalReport) -> str:
    lines = [
        f"bands: width {report.scheme.width_kg:g} kg, {report.scheme.n_bands} bands",
        f"samples: {report.n}",
        f"accuracy: {report.accuracy:.4f}",
    ]
    for pov in POVS:
        if pov in report.per_pov_accuracy:
            lines.append(f"  {pov}: {report.per_pov_accuracy[pov]:.4f}")
    if report.overflow_count:
        lines.append(f"overflow (beyond last band): {report.overflow_count}")
    lines.append("confusion (rows true, cols predicted):")
    width = max(len(lbl) for lbl in report.scheme.labels)
    for i, row in enumerate(report.confusion):
        cells = " ".join(f"{v:6d}" for v in row)
        lines.append(f"  {report.scheme.labels[i]:>{width}} {cells}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# synthetic capture generator

# per-POV noise on the primary estimate f0; front sees no usable signal
_POV_SIGMA = {"side": 15.0, "cross": 45.0, "back": 90.0}
_WEIGHT_LOW = 60.0
_WEIGHT_HIGH = 950.0
_N_NOISE_FEATURES = 2


def gen_weight_samples(n: int, seed: int) -> list[LabeledSample]:
    """Synthetic (features, true weight, pov) triples.

    f0 mimics a geometry-based estimate whose quality depends on the camera
    angle: tight for side views, progressively worse for cross and back, and
    pure noise for front views. f1.. are distractors.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    out: list[LabeledSample] = []
    for _ in range(n):
        w = float(rng.uniform(_WEIGHT_LOW, _WEIGHT_HIGH))
        pov = POVS[int(rng.integers(0, len(POVS)))]
        if pov == "front":
            f0 = float(rng.uniform(_WEIGHT_LOW, _WEIGHT_HIGH))
        else:
            f0 = w + float(rng.normal(0.0, _POV_SIGMA[pov]))
        noise = rng.uniform(0.0, 1.0, size=_N_NOISE_FEATURES)
        out.append(
            LabeledSample(
                features=(f0, *(float(v) for v in noise)),
                true_weight_kg=w,
                pov=pov,
            )
        )
    return out


# ---------------------------------------------------------------------------
# CSV round-trip (feature columns, weight_kg, pov)

def write_samples_csv(path, samples: Sequence[LabeledSample]) -> None:
    if not samples:
        raise ValueError("no samples")
    names = _feature_names(len(samples[0].features))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([*names, BAND_TARGET, "pov"])
        for s in samples:
            writer.writerow([*(repr(v) for v in s.features), repr(s.true_weight_kg), s.pov])


def load_samples_csv(path) -> list[LabeledSample]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError("empty file")
    header = rows[0]
    if len(header) < 4 or header[-1] != "pov" or header[-2] != BAND_TARGET:
        raise SchemaError(f"expected columns f0.., {BAND_TARGET}, pov; got {header}")
    n_features = len(header) - 2
    if list(header[:n_features]) != list(_feature_names(n_features)):
        raise SchemaError(f"unexpected feature columns {header[:n_features]}")
    out = []
    for i, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", row=i)
        try:
            feats = tuple(float(v) for v in row[:n_features])
            weight = float(row[n_features])
        except ValueError as exc:
            raise ParseError(str(exc), row=i) from None
        pov = row[-1]
        if pov not in POVS:
            raise ParseError(f"unknown pov {pov!r}", row=i, col=len(header) - 1)
        out.append(LabeledSample(features=feats, true_weight_kg=weight, pov=pov))
    return out
