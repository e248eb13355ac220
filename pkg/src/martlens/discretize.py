"""Per-feature quantile bins, interval labels, and the binary encoding used
by the explainer.

Interval semantics are lower-exclusive / upper-inclusive. Label grammar
(numbers fixed-point, 2 decimals):

    "<lo> < <NAME> <= <hi>"   interior bin
    "<NAME> <= <hi>"          first bin
    "<NAME> > <lo>"           last bin
    "<NAME>"                  single-bin feature (no edges; grammar extension)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, LabelError, TooFewValues
from .mart_data import Dataset

DEFAULT_N_BINS = 4


@dataclass(frozen=True)
class BinLabel:
    text: str
    feature: str
    bin_index: int


@dataclass(frozen=True)
class Discretization:
    """Quantile bin edges, training frequencies, and per-bin training value
    ranges for every feature, fitted once on a training set."""

    feature_names: tuple[str, ...]
    edges: tuple[tuple[float, ...], ...]
    frequencies: tuple[tuple[int, ...], ...]
    bin_mins: tuple[tuple[float, ...], ...]
    bin_maxs: tuple[tuple[float, ...], ...]
    n_train: int

    def n_bins(self, feature_index: int) -> int:
        return len(self.edges[feature_index]) + 1

    def feature_index(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise KeyError(name) from None


def fit_quantile_bins(values: Sequence[float] | np.ndarray, n_bins: int) -> tuple[float, ...]:
    """Rank-based quantile edges: edge_k = sorted[ceil(k*n/n_bins) - 1],
    k = 1..n_bins-1, with duplicate edges collapsed."""
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    vals = np.sort(np.asarray(values, dtype=float))
    n = vals.shape[0]
    if n < n_bins:
        raise TooFewValues(f"need at least {n_bins} values, got {n}")
    edges: list[float] = []
    for k in range(1, n_bins):
        rank = int(np.ceil(k * n / n_bins)) - 1
        e = float(vals[rank])
        if not edges or e > edges[-1]:
            edges.append(e)
    return tuple(edges)


def locate_bin(value: float, edges: Sequence[float]) -> int:
    """Smallest i with value <= edges[i], else the last bin. Total on reals."""
    return int(np.searchsorted(np.asarray(edges, dtype=float), value, side="left"))


def fit_discretization(d: Dataset, n_bins: int = DEFAULT_N_BINS) -> Discretization:
    X = d.matrix()
    n = X.shape[0]
    all_edges, all_freqs, all_mins, all_maxs = [], [], [], []
    for j, _name in enumerate(d.schema.feature_names):
        col = X[:, j]
        if np.unique(col).size == 1:
            edges: tuple[float, ...] = ()
        else:
            edges = fit_quantile_bins(col, min(n_bins, n))
        nb = len(edges) + 1
        bins = np.searchsorted(np.asarray(edges), col, side="left")
        freqs = np.bincount(bins, minlength=nb)
        mins, maxs = [], []
        for b in range(nb):
            sel = col[bins == b]
            if sel.size:
                mins.append(float(sel.min()))
                maxs.append(float(sel.max()))
            else:
                # empty bin: zero draw probability, degenerate range at its lower edge
                anchor = float(edges[b - 1]) if b > 0 else float(col.min())
                mins.append(anchor)
                maxs.append(anchor)
        all_edges.append(tuple(float(e) for e in edges))
        all_freqs.append(tuple(int(f) for f in freqs))
        all_mins.append(tuple(mins))
        all_maxs.append(tuple(maxs))
    return Discretization(
        d.schema.feature_names,
        tuple(all_edges),
        tuple(all_freqs),
        tuple(all_mins),
        tuple(all_maxs),
        n,
    )


def interpretable_encode(instance_bins: Sequence[int], sample_bins) -> np.ndarray:
    """1.0 where a sample shares the instance's bin, else 0.0.

    ``sample_bins`` may be a single bin vector or an (n, d) matrix of them.
    """
    a = np.asarray(instance_bins)
    b = np.asarray(sample_bins)
    if b.shape[-1:] != a.shape or a.ndim != 1 or b.ndim not in (1, 2):
        raise DimensionMismatch(f"bin vectors differ in shape: {a.shape} vs {b.shape}")
    return (a == b).astype(float)


# ---------------------------------------------------------------------------
# labels

def render_bin_label(feature: str, bin_index: int, edges: Sequence[float]) -> BinLabel:
    k = len(edges)
    if bin_index < 0 or bin_index > k:
        raise LabelError(f"bin index {bin_index} out of range for {k} edges")
    if k == 0:
        text = feature
    elif bin_index == 0:
        text = f"{feature} <= {edges[0]:.2f}"
    elif bin_index == k:
        text = f"{feature} > {edges[-1]:.2f}"
    else:
        text = f"{edges[bin_index - 1]:.2f} < {feature} <= {edges[bin_index]:.2f}"
    return BinLabel(text=text, feature=feature, bin_index=bin_index)


def instance_label(disc: Discretization, feature: str, value: float) -> BinLabel:
    j = disc.feature_index(feature)
    return render_bin_label(feature, locate_bin(value, disc.edges[j]), disc.edges[j])


def parse_bin_label(text: str, edges_by_feature: Mapping[str, Sequence[float]]) -> BinLabel:
    """Invert render_bin_label against known per-feature edges."""
    for feature, edges in edges_by_feature.items():
        for b in range(len(edges) + 1):
            if render_bin_label(feature, b, edges).text == text:
                return BinLabel(text=text, feature=feature, bin_index=b)
    raise LabelError(f"label {text!r} does not match any (feature, bin)")


def disc_to_doc(disc: Discretization) -> dict:
    return {
        "feature_names": list(disc.feature_names),
        "edges": [list(e) for e in disc.edges],
        "frequencies": [list(f) for f in disc.frequencies],
        "bin_mins": [list(m) for m in disc.bin_mins],
        "bin_maxs": [list(m) for m in disc.bin_maxs],
        "n_train": disc.n_train,
    }


def disc_from_doc(doc: Mapping) -> Discretization:
    return Discretization(
        tuple(doc["feature_names"]),
        tuple(tuple(float(x) for x in e) for e in doc["edges"]),
        tuple(tuple(int(x) for x in f) for f in doc["frequencies"]),
        tuple(tuple(float(x) for x in m) for m in doc["bin_mins"]),
        tuple(tuple(float(x) for x in m) for m in doc["bin_maxs"]),
        int(doc["n_train"]),
    )
