"""Local surrogate explanations for single price predictions.

Pipeline: perturb the instance by resampling quantile bins from their
training frequencies, predict with the black-box model, weight samples by
an exponential kernel over distance in the binary interpretable space,
greedily select the strongest features, and fit a weighted ridge surrogate
whose coefficients become signed per-bin contributions.

Everything is a pure function of (model, discretization, instance, config):
the same seed reproduces the same explanation byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from . import kernels
from .discretize import Discretization, locate_bin, render_bin_label, BinLabel
from .errors import NonFiniteInput, SchemaMismatch
from .linreg import LinearModel, predict_matrix, solve_weighted_ridge

DEFAULT_NUM_SAMPLES = 5000
DEFAULT_NUM_FEATURES = 6
DEFAULT_N_BINS = 4
SURROGATE_LAMBDA = 1.0


@dataclass(frozen=True)
class ExplainerConfig:
    num_samples: int = DEFAULT_NUM_SAMPLES
    num_features: int = DEFAULT_NUM_FEATURES
    kernel_width: float | None = None  # None: 0.75 * sqrt(d) at explain time
    seed: int = 0
    n_bins: int = DEFAULT_N_BINS

    def __post_init__(self):
        if self.num_samples < 10:
            raise ValueError("num_samples must be >= 10")
        if self.num_features < 1:
            raise ValueError("num_features must be >= 1")
        if self.kernel_width is not None and self.kernel_width <= 0:
            raise ValueError("kernel_width must be > 0")


@dataclass(frozen=True)
class Contribution:
    feature: str
    label: BinLabel
    weight: float


@dataclass(frozen=True)
class Explanation:
    """The display payload: prediction, local range, signed bin contributions,
    surrogate diagnostics, and the instance's actual values."""

    predicted_value: float
    local_range: tuple[float, float]
    contributions: tuple[Contribution, ...]
    surrogate_intercept: float
    surrogate_r2: float
    instance_values: Mapping[str, float]
    seed: int
    degenerate_local: bool = False
    out_of_range: bool = False
    range_source: str = "training"


# ---------------------------------------------------------------------------
# sampling

def _sampling_arrays(disc: Discretization) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fixed-shape cumulative-probability and bin-range arrays, padded so a
    uniform draw in [0, 1) always lands inside a real bin."""
    d = len(disc.feature_names)
    nbmax = max(disc.n_bins(j) for j in range(d))
    cum = np.ones((d, nbmax))
    lo = np.zeros((d, nbmax))
    hi = np.zeros((d, nbmax))
    for j in range(d):
        nb = disc.n_bins(j)
        probs = np.asarray(disc.frequencies[j], dtype=float) / disc.n_train
        c = np.cumsum(probs)
        c[-1] = 1.0  # absorb cumulative roundoff
        cum[j, :nb] = c
        lo[j, :nb] = disc.bin_mins[j]
        hi[j, :nb] = disc.bin_maxs[j]
    return cum, lo, hi


def instance_bin_vector(disc: Discretization, instance: Sequence[float]) -> np.ndarray:
    return np.array(
        [locate_bin(v, disc.edges[j]) for j, v in enumerate(instance)], dtype=np.int64
    )


def sample_perturbations(
    disc: Discretization, instance: Sequence[float], cfg: ExplainerConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw cfg.num_samples rows (row 0 is the unperturbed instance).

    Per sample and feature: pick a bin with probability proportional to its
    training frequency, then a value uniform within that bin's recorded
    training range. Returns (raw values, binary same-bin-as-instance
    encoding, Euclidean distance of each binary row from all-ones).
    """
    x = np.asarray(instance, dtype=float)
    d = x.shape[0]
    if d != len(disc.feature_names):
        raise SchemaMismatch(f"instance has {d} values, discretization {len(disc.feature_names)}")
    inst_bins = instance_bin_vector(disc, x)
    cum, lo, hi = _sampling_arrays(disc)

    n = cfg.num_samples
    rng = np.random.default_rng(cfg.seed)
    u_bin = rng.random((n - 1, d))
    u_val = rng.random((n - 1, d))
    vals, bins = kernels.draw_bin_values(u_bin, u_val, cum, lo, hi)

    raw = np.empty((n, d))
    raw[0] = x
    raw[1:] = vals
    all_bins = np.empty((n, d), dtype=np.int64)
    all_bins[0] = inst_bins
    all_bins[1:] = bins
    binary = (all_bins == inst_bins).astype(float)
    distances = np.sqrt(d - binary.sum(axis=1))
    return raw, binary, distances


def kernel_weight(distance, kernel_width: float):
    """Exponential kernel exp(-distance^2 / width^2); 1 at distance 0."""
    if kernel_width <= 0:
        raise ValueError("kernel_width must be > 0")
    distance = np.asarray(distance, dtype=float)
    out = np.exp(-(distance ** 2) / (kernel_width ** 2))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# feature selection on the precomputed weighted Gram matrix

def _gram_pieces(binary: np.ndarray, targets: np.ndarray, weights: np.ndarray):
    n = binary.shape[0]
    w = weights * (n / weights.sum())
    Za = np.concatenate([np.ones((n, 1)), binary], axis=1)
    G = kernels.weighted_gram(Za, w)
    m = kernels.weighted_moment(Za, w, targets)
    c = float(w @ (targets ** 2))
    return G, m, c


def _subset_r2(G, m, c, subset: Sequence[int], lam: float) -> float:
    idx = np.array([0] + [j + 1 for j in subset])
    A0 = G[np.ix_(idx, idx)]
    A = A0.copy()
    if lam > 0:
        di = np.arange(1, len(idx))
        A[di, di] += lam
    beta, ok = kernels.cholesky_solve(A, m[idx])
    if not ok:
        beta, ok = kernels.gauss_solve(A, m[idx], 1e-12)
        if not ok:
            return -math.inf
    ssres = c - 2.0 * float(beta @ m[idx]) + float(beta @ A0 @ beta)
    sstot = c - float(m[0] ** 2) / float(G[0, 0])
    if sstot <= 0:
        return 0.0
    return 1.0 - ssres / sstot


def select_features(
    binary: np.ndarray,
    targets: np.ndarray,
    weights: np.ndarray,
    k: int,
    lam: float = SURROGATE_LAMBDA,
) -> list[int]:
    """Greedy forward selection maximizing weighted R^2 of the ridge
    surrogate; ties resolve to the lowest feature index."""
    d = binary.shape[1]
    k = min(k, d)
    G, m, c = _gram_pieces(binary, targets, weights)
    selected: list[int] = []
    remaining = list(range(d))
    for _ in range(k):
        best_j = remaining[0]
        best_r2 = -math.inf
        for j in remaining:
            r2 = _subset_r2(G, m, c, selected + [j], lam)
            if r2 > best_r2:
                best_r2 = r2
                best_j = j
        selected.append(best_j)
        remaining.remove(best_j)
    return selected


# ---------------------------------------------------------------------------
# the explainer

PredictFn = Callable[[np.ndarray], np.ndarray]


def _black_box(model: LinearModel | PredictFn) -> PredictFn:
    if isinstance(model, LinearModel):
        return lambda X: predict_matrix(model, X)
    if callable(model):
        return model
    raise TypeError("model must be a LinearModel or a callable X -> predictions")


def _ordered_instance(names: Sequence[str], instance: Mapping[str, float]) -> np.ndarray:
    missing = tuple(n for n in names if n not in instance)
    extra = tuple(k for k in instance if k not in names)
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing: {', '.join(missing)}")
        if extra:
            parts.append(f"unknown: {', '.join(extra)}")
        raise SchemaMismatch("instance does not match schema (" + "; ".join(parts) + ")",
                             missing=missing, extra=extra)
    x = np.array([instance[n] for n in names], dtype=float)
    if not np.isfinite(x).all():
        raise NonFiniteInput("instance contains non-finite values")
    return x


def explain(
    model: LinearModel | PredictFn,
    disc: Discretization,
    instance: Mapping[str, float],
    cfg: ExplainerConfig,
) -> Explanation:
    names = model.feature_names if isinstance(model, LinearModel) else disc.feature_names
    if tuple(names) != tuple(disc.feature_names):
        raise SchemaMismatch("model schema does not match discretization features")
    x = _ordered_instance(names, instance)
    d = x.shape[0]
    k = min(cfg.num_features, d)
    width = cfg.kernel_width if cfg.kernel_width is not None else 0.75 * math.sqrt(d)

    raw, binary, distances = sample_perturbations(disc, x, cfg)
    preds = np.asarray(_black_box(model)(raw), dtype=float)
    predicted_value = float(preds[0])
    inst_bins = instance_bin_vector(disc, x)

    if isinstance(model, LinearModel) and model.prediction_range is not None:
        local_range = model.prediction_range
        range_source = "training"
    else:
        local_range = (float(preds.min()), float(preds.max()))
        range_source = "perturbations"

    def _label(j: int) -> BinLabel:
        return render_bin_label(names[j], int(inst_bins[j]), disc.edges[j])

    if float(np.ptp(preds)) == 0.0:
        contributions = tuple(
            Contribution(names[j], _label(j), 0.0) for j in range(k)
        )
        return Explanation(
            predicted_value=predicted_value,
            local_range=local_range,
            contributions=contributions,
            surrogate_intercept=predicted_value,
            surrogate_r2=0.0,
            instance_values={names[j]: float(x[j]) for j in range(k)},
            seed=cfg.seed,
            degenerate_local=True,
            out_of_range=not (local_range[0] <= predicted_value <= local_range[1]),
            range_source=range_source,
        )

    w = kernel_weight(distances, width)
    sel = select_features(binary, preds, w, k, SURROGATE_LAMBDA)
    coef, intercept = solve_weighted_ridge(binary[:, sel], preds, w, SURROGATE_LAMBDA)

    w_norm = w * (len(w) / w.sum())
    fitted = intercept + binary[:, sel] @ coef
    resid = preds - fitted
    ssres = float(w_norm @ (resid ** 2))
    wmean = float(w_norm @ preds) / len(w)
    sstot = float(w_norm @ ((preds - wmean) ** 2))
    r2 = 0.0 if sstot <= 0 else 1.0 - ssres / sstot
    r2 = min(1.0, max(0.0, r2))  # in [0,1] mathematically; clamp fp dust

    order = sorted(range(len(sel)), key=lambda i: (-abs(coef[i]), sel[i]))
    contributions = tuple(
        Contribution(names[sel[i]], _label(sel[i]), float(coef[i])) for i in order
    )
    return Explanation(
        predicted_value=predicted_value,
        local_range=local_range,
        contributions=contributions,
        surrogate_intercept=float(intercept),
        surrogate_r2=float(r2),
        instance_values={c.feature: float(instance[c.feature]) for c in contributions},
        seed=cfg.seed,
        degenerate_local=False,
        out_of_range=not (local_range[0] <= predicted_value <= local_range[1]),
        range_source=range_source,
    )


# ---------------------------------------------------------------------------
# serialization and text rendering

def explanation_to_doc(e: Explanation) -> dict:
    return {
        "predicted_value": e.predicted_value,
        "local_range": {"min": e.local_range[0], "max": e.local_range[1]},
        "contributions": [
            {
                "feature": c.feature,
                "label": c.label.text,
                "bin_index": c.label.bin_index,
                "weight": c.weight,
            }
            for c in e.contributions
        ],
        "surrogate_intercept": e.surrogate_intercept,
        "surrogate_r2": e.surrogate_r2,
        "instance_values": {k: float(v) for k, v in e.instance_values.items()},
        "seed": e.seed,
        "flags": {
            "degenerate_local": e.degenerate_local,
            "out_of_range": e.out_of_range,
            "range_source": e.range_source,
        },
    }


def explanation_from_doc(doc: Mapping) -> Explanation:
    flags = doc.get("flags", {})
    return Explanation(
        predicted_value=float(doc["predicted_value"]),
        local_range=(float(doc["local_range"]["min"]), float(doc["local_range"]["max"])),
        contributions=tuple(
            Contribution(
                c["feature"],
                BinLabel(text=c["label"], feature=c["feature"], bin_index=int(c["bin_index"])),
                float(c["weight"]),
            )
            for c in doc["contributions"]
        ),
        surrogate_intercept=float(doc["surrogate_intercept"]),
        surrogate_r2=float(doc["surrogate_r2"]),
        instance_values={k: float(v) for k, v in doc["instance_values"].items()},
        seed=int(doc["seed"]),
        degenerate_local=bool(flags.get("degenerate_local", False)),
        out_of_range=bool(flags.get("out_of_range", False)),
        range_source=str(flags.get("range_source", "training")),
    )


def render_text(e: Explanation) -> str:
    """Three ordered sections: range, contributions, values.

    Fixed layout (numbers: range and values to 2 decimals, weights signed
    to 6 decimals):

        range
          min <lo>
          predicted <value>
          max <hi>
        contributions
          <+/-weight>  <bin label>
        values
          <name> = <value>
    """
    lines = ["range",
             f"  min {e.local_range[0]:.2f}",
             f"  predicted {e.predicted_value:.2f}"]
    if e.out_of_range:
        lines.append("  (outside training range)")
    lines.append(f"  max {e.local_range[1]:.2f}")
    lines.append("contributions")
    if e.degenerate_local:
        lines.append("  no local effect")
    for c in e.contributions:
        lines.append(f"  {c.weight:+.6f}  {c.label.text}")
    lines.append("values")
    for name, value in e.instance_values.items():
        lines.append(f"  {name} = {value:.2f}")
    return "\n".join(lines) + "\n"
