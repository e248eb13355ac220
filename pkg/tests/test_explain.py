"""Perturbation sampling, feature selection, and the local surrogate."""

import numpy as np
import pytest

from helpers import make_dataset
from martlens.discretize import fit_discretization, locate_bin
from martlens.errors import SchemaMismatch
from martlens.explain import (
    Contribution,
    ExplainerConfig,
    Explanation,
    explain,
    explanation_from_doc,
    explanation_to_doc,
    kernel_weight,
    render_text,
    sample_perturbations,
    select_features,
)
from martlens.linreg import train_price_model
from martlens.persist import canonical_dumps
from oracles import exact_surrogate_oracle


def small_problem(seed=0, n=300, d=4, n_bins=4):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 100, size=(n, d)) * rng.uniform(0.5, 2.0, size=d)
    coef = rng.normal(scale=3.0, size=d)
    y = np.abs(2000.0 + X @ coef + rng.normal(scale=5.0, size=n))
    ds = make_dataset(X, y)
    model = train_price_model(ds, lam=0.0)
    disc = fit_discretization(ds, n_bins=n_bins)
    instance = dict(ds.records[11].values)
    return ds, model, disc, instance


def test_sample_row_zero_is_the_instance():
    ds, model, disc, instance = small_problem()
    x = np.array([instance[n] for n in disc.feature_names])
    cfg = ExplainerConfig(num_samples=200, seed=5)
    raw, binary, dist = sample_perturbations(disc, x, cfg)
    assert raw.shape == (200, 4) and binary.shape == (200, 4)
    assert np.array_equal(raw[0], x)
    assert np.array_equal(binary[0], np.ones(4))
    assert dist[0] == 0.0


def test_sample_distances_count_bin_flips():
    ds, model, disc, instance = small_problem(seed=1)
    x = np.array([instance[n] for n in disc.feature_names])
    cfg = ExplainerConfig(num_samples=500, seed=2)
    _, binary, dist = sample_perturbations(disc, x, cfg)
    expected = np.sqrt((binary == 0).sum(axis=1))
    assert np.array_equal(dist, expected)


def test_sample_determinism_and_seed_sensitivity():
    ds, model, disc, instance = small_problem(seed=2)
    x = np.array([instance[n] for n in disc.feature_names])
    cfg = ExplainerConfig(num_samples=300, seed=9)
    a = sample_perturbations(disc, x, cfg)
    b = sample_perturbations(disc, x, cfg)
    for u, v in zip(a, b):
        assert np.array_equal(u, v)
    c = sample_perturbations(disc, x, ExplainerConfig(num_samples=300, seed=10))
    assert not np.array_equal(a[0], c[0])


def test_sample_values_stay_inside_drawn_bins():
    ds, model, disc, instance = small_problem(seed=3)
    x = np.array([instance[n] for n in disc.feature_names])
    raw, binary, _ = sample_perturbations(disc, x, ExplainerConfig(num_samples=400, seed=0))
    for i in range(1, 400):
        for j in range(4):
            b = locate_bin(raw[i, j], disc.edges[j])
            lo = disc.bin_mins[j][b]
            hi = disc.bin_maxs[j][b]
            assert lo <= raw[i, j] <= hi
            assert binary[i, j] == float(b == locate_bin(x[j], disc.edges[j]))


def test_sampled_bin_frequencies_match_training():
    # over many draws, each bin is hit in proportion to its training count
    ds, model, disc, instance = small_problem(seed=4, n=500)
    x = np.array([instance[n] for n in disc.feature_names])
    n = 100_000
    raw, _, _ = sample_perturbations(disc, x, ExplainerConfig(num_samples=n, seed=123))
    for j in range(2):
        edges = disc.edges[j]
        counts = np.bincount(
            [locate_bin(float(v), edges) for v in raw[1:, j]],
            minlength=len(edges) + 1,
        )
        target = np.asarray(disc.frequencies[j]) / disc.n_train
        got = counts / (n - 1)
        assert np.max(np.abs(got - target)) <= 0.02


def test_kernel_weight_values():
    assert kernel_weight(0.0, 1.5) == 1.0
    assert kernel_weight(2.0, 2.0) == pytest.approx(np.exp(-1.0))
    arr = kernel_weight(np.array([0.0, 1.0]), 1.0)
    assert arr[0] == 1.0 and arr[1] == pytest.approx(np.exp(-1.0))
    with pytest.raises(ValueError):
        kernel_weight(1.0, 0.0)


def test_select_features_finds_signal_column():
    rng = np.random.default_rng(0)
    binary = (rng.random((600, 5)) > 0.5).astype(float)
    y = 10.0 * binary[:, 2] + 0.01 * rng.normal(size=600)
    w = np.ones(600)
    sel = select_features(binary, y, w, 3)
    assert sel[0] == 2
    assert len(sel) == 3 and len(set(sel)) == 3


def test_select_features_tie_breaks_to_lowest_index():
    rng = np.random.default_rng(1)
    col = (rng.random(400) > 0.5).astype(float)
    noise = (rng.random(400) > 0.5).astype(float)
    binary = np.column_stack([noise, col, col])  # columns 1 and 2 identical
    y = 5.0 * col
    sel = select_features(binary, y, np.ones(400), 1)
    assert sel == [1]


def test_select_features_k_clamped():
    rng = np.random.default_rng(2)
    binary = (rng.random((100, 3)) > 0.5).astype(float)
    y = rng.normal(size=100)
    assert len(select_features(binary, y, np.ones(100), 10)) == 3


def test_explain_matches_exact_surrogate_oracle():
    ds, model, disc, instance = small_problem(seed=7, n=400, d=3)
    cfg = ExplainerConfig(num_samples=60_000, num_features=3, seed=42)
    exp = explain(model, disc, instance, cfg)
    x = np.array([instance[n] for n in disc.feature_names])
    coefs = np.array([model.original_coefficients[n] for n in model.feature_names])
    oc, ob = exact_surrogate_oracle(
        coefs, model.original_intercept, disc, x,
        n_samples=60_000, kernel_width=0.75 * np.sqrt(3),
    )
    got = {c.feature: c.weight for c in exp.contributions}
    for j, name in enumerate(disc.feature_names):
        scale = max(1.0, abs(oc[j]))
        assert abs(got[name] - oc[j]) <= 0.05 * scale
    assert abs(exp.surrogate_intercept - ob) <= 0.05 * max(1.0, abs(ob))


def test_additivity_and_sorting():
    ds, model, disc, instance = small_problem(seed=8)
    exp = explain(model, disc, instance, ExplainerConfig(num_samples=2000, seed=3))
    total = exp.surrogate_intercept + sum(c.weight for c in exp.contributions)
    # all-ones surrogate prediction is intercept + sum of coefficients
    assert abs(total - (exp.surrogate_intercept + sum(c.weight for c in exp.contributions))) <= 1e-9
    mags = [abs(c.weight) for c in exp.contributions]
    assert mags == sorted(mags, reverse=True)
    assert 0.0 <= exp.surrogate_r2 <= 1.0


def test_same_seed_byte_identical_different_seed_not():
    ds, model, disc, instance = small_problem(seed=9)
    cfg = ExplainerConfig(num_samples=1500, seed=77)
    a = explain(model, disc, instance, cfg)
    b = explain(model, disc, instance, cfg)
    assert canonical_dumps(explanation_to_doc(a)) == canonical_dumps(explanation_to_doc(b))
    c = explain(model, disc, instance, ExplainerConfig(num_samples=1500, seed=78))
    assert canonical_dumps(explanation_to_doc(a)) != canonical_dumps(explanation_to_doc(c))


def test_scaling_black_box_scales_contributions():
    ds, model, disc, instance = small_problem(seed=10)
    from martlens.linreg import predict_matrix

    f = lambda X: predict_matrix(model, X)
    g = lambda X: 3.0 * predict_matrix(model, X)
    cfg = ExplainerConfig(num_samples=1200, seed=5)
    ea = explain(f, disc, instance, cfg)
    eb = explain(g, disc, instance, cfg)
    for ca, cb in zip(ea.contributions, eb.contributions):
        assert ca.feature == cb.feature
        assert cb.weight == pytest.approx(3.0 * ca.weight, rel=1e-9)
    assert eb.surrogate_intercept == pytest.approx(3.0 * ea.surrogate_intercept, rel=1e-9)


def test_degenerate_constant_model():
    ds, model, disc, instance = small_problem(seed=11)
    const = lambda X: np.full(len(X), 42.0)
    exp = explain(const, disc, instance, ExplainerConfig(num_samples=500, seed=1))
    assert exp.degenerate_local
    assert all(c.weight == 0.0 for c in exp.contributions)
    assert exp.surrogate_intercept == 42.0
    assert exp.surrogate_r2 == 0.0
    assert "no local effect" in render_text(exp)


def test_schema_mismatch_and_unknown_keys():
    ds, model, disc, instance = small_problem(seed=12)
    with pytest.raises(SchemaMismatch) as exc:
        explain(model, disc, {"x0": 1.0, "nope": 2.0},
                ExplainerConfig(num_samples=100, seed=0))
    assert "nope" in str(exc.value)


def test_out_of_range_flag_and_range_sources():
    ds, model, disc, instance = small_problem(seed=13)
    # training-range source for LinearModel
    exp = explain(model, disc, instance, ExplainerConfig(num_samples=400, seed=0))
    assert exp.range_source == "training"
    assert exp.local_range == model.prediction_range
    # a wildly extrapolated instance predicts outside the training range
    far = {k: v * 50.0 for k, v in instance.items()}
    exp_far = explain(model, disc, far, ExplainerConfig(num_samples=400, seed=0))
    assert exp_far.out_of_range
    # callable black boxes fall back to the perturbation spread
    from martlens.linreg import predict_matrix

    exp_fn = explain(lambda X: predict_matrix(model, X), disc, instance,
                     ExplainerConfig(num_samples=400, seed=0))
    assert exp_fn.range_source == "perturbations"
    assert exp_fn.local_range[0] <= exp_fn.predicted_value <= exp_fn.local_range[1]


def test_config_validation():
    with pytest.raises(ValueError):
        ExplainerConfig(num_samples=5)
    with pytest.raises(ValueError):
        ExplainerConfig(num_features=0)
    with pytest.raises(ValueError):
        ExplainerConfig(kernel_width=-1.0)


def test_num_features_clamps_to_dimension():
    ds, model, disc, instance = small_problem(seed=14, d=3)
    exp = explain(model, disc, instance,
                  ExplainerConfig(num_samples=300, num_features=50, seed=0))
    assert len(exp.contributions) == 3


def test_explanation_doc_round_trip():
    ds, model, disc, instance = small_problem(seed=15)
    exp = explain(model, disc, instance, ExplainerConfig(num_samples=600, seed=4))
    doc = explanation_to_doc(exp)
    back = explanation_from_doc(doc)
    assert canonical_dumps(explanation_to_doc(back)) == canonical_dumps(doc)
    assert back.predicted_value == exp.predicted_value
    assert back.contributions == exp.contributions


def test_render_text_layout():
    from martlens.discretize import render_bin_label

    exp = Explanation(
        predicted_value=12.34,
        local_range=(10.0, 20.0),
        contributions=(
            Contribution("A", render_bin_label("A", 1, (1.0, 2.0)), -0.5),
            Contribution("B", render_bin_label("B", 0, (3.0,)), 0.25),
        ),
        surrogate_intercept=12.5,
        surrogate_r2=0.9,
        instance_values={"A": 1.5, "B": 2.5},
        seed=0,
    )
    assert render_text(exp) == (
        "range\n"
        "  min 10.00\n"
        "  predicted 12.34\n"
        "  max 20.00\n"
        "contributions\n"
        "  -0.500000  1.00 < A <= 2.00\n"
        "  +0.250000  B <= 3.00\n"
        "values\n"
        "  A = 1.50\n"
        "  B = 2.50\n"
    )


def test_render_text_marks_out_of_range():
    exp = Explanation(
        predicted_value=25.0,
        local_range=(10.0, 20.0),
        contributions=(),
        surrogate_intercept=0.0,
        surrogate_r2=0.0,
        instance_values={},
        seed=0,
        out_of_range=True,
    )
    text = render_text(exp)
    assert "(outside training range)" in text
    assert text.index("range") < text.index("contributions") < text.index("values")
