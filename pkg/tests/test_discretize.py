"""Quantile bins, bin location, and the interval-label grammar."""

import numpy as np
import pytest

from helpers import make_dataset
from martlens.discretize import (
    Discretization,
    disc_from_doc,
    disc_to_doc,
    fit_discretization,
    fit_quantile_bins,
    instance_label,
    interpretable_encode,
    locate_bin,
    parse_bin_label,
    render_bin_label,
)
from martlens.errors import DimensionMismatch, LabelError, TooFewValues
from martlens.persist import canonical_dumps


def test_quantile_edges_hand_case():
    # 8 sorted values, 4 bins: edges at ranks ceil(k*8/4) = 2, 4, 6
    values = [10, 20, 30, 40, 50, 60, 70, 80]
    assert fit_quantile_bins(values, 4) == (20.0, 40.0, 60.0)
    # order of input must not matter
    assert fit_quantile_bins(values[::-1], 4) == (20.0, 40.0, 60.0)


def test_quantile_edges_uneven_n():
    # n=7, 4 bins: ranks ceil(7/4)=2, ceil(14/4)=4, ceil(21/4)=6
    values = [1, 2, 3, 4, 5, 6, 7]
    assert fit_quantile_bins(values, 4) == (2.0, 4.0, 6.0)


def test_quantile_edges_collapse_duplicates():
    values = [1.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 9.0]
    edges = fit_quantile_bins(values, 4)
    assert edges == (2.0,)  # duplicate 2.0 edges collapse
    assert list(edges) == sorted(edges)


def test_quantile_edges_validation():
    with pytest.raises(ValueError):
        fit_quantile_bins([1, 2, 3, 4], 1)
    with pytest.raises(TooFewValues):
        fit_quantile_bins([1, 2, 3], 4)


def test_locate_bin_covers_all_reals():
    edges = (2.0, 4.0, 6.0)
    assert locate_bin(-1e9, edges) == 0
    assert locate_bin(2.0, edges) == 0  # upper-inclusive
    assert locate_bin(2.0000001, edges) == 1
    assert locate_bin(4.0, edges) == 1
    assert locate_bin(6.0, edges) == 2
    assert locate_bin(6.1, edges) == 3  # last bin is open above
    assert locate_bin(1e9, edges) == 3


def test_locate_bin_boundary_value_lands_in_displayed_bin():
    # value 327.0 with edges containing 308.0 then 327.0
    edges = (290.0, 308.0, 327.0, 350.0)
    b = locate_bin(327.0, edges)
    assert render_bin_label("WT", b, edges).text == "308.00 < WT <= 327.00"


def test_label_grammar_all_positions():
    edges = (2.0, 4.0, 6.0)
    assert render_bin_label("F", 0, edges).text == "F <= 2.00"
    assert render_bin_label("F", 1, edges).text == "2.00 < F <= 4.00"
    assert render_bin_label("F", 2, edges).text == "4.00 < F <= 6.00"
    assert render_bin_label("F", 3, edges).text == "F > 6.00"
    assert render_bin_label("WT", 1, (308.0, 327.0)).text == "308.00 < WT <= 327.00"
    assert render_bin_label("PPK", 1, (210.5, 214.1)).text == "210.50 < PPK <= 214.10"


def test_label_single_bin_feature():
    label = render_bin_label("const", 0, ())
    assert label.text == "const"


def test_label_out_of_range():
    with pytest.raises(LabelError):
        render_bin_label("F", 4, (1.0, 2.0, 3.0))
    with pytest.raises(LabelError):
        render_bin_label("F", -1, (1.0, 2.0, 3.0))


def test_parse_bin_label_inverts_render():
    edges_by_feature = {"WT": (308.0, 327.0), "PPK": (210.5, 214.1, 250.0)}
    for feature, edges in edges_by_feature.items():
        for b in range(len(edges) + 1):
            label = render_bin_label(feature, b, edges)
            back = parse_bin_label(label.text, edges_by_feature)
            assert back.feature == feature and back.bin_index == b
    with pytest.raises(LabelError):
        parse_bin_label("1.00 < NOPE <= 2.00", edges_by_feature)


def test_fit_discretization_frequencies_recount():
    rng = np.random.default_rng(0)
    X = np.column_stack([
        rng.uniform(0, 100, 500),
        rng.normal(50, 10, 500),
        np.full(500, 3.25),  # constant column
    ])
    ds = make_dataset(X, rng.uniform(10, 20, 500))
    disc = fit_discretization(ds, n_bins=4)
    assert disc.n_train == 500
    for j in range(3):
        edges = disc.edges[j]
        counts = np.zeros(len(edges) + 1, dtype=int)
        for v in X[:, j]:
            counts[locate_bin(float(v), edges)] += 1
        assert list(disc.frequencies[j]) == counts.tolist()
        assert sum(disc.frequencies[j]) == 500
    # constant column: no edges, one bin holding everything
    assert disc.edges[2] == ()
    assert disc.frequencies[2] == (500,)


def test_fit_discretization_bin_ranges():
    rng = np.random.default_rng(1)
    X = np.column_stack([rng.uniform(0, 10, 200), rng.uniform(-5, 5, 200)])
    ds = make_dataset(X, np.abs(rng.normal(size=200)))
    disc = fit_discretization(ds, n_bins=4)
    for j in range(2):
        edges = disc.edges[j]
        for b in range(len(edges) + 1):
            members = [v for v in X[:, j] if locate_bin(float(v), edges) == b]
            if members:
                assert disc.bin_mins[j][b] == min(members)
                assert disc.bin_maxs[j][b] == max(members)
                assert disc.frequencies[j][b] == len(members)
            else:
                assert disc.frequencies[j][b] == 0
                # empty bin anchored to a zero-width range
                assert disc.bin_mins[j][b] == disc.bin_maxs[j][b]


def test_fit_discretization_small_n_reduces_bins():
    ds = make_dataset([[1.0, 5.0], [2.0, 6.0], [3.0, 7.0]], [1.0, 2.0, 3.0])
    disc = fit_discretization(ds, n_bins=10)
    assert disc.n_bins(0) <= 3


def test_interpretable_encode():
    z = interpretable_encode([1, 0, 2], [[1, 0, 2], [1, 1, 2], [0, 0, 0]])
    assert z.tolist() == [[1.0, 1.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]
    with pytest.raises(DimensionMismatch):
        interpretable_encode([1, 0], [[1, 0, 2]])


def test_instance_label_uses_instance_bin():
    rng = np.random.default_rng(2)
    X = np.column_stack([rng.uniform(0, 100, 100), rng.uniform(0, 1, 100)])
    ds = make_dataset(X, rng.uniform(1, 2, 100), names=("WT", "frac"))
    disc = fit_discretization(ds, n_bins=4)
    value = float(X[17, 0])
    label = instance_label(disc, "WT", value)
    assert label.bin_index == locate_bin(value, disc.edges[0])
    assert "WT" in label.text


def test_disc_doc_round_trip():
    rng = np.random.default_rng(3)
    X = np.column_stack([rng.uniform(0, 100, 80), rng.normal(0, 1, 80)])
    ds = make_dataset(X, rng.uniform(1, 2, 80))
    disc = fit_discretization(ds, n_bins=4)
    back = disc_from_doc(disc_to_doc(disc))
    assert back == disc
    assert canonical_dumps(disc_to_doc(back)) == canonical_dumps(disc_to_doc(disc))
