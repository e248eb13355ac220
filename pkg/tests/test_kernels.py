"""Both kernel paths must implement the same math: draw_bin_values and
frame_mad bit-identically, the Gram/solve kernels to rounding error."""

import numpy as np
import pytest

from martlens import kernels

HAVE_NUMBA = kernels.HAVE_NUMBA


def random_bins(rng, d, nb_max=5):
    n_bins = rng.integers(1, nb_max + 1, size=d)
    nb = int(n_bins.max())
    cum = np.ones((d, nb))
    lo = np.zeros((d, nb))
    hi = np.zeros((d, nb))
    for j in range(d):
        k = int(n_bins[j])
        probs = rng.dirichlet(np.ones(k))
        c = np.cumsum(probs)
        c[-1] = 1.0
        cum[j, :k] = c
        lo[j, :k] = np.sort(rng.uniform(0, 100, k))
        hi[j, :k] = lo[j, :k] + rng.uniform(0.01, 10, k)
    return cum, lo, hi


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
def test_draw_bin_values_paths_bit_identical():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(1, 9))
        n = int(rng.integers(1, 400))
        cum, lo, hi = random_bins(rng, d)
        u_bin = rng.random((n, d))
        u_val = rng.random((n, d))
        v1, b1 = kernels.draw_bin_values_numba(u_bin, u_val, cum, lo, hi)
        v2, b2 = kernels.draw_bin_values_numpy(u_bin, u_val, cum, lo, hi)
        assert np.array_equal(v1, v2)
        assert np.array_equal(b1, b2)


def test_draw_bin_values_ranges_and_bins():
    rng = np.random.default_rng(3)
    cum, lo, hi = random_bins(rng, 4)
    u_bin = rng.random((2000, 4))
    u_val = rng.random((2000, 4))
    vals, bins = kernels.draw_bin_values(u_bin, u_val, cum, lo, hi)
    for j in range(4):
        for i in range(2000):
            b = bins[i, j]
            assert lo[j, b] <= vals[i, j] <= hi[j, b]


def test_draw_bin_values_respects_cumulative():
    # two bins at 30/70: u below 0.3 lands in bin 0, above in bin 1
    cum = np.array([[0.3, 1.0]])
    lo = np.array([[0.0, 10.0]])
    hi = np.array([[1.0, 11.0]])
    u_bin = np.array([[0.0], [0.29999], [0.3], [0.99]])
    u_val = np.full((4, 1), 0.5)
    vals, bins = kernels.draw_bin_values(u_bin, u_val, cum, lo, hi)
    assert bins[:, 0].tolist() == [0, 0, 1, 1]
    assert vals[0, 0] == 0.5 and vals[3, 0] == 10.5


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
def test_frame_mad_paths_bit_identical():
    rng = np.random.default_rng(0)
    for _ in range(30):
        h, w = rng.integers(1, 90, size=2)
        a = rng.integers(0, 256, (h, w)).astype(np.uint8)
        b = rng.integers(0, 256, (h, w)).astype(np.uint8)
        assert kernels.frame_mad_numba(a, b) == kernels.frame_mad_numpy(a, b)


def test_frame_mad_hand_values():
    a = np.zeros((2, 2), dtype=np.uint8)
    b = np.full((2, 2), 255, dtype=np.uint8)
    assert kernels.frame_mad(a, b) == 255.0
    assert kernels.frame_mad(a, a) == 0.0
    c = np.array([[0, 10], [20, 30]], dtype=np.uint8)
    d = np.array([[10, 0], [30, 20]], dtype=np.uint8)
    assert kernels.frame_mad(c, d) == 10.0


def test_weighted_gram_and_moment_match_einsum():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = int(rng.integers(2, 100))
        d = int(rng.integers(1, 10))
        Xa = np.hstack([np.ones((n, 1)), rng.normal(size=(n, d))])
        w = rng.uniform(0.01, 3.0, n)
        y = rng.normal(size=n)
        G = kernels.weighted_gram(Xa, w)
        m = kernels.weighted_moment(Xa, w, y)
        G_ref = np.einsum("i,ij,ik->jk", w, Xa, Xa)
        m_ref = np.einsum("i,ij,i->j", w, Xa, y)
        assert np.allclose(G, G_ref, atol=1e-9)
        assert np.allclose(m, m_ref, atol=1e-9)
        assert np.allclose(G, G.T)  # symmetric by construction


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
def test_gram_paths_agree_to_rounding():
    rng = np.random.default_rng(2)
    for _ in range(10):
        n = int(rng.integers(2, 200))
        d = int(rng.integers(1, 12))
        Xa = np.hstack([np.ones((n, 1)), rng.normal(size=(n, d))])
        w = rng.uniform(0.01, 3.0, n)
        y = rng.normal(size=n)
        assert np.allclose(
            kernels.weighted_gram_numba(Xa, w), kernels.weighted_gram_numpy(Xa, w),
            rtol=1e-12, atol=1e-9,
        )
        assert np.allclose(
            kernels.weighted_moment_numba(Xa, w, y),
            kernels.weighted_moment_numpy(Xa, w, y),
            rtol=1e-12, atol=1e-9,
        )


def _spd(rng, k):
    M = rng.normal(size=(k, k))
    return M @ M.T + k * np.eye(k)


def test_cholesky_solve_matches_generic_solver():
    rng = np.random.default_rng(4)
    for _ in range(25):
        k = int(rng.integers(1, 12))
        A = _spd(rng, k)
        b = rng.normal(size=k)
        x, ok = kernels.cholesky_solve(A, b)
        assert ok
        assert np.allclose(x, np.linalg.solve(A, b), atol=1e-8)


def test_cholesky_solve_rejects_indefinite():
    A = np.array([[1.0, 0.0], [0.0, -1.0]])
    _, ok = kernels.cholesky_solve(A, np.ones(2))
    assert not ok


def test_gauss_solve_matches_generic_solver():
    rng = np.random.default_rng(5)
    for _ in range(25):
        k = int(rng.integers(1, 12))
        M = rng.normal(size=(k, k))
        A = M + M.T + 0.1 * np.eye(k)  # symmetric, not necessarily definite
        if abs(np.linalg.det(A)) < 1e-6:
            continue
        b = rng.normal(size=k)
        x, ok = kernels.gauss_solve(A, b, 1e-12)
        assert ok
        assert np.allclose(x, np.linalg.solve(A, b), atol=1e-7)


def test_gauss_solve_pivot_threshold_boundary():
    # pivot below rel_tol * max(diag) reports failure, above succeeds
    big = 1e6
    A_bad = np.diag([big, big * 1e-13])
    _, ok = kernels.gauss_solve(A_bad, np.ones(2), 1e-12)
    assert not ok
    A_good = np.diag([big, big * 1e-11])
    x, ok = kernels.gauss_solve(A_good, np.ones(2), 1e-12)
    assert ok
    assert np.allclose(x, [1 / big, 1e11 / big])


def test_gauss_solve_exactly_singular():
    A = np.array([[1.0, 1.0], [1.0, 1.0]])
    _, ok = kernels.gauss_solve(A, np.ones(2), 1e-12)
    assert not ok


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
def test_solver_paths_agree():
    rng = np.random.default_rng(6)
    for _ in range(15):
        k = int(rng.integers(1, 10))
        A = _spd(rng, k)
        b = rng.normal(size=k)
        x1, ok1 = kernels.cholesky_solve_numba(A, b)
        x2, ok2 = kernels.cholesky_solve_numpy(A, b)
        assert ok1 and ok2
        assert np.allclose(x1, x2, atol=1e-9)
        x3, ok3 = kernels.gauss_solve_numba(A, b, 1e-12)
        x4, ok4 = kernels.gauss_solve_numpy(A, b, 1e-12)
        assert ok3 and ok4
        assert np.allclose(x3, x4, atol=1e-9)


def test_warmup_runs_twice():
    kernels.warmup()
    kernels.warmup()


def test_env_flag_selects_numpy_path(tmp_path):
    import subprocess
    import sys

    code = "from martlens import kernels; print(kernels.USE_NUMBA)"
    out = subprocess.run(
        [sys.executable, "-c", code],
        env={"PATH": "/usr/bin:/bin", "MARTLENS_NUMBA": "0"},
        capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "False"
