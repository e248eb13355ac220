"""Hot numeric kernels: numba ``@njit`` implementations with pure-numpy fallbacks.

The active path is chosen once at import time. Set ``MARTLENS_NUMBA=0`` to
force the numpy fallbacks (the default uses numba whenever it imports).
Both paths are always importable as ``<name>_numba`` / ``<name>_numpy`` so
the benchmark and the equivalence tests can compare them directly;
``<name>_numba`` is None when numba is unavailable.

``draw_bin_values`` and ``frame_mad`` are bit-identical across paths (same
element order, same IEEE operations). The Gram kernels accumulate in a
different order under BLAS, so they agree only to rounding error.
"""

from __future__ import annotations

import os

import numpy as np

_flag = os.environ.get("MARTLENS_NUMBA", "1").strip().lower()
NUMBA_REQUESTED = _flag not in ("0", "false", "no", "off")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = NUMBA_REQUESTED and HAVE_NUMBA


# ---------------------------------------------------------------------------
# weighted Gram matrix / moment vector:  A = Xa' diag(w) Xa,  b = Xa' (w*y)

def weighted_gram_numpy(Xa: np.ndarray, w: np.ndarray) -> np.ndarray:
    return (Xa * w[:, None]).T @ Xa


def weighted_moment_numpy(Xa: np.ndarray, w: np.ndarray, y: np.ndarray) -> np.ndarray:
    return Xa.T @ (w * y)


def _weighted_gram_loops(Xa, w):
    n, d = Xa.shape
    A = np.zeros((d, d))
    for i in range(n):
        wi = w[i]
        for j in range(d):
            xij = wi * Xa[i, j]
            for k in range(j, d):
                A[j, k] += xij * Xa[i, k]
    for j in range(d):
        for k in range(j + 1, d):
            A[k, j] = A[j, k]
    return A


def _weighted_moment_loops(Xa, w, y):
    n, d = Xa.shape
    b = np.zeros(d)
    for i in range(n):
        wy = w[i] * y[i]
        for j in range(d):
            b[j] += Xa[i, j] * wy
    return b


# ---------------------------------------------------------------------------
# perturbation sampling: map uniform draws to (bin index, in-bin value)
#
# cum[j]   cumulative bin probabilities for feature j, padded with 1.0
# lo/hi[j] per-bin training value ranges (0-width for empty bins)

def draw_bin_values_numpy(u_bin: np.ndarray, u_val: np.ndarray, cum: np.ndarray,
                          lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n, d = u_bin.shape
    bins = np.empty((n, d), dtype=np.int64)
    vals = np.empty((n, d))
    for j in range(d):
        b = np.searchsorted(cum[j], u_bin[:, j], side="right")
        np.clip(b, 0, cum.shape[1] - 1, out=b)
        bins[:, j] = b
        vals[:, j] = lo[j, b] + u_val[:, j] * (hi[j, b] - lo[j, b])
    return vals, bins


def _draw_bin_values_loops(u_bin, u_val, cum, lo, hi):
    n, d = u_bin.shape
    nb = cum.shape[1]
    bins = np.empty((n, d), dtype=np.int64)
    vals = np.empty((n, d))
    for i in range(n):
        for j in range(d):
            b = 0
            while b < nb - 1 and u_bin[i, j] >= cum[j, b]:
                b += 1
            bins[i, j] = b
            vals[i, j] = lo[j, b] + u_val[i, j] * (hi[j, b] - lo[j, b])
    return vals, bins


# ---------------------------------------------------------------------------
# frame redundancy metric: mean absolute pixel difference in gray levels

def frame_mad_numpy(a: np.ndarray, b: np.ndarray) -> float:
    total = int(np.abs(a.astype(np.int64) - b.astype(np.int64)).sum())
    return total / a.size


def _frame_mad_loops(a, b):
    flat_a = a.ravel()
    flat_b = b.ravel()
    total = np.int64(0)
    for i in range(flat_a.size):
        diff = np.int64(flat_a[i]) - np.int64(flat_b[i])
        if diff < 0:
            diff = -diff
        total += diff
    return total / flat_a.size


# ---------------------------------------------------------------------------
# dense symmetric solves for the normal equations
#
# Both return (x, ok). Cholesky reports ok=False when the matrix is not
# positive definite; the partial-pivot fallback reports ok=False when a
# pivot falls below rel_tol * max(diag(A)) - the documented singularity
# boundary.

def cholesky_solve_numpy(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, bool]:
    n = A.shape[0]
    maxdiag = float(np.max(np.abs(np.diag(A)))) if n else 0.0
    floor = 1e-13 * maxdiag
    L = np.zeros_like(A)
    for j in range(n):
        d = A[j, j] - L[j, :j] @ L[j, :j]
        if d <= floor or d <= 0.0:
            return np.zeros(n), False
        L[j, j] = np.sqrt(d)
        if j + 1 < n:
            L[j + 1:, j] = (A[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    z = np.zeros(n)
    for i in range(n):
        z[i] = (b[i] - L[i, :i] @ z[:i]) / L[i, i]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (z[i] - L[i + 1:, i] @ x[i + 1:]) / L[i, i]
    return x, True


def _cholesky_solve_loops(A, b):
    n = A.shape[0]
    maxdiag = 0.0
    for i in range(n):
        v = abs(A[i, i])
        if v > maxdiag:
            maxdiag = v
    floor = 1e-13 * maxdiag
    L = np.zeros((n, n))
    for j in range(n):
        s = 0.0
        for k in range(j):
            s += L[j, k] * L[j, k]
        d = A[j, j] - s
        if d <= floor or d <= 0.0:
            return np.zeros(n), False
        L[j, j] = np.sqrt(d)
        for i in range(j + 1, n):
            s = 0.0
            for k in range(j):
                s += L[i, k] * L[j, k]
            L[i, j] = (A[i, j] - s) / L[j, j]
    z = np.zeros(n)
    for i in range(n):
        s = 0.0
        for k in range(i):
            s += L[i, k] * z[k]
        z[i] = (b[i] - s) / L[i, i]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        s = 0.0
        for k in range(i + 1, n):
            s += L[k, i] * x[k]
        x[i] = (z[i] - s) / L[i, i]
    return x, True


def gauss_solve_numpy(A: np.ndarray, b: np.ndarray, rel_tol: float) -> tuple[np.ndarray, bool]:
    n = A.shape[0]
    M = np.concatenate([A.astype(float).copy(), b.reshape(-1, 1)], axis=1)
    maxdiag = float(np.max(np.abs(np.diag(A)))) if n else 0.0
    threshold = rel_tol * maxdiag
    for col in range(n):
        p = col + int(np.argmax(np.abs(M[col:, col])))
        pivot = M[p, col]
        if abs(pivot) <= threshold:
            return np.zeros(n), False
        if p != col:
            M[[col, p]] = M[[p, col]]
        M[col + 1:, col:] -= np.outer(M[col + 1:, col] / M[col, col], M[col, col:])
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (M[i, n] - M[i, i + 1:n] @ x[i + 1:]) / M[i, i]
    return x, True


def _gauss_solve_loops(A, b, rel_tol):
    n = A.shape[0]
    M = np.empty((n, n + 1))
    maxdiag = 0.0
    for i in range(n):
        for j in range(n):
            M[i, j] = A[i, j]
        M[i, n] = b[i]
        v = abs(A[i, i])
        if v > maxdiag:
            maxdiag = v
    threshold = rel_tol * maxdiag
    for col in range(n):
        p = col
        best = abs(M[col, col])
        for i in range(col + 1, n):
            v = abs(M[i, col])
            if v > best:
                best = v
                p = i
        if best <= threshold:
            return np.zeros(n), False
        if p != col:
            for j in range(col, n + 1):
                tmp = M[col, j]
                M[col, j] = M[p, j]
                M[p, j] = tmp
        for i in range(col + 1, n):
            factor = M[i, col] / M[col, col]
            for j in range(col, n + 1):
                M[i, j] -= factor * M[col, j]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        s = 0.0
        for k in range(i + 1, n):
            s += M[i, k] * x[k]
        x[i] = (M[i, n] - s) / M[i, i]
    return x, True


# ---------------------------------------------------------------------------
# dispatch

if HAVE_NUMBA:
    weighted_gram_numba = njit(cache=True)(_weighted_gram_loops)
    weighted_moment_numba = njit(cache=True)(_weighted_moment_loops)
    draw_bin_values_numba = njit(cache=True)(_draw_bin_values_loops)
    frame_mad_numba = njit(cache=True)(_frame_mad_loops)
    cholesky_solve_numba = njit(cache=True)(_cholesky_solve_loops)
    gauss_solve_numba = njit(cache=True)(_gauss_solve_loops)
else:  # pragma: no cover
    weighted_gram_numba = None
    weighted_moment_numba = None
    draw_bin_values_numba = None
    frame_mad_numba = None
    cholesky_solve_numba = None
    gauss_solve_numba = None

if USE_NUMBA:
    weighted_gram = weighted_gram_numba
    weighted_moment = weighted_moment_numba
    draw_bin_values = draw_bin_values_numba
    frame_mad = frame_mad_numba
    cholesky_solve = cholesky_solve_numba
    gauss_solve = gauss_solve_numba
else:
    weighted_gram = weighted_gram_numpy
    weighted_moment = weighted_moment_numpy
    draw_bin_values = draw_bin_values_numpy
    frame_mad = frame_mad_numpy
    cholesky_solve = cholesky_solve_numpy
    gauss_solve = gauss_solve_numpy


def warmup() -> None:
    """Trigger JIT compilation of the active kernels on tiny inputs."""
    Xa = np.ones((2, 2))
    w = np.ones(2)
    y = np.ones(2)
    weighted_gram(Xa, w)
    weighted_moment(Xa, w, y)
    draw_bin_values(np.zeros((1, 1)), np.zeros((1, 1)), np.ones((1, 1)),
                    np.zeros((1, 1)), np.ones((1, 1)))
    frame_mad(np.zeros(4, dtype=np.uint8), np.zeros(4, dtype=np.uint8))
    A = np.eye(2)
    cholesky_solve(A, y)
    gauss_solve(A, y, 1e-12)
