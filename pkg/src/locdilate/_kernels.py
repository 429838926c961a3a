"""Hot inner loops, in two flavours.

Every kernel exists as a vectorised numpy function and as an explicit-loop
function compiled with ``numba.njit``.  The numba path is used when numba
imports and ``LOCDILATE_DISABLE_NUMBA`` is unset (or ``0``); otherwise the
numpy path is used.  Both flavours return identical results up to rounding
and are exercised side by side in the test-suite.

``LOCDILATE_THREADS`` caps the numba thread pool used by the parallel
kernels.
"""
from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("LOCDILATE_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

try:  # pragma: no cover - exercised implicitly
    if _DISABLED:
        raise ImportError("numba disabled by LOCDILATE_DISABLE_NUMBA")
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f

    prange = range

if HAVE_NUMBA:
    # prefer OpenMP so an outdated TBB is never probed
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    _threads = os.environ.get("LOCDILATE_THREADS")
    if _threads:
        numba.set_num_threads(max(1, min(int(_threads), numba.config.NUMBA_NUM_THREADS)))

BACKEND = "numba" if HAVE_NUMBA else "numpy"


# ----------------------------------------------------------------------------
# semigroup tables
# ----------------------------------------------------------------------------

def _np_first_assoc_violation(mul):
    n = mul.shape[0]
    cols = np.arange(n)
    for a in range(n):
        left = mul[mul[a][:, None], cols[None, :]]  # (a b) c
        right = mul[a][mul]  # a (b c)
        bad = np.argwhere(left != right)
        if bad.size:
            b, c = bad[0]
            return int(a), int(b), int(c)
    return -1, -1, -1


@njit(cache=True, parallel=True)
def _nb_assoc_rows(mul):
    n = mul.shape[0]
    first = np.full(n, -1, dtype=np.int64)
    for a in prange(n):
        found = -1
        for b in range(n):
            ab = mul[a, b]
            for c in range(n):
                if mul[ab, c] != mul[a, mul[b, c]]:
                    found = b * n + c
                    break
            if found >= 0:
                break
        first[a] = found
    return first


def _nb_first_assoc_violation(mul):
    mul = np.ascontiguousarray(mul, dtype=np.int64)
    first = _nb_assoc_rows(mul)
    hits = np.nonzero(first >= 0)[0]
    if hits.size == 0:
        return -1, -1, -1
    a = int(hits[0])
    b, c = divmod(int(first[a]), mul.shape[0])
    return a, b, c


# ----------------------------------------------------------------------------
# Gram assembly
# ----------------------------------------------------------------------------

def _np_kernel_gram(values):
    # values[s, t] = Gamma(s, t); block (t, s) of the result is Gamma(s, t)
    n, _, d, _ = values.shape
    return np.ascontiguousarray(values.transpose(1, 2, 0, 3).reshape(n * d, n * d))


@njit(cache=True)
def _nb_kernel_gram(values):
    n = values.shape[0]
    d = values.shape[2]
    out = np.empty((n * d, n * d), dtype=np.complex128)
    for t in range(n):
        for s in range(n):
            blk = values[s, t]
            for i in range(d):
                for j in range(d):
                    out[t * d + i, s * d + j] = blk[i, j]
    return out


def _np_function_gram(phi, mul, star, u):
    n = mul.shape[0]
    d = phi.shape[1]
    s = np.arange(n)
    if u >= 0:
        s = mul[mul[star[u], u], s]
    idx = mul[star[:, None], s[None, :]]  # idx[t, s]
    return np.ascontiguousarray(phi[idx].transpose(0, 2, 1, 3).reshape(n * d, n * d))


@njit(cache=True)
def _nb_function_gram(phi, mul, star, u):
    n = mul.shape[0]
    d = phi.shape[1]
    out = np.empty((n * d, n * d), dtype=np.complex128)
    uu = -1
    if u >= 0:
        uu = mul[star[u], u]
    for t in range(n):
        ts = star[t]
        for s in range(n):
            x = s
            if uu >= 0:
                x = mul[uu, s]
            blk = phi[mul[ts, x]]
            for i in range(d):
                for j in range(d):
                    out[t * d + i, s * d + j] = blk[i, j]
    return out


# ----------------------------------------------------------------------------
# windowed Toeplitz matrix for Z
# ----------------------------------------------------------------------------

def _np_block_toeplitz(powers, rho):
    # powers[n] = T^n, n = 0..N; block (t, s) = T^(s-t), T*^(t-s), rho I on diagonal
    m, d, _ = powers.shape
    out = np.zeros((m * d, m * d), dtype=np.complex128)
    eye = rho * np.eye(d)
    for t in range(m):
        out[t * d:(t + 1) * d, t * d:(t + 1) * d] = eye
        for s in range(t + 1, m):
            blk = powers[s - t]
            out[t * d:(t + 1) * d, s * d:(s + 1) * d] = blk
            out[s * d:(s + 1) * d, t * d:(t + 1) * d] = blk.conj().T
    return out


@njit(cache=True)
def _nb_block_toeplitz(powers, rho):
    m = powers.shape[0]
    d = powers.shape[1]
    out = np.zeros((m * d, m * d), dtype=np.complex128)
    for t in range(m):
        for i in range(d):
            out[t * d + i, t * d + i] = rho
        for s in range(t + 1, m):
            blk = powers[s - t]
            for i in range(d):
                for j in range(d):
                    v = blk[i, j]
                    out[t * d + i, s * d + j] = v
                    out[s * d + j, t * d + i] = v.conjugate()
    return out


# ----------------------------------------------------------------------------
# polynomials
# ----------------------------------------------------------------------------

def _np_circle_max(coeffs, grid):
    # coeffs in ascending order; returns max_k |q(grid_k)|
    return float(np.max(np.abs(np.polynomial.polynomial.polyval(grid, coeffs))))


@njit(cache=True)
def _nb_circle_max(coeffs, grid):
    best = 0.0
    deg = coeffs.shape[0] - 1
    for k in range(grid.shape[0]):
        z = grid[k]
        acc = coeffs[deg]
        for j in range(deg - 1, -1, -1):
            acc = acc * z + coeffs[j]
        a = abs(acc)
        if a > best:
            best = a
    return best


# ----------------------------------------------------------------------------
# pivoted Cholesky of a PSD matrix
# ----------------------------------------------------------------------------

def _np_pivoted_cholesky(a, tol):
    """Return (R, rank) with a ~= R^* R, R of shape (rank, n).

    Pivots on the largest remaining diagonal entry; stops once it drops
    below ``tol`` (absolute).
    """
    a = np.array(a, dtype=np.complex128)
    n = a.shape[0]
    diag = np.real(np.diag(a)).copy()
    rows = np.zeros((n, n), dtype=np.complex128)
    rank = 0
    for k in range(n):
        p = int(np.argmax(diag))
        if diag[p] <= tol:
            break
        piv = np.sqrt(diag[p])
        row = (a[p, :] - rows[:k, p].conj() @ rows[:k, :]) / piv
        row[p] = piv
        rows[k] = row
        diag -= np.abs(row) ** 2
        diag[p] = 0.0
        rank += 1
    return rows[:rank].copy(), rank


@njit(cache=True)
def _nb_pivoted_cholesky(a, tol):
    n = a.shape[0]
    diag = np.empty(n)
    for i in range(n):
        diag[i] = a[i, i].real
    rows = np.zeros((n, n), dtype=np.complex128)
    rank = 0
    for k in range(n):
        p = 0
        for i in range(1, n):
            if diag[i] > diag[p]:
                p = i
        if diag[p] <= tol:
            break
        piv = np.sqrt(diag[p])
        for j in range(n):
            acc = a[p, j]
            for q in range(k):
                acc -= rows[q, p].conjugate() * rows[q, j]
            rows[k, j] = acc / piv
        rows[k, p] = piv
        for j in range(n):
            diag[j] -= abs(rows[k, j]) ** 2
        diag[p] = 0.0
        rank += 1
    return rows[:rank].copy(), rank


IMPLEMENTATIONS = {
    "numpy": {
        "first_assoc_violation": _np_first_assoc_violation,
        "kernel_gram": _np_kernel_gram,
        "function_gram": _np_function_gram,
        "block_toeplitz": _np_block_toeplitz,
        "circle_max": _np_circle_max,
        "pivoted_cholesky": _np_pivoted_cholesky,
    },
}
if HAVE_NUMBA:
    IMPLEMENTATIONS["numba"] = {
        "first_assoc_violation": _nb_first_assoc_violation,
        "kernel_gram": _nb_kernel_gram,
        "function_gram": _nb_function_gram,
        "block_toeplitz": _nb_block_toeplitz,
        "circle_max": _nb_circle_max,
        "pivoted_cholesky": _nb_pivoted_cholesky,
    }


def first_assoc_violation(mul):
    """First triple (a, b, c) with (ab)c != a(bc), or (-1, -1, -1)."""
    return IMPLEMENTATIONS[BACKEND]["first_assoc_violation"](np.asarray(mul, dtype=np.int64))


def kernel_gram(values):
    """Assemble the (t row, s column) block matrix from values[s, t]."""
    return IMPLEMENTATIONS[BACKEND]["kernel_gram"](np.ascontiguousarray(values, dtype=np.complex128))


def function_gram(phi, mul, star, u=-1):
    """Gram matrix of ``phi`` with block (t, s) = phi(t* u* u s) (plain t* s if ``u < 0``)."""
    return IMPLEMENTATIONS[BACKEND]["function_gram"](
        np.ascontiguousarray(phi, dtype=np.complex128),
        np.ascontiguousarray(mul, dtype=np.int64),
        np.ascontiguousarray(star, dtype=np.int64),
        int(u),
    )


def block_toeplitz(powers, rho):
    return IMPLEMENTATIONS[BACKEND]["block_toeplitz"](np.ascontiguousarray(powers, dtype=np.complex128), float(rho))


def circle_max(coeffs, grid):
    return IMPLEMENTATIONS[BACKEND]["circle_max"](
        np.ascontiguousarray(coeffs, dtype=np.complex128), np.ascontiguousarray(grid, dtype=np.complex128)
    )


def pivoted_cholesky(a, tol):
    return IMPLEMENTATIONS[BACKEND]["pivoted_cholesky"](np.ascontiguousarray(a, dtype=np.complex128), float(tol))
