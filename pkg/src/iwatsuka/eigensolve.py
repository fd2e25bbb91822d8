"""Lowest eigenpairs of real symmetric tridiagonal matrices.

Eigenvalues come from bisection on the Sturm sequence count, eigenvectors
from inverse iteration. ``dense_oracle`` is an independent dense solver kept
for tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.linalg import solve_banded

from .errors import ConvergenceError

__all__ = ["EigenResult", "count_below", "lowest_eigenvalues", "eigenvector",
           "lowest_eigenpairs", "dense_oracle", "matrix_scale"]

PIVMIN = 1e-300
SEED = 0x5EED
ORACLE_MAX_DIM = 64
MIN_SWEEPS = 3


@dataclass(frozen=True)
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray | None = None
    residuals: np.ndarray | None = None


def _parts(m):
    if hasattr(m, "diag"):
        d, e = m.diag, m.offdiag
    else:
        d, e = m
    d = np.ascontiguousarray(d, dtype=float)
    e = np.ascontiguousarray(e, dtype=float)
    if d.ndim != 1 or len(d) == 0 or e.shape != (len(d) - 1,):
        raise ValueError("expected a diagonal of length n >= 1 and an off-diagonal of length n-1")
    return d, e


def matrix_scale(m) -> float:
    d, e = _parts(m)
    return float(np.max(np.abs(d)) + 2.0 * (np.max(np.abs(e)) if len(e) else 0.0))


@njit(cache=True)
def _sturm_count(d, e2, lam):
    # number of negative pivots of LDL^T of (T - lam); zero pivots become +PIVMIN
    count = 0
    q = d[0] - lam
    if abs(q) < PIVMIN:
        q = PIVMIN if q >= 0.0 else -PIVMIN
    if q < 0.0:
        count += 1
    for i in range(1, d.shape[0]):
        q = d[i] - lam - e2[i - 1] / q
        if abs(q) < PIVMIN:
            q = PIVMIN if q >= 0.0 else -PIVMIN
        if q < 0.0:
            count += 1
    return count


@njit(cache=True)
def _bisect_lowest(d, e2, k, lo0, hi0, tol):
    out = np.empty(k)
    lo_prev = lo0
    for j in range(k):
        lo = lo_prev
        hi = hi0
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if _sturm_count(d, e2, mid) <= j:
                lo = mid
            else:
                hi = mid
        out[j] = 0.5 * (lo + hi)
        lo_prev = lo
    return out


def count_below(m, lam: float) -> int:
    """Number of eigenvalues strictly below ``lam``."""
    d, e = _parts(m)
    return int(_sturm_count(d, e * e, float(lam)))


def lowest_eigenvalues(m, k: int, tol: float | None = None) -> EigenResult:
    """The ``k`` smallest eigenvalues, each bracketed to width ``tol``.

    Default ``tol`` is ``1e-10 * scale`` with scale = max|d| + 2 max|e|.
    """
    d, e = _parts(m)
    n = len(d)
    if not 1 <= k <= n:
        raise ValueError(f"k must be between 1 and the dimension {n}, got {k}")
    scale = matrix_scale((d, e))
    if tol is None:
        tol = 1e-10 * scale
    radius = np.zeros(n)
    radius[:-1] += np.abs(e)
    radius[1:] += np.abs(e)
    lo = float(np.min(d - radius))
    hi = float(np.max(d + radius))
    pad = 2.0 * np.finfo(float).eps * max(scale, 1.0) + PIVMIN
    vals = _bisect_lowest(d, e * e, int(k), lo - pad, hi + pad, float(tol))
    return EigenResult(vals)


def eigenvector(m, lam: float, *, resid_tol: float | None = None, max_iter: int = 50) -> np.ndarray:
    """Unit eigenvector for an isolated eigenvalue ``lam`` by inverse iteration.

    The sign is fixed so that the first entry of (near-)maximal magnitude is
    positive.
    """
    d, e = _parts(m)
    n = len(d)
    scale = matrix_scale((d, e))
    if resid_tol is None:
        resid_tol = 1e-8 * scale
    if n == 1:
        return np.ones(1)
    rng = np.random.default_rng(SEED)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    shift = float(lam)
    ab = np.zeros((3, n))
    ab[0, 1:] = e
    ab[2, :-1] = e

    def apply(x):
        y = (d - lam) * x
        y[:-1] += e * x[1:]
        y[1:] += e * x[:-1]
        return y

    resid = np.inf
    for it in range(max_iter):
        ab[1] = d - shift
        try:
            w = solve_banded((1, 1), ab, v, check_finite=False)
        except np.linalg.LinAlgError:
            shift = shift + 4.0 * np.finfo(float).eps * max(scale, 1.0)
            continue
        nrm = np.linalg.norm(w)
        if not np.isfinite(nrm) or nrm == 0.0:
            shift = shift + 4.0 * np.finfo(float).eps * max(scale, 1.0)
            continue
        v = w / nrm
        resid = np.linalg.norm(apply(v))
        # a few extra sweeps purge components of neighbouring eigenvectors that
        # the residual test alone would tolerate
        if resid <= resid_tol and it >= min(MIN_SWEEPS, max_iter) - 1:
            break
    else:
        raise ConvergenceError(
            f"inverse iteration did not converge in {max_iter} steps (residual {resid:.3e})")
    big = np.abs(v)
    first = int(np.flatnonzero(big >= (1.0 - 1e-8) * big.max())[0])
    return v if v[first] > 0 else -v


def lowest_eigenpairs(m, k: int, tol: float | None = None) -> EigenResult:
    res = lowest_eigenvalues(m, k, tol)
    d, e = _parts(m)
    vecs = np.empty((k, len(d)))
    resid = np.empty(k)
    for j, lam in enumerate(res.values):
        v = eigenvector((d, e), lam)
        r = (d - lam) * v
        r[:-1] += e * v[1:]
        r[1:] += e * v[:-1]
        vecs[j] = v
        resid[j] = np.linalg.norm(r)
    return EigenResult(res.values, vecs, resid)


def dense_oracle(m) -> np.ndarray:
    """All eigenvalues by a dense Householder/QL solver; test use only."""
    d, e = _parts(m)
    n = len(d)
    if n > ORACLE_MAX_DIM:
        raise ValueError(f"dense_oracle is limited to dimension {ORACLE_MAX_DIM}, got {n}")
    a = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    return np.linalg.eigvalsh(a)
