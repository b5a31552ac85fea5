"""Extreme-eigenvalue solvers used as the oracle layer by every module.

Power iteration with a non-negative start vector finds the Perron value
of non-negative operators; minimum eigenvalues are found by running the
same iteration on c*I - H with a safe shift c.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .ops import OperatorSum, assemble_dense, assemble_sparse


@dataclass
class SpectralResult:
    value: float
    vector: np.ndarray
    iterations: int
    residual: float
    converged: bool


def _power_iteration(mat, dim: int, tol: float, max_iter: int, seed: int):
    """Largest eigenvalue of a symmetric PSD-shifted matrix.

    Start vector is all-ones (overlaps every non-negative Perron vector);
    on stagnation restarts from a seeded random vector.
    """
    rng = np.random.default_rng(seed)
    v = np.ones(dim) / np.sqrt(dim)
    best = None
    lam_prev = None
    stall = 0
    for it in range(1, max_iter + 1):
        w = mat @ v
        lam = float(v @ w)
        resid = float(np.linalg.norm(w - lam * v))
        if best is None or resid < best[2]:
            best = (lam, v.copy(), resid, it)
        if resid <= tol:
            return lam, v, it, resid, True
        norm = np.linalg.norm(w)
        if norm == 0.0:
            # v is in the kernel; the largest eigenvalue may still be 0
            return lam, v, it, resid, True
        if lam_prev is not None and abs(lam - lam_prev) < 1e-15:
            stall += 1
        else:
            stall = 0
        lam_prev = lam
        v = w / norm
        if stall >= 50:
            v = rng.random(dim) + 0.1
            v /= np.linalg.norm(v)
            lam_prev = None
            stall = 0
    lam, v, resid, it = best[0], best[1], best[2], best[3]
    return lam, v, it, resid, False


def extreme_eigenvalue(op: OperatorSum, which: str = "max", tol: float = 1e-10,
                       max_iter: int = 200000, seed: int = 0) -> SpectralResult:
    """Largest or smallest eigenvalue of a local-operator sum."""
    if which not in ("max", "min"):
        raise ValueError("which must be 'max' or 'min'")
    dim = 2**op.n
    mat = assemble_sparse(op)
    c = op.norm_bound() + 1.0
    if which == "max":
        shifted = (mat + c * sp.identity(dim, format="csr")).tocsr()
        lam, v, it, resid, conv = _power_iteration(shifted, dim, tol, max_iter, seed)
        value = lam - c
    else:
        shifted = (c * sp.identity(dim, format="csr") - mat).tocsr()
        lam, v, it, resid, conv = _power_iteration(shifted, dim, tol, max_iter, seed)
        value = c - lam
    v = v / np.linalg.norm(v)
    return SpectralResult(value=float(value), vector=v, iterations=it,
                          residual=resid, converged=conv)


def dense_spectrum(op) -> np.ndarray:
    if isinstance(op, OperatorSum):
        mat = assemble_dense(op)
    else:
        mat = np.asarray(op, dtype=float)
    return np.linalg.eigvalsh(mat)


def eigencount_below(op, threshold: float) -> int:
    """Number of eigenvalues strictly below threshold (dense path)."""
    return int(np.sum(dense_spectrum(op) < threshold))


def spectral_gap(op, merge_tol: float = 1e-8) -> float:
    """Distance from the ground energy to the next distinct eigenvalue.

    Eigenvalues closer than merge_tol are treated as one level, so exact
    ground-space degeneracy reports the gap to the next level up.
    """
    evals = dense_spectrum(op)
    lo = evals[0]
    above = evals[evals > lo + merge_tol]
    if above.size == 0:
        return 0.0
    return float(above[0] - lo)
