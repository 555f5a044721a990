import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

PIVOT_RTOL = 1e-12


class SingularMatrixError(np.linalg.LinAlgError):
    pass


def factorize(a, what="matrix"):
    """Sparse LU (SuperLU, partial pivoting) with a relative pivot-size check.

    A pivot smaller than ``PIVOT_RTOL`` times the largest magnitude in its
    column is reported as singular.
    """
    a = sp.csc_matrix(a, dtype=float)
    n = a.shape[0]
    if n == 0:
        return None
    try:
        lu = splu(a, permc_spec="COLAMD", diag_pivot_thresh=1.0)
    except RuntimeError as exc:
        raise SingularMatrixError(f"singular {what}: {exc}") from None
    colmax = abs(a).max(axis=0).toarray().ravel()
    pivots = np.abs(lu.U.diagonal())
    ref = colmax[np.argsort(lu.perm_c)]
    if np.any(pivots < PIVOT_RTOL * np.maximum(ref, np.finfo(float).tiny)) or np.any(ref == 0):
        raise SingularMatrixError(f"singular {what}: pivot below {PIVOT_RTOL:g} of column max")
    return lu


def solve(a, b, what="matrix"):
    lu = factorize(a, what)
    if lu is None:
        return np.zeros(0)
    return lu.solve(np.asarray(b, dtype=float))
