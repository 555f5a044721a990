"""Hot inner loops, each in a numba flavour and a pure-numpy flavour.

The public names at the bottom are bound by :func:`gridflow._accel.pick`; both
flavours stay importable so tests and ``benchmarks/`` can compare them.
"""

import numpy as np
import scipy.sparse as sp

from ._accel import njit, pick

SLACK, PV, PQ = 0, 1, 2


# ---------------------------------------------------------------------------
# polar power-flow partial derivatives over the Ybus sparsity pattern


@njit
def _polar_partials_nb(indptr, indices, g, b, vm, va):
    n = vm.shape[0]
    nnz = indices.shape[0]
    p = np.zeros(n)
    q = np.zeros(n)
    dp_dth = np.zeros(nnz)
    dp_dv = np.zeros(nnz)
    dq_dth = np.zeros(nnz)
    dq_dv = np.zeros(nnz)
    for i in range(n):
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            th = va[i] - va[j]
            c = np.cos(th)
            s = np.sin(th)
            gc_bs = g[k] * c + b[k] * s
            gs_bc = g[k] * s - b[k] * c
            p[i] += vm[i] * vm[j] * gc_bs
            q[i] += vm[i] * vm[j] * gs_bc
            if i != j:
                dp_dth[k] = vm[i] * vm[j] * gs_bc
                dp_dv[k] = vm[i] * gc_bs
                dq_dth[k] = -vm[i] * vm[j] * gc_bs
                dq_dv[k] = vm[i] * gs_bc
    for i in range(n):
        for k in range(indptr[i], indptr[i + 1]):
            if indices[k] == i:
                v2 = vm[i] * vm[i]
                dp_dth[k] = -q[i] - b[k] * v2
                dp_dv[k] = p[i] / vm[i] + g[k] * vm[i]
                dq_dth[k] = p[i] - g[k] * v2
                dq_dv[k] = q[i] / vm[i] - b[k] * vm[i]
    return p, q, dp_dth, dp_dv, dq_dth, dq_dv


def _with_diagonal(ybus):
    y = sp.csr_matrix(ybus, dtype=complex, copy=True)
    if np.count_nonzero(y.diagonal()) < y.shape[0] or y.nnz == 0:
        y = (y + sp.eye(y.shape[0], dtype=complex, format="csr")).tocsr()
        y.sort_indices()
        # put the real diagonal back; structure now holds every (i, i)
        y.data[_diag_positions(y)] -= 1.0
    y.sort_indices()
    return y


def _diag_positions(y):
    rows = np.repeat(np.arange(y.shape[0]), np.diff(y.indptr))
    return np.flatnonzero(rows == y.indices)


def polar_partials_numba(ybus, vm, va):
    """Return ``(P, Q, dP/dVa, dP/dVm, dQ/dVa, dQ/dVm)`` with sparse partials."""
    y = _with_diagonal(ybus)
    p, q, *parts = _polar_partials_nb(
        y.indptr.astype(np.int64), y.indices.astype(np.int64),
        np.ascontiguousarray(y.data.real), np.ascontiguousarray(y.data.imag),
        np.asarray(vm, dtype=float), np.asarray(va, dtype=float),
    )
    mats = [sp.csr_matrix((d, y.indices, y.indptr), shape=y.shape) for d in parts]
    return (p, q, *mats)


def polar_partials_numpy(ybus, vm, va):
    vm = np.asarray(vm, dtype=float)
    va = np.asarray(va, dtype=float)
    v = vm * np.exp(1j * va)
    ibus = ybus @ v
    s = v * np.conj(ibus)
    dv = sp.diags(v)
    di = sp.diags(ibus)
    dvn = sp.diags(v / vm)
    ds_dvm = dv @ np.conj(ybus @ dvn) + np.conj(di) @ dvn
    ds_dva = 1j * dv @ np.conj(di - ybus @ dv)
    ds_dvm, ds_dva = sp.csr_matrix(ds_dvm), sp.csr_matrix(ds_dva)
    return (s.real, s.imag, sp.csr_matrix(ds_dva.real), sp.csr_matrix(ds_dvm.real),
            sp.csr_matrix(ds_dva.imag), sp.csr_matrix(ds_dvm.imag))


# ---------------------------------------------------------------------------
# Gauss-Seidel sweep


@njit
def _gs_sweep_nb(indptr, indices, data, v, sspec, kind, vset):
    n = v.shape[0]
    for i in range(n):
        if kind[i] == SLACK:
            continue
        acc = 0j
        yii = 0j
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            if j == i:
                yii += data[k]
            else:
                acc += data[k] * v[j]
        s = sspec[i]
        if kind[i] == PV:
            qi = (v[i] * np.conj(acc + yii * v[i])).imag
            s = s.real + 1j * qi
        vi = (np.conj(s / v[i]) - acc) / yii
        if kind[i] == PV:
            vi = vset[i] * vi / abs(vi)
        v[i] = vi


def gs_sweep_numba(ybus, v, sspec, kind, vset):
    _gs_sweep_nb(ybus.indptr.astype(np.int64), ybus.indices.astype(np.int64),
                 np.ascontiguousarray(ybus.data, dtype=complex), v, sspec, kind, vset)


def gs_sweep_numpy(ybus, v, sspec, kind, vset):
    # row slices are numpy, the bus order is inherently sequential
    indptr, indices, data = ybus.indptr, ybus.indices, ybus.data
    for i in range(v.shape[0]):
        if kind[i] == SLACK:
            continue
        cols = indices[indptr[i]:indptr[i + 1]]
        vals = data[indptr[i]:indptr[i + 1]]
        is_diag = cols == i
        yii = vals[is_diag].sum()
        acc = vals[~is_diag] @ v[cols[~is_diag]]
        s = sspec[i]
        if kind[i] == PV:
            s = s.real + 1j * (v[i] * np.conj(acc + yii * v[i])).imag
        vi = (np.conj(s / v[i]) - acc) / yii
        if kind[i] == PV:
            vi = vset[i] * vi / abs(vi)
        v[i] = vi


# ---------------------------------------------------------------------------
# product-form basis updates: apply the first k eta columns (rows[j], etas[j])


@njit
def _ftran_nb(w, rows, etas, k):
    m = w.shape[0]
    for j in range(k):
        r = rows[j]
        wr = w[r] / etas[j, r]
        if wr != 0.0:
            for i in range(m):
                w[i] -= etas[j, i] * wr
        w[r] = wr


@njit
def _btran_nb(u, rows, etas, k):
    m = u.shape[0]
    for j in range(k - 1, -1, -1):
        r = rows[j]
        s = 0.0
        for i in range(m):
            s += u[i] * etas[j, i]
        s -= u[r] * etas[j, r]
        u[r] = (u[r] - s) / etas[j, r]


def eta_ftran_numba(w, rows, etas, k):
    """In place ``w <- E_k ... E_1 w``."""
    _ftran_nb(w, rows, etas, k)


def eta_btran_numba(u, rows, etas, k):
    """In place ``u' <- u' E_k ... E_1``."""
    _btran_nb(u, rows, etas, k)


def eta_ftran_numpy(w, rows, etas, k):
    for j in range(k):
        r = rows[j]
        wr = w[r] / etas[j, r]
        w -= etas[j] * wr
        w[r] = wr


def eta_btran_numpy(u, rows, etas, k):
    for j in range(k - 1, -1, -1):
        r = rows[j]
        s = u @ etas[j] - u[r] * etas[j, r]
        u[r] = (u[r] - s) / etas[j, r]


# ---------------------------------------------------------------------------
# Markov chain path sampling by inverse CDF


@njit
def _markov_paths_nb(init_cdf, step_cdf, u):
    count, horizon = u.shape
    n = init_cdf.shape[0]
    out = np.empty((count, horizon), dtype=np.int64)
    for k in range(count):
        s = 0
        while s < n - 1 and u[k, 0] >= init_cdf[s]:
            s += 1
        out[k, 0] = s
        for t in range(1, horizon):
            row = step_cdf[t - 1, s]
            s = 0
            while s < n - 1 and u[k, t] >= row[s]:
                s += 1
            out[k, t] = s
    return out


def markov_paths_numba(init_cdf, step_cdf, u):
    return _markov_paths_nb(np.ascontiguousarray(init_cdf, dtype=float),
                            np.ascontiguousarray(step_cdf, dtype=float),
                            np.ascontiguousarray(u, dtype=float))


def markov_paths_numpy(init_cdf, step_cdf, u):
    count, horizon = u.shape
    n = init_cdf.shape[0]
    out = np.empty((count, horizon), dtype=np.int64)
    out[:, 0] = np.minimum((u[:, 0:1] >= init_cdf[None, :]).sum(axis=1), n - 1)
    for t in range(1, horizon):
        rows = step_cdf[t - 1][out[:, t - 1]]
        out[:, t] = np.minimum((u[:, t:t + 1] >= rows).sum(axis=1), n - 1)
    return out


polar_partials = pick(polar_partials_numba, polar_partials_numpy)
gs_sweep = pick(gs_sweep_numba, gs_sweep_numpy)
eta_ftran = pick(eta_ftran_numba, eta_ftran_numpy)
eta_btran = pick(eta_btran_numba, eta_btran_numpy)
markov_paths = pick(markov_paths_numba, markov_paths_numpy)
