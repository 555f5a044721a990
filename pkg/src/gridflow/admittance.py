"""Branch admittance blocks, Y_f / Y_t / Y_bus assembly and bus power injections."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .model import Branch, Case


class ZeroImpedanceError(ValueError):
    pass


@dataclass(frozen=True)
class BranchAdmittance:
    yff: complex
    yft: complex
    ytf: complex
    ytt: complex

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.yff, self.yft], [self.ytf, self.ytt]])


def branch_admittance(branch: Branch) -> BranchAdmittance:
    """2x2 pi-model admittance with an ideal phase-shifting transformer at the from end."""
    if branch.r == 0.0 and branch.x == 0.0:
        raise ZeroImpedanceError(f"branch {branch.from_bus}-{branch.to_bus} has zero impedance")
    tau = branch.tap if branch.tap != 0.0 else 1.0
    if tau < 0:
        raise ValueError(f"negative tap ratio {tau}")
    ys = 1.0 / complex(branch.r, branch.x)
    ytt = ys + 0.5j * branch.b
    rot = np.exp(1j * branch.shift)
    return BranchAdmittance(
        yff=ytt / (tau * tau),
        yft=-ys / (tau * np.conj(rot)),
        ytf=-ys / (tau * rot),
        ytt=ytt,
    )


def branch_vectors(case: Case) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised :func:`branch_admittance` over all branches; zero for open ones."""
    nl = case.n_branch
    r = np.array([br.r for br in case.branches], dtype=float)
    x = np.array([br.x for br in case.branches], dtype=float)
    b = np.array([br.b for br in case.branches], dtype=float)
    tap = np.array([br.tap if br.tap != 0.0 else 1.0 for br in case.branches], dtype=float)
    shift = np.array([br.shift for br in case.branches], dtype=float)
    on = case.branch_on if nl else np.zeros(0, dtype=bool)
    bad = on & (r == 0.0) & (x == 0.0)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        br = case.branches[k]
        raise ZeroImpedanceError(f"branch {k + 1} ({br.from_bus}-{br.to_bus}) has zero impedance")
    z = r + 1j * x
    z[~on] = 1.0
    ys = np.where(on, 1.0 / z, 0.0)
    ytt = ys + 0.5j * np.where(on, b, 0.0)
    rot = np.exp(1j * shift)
    yff = ytt / (tap * tap)
    yft = -ys / (tap * np.conj(rot))
    ytf = -ys / (tap * rot)
    return yff, yft, ytf, ytt


def assemble(rows, cols, vals, shape) -> sp.csr_matrix:
    """Triplet scatter with duplicate summing; exact zeros are not stored.

    Duplicates are added in input order (stable sort), which keeps the result
    independent of how the sparse library orders its own reduction.
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals)
    if rows.size == 0:
        return sp.csr_matrix(shape, dtype=vals.dtype if vals.size else complex)
    order = np.lexsort((cols, rows))
    r, c, v = rows[order], cols[order], vals[order]
    start = np.flatnonzero(np.r_[True, (r[1:] != r[:-1]) | (c[1:] != c[:-1])])
    data = np.add.reduceat(v, start)
    r, c = r[start], c[start]
    keep = data != 0
    r, c, data = r[keep], c[keep], data[keep]
    indptr = np.zeros(shape[0] + 1, dtype=np.int64)
    np.add.at(indptr, r + 1, 1)
    return sp.csr_matrix((data, c, np.cumsum(indptr)), shape=shape)


class SystemMatrices(NamedTuple):
    ybus: sp.csr_matrix
    yf: sp.csr_matrix
    yt: sp.csr_matrix


def build_system_matrices(case: Case) -> SystemMatrices:
    nb, nl = case.n_bus, case.n_branch
    yff, yft, ytf, ytt = branch_vectors(case)
    on = np.flatnonzero(case.branch_on) if nl else np.zeros(0, dtype=np.int64)
    f, t = case.f_bus[on] if nl else on, case.t_bus[on] if nl else on
    yff, yft, ytf, ytt = yff[on], yft[on], ytf[on], ytt[on]

    rows = np.concatenate([on, on])
    yf = assemble(rows, np.concatenate([f, t]), np.concatenate([yff, yft]), (nl, nb))
    yt = assemble(rows, np.concatenate([f, t]), np.concatenate([ytf, ytt]), (nl, nb))

    ysh = case.gs + 1j * case.bs
    diag = np.arange(nb)
    # one branch's four entries stay adjacent, so Y[i,j] and Y[j,i] are summed in
    # the same branch order and stay bitwise symmetric without phase shifts
    ybus = assemble(
        np.concatenate([np.column_stack([f, f, t, t]).ravel(), diag]),
        np.concatenate([np.column_stack([f, t, f, t]).ravel(), diag]),
        np.concatenate([np.column_stack([yff, yft, ytf, ytt]).ravel(), ysh]),
        (nb, nb),
    )
    return SystemMatrices(ybus, yf, yt)


def bus_injections(ybus, v) -> np.ndarray:
    """Complex power injected into the network at each bus, ``V * conj(Ybus V)``."""
    v = np.asarray(v, dtype=complex)
    if ybus.shape[1] != v.shape[0]:
        raise ValueError(f"dimension mismatch: Ybus {ybus.shape} vs V {v.shape}")
    return v * np.conj(ybus @ v)


def incidence_matrix(case: Case, in_service_only: bool = True) -> sp.csr_matrix:
    """Branch-bus incidence: +1 at the from bus, -1 at the to bus."""
    nl, nb = case.n_branch, case.n_bus
    keep = case.branch_on if in_service_only else np.ones(nl, dtype=bool)
    rows = np.flatnonzero(keep)
    return sp.csr_matrix(
        (np.r_[np.ones(len(rows)), -np.ones(len(rows))],
         (np.r_[rows, rows], np.r_[case.f_bus[rows], case.t_bus[rows]])),
        shape=(nl, nb),
    )


def write_matrix_market(matrix, path_or_file, comment="") -> None:
    from scipy.io import mmwrite

    mmwrite(path_or_file, sp.coo_matrix(matrix), comment=comment, field="complex")
