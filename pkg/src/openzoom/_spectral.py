"""Leading eigenpairs of non-negative (sub)stochastic matrices by power iteration."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .errors import ConvergenceError

RESIDUAL_TOL = 1e-12


class ReducibilityWarning(UserWarning):
    """More than one irreducible class carries spectral mass."""


@dataclass
class LeadingEigen:
    rho: float
    right: np.ndarray
    left: np.ndarray
    residual: float
    iterations: int
    block: np.ndarray
    block_radii: list
    reducible: bool


def _power(B, tol: float, max_iter: int):
    """Perron root and vector of an irreducible non-negative block ``B``.

    Plain iteration first; a periodic block never settles, so after a
    stall the iteration moves to ``B + rho_hat I`` which is primitive.
    """
    n = B.shape[0]
    v = np.full(n, 1.0 / n)
    shift = 0.0
    rho = 0.0
    residual = np.inf
    it = 0
    stall_at = min(max_iter // 4, 2000)
    for it in range(1, max_iter + 1):
        w = B @ v + shift * v
        norm = np.abs(w).max()
        if norm == 0.0:
            return 0.0, v, 0.0, it
        w = w / norm
        Bw = B @ w
        rho_new = float(np.dot(Bw, w) / np.dot(w, w))
        residual = float(np.abs(Bw - rho_new * w).max() / max(abs(rho_new), 1e-300))
        v = w
        rho = rho_new
        if residual <= tol:
            break
        if it == stall_at and shift == 0.0:
            shift = rho
    else:
        raise ConvergenceError(f"power iteration stalled at residual {residual:.3g}", residual)
    return rho, np.abs(v), residual, it


def leading_eigen(L, tol: float = RESIDUAL_TOL, max_iter: int = 200_000, warn: bool = True) -> LeadingEigen:
    """Spectral radius with right/left Perron vectors of a non-negative matrix.

    Vectors are supported on the dominant irreducible class and normalised
    so that ``sum(right * left) == 1``.  When several classes exist the
    radii of all of them are returned and a :class:`ReducibilityWarning`
    is emitted.
    """
    L = sparse.csr_matrix(L)
    n = L.shape[0]
    if n == 0 or L.nnz == 0:
        z = np.zeros(n)
        return LeadingEigen(0.0, z, z, 0.0, 0, np.arange(0), [], False)
    ncomp, labels = connected_components(L, directed=True, connection="strong")
    diag = L.diagonal()
    radii = []
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        if idx.size == 1 and diag[idx[0]] == 0.0:
            continue
        B = L[idx][:, idx]
        rho, _, _, _ = _power(B, tol, max_iter)
        if rho > 0:
            radii.append((rho, idx))
    if not radii:
        z = np.zeros(n)
        return LeadingEigen(0.0, z, z, 0.0, 0, np.arange(0), [], False)
    radii.sort(key=lambda r: -r[0])
    reducible = len(radii) > 1
    if reducible and warn:
        warnings.warn(
            f"{len(radii)} irreducible classes, radii {[round(r, 12) for r, _ in radii]}",
            ReducibilityWarning,
            stacklevel=2,
        )
    rho, idx = radii[0]
    B = L[idx][:, idx]
    rho_r, h, res_r, it_r = _power(B, tol, max_iter)
    rho_l, nu, res_l, it_l = _power(B.T.tocsr(), tol, max_iter)
    right = np.zeros(n)
    left = np.zeros(n)
    right[idx] = h
    left[idx] = nu
    s = float(np.dot(right, left))
    right /= s
    return LeadingEigen(
        rho=0.5 * (rho_r + rho_l),
        right=right,
        left=left,
        residual=max(res_r, res_l),
        iterations=it_r + it_l,
        block=idx,
        block_radii=[float(r) for r, _ in radii],
        reducible=reducible,
    )
