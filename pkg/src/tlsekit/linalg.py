"""Dense matrix kernels shared by the rest of the package.

Thin wrappers over LAPACK (via numpy/scipy) plus the Kronecker/vec utilities
and the pseudoinverse helpers. No problem semantics live here; everything
operates on plain float arrays and raises tlsekit errors on contract
violations.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InputError, NumericalError, RankError, ResourceError

#: Default cap on explicitly formed matrices, in entries.
DEFAULT_MEM_CAP = 4_000_000

#: Relative tolerance on triangular diagonals when deciding rank.
RANK_TOL = 1e-12


def mem_cap() -> int:
    """Entry-count guard for explicit Kronecker-sized matrices.

    The TLSE_MEM_CAP environment variable overrides the default.
    """
    raw = os.environ.get("TLSE_MEM_CAP")
    if raw is None:
        return DEFAULT_MEM_CAP
    try:
        cap = int(float(raw))
    except ValueError as exc:
        raise InputError(f"TLSE_MEM_CAP is not a number: {raw!r}") from exc
    if cap <= 0:
        raise InputError(f"TLSE_MEM_CAP must be positive, got {cap}")
    return cap


def check_guard(entries: int, what: str = "matrix") -> None:
    cap = mem_cap()
    if entries > cap:
        raise ResourceError(
            f"{what} would hold {entries} entries, above the cap of {cap}; "
            "use the matrix-free path or raise TLSE_MEM_CAP"
        )


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Validate and convert to a finite 2-d float64 array."""
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2:
        raise InputError(f"{name} must be 2-d, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    return arr


def as_vector(v, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.size and not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class SvdResult:
    """SVD factors M = u @ diag(s) @ v.T with s nonincreasing.

    v holds right singular vectors as columns (not transposed).
    """

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


def thin_qr(m) -> tuple[np.ndarray, np.ndarray]:
    """Economy QR of a tall (rows >= cols) matrix."""
    arr = as_matrix(m)
    if arr.shape[0] < arr.shape[1]:
        raise InputError(
            f"thin_qr needs rows >= cols, got shape {arr.shape}"
        )
    q, r = np.linalg.qr(arr, mode="reduced")
    return q, r


def full_qr(m) -> tuple[np.ndarray, np.ndarray]:
    """Full QR: q is square, so its trailing columns span the left null space."""
    arr = as_matrix(m)
    if arr.shape[0] < arr.shape[1]:
        raise InputError(
            f"full_qr needs rows >= cols, got shape {arr.shape}"
        )
    q, r = np.linalg.qr(arr, mode="complete")
    return q, r


def svd(m, full: bool = False) -> SvdResult:
    """SVD wrapper returning an SvdResult; raises NumericalError on breakdown."""
    arr = as_matrix(m)
    try:
        u, s, vt = np.linalg.svd(arr, full_matrices=full)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    return SvdResult(u=u, s=s, v=vt.T)


def singular_values(m) -> np.ndarray:
    arr = as_matrix(m)
    if 0 in arr.shape:
        return np.zeros(0)
    try:
        return np.linalg.svd(arr, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc


def spectral_norm(m) -> float:
    """Largest singular value; 0.0 for an empty matrix."""
    s = singular_values(np.atleast_2d(np.asarray(m, dtype=float)))
    return float(s[0]) if s.size else 0.0


def kron(a, b, cap: int | None = None) -> np.ndarray:
    """np.kron behind the entry-count guard."""
    aa = as_matrix(a, "kron left factor")
    bb = as_matrix(b, "kron right factor")
    entries = aa.shape[0] * bb.shape[0] * aa.shape[1] * bb.shape[1]
    limit = mem_cap() if cap is None else cap
    if entries > limit:
        raise ResourceError(
            f"kron result would hold {entries} entries, above the cap of "
            f"{limit}; use the matrix-free path or raise TLSE_MEM_CAP"
        )
    return np.kron(aa, bb)


def vec(m) -> np.ndarray:
    """Column-stacking vec operator."""
    return as_matrix(m, "vec argument").reshape(-1, order="F")


def pinv_from_qr(c) -> np.ndarray:
    """Pseudoinverse of a full-row-rank p x n matrix via QR of its transpose.

    Returns the n x p matrix q1 @ inv(r1).T. Rank deficiency (a diagonal of
    r1 below RANK_TOL relative to the largest) raises RankError naming the
    offending diagonal.
    """
    arr = as_matrix(c)
    p, n = arr.shape
    if p > n:
        raise InputError(f"expected a wide matrix (p <= n), got {arr.shape}")
    if p == 0:
        return np.zeros((n, 0))
    q, r = thin_qr(arr.T)
    diag = np.abs(np.diag(r))
    scale = diag.max(initial=0.0)
    if scale == 0.0:
        raise RankError("matrix is zero; no full-row-rank pseudoinverse")
    bad = np.nonzero(diag <= RANK_TOL * scale)[0]
    if bad.size:
        raise RankError(
            f"rank deficient: triangular diagonal {bad[0]} is "
            f"{diag[bad[0]]:.3e} against scale {scale:.3e}"
        )
    # q,r are thin here, so solve r.T y = I and map back through q
    inv_rt = scipy.linalg.solve_triangular(r, np.eye(p), trans="T", lower=False)
    return q @ inv_rt


def greville_augment(c_pinv, x_feas) -> np.ndarray:
    """Pseudoinverse of [C d] from the pseudoinverse of C.

    Column-append update: given c_pinv (n x p) and x_feas = c_pinv @ d, the
    augmented pseudoinverse is

        [[I - x x.T / w] @ c_pinv]         w = 1 + ||x||^2
        [     x.T @ c_pinv / w   ]

    which is exact whenever C has full row rank (d is then in range(C)).
    """
    pinv = as_matrix(c_pinv, "c_pinv")
    x = as_vector(x_feas, "x_feas")
    n, p = pinv.shape
    if x.shape[0] != n:
        raise InputError(
            f"x_feas has length {x.shape[0]}, expected {n} to match c_pinv"
        )
    w = 1.0 + float(x @ x)
    top = pinv - np.outer(x, x @ pinv) / w
    bottom = (x @ pinv) / w
    return np.vstack([top, bottom[None, :]])
