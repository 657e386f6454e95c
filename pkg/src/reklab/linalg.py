"""Dense real linear algebra: validation, Frobenius norm, one-sided Jacobi SVD,
minimum-norm least squares and projection onto null(A^T).

Matrices are plain ``float64`` numpy arrays of shape ``(m, n)``; vectors are
1-D ``float64`` arrays.  :func:`as_matrix` / :func:`as_vector` enforce the
finiteness invariants at module boundaries.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

MACHINE_EPS = 2.0**-52
JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 60


class NonFiniteError(ValueError):
    """Raised when a matrix or vector contains NaN or Inf."""


def as_matrix(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64, ndmin=2, copy=True)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"matrix must have m, n >= 1, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteError("matrix has non-finite entries")
    return a


def as_vector(v, length: int | None = None) -> np.ndarray:
    v = np.array(v, dtype=np.float64, copy=True).reshape(-1)
    if length is not None and v.shape[0] != length:
        raise ValueError(f"expected vector of length {length}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteError("vector has non-finite entries")
    return v


def frobenius_norm(a) -> float:
    a = np.asarray(a, dtype=np.float64)
    return float(np.sqrt(np.sum(a * a)))


@dataclass(frozen=True, eq=False)
class SvdFactorization:
    """Full SVD ``A = U diag(sigma) V^T``.

    ``u`` is m x m, ``v`` is n x n, ``sigma`` has length min(m, n) and is
    nonincreasing.  ``rank`` counts ``sigma > rank_tol``.  Columns of ``v``
    have their largest-magnitude entry nonnegative.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    rank: int
    rank_tol: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape[0], self.v.shape[0]

    @property
    def sigma_r(self) -> float:
        """Smallest nonzero singular value (0.0 for the zero matrix)."""
        return float(self.sigma[self.rank - 1]) if self.rank > 0 else 0.0

    def right_vector(self, ell: int) -> np.ndarray:
        """Right singular vector v_ell, 1-based as in the math."""
        return self.v[:, ell - 1]

    def left_vector(self, ell: int) -> np.ndarray:
        return self.u[:, ell - 1]

    def range_basis(self) -> np.ndarray:
        """Orthonormal basis of range(A), shape (m, r)."""
        return self.u[:, : self.rank]

    def row_space_basis(self) -> np.ndarray:
        """Orthonormal basis of range(A^T), shape (n, r)."""
        return self.v[:, : self.rank]

    def null_basis(self) -> np.ndarray:
        """Orthonormal basis of null(A), shape (n, n - r)."""
        return self.v[:, self.rank :]

    def reconstruct(self) -> np.ndarray:
        p = self.sigma.shape[0]
        return (self.u[:, :p] * self.sigma) @ self.v[:, :p].T


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Disjoint (p, q) pairings covering every column pair once per sweep."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        p, q = [], []
        for k in range(size // 2):
            a, b = players[k], players[size - 1 - k]
            if a >= 0 and b >= 0:
                p.append(min(a, b))
                q.append(max(a, b))
        rounds.append((np.array(p, dtype=np.intp), np.array(q, dtype=np.intp)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _hestenes(gt: np.ndarray, tol: float, max_sweeps: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Orthogonalize the rows of ``gt`` (the columns of the tall matrix) in place.

    Works on the transpose so that gathering a column pair touches contiguous
    memory.  Returns ``(gt, vt, sweeps)`` where ``vt`` accumulates the rotations.
    """
    n = gt.shape[0]
    vt = np.eye(n)
    if n == 1:
        return gt, vt, 0
    schedule = _round_robin(n)
    # columns below eps * ||A||_F are rounding noise (always under the rank
    # cutoff); rotating them against others only chases that noise
    negligible = MACHINE_EPS**2 * float(np.einsum("ij,ij->", gt, gt))
    for sweep in range(1, max_sweeps + 1):
        rotated = 0
        for p, q in schedule:
            gp, gq = gt[p], gt[q]
            alpha = np.einsum("ij,ij->i", gp, gp)
            beta = np.einsum("ij,ij->i", gq, gq)
            gamma = np.einsum("ij,ij->i", gp, gq)
            active = (
                (gamma != 0.0)
                & (np.abs(gamma) > tol * np.sqrt(alpha * beta))
                & (np.minimum(alpha, beta) > negligible)
            )
            if not active.any():
                continue
            if not active.all():
                p, q = p[active], q[active]
                gp, gq = gp[active], gq[active]
                alpha, beta, gamma = alpha[active], beta[active], gamma[active]
            zeta = (beta - alpha) / (2.0 * gamma)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
            c = (1.0 / np.sqrt(1.0 + t * t))[:, None]
            s = c * t[:, None]
            gt[p] = c * gp - s * gq
            gt[q] = s * gp + c * gq
            vp, vq = vt[p], vt[q]
            vt[p] = c * vp - s * vq
            vt[q] = s * vp + c * vq
            rotated += p.size
        if rotated == 0:
            return gt, vt, sweep
    warnings.warn(f"Jacobi SVD did not converge in {max_sweeps} sweeps", RuntimeWarning)
    return gt, vt, max_sweeps


def _complete_basis(q: np.ndarray, dim: int) -> np.ndarray:
    """Extend orthonormal columns ``q`` (dim x k) to a dim x dim orthogonal matrix."""
    k = q.shape[1]
    if k == dim:
        return q
    if k == 0:
        return np.eye(dim)
    full, _ = np.linalg.qr(q, mode="complete")
    return np.hstack([q, full[:, k:]])


def svd(a, rank_tol_factor: float = 1.0) -> SvdFactorization:
    """Full SVD by one-sided (Hestenes) Jacobi on the taller orientation.

    Column pairs are swept in round-robin order so each round applies up to
    n/2 disjoint rotations at once.  A pair is rotated while
    ``|g_p . g_q| > tol * ||g_p|| ||g_q||`` with ``tol = max(1e-14, m * eps)``.
    """
    a = as_matrix(a)
    m, n = a.shape
    transposed = m < n
    gt = np.ascontiguousarray(a if transposed else a.T)
    # dot products of length-m columns carry ~m*eps relative rounding error
    tol = max(JACOBI_TOL, gt.shape[1] * MACHINE_EPS)
    gt, wt, sweeps = _hestenes(gt, tol, JACOBI_MAX_SWEEPS)
    logger.debug("jacobi svd %dx%d converged in %d sweeps", m, n, sweeps)

    norms = np.sqrt(np.einsum("ij,ij->i", gt, gt))
    order = np.argsort(-norms, kind="stable")
    sigma = norms[order]
    g, w = gt[order].T, wt[order].T

    rank_tol = rank_tol_factor * (sigma[0] if sigma.size else 0.0) * max(m, n) * MACHINE_EPS
    rank = int(np.count_nonzero(sigma > rank_tol))
    tall_left = _complete_basis(g[:, :rank] / sigma[:rank], g.shape[0])

    if transposed:
        u, v = w, tall_left
    else:
        u, v = tall_left, w

    p = sigma.shape[0]
    pivots = np.argmax(np.abs(v), axis=0)
    flip = v[pivots, np.arange(n)] < 0
    v = v * np.where(flip, -1.0, 1.0)
    u = u.copy()
    u[:, :p] *= np.where(flip[:p], -1.0, 1.0)
    return SvdFactorization(u=u, sigma=sigma, v=v, rank=rank, rank_tol=float(rank_tol))


def min_norm_lsq(f: SvdFactorization, b) -> np.ndarray:
    """x* = A^+ b = sum_{l<=r} (u_l . b / sigma_l) v_l."""
    m, n = f.shape
    b = as_vector(b, m)
    r = f.rank
    if r == 0:
        return np.zeros(n)
    coeffs = (f.u[:, :r].T @ b) / f.sigma[:r]
    return f.v[:, :r] @ coeffs


def project_null_at(f: SvdFactorization, y) -> np.ndarray:
    """Component of ``y`` orthogonal to range(A), i.e. its part in null(A^T)."""
    m, _ = f.shape
    y = as_vector(y, m)
    basis = f.range_basis()
    return y - basis @ (basis.T @ y)


def project_row_space(f: SvdFactorization, x) -> np.ndarray:
    """Orthogonal projection of ``x`` onto range(A^T)."""
    _, n = f.shape
    x = as_vector(x, n)
    basis = f.row_space_basis()
    return basis @ (basis.T @ x)


def project_range(f: SvdFactorization, y) -> np.ndarray:
    """Orthogonal projection of ``y`` onto range(A)."""
    m, _ = f.shape
    y = as_vector(y, m)
    basis = f.range_basis()
    return basis @ (basis.T @ y)
