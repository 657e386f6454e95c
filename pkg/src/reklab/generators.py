"""Problem generators: the near-rank-deficient test matrix and controlled spectra."""

from __future__ import annotations

import numpy as np

from .linalg import project_null_at, project_row_space, svd
from .problem import ProblemInstance, make_problem
from .sampling import RngStream

PAPER_DEFAULTS = dict(n=1000, shift=100.0, perturb=0.01, zero_rows=100)
DESK_DEFAULTS = dict(n=100, shift=10.0, perturb=0.01, zero_rows=10)


def _finish(a: np.ndarray, f, inconsistent: bool, rng: RngStream) -> ProblemInstance:
    """Draw x* in range(A^T) and, if requested, a unit z in null(A^T); build b."""
    m, n = a.shape
    x_star = project_row_space(f, rng.normal(n))
    z = np.zeros(m)
    if inconsistent:
        if f.rank >= m:
            raise ValueError("inconsistent system requested but A has full row rank (null(A^T) = {0})")
        z = project_null_at(f, rng.normal(m))
        z /= np.linalg.norm(z)
    return make_problem(a, x_star, z, f)


def gen_paper_problem(
    n: int = 1000,
    shift: float = 100.0,
    perturb: float = 0.01,
    zero_rows: int = 100,
    rng: RngStream | None = None,
) -> ProblemInstance:
    """Gaussian ``n x n`` matrix plus ``shift * I``, last row replaced by the
    previous row plus ``perturb`` in every entry, rows scaled to unit norm,
    and ``zero_rows`` zero rows appended.

    The system is made inconsistent whenever null(A^T) is nontrivial.
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    if zero_rows < 0:
        raise ValueError("zero_rows must be >= 0")
    rng = RngStream(0) if rng is None else rng
    a1 = rng.normal((n, n)) + shift * np.eye(n)
    a1[n - 1] = a1[n - 2] + perturb
    a1 /= np.linalg.norm(a1, axis=1)[:, None]
    a = np.vstack([a1, np.zeros((zero_rows, n))])
    f = svd(a)
    return _finish(a, f, inconsistent=f.rank < a.shape[0], rng=rng)


def haar_orthogonal(dim: int, rng: RngStream) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal((dim, dim)))
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def gen_synthetic(
    m: int,
    n: int,
    spectrum,
    inconsistent: bool = False,
    rng: RngStream | None = None,
) -> ProblemInstance:
    """``A = U diag(spectrum) V^T`` with Haar-random orthogonal ``U``, ``V``."""
    spectrum = np.asarray(spectrum, dtype=np.float64).reshape(-1)
    if m < 1 or n < 1:
        raise ValueError("m and n must be >= 1")
    if spectrum.size > min(m, n):
        raise ValueError(f"spectrum has {spectrum.size} values but min(m, n) = {min(m, n)}")
    if np.any(spectrum < 0) or np.any(np.diff(spectrum) > 0):
        raise ValueError("spectrum must be nonnegative and nonincreasing")
    rng = RngStream(0) if rng is None else rng
    u = haar_orthogonal(m, rng)
    v = haar_orthogonal(n, rng)
    p = spectrum.size
    a = (u[:, :p] * spectrum) @ v[:, :p].T
    return _finish(a, svd(a), inconsistent, rng)
