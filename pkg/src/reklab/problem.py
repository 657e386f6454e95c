"""Problem instances ``b = A x* + z`` with ``x*`` in range(A^T) and ``z`` in null(A^T)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import SvdFactorization, as_matrix, as_vector, frobenius_norm, project_row_space, svd


class ProblemInvariantError(ValueError):
    """A problem instance violates ``b = A x* + z`` or its subspace conditions."""


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    a: np.ndarray
    b: np.ndarray
    x_star: np.ndarray
    z: np.ndarray
    svd: SvdFactorization

    @property
    def m(self) -> int:
        return self.a.shape[0]

    @property
    def n(self) -> int:
        return self.a.shape[1]

    @property
    def fro2(self) -> float:
        """Squared Frobenius norm of A."""
        return frobenius_norm(self.a) ** 2

    @property
    def rank(self) -> int:
        return self.svd.rank

    @property
    def consistent(self) -> bool:
        return not np.any(self.z)

    @property
    def residual(self) -> np.ndarray:
        """``b - A x*``, equal to ``z`` for a valid instance."""
        return self.b - self.a @ self.x_star


def make_problem(a, x_star, z, f: SvdFactorization | None = None, check: bool = True) -> ProblemInstance:
    """Assemble an instance, building ``b = A x* + z`` (never the reverse)."""
    a = as_matrix(a)
    m, n = a.shape
    x_star = as_vector(x_star, n)
    z = as_vector(z, m)
    f = svd(a) if f is None else f
    problem = ProblemInstance(a=a, b=a @ x_star + z, x_star=x_star, z=z, svd=f)
    if check:
        check_problem(problem)
    return problem


def load_arrays(a, b, x_star, z, check: bool = True) -> ProblemInstance:
    """Build an instance from stored arrays, keeping ``b`` as given."""
    a = as_matrix(a)
    m, n = a.shape
    problem = ProblemInstance(
        a=a, b=as_vector(b, m), x_star=as_vector(x_star, n), z=as_vector(z, m), svd=svd(a)
    )
    if check:
        check_problem(problem)
    return problem


def check_problem(p: ProblemInstance) -> None:
    """Raise :class:`ProblemInvariantError` listing every violated invariant."""
    fro = frobenius_norm(p.a)
    failures = []

    mismatch = np.max(np.abs(p.b - (p.a @ p.x_star + p.z)))
    scale = max(1.0, fro * np.linalg.norm(p.x_star) + np.linalg.norm(p.z))
    if mismatch > 1e-10 * scale:
        failures.append(f"b != A x* + z (max deviation {mismatch:.3e})")

    at_z = np.max(np.abs(p.a.T @ p.z)) if p.m else 0.0
    if at_z > 1e-10 * fro * np.linalg.norm(p.z):
        failures.append(f"z not in null(A^T) (||A^T z||_inf = {at_z:.3e})")

    off_range = np.linalg.norm(p.x_star - project_row_space(p.svd, p.x_star))
    if off_range > 1e-8 * max(1.0, np.linalg.norm(p.x_star)):
        failures.append(f"x* not in range(A^T) (distance {off_range:.3e})")

    if failures:
        raise ProblemInvariantError("; ".join(failures))
