"""Closed-form expectations and bounds for REK.

With ``rho_l = 1 - sigma_l^2 / ||A||_F^2``:

* z-chain:  ``E<z_k - (b - A x*), A v_l> = rho_l^k <z_0 - (b - A x*), A v_l>``
* x-chain:  ``E<x_k - x*, v_l> = (k/||A||_F^2) rho_l^k <-A^T z_0, v_l> + rho_l^k <x_0 - x*, v_l>``
* bound:    ``E||x_k - x*||^2 <= (k/||A||_F^2) rho_r^k ||z_0 - (b - A x*)||^2 + rho_r^k ||x_0 - x*||^2``

Powers are evaluated as ``exp(k log1p(-s))`` so that ``rho`` close to 1 and
``k`` up to ~1e6 stay accurate and finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .linalg import SvdFactorization, as_vector, frobenius_norm
from .problem import ProblemInstance


class CurveKind(str, Enum):
    LEMMA1 = "lemma1"
    THEOREM2 = "theorem2"
    DU_BOUND = "du_bound"


@dataclass(frozen=True, eq=False)
class TheoryCurve:
    ell: int
    values: np.ndarray
    kind: CurveKind

    def at(self, ks) -> np.ndarray:
        return self.values[np.asarray(ks, dtype=np.intp)]


def decay_factor(f: SvdFactorization, fro2: float, ell: int) -> float:
    """``rho_ell = 1 - sigma_ell^2 / ||A||_F^2`` (1-based ``ell``)."""
    return 1.0 - f.sigma[ell - 1] ** 2 / fro2


def _powers(shrink: float, K: int, times_k: bool = False) -> np.ndarray:
    """``rho^k`` (or ``k rho^k``) for k = 0..K with ``rho = 1 - shrink``."""
    ks = np.arange(K + 1, dtype=np.float64)
    out = np.zeros(K + 1)
    if shrink >= 1.0:
        # rho == 0 (up to rounding): only the k = 0 term survives
        out[0] = 0.0 if times_k else 1.0
        return out
    log_rho = np.log1p(-shrink)
    if times_k:
        out[1:] = np.exp(np.log(ks[1:]) + ks[1:] * log_rho)
    else:
        out[:] = np.exp(ks * log_rho)
    return out


def _check_ell(f: SvdFactorization, ell: int) -> None:
    if not 1 <= ell <= f.rank:
        raise ValueError(f"ell={ell} outside 1..rank={f.rank}")


def _shrink(f: SvdFactorization, fro2: float, ell: int) -> float:
    return min(1.0, f.sigma[ell - 1] ** 2 / fro2)


def lemma1_curve(f: SvdFactorization, problem: ProblemInstance, z0, ell: int, K: int) -> TheoryCurve:
    """Predicted ``E<z_k - (b - A x*), A v_ell>`` for k = 0..K."""
    _check_ell(f, ell)
    z0 = as_vector(z0, problem.m)
    fro2 = frobenius_norm(problem.a) ** 2
    c0 = float((z0 - problem.residual) @ (problem.a @ f.right_vector(ell)))
    return TheoryCurve(ell, c0 * _powers(_shrink(f, fro2, ell), K), CurveKind.LEMMA1)


def theorem2_curve(f: SvdFactorization, problem: ProblemInstance, x0, z0, ell: int, K: int) -> TheoryCurve:
    """Predicted ``E<x_k - x*, v_ell>`` for k = 0..K."""
    _check_ell(f, ell)
    x0 = as_vector(x0, problem.n)
    z0 = as_vector(z0, problem.m)
    fro2 = frobenius_norm(problem.a) ** 2
    v = f.right_vector(ell)
    drift = float(-(problem.a.T @ z0) @ v)
    start = float((x0 - problem.x_star) @ v)
    s = _shrink(f, fro2, ell)
    values = (drift / fro2) * _powers(s, K, times_k=True) + start * _powers(s, K)
    return TheoryCurve(ell, values, CurveKind.THEOREM2)


def du_bound(f: SvdFactorization, problem: ProblemInstance, x0, z0, K: int) -> TheoryCurve:
    """Upper bound on ``E||x_k - x*||^2`` governed by the smallest nonzero sigma."""
    if f.rank < 1:
        raise ValueError("bound requires rank >= 1")
    x0 = as_vector(x0, problem.n)
    z0 = as_vector(z0, problem.m)
    fro2 = frobenius_norm(problem.a) ** 2
    z_gap = float(np.sum((z0 - problem.residual) ** 2))
    x_gap = float(np.sum((x0 - problem.x_star) ** 2))
    s = _shrink(f, fro2, f.rank)
    values = (z_gap / fro2) * _powers(s, K, times_k=True) + x_gap * _powers(s, K)
    return TheoryCurve(f.rank, values, CurveKind.DU_BOUND)


def directional_contraction(a, e) -> float:
    """``1 - ||A e||^2 / (||A||_F^2 ||e||^2)``: one-step RK contraction along ``e``."""
    a = np.asarray(a, dtype=np.float64)
    e = as_vector(e, a.shape[1])
    norm2 = float(e @ e)
    if norm2 == 0.0:
        raise ValueError("undefined direction: e is zero")
    ae = a @ e
    return 1.0 - float(ae @ ae) / (frobenius_norm(a) ** 2 * norm2)


def theorem3_rhs(problem: ProblemInstance, z0, k: int, contracted_prev: float) -> float:
    """Right side of the one-step bound on ``E||x_k - x*||^2``.

    ``contracted_prev`` is ``E[c(e_{k-1}) ||e_{k-1}||^2]`` with ``c`` the
    :func:`directional_contraction` factor, i.e. ``E[||e||^2 - ||A e||^2/||A||_F^2]``
    at step ``k - 1``; it depends on the random trajectory and must be supplied.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    f = problem.svd
    fro2 = frobenius_norm(problem.a) ** 2
    z_gap = float(np.sum((as_vector(z0, problem.m) - problem.residual) ** 2))
    rho_r_k = _powers(_shrink(f, fro2, f.rank), k)[k]
    return z_gap / fro2 * rho_r_k + contracted_prev
